#include "interp/eval.hpp"

#include <fmt/format.h>

#include "interp/builtins.hpp"
#include "interp/format.hpp"

namespace chartpot::interp {

namespace {

// Bounds native recursion independently of the program's call depth (deeply
// nested expressions inside recursive calls).
constexpr int kMaxEvalDepth = 4000;

struct CallGuard {
  explicit CallGuard(Runtime& r) : rt(r) { rt.enter_call(); }
  ~CallGuard() { rt.leave_call(); }
  Runtime& rt;
};

std::string plural(std::size_t n, std::string_view word) {
  return fmt::format("{} {}{}", n, word, n == 1 ? "" : "s");
}

}  // namespace

Evaluator::Evaluator(Runtime& rt, const Program& prog) : rt_(rt), prog_(prog) { rt_.set_evaluator(this); }

Value Evaluator::run(Value arg) {
  Frame* module = rt_.new_frame(nullptr, static_cast<std::size_t>(prog_.module_slots));
  exec_block(prog_.body, module);
  const Value entry = eval_name(prog_.entry_name, module);
  CallArgs args;
  args.pos.push_back(arg);
  return rt_.call(entry, args);
}

Value Evaluator::make_function(const FuncDef* def, Frame* frame) {
  auto* fn = rt_.make<FunctionObj>();
  fn->def = def;
  fn->closure = frame;
  for (const Expr* d : def->defaults) fn->defaults.push_back(eval(d, frame));
  return Value::object(Type::kFunction, fn);
}

Value Evaluator::call_function(FunctionObj& fn, CallArgs& args) {
  CallGuard guard(rt_);
  const FuncDef& def = *fn.def;
  const std::size_t nparams = def.params.size();
  if (args.pos.size() > nparams) {
    raise(ExcType::kTypeError, fmt::format("{}() takes {} but {} {} given", def.name,
                                           plural(nparams, "positional argument"), args.pos.size(),
                                           args.pos.size() == 1 ? "was" : "were"));
  }
  Frame* frame = rt_.new_frame(fn.closure, static_cast<std::size_t>(def.nslots));
  for (std::size_t k = 0; k < args.pos.size(); ++k) frame->slots[k] = args.pos[k];
  for (const auto& [name, value] : args.kw) {
    std::size_t k = 0;
    while (k < nparams && def.params[k] != name) ++k;
    if (k == nparams) {
      raise(ExcType::kTypeError, fmt::format("{}() got an unexpected keyword argument '{}'", def.name, name));
    }
    if (!frame->slots[k].is(Type::kUnbound)) {
      raise(ExcType::kTypeError, fmt::format("{}() got multiple values for argument '{}'", def.name, name));
    }
    frame->slots[k] = value;
  }
  const std::size_t first_default = nparams - fn.defaults.size();
  std::vector<std::string> missing;
  for (std::size_t k = 0; k < nparams; ++k) {
    if (!frame->slots[k].is(Type::kUnbound)) continue;
    if (k >= first_default) {
      frame->slots[k] = fn.defaults[k - first_default];
    } else {
      missing.push_back("'" + def.params[k] + "'");
    }
  }
  if (!missing.empty()) {
    std::string names;
    for (std::size_t k = 0; k < missing.size(); ++k) {
      if (k > 0) names += missing.size() == 2 ? " and " : (k + 1 == missing.size() ? ", and " : ", ");
      names += missing[k];
    }
    raise(ExcType::kTypeError, fmt::format("{}() missing {} required positional argument{}: {}", def.name,
                                           missing.size(), missing.size() == 1 ? "" : "s", names));
  }
  if (def.lambda_body != nullptr) return eval(def.lambda_body, frame);
  if (exec_block(def.body, frame) == Flow::kReturn) return return_value_;
  return Value::none();
}

Evaluator::Flow Evaluator::exec_block(const std::vector<Stmt*>& body, Frame* frame) {
  for (const Stmt* s : body) {
    const Flow f = exec(s, frame);
    if (f != Flow::kNormal) return f;
  }
  return Flow::kNormal;
}

Evaluator::Flow Evaluator::exec(const Stmt* s, Frame* frame) {
  rt_.tick();
  switch (s->kind) {
    case StmtKind::kExpr:
      eval(static_cast<const ExprStmt*>(s)->value, frame);
      return Flow::kNormal;
    case StmtKind::kAssign: {
      auto* a = static_cast<const AssignStmt*>(s);
      const Value v = eval(a->value, frame);
      for (const Expr* t : a->targets) assign(t, v, frame);
      return Flow::kNormal;
    }
    case StmtKind::kAugAssign: {
      auto* a = static_cast<const AugAssignStmt*>(s);
      auto combine = [&](Value cur, Value rhs) {
        if (a->op == BinOp::kAdd && cur.is(Type::kList)) {
          std::vector<Value> more = rt_.to_vector(rhs);
          rt_.charge_nodes(static_cast<std::int64_t>(more.size()));
          auto& items = Runtime::list_of(cur)->items;
          items.insert(items.end(), more.begin(), more.end());
          return cur;
        }
        return rt_.binop(a->op, cur, rhs);
      };
      if (a->target->kind == ExprKind::kName) {
        auto* n = static_cast<const NameExpr*>(a->target);
        const Value cur = eval_name(n, frame);
        const Value rhs = eval(a->value, frame);
        store_name(n->ref, combine(cur, rhs), frame);
        return Flow::kNormal;
      }
      auto* sub = static_cast<const SubscriptExpr*>(a->target);
      const Value obj = eval(sub->object, frame);
      if (sub->is_slice) {
        const Value lo = sub->lo ? eval(sub->lo, frame) : Value::none();
        const Value hi = sub->hi ? eval(sub->hi, frame) : Value::none();
        const Value step = sub->step ? eval(sub->step, frame) : Value::none();
        const Value cur = rt_.slice(obj, lo, hi, step);
        const Value rhs = eval(a->value, frame);
        rt_.set_slice(obj, lo, hi, step, combine(cur, rhs));
        return Flow::kNormal;
      }
      const Value key = eval(sub->index, frame);
      const Value cur = rt_.subscript(obj, key);
      const Value rhs = eval(a->value, frame);
      rt_.set_item(obj, key, combine(cur, rhs));
      return Flow::kNormal;
    }
    case StmtKind::kAnnAssign: {
      auto* a = static_cast<const AnnAssignStmt*>(s);
      if (a->value != nullptr) assign(a->target, eval(a->value, frame), frame);
      return Flow::kNormal;
    }
    case StmtKind::kFor: {
      auto* l = static_cast<const LoopStmt*>(s);
      const Value iterable = eval(l->iter, frame);
      Flow result = Flow::kNormal;
      bool broke = false;
      rt_.for_each(iterable, [&](Value item) {
        assign(l->target, item, frame);
        const Flow f = exec_block(l->body, frame);
        if (f == Flow::kBreak) {
          broke = true;
          return false;
        }
        if (f == Flow::kReturn) {
          result = f;
          broke = true;
          return false;
        }
        return true;
      });
      if (result == Flow::kReturn) return result;
      if (!broke) return exec_block(l->orelse, frame);
      return Flow::kNormal;
    }
    case StmtKind::kWhile: {
      auto* l = static_cast<const LoopStmt*>(s);
      while (rt_.truthy(eval(l->iter, frame))) {
        const Flow f = exec_block(l->body, frame);
        if (f == Flow::kBreak) return Flow::kNormal;
        if (f == Flow::kReturn) return f;
        rt_.tick();
      }
      return exec_block(l->orelse, frame);
    }
    case StmtKind::kIf: {
      auto* i = static_cast<const IfStmt*>(s);
      if (rt_.truthy(eval(i->cond, frame))) return exec_block(i->body, frame);
      return exec_block(i->orelse, frame);
    }
    case StmtKind::kReturn: {
      auto* r = static_cast<const ReturnStmt*>(s);
      return_value_ = r->value != nullptr ? eval(r->value, frame) : Value::none();
      return Flow::kReturn;
    }
    case StmtKind::kPass: return Flow::kNormal;
    case StmtKind::kBreak: return Flow::kBreak;
    case StmtKind::kContinue: return Flow::kContinue;
    case StmtKind::kDef: {
      auto* d = static_cast<const DefStmt*>(s);
      store_name(d->target->ref, make_function(d->def, frame), frame);
      return Flow::kNormal;
    }
    case StmtKind::kImport: {
      auto* im = static_cast<const ImportStmt*>(s);
      for (const auto& b : im->bindings) {
        if (im->from && b.value.is(Type::kNone)) {
          raise(ExcType::kUnsupported, fmt::format("cannot import name '{}' from '{}'", b.imported,
                                                   module_name(im->module)));
        }
        store_name(b.target->ref, b.value, frame);
      }
      return Flow::kNormal;
    }
  }
  return Flow::kNormal;
}

void Evaluator::store_name(const NameRef& ref, Value v, Frame* frame) {
  Frame* f = frame;
  for (int k = 0; k < ref.depth; ++k) f = f->parent;
  f->slots[static_cast<std::size_t>(ref.slot)] = v;
}

Value Evaluator::eval_name(const NameExpr* n, Frame* frame) {
  const NameRef& ref = n->ref;
  switch (ref.scope) {
    case NameScope::kFrame: {
      Frame* f = frame;
      for (int k = 0; k < ref.depth; ++k) f = f->parent;
      const Value v = f->slots[static_cast<std::size_t>(ref.slot)];
      if (!v.is(Type::kUnbound)) return v;
      if (f->parent == nullptr) raise(ExcType::kNameError, fmt::format("name '{}' is not defined", ref.id));
      if (ref.depth == 0) {
        raise(ExcType::kUnboundLocalError,
              fmt::format("cannot access local variable '{}' where it is not associated with a value", ref.id));
      }
      raise(ExcType::kNameError,
            fmt::format("cannot access free variable '{}' where it is not associated with a value in enclosing scope",
                        ref.id));
    }
    case NameScope::kBuiltin: return Value::builtin(ref.builtin);
    case NameScope::kUnresolved: break;
  }
  raise(ExcType::kNameError, fmt::format("name '{}' is not defined", ref.id));
}

void Evaluator::assign(const Expr* target, Value v, Frame* frame) {
  switch (target->kind) {
    case ExprKind::kName:
      store_name(static_cast<const NameExpr*>(target)->ref, v, frame);
      return;
    case ExprKind::kSubscript: {
      auto* sub = static_cast<const SubscriptExpr*>(target);
      const Value obj = eval(sub->object, frame);
      if (sub->is_slice) {
        const Value lo = sub->lo ? eval(sub->lo, frame) : Value::none();
        const Value hi = sub->hi ? eval(sub->hi, frame) : Value::none();
        const Value step = sub->step ? eval(sub->step, frame) : Value::none();
        rt_.set_slice(obj, lo, hi, step, v);
        return;
      }
      rt_.set_item(obj, eval(sub->index, frame), v);
      return;
    }
    case ExprKind::kTuple:
    case ExprKind::kList: {
      const auto& targets = static_cast<const SeqExpr*>(target)->items;
      if (!(v.is(Type::kList) || v.is(Type::kTuple) || v.is(Type::kStr) || v.is(Type::kRange) ||
            v.is(Type::kDict) || v.is(Type::kKeys) || v.is(Type::kValues) || v.is(Type::kItems))) {
        raise(ExcType::kTypeError, fmt::format("cannot unpack non-iterable {} object", rt_.type_name(v)));
      }
      const std::vector<Value> items = rt_.to_vector(v);
      if (items.size() > targets.size()) {
        raise(ExcType::kValueError, fmt::format("too many values to unpack (expected {})", targets.size()));
      }
      if (items.size() < targets.size()) {
        raise(ExcType::kValueError,
              fmt::format("not enough values to unpack (expected {}, got {})", targets.size(), items.size()));
      }
      for (std::size_t k = 0; k < targets.size(); ++k) assign(targets[k], items[k], frame);
      return;
    }
    default:
      raise(ExcType::kUnsupported, "invalid assignment target");
  }
}

Value Evaluator::eval(const Expr* e, Frame* frame) {
  rt_.tick();
  struct DepthGuard {
    explicit DepthGuard(int& d) : depth(d) {
      if (++depth > kMaxEvalDepth) {
        --depth;
        throw BudgetExhausted{fmt::format("evaluation nesting limit of {} exceeded", kMaxEvalDepth)};
      }
    }
    ~DepthGuard() { --depth; }
    int& depth;
  } guard(eval_depth_);

  switch (e->kind) {
    case ExprKind::kConst: return static_cast<const ConstExpr*>(e)->value;
    case ExprKind::kName: return eval_name(static_cast<const NameExpr*>(e), frame);
    case ExprKind::kFString: return eval_fstring(static_cast<const FStringExpr*>(e), frame);
    case ExprKind::kList:
    case ExprKind::kTuple: {
      const auto& items = static_cast<const SeqExpr*>(e)->items;
      std::vector<Value> out;
      out.reserve(items.size());
      for (const Expr* item : items) out.push_back(eval(item, frame));
      return e->kind == ExprKind::kList ? rt_.new_list(std::move(out)) : rt_.new_tuple(std::move(out));
    }
    case ExprKind::kDict: {
      const Value d = rt_.new_dict();
      for (const auto& [k, v] : static_cast<const DictExpr*>(e)->items) {
        const Value key = eval(k, frame);
        const Value value = eval(v, frame);
        rt_.dict_set(Runtime::dict_of(d), key, value);
      }
      return d;
    }
    case ExprKind::kComp: return eval_comp(static_cast<const CompExpr*>(e), frame);
    case ExprKind::kBinOp: {
      auto* b = static_cast<const BinExpr*>(e);
      const Value l = eval(b->left, frame);
      const Value r = eval(b->right, frame);
      return rt_.binop(b->op, l, r);
    }
    case ExprKind::kUnary: {
      auto* u = static_cast<const UnaryExpr*>(e);
      const Value v = eval(u->operand, frame);
      switch (u->op) {
        case UnaryOp::kNeg: return rt_.negate(v);
        case UnaryOp::kPos: return rt_.positive(v);
        case UnaryOp::kNot: return Value::boolean(!rt_.truthy(v));
      }
      return v;
    }
    case ExprKind::kBoolOp: {
      auto* b = static_cast<const BoolExpr*>(e);
      Value v;
      for (const Expr* item : b->values) {
        v = eval(item, frame);
        if (rt_.truthy(v) != b->is_and) return v;
      }
      return v;
    }
    case ExprKind::kCompare: {
      auto* c = static_cast<const CompareExpr*>(e);
      Value left = eval(c->left, frame);
      for (const auto& [op, rhs] : c->rest) {
        const Value right = eval(rhs, frame);
        bool ok = false;
        switch (op) {
          case CmpOp::kEq: ok = rt_.eq(left, right); break;
          case CmpOp::kNe: ok = !rt_.eq(left, right); break;
          case CmpOp::kIn: ok = rt_.contains(right, left); break;
          case CmpOp::kNotIn: ok = !rt_.contains(right, left); break;
          case CmpOp::kIs: ok = rt_.is(left, right); break;
          case CmpOp::kIsNot: ok = !rt_.is(left, right); break;
          default: ok = rt_.compare(op, left, right); break;
        }
        if (!ok) return Value::boolean(false);
        left = right;
      }
      return Value::boolean(true);
    }
    case ExprKind::kIfExp: {
      auto* i = static_cast<const IfExpr*>(e);
      return rt_.truthy(eval(i->cond, frame)) ? eval(i->then, frame) : eval(i->other, frame);
    }
    case ExprKind::kCall: return eval_call(static_cast<const CallExpr*>(e), frame);
    case ExprKind::kAttribute: {
      auto* a = static_cast<const AttributeExpr*>(e);
      return get_attribute(rt_, eval(a->object, frame), a->attr);
    }
    case ExprKind::kSubscript: {
      auto* s = static_cast<const SubscriptExpr*>(e);
      const Value obj = eval(s->object, frame);
      if (s->is_slice) {
        const Value lo = s->lo ? eval(s->lo, frame) : Value::none();
        const Value hi = s->hi ? eval(s->hi, frame) : Value::none();
        const Value step = s->step ? eval(s->step, frame) : Value::none();
        return rt_.slice(obj, lo, hi, step);
      }
      return rt_.subscript(obj, eval(s->index, frame));
    }
    case ExprKind::kLambda: return make_function(static_cast<const LambdaExpr*>(e)->def, frame);
  }
  return Value::none();
}

Value Evaluator::eval_call(const CallExpr* c, Frame* frame) {
  const Value fn = eval(c->func, frame);
  CallArgs args;
  args.pos.reserve(c->args.size());
  for (const Expr* a : c->args) args.pos.push_back(eval(a, frame));
  for (const auto& kw : c->kwargs) args.kw.emplace_back(kw.name, eval(kw.value, frame));
  return rt_.call(fn, args);
}

Value Evaluator::eval_comp(const CompExpr* c, Frame* frame) {
  const Value first = eval(c->gens.front().iter, frame);
  Frame* inner = rt_.new_frame(frame, static_cast<std::size_t>(c->nslots));
  const Value result = c->comp == CompKind::kDict ? rt_.new_dict() : rt_.new_list();

  auto loop = [&](auto&& self, std::size_t level, Value iterable) -> void {
    const Comprehension& g = c->gens[level];
    rt_.for_each(iterable, [&](Value item) {
      assign(g.target, item, inner);
      for (const Expr* cond : g.conds) {
        if (!rt_.truthy(eval(cond, inner))) return true;
      }
      if (level + 1 < c->gens.size()) {
        self(self, level + 1, eval(c->gens[level + 1].iter, inner));
        return true;
      }
      if (c->comp == CompKind::kDict) {
        const Value key = eval(c->elt, inner);
        const Value value = eval(c->value, inner);
        rt_.dict_set(Runtime::dict_of(result), key, value);
      } else {
        const Value v = eval(c->elt, inner);
        rt_.charge_nodes(1);
        Runtime::list_of(result)->items.push_back(v);
      }
      return true;
    });
  };
  loop(loop, 0, first);
  return result;
}

std::string Evaluator::render_part(const FStringPart& part, Frame* frame) {
  if (part.expr == nullptr) return part.literal;
  Value v = eval(part.expr, frame);
  if (part.conversion == 'r') {
    v = rt_.new_str(rt_.repr(v));
  } else if (part.conversion == 's') {
    v = rt_.new_str(rt_.str(v));
  }
  std::string spec;
  if (part.has_spec) {
    for (const auto& s : part.spec) spec += render_part(s, frame);
  }
  return format_value(rt_, v, spec);
}

Value Evaluator::eval_fstring(const FStringExpr* f, Frame* frame) {
  std::string out;
  for (const auto& part : f->parts) out += render_part(part, frame);
  return rt_.new_str(std::move(out));
}

}  // namespace chartpot::interp
