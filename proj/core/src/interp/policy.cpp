#include "interp/policy.hpp"

#include <string_view>
#include <unordered_set>

namespace chartpot::interp {

namespace {

const std::unordered_set<std::string_view> kFreeNames = {
    "len",   "sum",  "min",  "max", "abs",  "round",    "sorted", "range",      "enumerate",
    "zip",   "list", "dict", "tuple", "str", "int",     "float",  "bool",       "any",
    "all",   "map",  "filter", "reversed", "isinstance", "print", "statistics", "math",
};

const std::unordered_set<std::string_view> kAttributes = {
    "keys",  "values",  "items", "get",   "append",  "extend",     "update",   "pop",   "join",
    "split", "strip",   "lower", "upper", "replace", "startswith", "endswith", "count", "index",
    "format", "mean",   "median", "stdev", "variance", "pstdev",   "sqrt",     "floor", "ceil",
    "fsum",
};

class Checker {
 public:
  std::optional<std::string> found;

  void body(const std::vector<Stmt*>& stmts) {
    for (const Stmt* s : stmts) {
      if (found) return;
      stmt(s);
    }
  }

 private:
  void flag(const std::string& name) {
    if (!found) found = name;
  }

  void stmt(const Stmt* s) {
    switch (s->kind) {
      case StmtKind::kExpr: expr(static_cast<const ExprStmt*>(s)->value); break;
      case StmtKind::kAssign: {
        auto* a = static_cast<const AssignStmt*>(s);
        for (const Expr* t : a->targets) expr(t);
        expr(a->value);
        break;
      }
      case StmtKind::kAugAssign: {
        auto* a = static_cast<const AugAssignStmt*>(s);
        expr(a->target);
        expr(a->value);
        break;
      }
      case StmtKind::kAnnAssign: {
        auto* a = static_cast<const AnnAssignStmt*>(s);
        expr(a->target);
        expr(a->value);
        break;
      }
      case StmtKind::kFor:
      case StmtKind::kWhile: {
        auto* l = static_cast<const LoopStmt*>(s);
        expr(l->target);
        expr(l->iter);
        body(l->body);
        body(l->orelse);
        break;
      }
      case StmtKind::kIf: {
        auto* i = static_cast<const IfStmt*>(s);
        expr(i->cond);
        body(i->body);
        body(i->orelse);
        break;
      }
      case StmtKind::kReturn: expr(static_cast<const ReturnStmt*>(s)->value); break;
      case StmtKind::kDef: function(*static_cast<const DefStmt*>(s)->def); break;
      case StmtKind::kImport: {
        auto* im = static_cast<const ImportStmt*>(s);
        if (!im->from) break;
        for (const auto& b : im->bindings) {
          if (!module_function(im->module, b.imported)) flag(b.imported);
        }
        break;
      }
      case StmtKind::kPass:
      case StmtKind::kBreak:
      case StmtKind::kContinue: break;
    }
  }

  void function(const FuncDef& def) {
    for (const Expr* d : def.defaults) expr(d);
    if (def.lambda_body) expr(def.lambda_body);
    body(def.body);
  }

  void fpart(const FStringPart& part) {
    expr(part.expr);
    for (const auto& s : part.spec) fpart(s);
  }

  void expr(const Expr* e) {
    if (e == nullptr || found) return;
    switch (e->kind) {
      case ExprKind::kConst: break;
      case ExprKind::kName: {
        const NameRef& ref = static_cast<const NameExpr*>(e)->ref;
        if (ref.scope != NameScope::kFrame && kFreeNames.count(ref.id) == 0) flag(ref.id);
        break;
      }
      case ExprKind::kFString:
        for (const auto& part : static_cast<const FStringExpr*>(e)->parts) fpart(part);
        break;
      case ExprKind::kList:
      case ExprKind::kTuple:
        for (const Expr* item : static_cast<const SeqExpr*>(e)->items) expr(item);
        break;
      case ExprKind::kDict:
        for (const auto& [k, v] : static_cast<const DictExpr*>(e)->items) {
          expr(k);
          expr(v);
        }
        break;
      case ExprKind::kComp: {
        auto* c = static_cast<const CompExpr*>(e);
        for (const auto& g : c->gens) {
          expr(g.target);
          expr(g.iter);
          for (const Expr* cond : g.conds) expr(cond);
        }
        expr(c->elt);
        expr(c->value);
        break;
      }
      case ExprKind::kBinOp: {
        auto* b = static_cast<const BinExpr*>(e);
        expr(b->left);
        expr(b->right);
        break;
      }
      case ExprKind::kUnary: expr(static_cast<const UnaryExpr*>(e)->operand); break;
      case ExprKind::kBoolOp:
        for (const Expr* v : static_cast<const BoolExpr*>(e)->values) expr(v);
        break;
      case ExprKind::kCompare: {
        auto* c = static_cast<const CompareExpr*>(e);
        expr(c->left);
        for (const auto& [op, rhs] : c->rest) expr(rhs);
        break;
      }
      case ExprKind::kIfExp: {
        auto* i = static_cast<const IfExpr*>(e);
        expr(i->cond);
        expr(i->then);
        expr(i->other);
        break;
      }
      case ExprKind::kCall: {
        auto* c = static_cast<const CallExpr*>(e);
        expr(c->func);
        for (const Expr* a : c->args) expr(a);
        for (const auto& kw : c->kwargs) expr(kw.value);
        break;
      }
      case ExprKind::kAttribute: {
        auto* a = static_cast<const AttributeExpr*>(e);
        expr(a->object);
        if (a->attr.empty() || a->attr.front() == '_' || kAttributes.count(a->attr) == 0) flag(a->attr);
        break;
      }
      case ExprKind::kSubscript: {
        auto* s = static_cast<const SubscriptExpr*>(e);
        expr(s->object);
        expr(s->index);
        expr(s->lo);
        expr(s->hi);
        expr(s->step);
        break;
      }
      case ExprKind::kLambda: function(*static_cast<const LambdaExpr*>(e)->def); break;
    }
  }
};

}  // namespace

std::optional<std::string> find_forbidden_name(const Program& prog) {
  Checker checker;
  checker.body(prog.body);
  return checker.found;
}

}  // namespace chartpot::interp
