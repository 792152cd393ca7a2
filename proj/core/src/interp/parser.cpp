#include "interp/parser.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

namespace chartpot::interp {

namespace {

constexpr int kMaxNesting = 200;

const std::unordered_set<std::string_view> kKeywords = {
    "False", "None",  "True",   "and",    "as",     "assert", "async", "await",    "break",
    "class", "continue", "def", "del",    "elif",   "else",   "except", "finally", "for",
    "from",  "global", "if",    "import", "in",     "is",     "lambda", "nonlocal", "not",
    "or",    "pass",  "raise",  "return", "try",    "while",  "with",  "yield",
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, Program& prog) : toks_(std::move(tokens)), prog_(prog) {}

  void parse_module() {
    while (!at(Tok::kEnd)) {
      if (accept_kind(Tok::kNewline)) continue;
      if (at(Tok::kIndent)) syntax_error("unexpected indent", cur().line);
      parse_statement(prog_.body, /*module_level=*/true);
    }
  }

 private:
  std::vector<Token> toks_;
  std::size_t p_ = 0;
  Program& prog_;
  int depth_ = 0;
  int loop_depth_ = 0;
  int function_depth_ = 0;

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > kMaxNesting) {
        throw SourceError{FailureCategory::kOther,
                          fmt::format("expression nesting exceeds {} levels (<string>, line {})", kMaxNesting,
                                      parser.cur().line)};
      }
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
  };

  const Token& cur() const { return toks_[p_]; }
  const Token& ahead(std::size_t k) const { return toks_[std::min(p_ + k, toks_.size() - 1)]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_op(std::string_view op) const { return cur().kind == Tok::kOp && cur().text == op; }
  bool at_kw(std::string_view kw) const { return cur().kind == Tok::kName && cur().text == kw; }
  const Token& next() { return toks_[p_ < toks_.size() - 1 ? p_++ : p_]; }
  bool accept_kind(Tok k) {
    if (!at(k)) return false;
    next();
    return true;
  }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    next();
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    next();
    return true;
  }
  void expect_op(std::string_view op) {
    if (accept_op(op)) return;
    if (op == ":") syntax_error("expected ':'", cur().line);
    fail_here();
  }
  [[noreturn]] void fail_here() {
    if (at(Tok::kIndent)) syntax_error("unexpected indent", cur().line);
    syntax_error("invalid syntax", cur().line);
  }

  bool at_keyword() const { return at(Tok::kName) && kKeywords.count(cur().text) > 0; }

  // ---- statements ----

  void parse_statement(std::vector<Stmt*>& out, bool module_level) {
    const Token& t = cur();
    if (t.kind == Tok::kOp && t.text == "@") unsupported("decorator", t.line);
    if (t.kind == Tok::kName) {
      const std::string& kw = t.text;
      if (kw == "def") return out.push_back(parse_def());
      if (kw == "if") return out.push_back(parse_if());
      if (kw == "for") return out.push_back(parse_for());
      if (kw == "while") return out.push_back(parse_while());
      if (kw == "class") unsupported("class definition", t.line);
      if (kw == "try") unsupported("try statement", t.line);
      if (kw == "with") unsupported("with statement", t.line);
      if (kw == "async") unsupported("async statement", t.line);
      if (kw == "global" || kw == "nonlocal") unsupported(kw + " declaration", t.line);
      if (kw == "del") unsupported("del statement", t.line);
      if (kw == "assert") unsupported("assert statement", t.line);
      if (kw == "raise") unsupported("raise statement", t.line);
      if (kw == "yield") unsupported("yield expression", t.line);
      if (kw == "elif" || kw == "else" || kw == "except" || kw == "finally") syntax_error("invalid syntax", t.line);
    }
    (void)module_level;
    parse_simple_line(out);
  }

  void parse_simple_line(std::vector<Stmt*>& out) {
    for (;;) {
      out.push_back(parse_small());
      if (!accept_op(";")) break;
      if (at(Tok::kNewline)) break;
    }
    if (!accept_kind(Tok::kNewline)) {
      if (at(Tok::kEnd)) return;
      fail_here();
    }
  }

  Stmt* parse_small() {
    const int line = cur().line;
    if (at_kw("pass")) {
      next();
      return prog_.make<Stmt>(StmtKind::kPass, line);
    }
    if (at_kw("break") || at_kw("continue")) {
      const bool is_break = cur().text == "break";
      next();
      if (loop_depth_ == 0) {
        syntax_error(is_break ? "'break' outside loop" : "'continue' not properly in loop", line);
      }
      return prog_.make<Stmt>(is_break ? StmtKind::kBreak : StmtKind::kContinue, line);
    }
    if (at_kw("return")) {
      next();
      if (function_depth_ == 0) syntax_error("'return' outside function", line);
      auto* r = prog_.make<ReturnStmt>(line);
      if (!at(Tok::kNewline) && !at_op(";") && !at(Tok::kEnd)) r->value = parse_testlist();
      return r;
    }
    if (at_kw("import") || at_kw("from")) return parse_import();
    if (at_keyword() && !at_kw("not") && !at_kw("lambda") && !at_kw("None") && !at_kw("True") && !at_kw("False") &&
        !at_kw("await")) {
      syntax_error("invalid syntax", line);
    }

    Expr* first = parse_testlist(/*allow_star=*/true);
    if (at_op("=")) {
      auto* a = prog_.make<AssignStmt>(line);
      check_target(first);
      a->targets.push_back(first);
      next();
      for (;;) {
        Expr* rhs = parse_testlist(true);
        if (at_op("=")) {
          check_target(rhs);
          a->targets.push_back(rhs);
          next();
          continue;
        }
        a->value = rhs;
        break;
      }
      return a;
    }
    if (cur().kind == Tok::kOp && cur().text.size() >= 2 && cur().text.back() == '=' && cur().text != "==" &&
        cur().text != "<=" && cur().text != ">=" && cur().text != "!=") {
      const std::string op = cur().text;
      if (first->kind != ExprKind::kName && first->kind != ExprKind::kSubscript) {
        if (first->kind == ExprKind::kAttribute) unsupported("attribute assignment", line);
        syntax_error("'" + describe(first) + "' is an illegal expression for augmented assignment", line);
      }
      auto* a = prog_.make<AugAssignStmt>(line);
      a->target = first;
      if (op == "+=") a->op = BinOp::kAdd;
      else if (op == "-=") a->op = BinOp::kSub;
      else if (op == "*=") a->op = BinOp::kMul;
      else if (op == "/=") a->op = BinOp::kDiv;
      else if (op == "//=") a->op = BinOp::kFloorDiv;
      else if (op == "%=") a->op = BinOp::kMod;
      else if (op == "**=") a->op = BinOp::kPow;
      else unsupported("bitwise augmented assignment", line);
      next();
      a->value = parse_testlist();
      return a;
    }
    if (at_op(":")) {
      if (first->kind != ExprKind::kName && first->kind != ExprKind::kSubscript) {
        if (first->kind == ExprKind::kAttribute) unsupported("attribute assignment", line);
        syntax_error("illegal target for annotation", line);
      }
      next();
      parse_test();  // the annotation is not evaluated
      auto* a = prog_.make<AnnAssignStmt>(line);
      a->target = first;
      if (accept_op("=")) a->value = parse_testlist();
      return a;
    }
    if (at_op(":=")) unsupported("assignment expression", line);
    auto* e = prog_.make<ExprStmt>(line);
    e->value = first;
    return e;
  }

  static std::string describe(const Expr* e) {
    switch (e->kind) {
      case ExprKind::kCall: return "function call";
      case ExprKind::kConst: return "literal";
      case ExprKind::kBinOp:
      case ExprKind::kUnary: return "expression";
      case ExprKind::kCompare: return "comparison";
      case ExprKind::kBoolOp: return "expression";
      case ExprKind::kLambda: return "lambda";
      case ExprKind::kIfExp: return "conditional expression";
      case ExprKind::kComp: return "comprehension";
      case ExprKind::kDict: return "dict literal";
      case ExprKind::kFString: return "f-string expression";
      case ExprKind::kList: return "list";
      case ExprKind::kTuple: return "tuple";
      default: return "expression";
    }
  }

  void check_target(Expr* e) {
    switch (e->kind) {
      case ExprKind::kName:
      case ExprKind::kSubscript:
        return;
      case ExprKind::kAttribute:
        unsupported("attribute assignment", e->line);
      case ExprKind::kTuple:
      case ExprKind::kList:
        for (Expr* item : static_cast<SeqExpr*>(e)->items) check_target(item);
        return;
      default:
        syntax_error(fmt::format("cannot assign to {}", describe(e)), e->line);
    }
  }

  Stmt* parse_import() {
    const int line = cur().line;
    auto* s = prog_.make<ImportStmt>(line);
    auto module_of = [&](const std::string& name) {
      if (name == "statistics") return ModuleId::kStatistics;
      if (name == "math") return ModuleId::kMath;
      syntax_error(fmt::format("import of '{}' is not allowed", name), line);
    };
    auto read_dotted = [&] {
      if (!at(Tok::kName) || at_keyword()) fail_here();
      std::string name = next().text;
      while (accept_op(".")) {
        if (!at(Tok::kName)) fail_here();
        name += "." + next().text;
      }
      return name;
    };
    if (accept_kw("import")) {
      for (;;) {
        const std::string name = read_dotted();
        const ModuleId m = module_of(name);
        std::string alias = name;
        if (accept_kw("as")) {
          if (!at(Tok::kName) || at_keyword()) fail_here();
          alias = next().text;
        }
        s->module = m;
        s->bindings.push_back({Value::module(m), make_name(alias, line), ""});
        if (!accept_op(",")) break;
      }
      return s;
    }
    next();  // from
    const std::string name = read_dotted();
    s->module = module_of(name);
    s->from = true;
    if (!accept_kw("import")) fail_here();
    if (at_op("*")) unsupported("wildcard import", line);
    const bool paren = accept_op("(");
    for (;;) {
      if (!at(Tok::kName) || at_keyword()) fail_here();
      const std::string fn = next().text;
      std::string alias = fn;
      if (accept_kw("as")) {
        if (!at(Tok::kName) || at_keyword()) fail_here();
        alias = next().text;
      }
      auto builtin = module_function(s->module, fn);
      Value v = builtin ? Value::builtin(*builtin) : Value::none();
      s->bindings.push_back({v, make_name(alias, line), fn});
      if (!accept_op(",")) break;
      if (paren && at_op(")")) break;
    }
    if (paren) expect_op(")");
    return s;
  }

  NameExpr* make_name(const std::string& id, int line) {
    auto* n = prog_.make<NameExpr>(line);
    n->ref.id = id;
    return n;
  }

  std::vector<Stmt*> parse_suite(std::string_view what, int header_line) {
    std::vector<Stmt*> body;
    expect_op(":");
    if (!at(Tok::kNewline)) {
      parse_simple_line(body);
      return body;
    }
    next();
    if (!accept_kind(Tok::kIndent)) {
      syntax_error(fmt::format("expected an indented block after {} on line {}", what, header_line), cur().line);
    }
    DepthGuard guard(*this);
    while (!accept_kind(Tok::kDedent)) {
      if (at(Tok::kEnd)) break;
      if (accept_kind(Tok::kNewline)) continue;
      if (at(Tok::kIndent)) syntax_error("unexpected indent", cur().line);
      parse_statement(body, false);
    }
    return body;
  }

  Stmt* parse_def() {
    const int line = next().line;
    if (!at(Tok::kName) || at_keyword()) fail_here();
    auto* s = prog_.make<DefStmt>(line);
    auto* def = prog_.make<FuncDef>();
    def->name = next().text;
    def->line = line;
    s->def = def;
    s->target = make_name(def->name, line);
    expect_op("(");
    parse_params(*def, ")", /*annotations=*/true);
    expect_op(")");
    if (accept_op("->")) parse_test();
    ++function_depth_;
    const int saved_loops = loop_depth_;
    loop_depth_ = 0;
    def->body = parse_suite("function definition", line);
    loop_depth_ = saved_loops;
    --function_depth_;
    return s;
  }

  void parse_params(FuncDef& def, std::string_view closer, bool annotations) {
    bool seen_default = false;
    while (!at_op(closer)) {
      if (at_op("*") || at_op("**")) unsupported("variadic parameters", cur().line);
      if (at_op("/")) unsupported("positional-only marker", cur().line);
      if (!at(Tok::kName) || at_keyword()) fail_here();
      const std::string name = next().text;
      if (std::find(def.params.begin(), def.params.end(), name) != def.params.end()) {
        syntax_error(fmt::format("duplicate argument '{}' in function definition", name), cur().line);
      }
      def.params.push_back(name);
      if (annotations && accept_op(":")) parse_test();
      if (accept_op("=")) {
        def.defaults.push_back(parse_test());
        seen_default = true;
      } else if (seen_default) {
        syntax_error("non-default argument follows default argument", cur().line);
      }
      if (!accept_op(",")) break;
    }
  }

  Stmt* parse_if() {
    const int line = next().line;
    auto* s = prog_.make<IfStmt>(line);
    s->cond = parse_named_test();
    s->body = parse_suite("'if' statement", line);
    if (at_kw("elif")) {
      s->orelse.push_back(parse_if());
    } else if (at_kw("else")) {
      const int else_line = next().line;
      s->orelse = parse_suite("'else' statement", else_line);
    }
    return s;
  }

  Stmt* parse_for() {
    const int line = next().line;
    auto* s = prog_.make<LoopStmt>(StmtKind::kFor, line);
    s->target = parse_target_list();
    if (!accept_kw("in")) fail_here();
    s->iter = parse_testlist();
    ++loop_depth_;
    s->body = parse_suite("'for' statement", line);
    --loop_depth_;
    if (at_kw("else")) {
      const int else_line = next().line;
      s->orelse = parse_suite("'else' statement", else_line);
    }
    return s;
  }

  Stmt* parse_while() {
    const int line = next().line;
    auto* s = prog_.make<LoopStmt>(StmtKind::kWhile, line);
    s->iter = parse_named_test();
    ++loop_depth_;
    s->body = parse_suite("'while' statement", line);
    --loop_depth_;
    if (at_kw("else")) {
      const int else_line = next().line;
      s->orelse = parse_suite("'else' statement", else_line);
    }
    return s;
  }

  Expr* parse_named_test() {
    Expr* e = parse_test();
    if (at_op(":=")) unsupported("assignment expression", cur().line);
    return e;
  }

  // Target list for `for` and comprehensions: stops before `in`.
  Expr* parse_target_list() {
    const int line = cur().line;
    std::vector<Expr*> items;
    bool trailing_comma = false;
    for (;;) {
      if (at_op("*")) unsupported("starred assignment target", cur().line);
      items.push_back(parse_arith_level());
      trailing_comma = false;
      if (!accept_op(",")) break;
      trailing_comma = true;
      if (at_kw("in")) break;
    }
    Expr* target = items.front();
    if (items.size() > 1 || trailing_comma) {
      auto* t = prog_.make<SeqExpr>(ExprKind::kTuple, line);
      t->items = std::move(items);
      target = t;
    }
    check_target(target);
    return target;
  }

  // ---- expressions ----

  Expr* parse_testlist(bool allow_star = false) {
    const int line = cur().line;
    if (allow_star && at_op("*")) unsupported("starred expression", line);
    Expr* first = parse_test();
    if (!at_op(",")) return first;
    auto* t = prog_.make<SeqExpr>(ExprKind::kTuple, line);
    t->items.push_back(first);
    while (accept_op(",")) {
      if (at(Tok::kNewline) || at_op("=") || at_op(")") || at(Tok::kEnd) || at_op(";") ||
          (cur().kind == Tok::kOp && cur().text.size() >= 2 && cur().text.back() == '=' && cur().text != "==")) {
        break;
      }
      if (at_op("*")) unsupported("starred expression", cur().line);
      t->items.push_back(parse_test());
    }
    return t;
  }

  Expr* parse_test() {
    DepthGuard guard(*this);
    if (at_kw("lambda")) return parse_lambda();
    Expr* e = parse_or();
    if (at_kw("if")) {
      const int line = next().line;
      auto* c = prog_.make<IfExpr>(line);
      c->then = e;
      c->cond = parse_or();
      if (!accept_kw("else")) syntax_error("expected 'else' after 'if' expression", line);
      c->other = parse_test();
      return c;
    }
    return e;
  }

  Expr* parse_test_nocond() {
    if (at_kw("lambda")) return parse_lambda();
    return parse_or();
  }

  Expr* parse_lambda() {
    const int line = next().line;
    auto* l = prog_.make<LambdaExpr>(line);
    auto* def = prog_.make<FuncDef>();
    def->name = "<lambda>";
    def->line = line;
    parse_params(*def, ":", /*annotations=*/false);
    expect_op(":");
    ++function_depth_;
    def->lambda_body = parse_test();
    --function_depth_;
    l->def = def;
    return l;
  }

  Expr* parse_or() {
    Expr* first = parse_and();
    if (!at_kw("or")) return first;
    auto* b = prog_.make<BoolExpr>(first->line);
    b->is_and = false;
    b->values.push_back(first);
    while (accept_kw("or")) b->values.push_back(parse_and());
    return b;
  }

  Expr* parse_and() {
    Expr* first = parse_not();
    if (!at_kw("and")) return first;
    auto* b = prog_.make<BoolExpr>(first->line);
    b->is_and = true;
    b->values.push_back(first);
    while (accept_kw("and")) b->values.push_back(parse_not());
    return b;
  }

  Expr* parse_not() {
    if (at_kw("not")) {
      DepthGuard guard(*this);
      const int line = next().line;
      auto* u = prog_.make<UnaryExpr>(line);
      u->op = UnaryOp::kNot;
      u->operand = parse_not();
      return u;
    }
    return parse_comparison();
  }

  std::optional<CmpOp> comparison_op() {
    if (cur().kind == Tok::kOp) {
      const std::string& t = cur().text;
      if (t == "<") return CmpOp::kLt;
      if (t == "<=") return CmpOp::kLe;
      if (t == ">") return CmpOp::kGt;
      if (t == ">=") return CmpOp::kGe;
      if (t == "==") return CmpOp::kEq;
      if (t == "!=") return CmpOp::kNe;
      return std::nullopt;
    }
    if (at_kw("in")) return CmpOp::kIn;
    if (at_kw("is")) return ahead(1).kind == Tok::kName && ahead(1).text == "not" ? CmpOp::kIsNot : CmpOp::kIs;
    if (at_kw("not") && ahead(1).kind == Tok::kName && ahead(1).text == "in") return CmpOp::kNotIn;
    return std::nullopt;
  }

  Expr* parse_comparison() {
    Expr* left = parse_arith_level();
    auto op = comparison_op();
    if (!op) return left;
    auto* c = prog_.make<CompareExpr>(left->line);
    c->left = left;
    while (op) {
      next();
      if (*op == CmpOp::kIsNot || *op == CmpOp::kNotIn) next();
      c->rest.emplace_back(*op, parse_arith_level());
      op = comparison_op();
    }
    return c;
  }

  // Bitwise operators sit between comparisons and arithmetic; none are
  // supported.
  Expr* parse_arith_level() {
    Expr* e = parse_arith();
    if (cur().kind == Tok::kOp &&
        (cur().text == "|" || cur().text == "&" || cur().text == "^" || cur().text == "<<" || cur().text == ">>")) {
      unsupported(fmt::format("bitwise operator '{}'", cur().text), cur().line);
    }
    return e;
  }

  Expr* parse_arith() {
    Expr* left = parse_term();
    while (at_op("+") || at_op("-")) {
      auto* b = prog_.make<BinExpr>(cur().line);
      b->op = cur().text == "+" ? BinOp::kAdd : BinOp::kSub;
      next();
      b->left = left;
      b->right = parse_term();
      left = b;
    }
    return left;
  }

  Expr* parse_term() {
    Expr* left = parse_factor();
    for (;;) {
      BinOp op;
      if (at_op("*")) op = BinOp::kMul;
      else if (at_op("/")) op = BinOp::kDiv;
      else if (at_op("//")) op = BinOp::kFloorDiv;
      else if (at_op("%")) op = BinOp::kMod;
      else if (at_op("@")) unsupported("matrix multiplication", cur().line);
      else break;
      auto* b = prog_.make<BinExpr>(cur().line);
      b->op = op;
      next();
      b->left = left;
      b->right = parse_factor();
      left = b;
    }
    return left;
  }

  Expr* parse_factor() {
    if (at_op("-") || at_op("+")) {
      DepthGuard guard(*this);
      auto* u = prog_.make<UnaryExpr>(cur().line);
      u->op = cur().text == "-" ? UnaryOp::kNeg : UnaryOp::kPos;
      next();
      u->operand = parse_factor();
      return u;
    }
    if (at_op("~")) unsupported("bitwise operator '~'", cur().line);
    return parse_power();
  }

  Expr* parse_power() {
    if (at_kw("await")) unsupported("await expression", cur().line);
    Expr* base = parse_atom_expr();
    if (at_op("**")) {
      DepthGuard guard(*this);
      auto* b = prog_.make<BinExpr>(cur().line);
      b->op = BinOp::kPow;
      next();
      b->left = base;
      b->right = parse_factor();
      return b;
    }
    return base;
  }

  Expr* parse_atom_expr() {
    Expr* e = parse_atom();
    int trailers = 0;
    for (;;) {
      if (++trailers > kMaxNesting) syntax_error("too many chained operations", cur().line);
      if (at_op("(")) {
        e = parse_call(e);
      } else if (at_op("[")) {
        e = parse_subscript(e);
      } else if (at_op(".")) {
        const int line = next().line;
        if (!at(Tok::kName) || at_keyword()) fail_here();
        auto* a = prog_.make<AttributeExpr>(line);
        a->object = e;
        a->attr = next().text;
        e = a;
      } else {
        return e;
      }
    }
  }

  Expr* parse_call(Expr* func) {
    const int line = next().line;  // (
    auto* c = prog_.make<CallExpr>(line);
    c->func = func;
    while (!at_op(")")) {
      if (at_op("*") || at_op("**")) unsupported("argument unpacking", cur().line);
      if (at(Tok::kName) && !at_keyword() && ahead(1).kind == Tok::kOp && ahead(1).text == "=") {
        Keyword kw;
        kw.name = next().text;
        next();
        kw.value = parse_test();
        for (const auto& existing : c->kwargs) {
          if (existing.name == kw.name) syntax_error("keyword argument repeated: " + kw.name, line);
        }
        c->kwargs.push_back(std::move(kw));
      } else {
        Expr* arg = parse_test();
        if (at_kw("for")) {
          arg = parse_comprehension(CompKind::kGen, arg, nullptr, arg->line);
          if (!c->args.empty() || !c->kwargs.empty() || !at_op(")")) {
            syntax_error("Generator expression must be parenthesized", arg->line);
          }
        }
        if (!c->kwargs.empty()) syntax_error("positional argument follows keyword argument", arg->line);
        c->args.push_back(arg);
      }
      if (!accept_op(",")) break;
    }
    if (!at_op(")")) comma_or_syntax();
    next();
    return c;
  }

  [[noreturn]] void comma_or_syntax() {
    if (at(Tok::kName) || at(Tok::kNumber) || at(Tok::kString) || at_op("(") || at_op("[") || at_op("{")) {
      syntax_error("invalid syntax. Perhaps you forgot a comma?", cur().line);
    }
    fail_here();
  }

  Expr* parse_subscript(Expr* obj) {
    const int line = next().line;  // [
    auto* s = prog_.make<SubscriptExpr>(line);
    s->object = obj;
    auto parse_slice_part = [&]() -> Expr* {
      if (at_op(":") || at_op("]") || at_op(",")) return nullptr;
      return parse_test();
    };
    Expr* first = parse_slice_part();
    if (at_op(":")) {
      s->is_slice = true;
      s->lo = first;
      next();
      s->hi = parse_slice_part();
      if (accept_op(":")) s->step = parse_slice_part();
      if (at_op(",")) unsupported("extended slicing", line);
    } else {
      if (first == nullptr) fail_here();
      if (at_op(",")) {
        auto* t = prog_.make<SeqExpr>(ExprKind::kTuple, line);
        t->items.push_back(first);
        while (accept_op(",")) {
          if (at_op("]")) break;
          t->items.push_back(parse_test());
        }
        first = t;
      }
      s->index = first;
    }
    if (!at_op("]")) comma_or_syntax();
    next();
    return s;
  }

  Expr* parse_atom() {
    const Token& t = cur();
    const int line = t.line;
    switch (t.kind) {
      case Tok::kNumber: {
        auto* c = prog_.make<ConstExpr>(line);
        c->value = t.is_float ? Value::real(t.fval) : Value::integer(t.ival);
        next();
        return c;
      }
      case Tok::kString:
        return parse_strings();
      case Tok::kName: {
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          auto* c = prog_.make<ConstExpr>(line);
          c->value = t.text == "None" ? Value::none() : Value::boolean(t.text == "True");
          next();
          return c;
        }
        if (t.text == "yield") unsupported("yield expression", line);
        if (t.text == "await") unsupported("await expression", line);
        if (kKeywords.count(t.text) > 0) syntax_error("invalid syntax", line);
        auto* n = make_name(t.text, line);
        next();
        return n;
      }
      case Tok::kOp:
        if (t.text == "(") return parse_paren();
        if (t.text == "[") return parse_list_display();
        if (t.text == "{") return parse_brace_display();
        if (t.text == "...") unsupported("Ellipsis", line);
        break;
      case Tok::kIndent:
        syntax_error("unexpected indent", line);
      case Tok::kNewline:
      case Tok::kDedent:
      case Tok::kEnd:
        syntax_error("invalid syntax", line);
    }
    syntax_error("invalid syntax", line);
  }

  Expr* parse_paren() {
    const int line = next().line;
    if (accept_op(")")) return prog_.make<SeqExpr>(ExprKind::kTuple, line);
    if (at_op("*")) unsupported("starred expression", line);
    if (at_kw("yield")) unsupported("yield expression", line);
    Expr* first = parse_test();
    if (at_op(":=")) unsupported("assignment expression", line);
    if (at_kw("for")) {
      Expr* g = parse_comprehension(CompKind::kGen, first, nullptr, line);
      if (!at_op(")")) comma_or_syntax();
      next();
      return g;
    }
    if (accept_op(")")) return first;
    if (!at_op(",")) comma_or_syntax();
    auto* t = prog_.make<SeqExpr>(ExprKind::kTuple, line);
    t->items.push_back(first);
    while (accept_op(",")) {
      if (at_op(")")) break;
      if (at_op("*")) unsupported("starred expression", cur().line);
      t->items.push_back(parse_test());
    }
    if (!at_op(")")) comma_or_syntax();
    next();
    return t;
  }

  Expr* parse_list_display() {
    const int line = next().line;
    auto* l = prog_.make<SeqExpr>(ExprKind::kList, line);
    if (accept_op("]")) return l;
    if (at_op("*")) unsupported("starred expression", line);
    Expr* first = parse_test();
    if (at_kw("for")) {
      Expr* comp = parse_comprehension(CompKind::kList, first, nullptr, line);
      if (!at_op("]")) comma_or_syntax();
      next();
      return comp;
    }
    l->items.push_back(first);
    while (accept_op(",")) {
      if (at_op("]")) break;
      if (at_op("*")) unsupported("starred expression", cur().line);
      l->items.push_back(parse_test());
    }
    if (!at_op("]")) comma_or_syntax();
    next();
    return l;
  }

  Expr* parse_brace_display() {
    const int line = next().line;
    auto* d = prog_.make<DictExpr>(line);
    if (accept_op("}")) return d;
    if (at_op("**")) unsupported("dict unpacking", line);
    if (at_op("*")) unsupported("set display", line);
    Expr* key = parse_test();
    if (!at_op(":")) {
      if (at_op(",") || at_op("}") || at_kw("for")) unsupported(at_kw("for") ? "set comprehension" : "set display", line);
      comma_or_syntax();
    }
    next();
    Expr* value = parse_test();
    if (at_kw("for")) {
      Expr* comp = parse_comprehension(CompKind::kDict, key, value, line);
      if (!at_op("}")) comma_or_syntax();
      next();
      return comp;
    }
    d->items.emplace_back(key, value);
    while (accept_op(",")) {
      if (at_op("}")) break;
      if (at_op("**")) unsupported("dict unpacking", cur().line);
      Expr* k = parse_test();
      if (!at_op(":")) {
        if (at_op(",") || at_op("}")) syntax_error("':' expected after dictionary key", cur().line);
        comma_or_syntax();
      }
      next();
      d->items.emplace_back(k, parse_test());
    }
    if (!at_op("}")) comma_or_syntax();
    next();
    return d;
  }

  Expr* parse_comprehension(CompKind kind, Expr* elt, Expr* value, int line) {
    auto* c = prog_.make<CompExpr>(line);
    c->comp = kind;
    c->elt = elt;
    c->value = value;
    while (at_kw("for") || at_kw("async")) {
      if (at_kw("async")) unsupported("async comprehension", cur().line);
      next();
      Comprehension gen;
      gen.target = parse_target_list();
      if (!accept_kw("in")) fail_here();
      gen.iter = parse_or();
      while (at_kw("if")) {
        next();
        gen.conds.push_back(parse_test_nocond());
      }
      c->gens.push_back(std::move(gen));
    }
    return c;
  }

  Expr* parse_strings() {
    const int line = cur().line;
    bool any_f = false;
    std::vector<const Token*> parts;
    while (at(Tok::kString)) {
      parts.push_back(&cur());
      any_f = any_f || cur().fstring;
      next();
    }
    if (!any_f) {
      std::string joined;
      for (const Token* t : parts) joined += t->value;
      return make_str_const(std::move(joined), line);
    }
    auto* f = prog_.make<FStringExpr>(line);
    for (const Token* t : parts) {
      if (!t->fstring) {
        FStringPart lit;
        lit.literal = t->value;
        f->parts.push_back(std::move(lit));
        continue;
      }
      parse_fstring_body(t->value, t->raw, t->line, f->parts);
    }
    return f;
  }

  ConstExpr* make_str_const(std::string s, int line) {
    auto* c = prog_.make<ConstExpr>(line);
    c->owned = std::make_unique<StrObj>(std::move(s));
    c->value = Value::object(Type::kStr, c->owned.get());
    return c;
  }

  // Splits an f-string body into literal text and replacement fields.
  void parse_fstring_body(const std::string& body, bool raw, int line, std::vector<FStringPart>& out) {
    std::size_t i = 0;
    std::string literal;
    auto flush = [&] {
      if (literal.empty()) return;
      FStringPart part;
      part.literal = raw ? literal : decode_escapes(literal, line);
      out.push_back(std::move(part));
      literal.clear();
    };
    while (i < body.size()) {
      const char c = body[i];
      if (c == '{') {
        if (i + 1 < body.size() && body[i + 1] == '{') {
          literal += '{';
          i += 2;
          continue;
        }
        flush();
        i = parse_replacement_field(body, i + 1, raw, line, out);
        continue;
      }
      if (c == '}') {
        if (i + 1 < body.size() && body[i + 1] == '}') {
          literal += '}';
          i += 2;
          continue;
        }
        syntax_error("f-string: single '}' is not allowed", line);
      }
      literal += c;
      ++i;
    }
    flush();
  }

  // Parses `expr[=][!conv][:spec]}` starting after '{'; returns the index
  // after the closing brace.
  std::size_t parse_replacement_field(const std::string& body, std::size_t i, bool raw, int line,
                                      std::vector<FStringPart>& out) {
    const std::size_t expr_start = i;
    int depth = 0;
    char quote = 0;
    for (; i < body.size(); ++i) {
      const char c = body[i];
      if (quote != 0) {
        if (c == '\\') {
          ++i;
        } else if (c == quote) {
          quote = 0;
        }
        continue;
      }
      if (c == '\'' || c == '"') {
        quote = c;
      } else if (c == '(' || c == '[' || c == '{') {
        ++depth;
      } else if (c == ')' || c == ']' || c == '}') {
        if (depth == 0) break;
        --depth;
      } else if (depth == 0 && c == '!' && i + 1 < body.size() && body[i + 1] != '=') {
        break;
      } else if (depth == 0 && c == ':') {
        break;
      } else if (depth == 0 && c == '=' && i + 1 < body.size() && body[i + 1] != '=' && i > expr_start &&
                 std::string_view("=!<>").find(body[i - 1]) == std::string_view::npos) {
        break;
      }
    }
    if (i >= body.size()) syntax_error("f-string: expecting '}'", line);
    std::string expr_text = body.substr(expr_start, i - expr_start);
    if (expr_text.find_first_not_of(" \t\n") == std::string::npos) {
      syntax_error("f-string: valid expression required before '}'", line);
    }
    FStringPart field;
    if (body[i] == '=') {
      FStringPart lit;
      lit.literal = expr_text + "=";
      out.push_back(std::move(lit));
      field.conversion = 'r';
      ++i;
    }
    field.expr = parse_sub_expression(expr_text, line);
    if (i < body.size() && body[i] == '!') {
      if (i + 1 >= body.size()) syntax_error("f-string: expecting '}'", line);
      const char conv = body[i + 1];
      if (conv != 'r' && conv != 's' && conv != 'a') {
        syntax_error("f-string: invalid conversion character: expected 's', 'r', or 'a'", line);
      }
      field.conversion = conv == 's' ? 's' : 'r';
      i += 2;
    }
    if (i < body.size() && body[i] == ':') {
      field.has_spec = true;
      ++i;
      std::string literal;
      for (;;) {
        if (i >= body.size()) syntax_error("f-string: expecting '}'", line);
        const char c = body[i];
        if (c == '}') break;
        if (c == '{') {
          if (!literal.empty()) {
            FStringPart lit;
            lit.literal = raw ? literal : decode_escapes(literal, line);
            field.spec.push_back(std::move(lit));
            literal.clear();
          }
          i = parse_replacement_field(body, i + 1, raw, line, field.spec);
          continue;
        }
        literal += c;
        ++i;
      }
      if (!literal.empty()) {
        FStringPart lit;
        lit.literal = raw ? literal : decode_escapes(literal, line);
        field.spec.push_back(std::move(lit));
      }
    }
    if (i >= body.size() || body[i] != '}') syntax_error("f-string: expecting '}'", line);
    out.push_back(std::move(field));
    return i + 1;
  }

  Expr* parse_sub_expression(const std::string& text, int line) {
    std::vector<Token> sub = tokenize("(" + text + ")");
    for (auto& t : sub) t.line = line + t.line - 1;
    Parser nested(std::move(sub), prog_);
    nested.depth_ = depth_;
    nested.function_depth_ = function_depth_;
    Expr* e = nested.parse_testlist();
    while (nested.accept_kind(Tok::kNewline)) {
    }
    if (!nested.at(Tok::kEnd)) syntax_error("f-string: invalid syntax", line);
    return e;
  }
};

// ---- name resolution ----

struct Scope {
  Scope* parent = nullptr;
  std::unordered_map<std::string, int> slots;

  int bind(const std::string& name) {
    auto [it, inserted] = slots.emplace(name, static_cast<int>(slots.size()));
    return it->second;
  }
};

class Resolver {
 public:
  void resolve_module(Program& prog) {
    Scope module;
    for (Stmt* s : prog.body) collect_stmt(s, module);
    for (Stmt* s : prog.body) resolve_stmt(s, module);
    prog.module_slots = static_cast<int>(module.slots.size());
  }

 private:
  // Bindings made by a statement list in one function scope (not descending
  // into nested functions or comprehensions).
  void collect_stmt(Stmt* s, Scope& scope) {
    switch (s->kind) {
      case StmtKind::kAssign:
        for (Expr* t : static_cast<AssignStmt*>(s)->targets) collect_target(t, scope);
        break;
      case StmtKind::kAugAssign: collect_target(static_cast<AugAssignStmt*>(s)->target, scope); break;
      case StmtKind::kAnnAssign: collect_target(static_cast<AnnAssignStmt*>(s)->target, scope); break;
      case StmtKind::kFor: {
        auto* l = static_cast<LoopStmt*>(s);
        collect_target(l->target, scope);
        for (Stmt* b : l->body) collect_stmt(b, scope);
        for (Stmt* b : l->orelse) collect_stmt(b, scope);
        break;
      }
      case StmtKind::kWhile: {
        auto* l = static_cast<LoopStmt*>(s);
        for (Stmt* b : l->body) collect_stmt(b, scope);
        for (Stmt* b : l->orelse) collect_stmt(b, scope);
        break;
      }
      case StmtKind::kIf: {
        auto* i = static_cast<IfStmt*>(s);
        for (Stmt* b : i->body) collect_stmt(b, scope);
        for (Stmt* b : i->orelse) collect_stmt(b, scope);
        break;
      }
      case StmtKind::kDef: scope.bind(static_cast<DefStmt*>(s)->target->ref.id); break;
      case StmtKind::kImport:
        for (auto& b : static_cast<ImportStmt*>(s)->bindings) scope.bind(b.target->ref.id);
        break;
      default: break;
    }
  }

  void collect_target(Expr* t, Scope& scope) {
    if (t->kind == ExprKind::kName) {
      scope.bind(static_cast<NameExpr*>(t)->ref.id);
    } else if (t->kind == ExprKind::kTuple || t->kind == ExprKind::kList) {
      for (Expr* item : static_cast<SeqExpr*>(t)->items) collect_target(item, scope);
    }
  }

  void resolve_name(NameRef& ref, Scope& scope) {
    int depth = 0;
    for (Scope* s = &scope; s != nullptr; s = s->parent, ++depth) {
      auto it = s->slots.find(ref.id);
      if (it != s->slots.end()) {
        ref.scope = NameScope::kFrame;
        ref.depth = depth;
        ref.slot = it->second;
        return;
      }
    }
    if (auto b = builtin_by_name(ref.id)) {
      ref.scope = NameScope::kBuiltin;
      ref.builtin = *b;
      return;
    }
    ref.scope = NameScope::kUnresolved;
  }

  void resolve_body(std::vector<Stmt*>& body, Scope& scope) {
    for (Stmt* s : body) resolve_stmt(s, scope);
  }

  void resolve_stmt(Stmt* s, Scope& scope) {
    switch (s->kind) {
      case StmtKind::kExpr: resolve_expr(static_cast<ExprStmt*>(s)->value, scope); break;
      case StmtKind::kAssign: {
        auto* a = static_cast<AssignStmt*>(s);
        resolve_expr(a->value, scope);
        for (Expr* t : a->targets) resolve_expr(t, scope);
        break;
      }
      case StmtKind::kAugAssign: {
        auto* a = static_cast<AugAssignStmt*>(s);
        resolve_expr(a->value, scope);
        resolve_expr(a->target, scope);
        break;
      }
      case StmtKind::kAnnAssign: {
        auto* a = static_cast<AnnAssignStmt*>(s);
        if (a->value) resolve_expr(a->value, scope);
        resolve_expr(a->target, scope);
        break;
      }
      case StmtKind::kFor:
      case StmtKind::kWhile: {
        auto* l = static_cast<LoopStmt*>(s);
        if (l->target) resolve_expr(l->target, scope);
        resolve_expr(l->iter, scope);
        resolve_body(l->body, scope);
        resolve_body(l->orelse, scope);
        break;
      }
      case StmtKind::kIf: {
        auto* i = static_cast<IfStmt*>(s);
        resolve_expr(i->cond, scope);
        resolve_body(i->body, scope);
        resolve_body(i->orelse, scope);
        break;
      }
      case StmtKind::kReturn: {
        auto* r = static_cast<ReturnStmt*>(s);
        if (r->value) resolve_expr(r->value, scope);
        break;
      }
      case StmtKind::kDef: {
        auto* d = static_cast<DefStmt*>(s);
        resolve_name(d->target->ref, scope);
        resolve_function(*d->def, scope);
        break;
      }
      case StmtKind::kImport:
        for (auto& b : static_cast<ImportStmt*>(s)->bindings) resolve_name(b.target->ref, scope);
        break;
      default: break;
    }
  }

  void resolve_function(FuncDef& def, Scope& enclosing) {
    for (Expr* d : def.defaults) resolve_expr(d, enclosing);
    Scope scope;
    scope.parent = &enclosing;
    for (const auto& p : def.params) scope.bind(p);
    if (def.lambda_body) {
      resolve_expr(def.lambda_body, scope);
    } else {
      for (Stmt* s : def.body) collect_stmt(s, scope);
      resolve_body(def.body, scope);
    }
    def.nslots = static_cast<int>(scope.slots.size());
  }

  void resolve_expr(Expr* e, Scope& scope) {
    if (e == nullptr) return;
    switch (e->kind) {
      case ExprKind::kConst: break;
      case ExprKind::kName: resolve_name(static_cast<NameExpr*>(e)->ref, scope); break;
      case ExprKind::kFString:
        for (auto& part : static_cast<FStringExpr*>(e)->parts) resolve_fpart(part, scope);
        break;
      case ExprKind::kList:
      case ExprKind::kTuple:
        for (Expr* item : static_cast<SeqExpr*>(e)->items) resolve_expr(item, scope);
        break;
      case ExprKind::kDict:
        for (auto& [k, v] : static_cast<DictExpr*>(e)->items) {
          resolve_expr(k, scope);
          resolve_expr(v, scope);
        }
        break;
      case ExprKind::kComp: {
        auto* c = static_cast<CompExpr*>(e);
        // The first iterable is evaluated in the enclosing scope.
        resolve_expr(c->gens.front().iter, scope);
        Scope inner;
        inner.parent = &scope;
        for (auto& g : c->gens) collect_target(g.target, inner);
        for (std::size_t k = 0; k < c->gens.size(); ++k) {
          auto& g = c->gens[k];
          if (k > 0) resolve_expr(g.iter, inner);
          resolve_expr(g.target, inner);
          for (Expr* cond : g.conds) resolve_expr(cond, inner);
        }
        resolve_expr(c->elt, inner);
        resolve_expr(c->value, inner);
        c->nslots = static_cast<int>(inner.slots.size());
        break;
      }
      case ExprKind::kBinOp: {
        auto* b = static_cast<BinExpr*>(e);
        resolve_expr(b->left, scope);
        resolve_expr(b->right, scope);
        break;
      }
      case ExprKind::kUnary: resolve_expr(static_cast<UnaryExpr*>(e)->operand, scope); break;
      case ExprKind::kBoolOp:
        for (Expr* v : static_cast<BoolExpr*>(e)->values) resolve_expr(v, scope);
        break;
      case ExprKind::kCompare: {
        auto* c = static_cast<CompareExpr*>(e);
        resolve_expr(c->left, scope);
        for (auto& [op, rhs] : c->rest) resolve_expr(rhs, scope);
        break;
      }
      case ExprKind::kIfExp: {
        auto* i = static_cast<IfExpr*>(e);
        resolve_expr(i->cond, scope);
        resolve_expr(i->then, scope);
        resolve_expr(i->other, scope);
        break;
      }
      case ExprKind::kCall: {
        auto* c = static_cast<CallExpr*>(e);
        resolve_expr(c->func, scope);
        for (Expr* a : c->args) resolve_expr(a, scope);
        for (auto& kw : c->kwargs) resolve_expr(kw.value, scope);
        break;
      }
      case ExprKind::kAttribute: resolve_expr(static_cast<AttributeExpr*>(e)->object, scope); break;
      case ExprKind::kSubscript: {
        auto* s = static_cast<SubscriptExpr*>(e);
        resolve_expr(s->object, scope);
        resolve_expr(s->index, scope);
        resolve_expr(s->lo, scope);
        resolve_expr(s->hi, scope);
        resolve_expr(s->step, scope);
        break;
      }
      case ExprKind::kLambda: resolve_function(*static_cast<LambdaExpr*>(e)->def, scope); break;
    }
  }

  void resolve_fpart(FStringPart& part, Scope& scope) {
    if (part.expr) resolve_expr(part.expr, scope);
    for (auto& s : part.spec) resolve_fpart(s, scope);
  }
};

void check_module_shape(Program& prog) {
  const DefStmt* entry = nullptr;
  for (Stmt* s : prog.body) {
    if (s->kind == StmtKind::kImport) continue;
    if (s->kind == StmtKind::kDef) {
      auto* d = static_cast<DefStmt*>(s);
      if (d->def->name != kEntryName || entry != nullptr) {
        throw SourceError{FailureCategory::kOther,
                          fmt::format("only one top-level function named {} is allowed, found '{}' (<string>, line {})",
                                      kEntryName, d->def->name, d->line)};
      }
      entry = d;
      continue;
    }
    throw SourceError{FailureCategory::kOther,
                      fmt::format("stray top-level statement; only imports and the {} definition are allowed "
                                  "(<string>, line {})",
                                  kEntryName, s->line)};
  }
  if (entry == nullptr) {
    throw SourceError{FailureCategory::kOther, fmt::format("no function named {} was defined", kEntryName)};
  }
  if (entry->def->params.size() != 1) {
    throw SourceError{FailureCategory::kOther,
                      fmt::format("{} must take exactly one parameter, found {} (<string>, line {})", kEntryName,
                                  entry->def->params.size(), entry->line)};
  }
  prog.entry = entry->def;
  prog.entry_name = entry->target;
}

}  // namespace

std::unique_ptr<Program> parse_program_source(std::string_view source) {
  auto prog = std::make_unique<Program>();
  prog->source = std::string(source);
  Parser parser(tokenize(source), *prog);
  parser.parse_module();
  check_module_shape(*prog);
  Resolver().resolve_module(*prog);
  return prog;
}

}  // namespace chartpot::interp
