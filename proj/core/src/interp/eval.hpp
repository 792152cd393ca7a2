#pragma once

#include "interp/ast.hpp"
#include "interp/runtime.hpp"

namespace chartpot::interp {

// Tree-walking evaluator for one parsed program.
class Evaluator {
 public:
  Evaluator(Runtime& rt, const Program& prog);

  // Runs the module body, then calls the entry function with `arg`.
  Value run(Value arg);
  Value call_function(FunctionObj& fn, CallArgs& args);

 private:
  enum class Flow { kNormal, kBreak, kContinue, kReturn };

  Flow exec_block(const std::vector<Stmt*>& body, Frame* frame);
  Flow exec(const Stmt* s, Frame* frame);
  Value eval(const Expr* e, Frame* frame);
  Value eval_name(const NameExpr* n, Frame* frame);
  Value eval_comp(const CompExpr* c, Frame* frame);
  Value eval_call(const CallExpr* c, Frame* frame);
  Value eval_fstring(const FStringExpr* f, Frame* frame);
  std::string render_part(const FStringPart& part, Frame* frame);
  Value make_function(const FuncDef* def, Frame* frame);
  void assign(const Expr* target, Value v, Frame* frame);
  void store_name(const NameRef& ref, Value v, Frame* frame);

  Runtime& rt_;
  const Program& prog_;
  Value return_value_;
  int eval_depth_ = 0;
};

}  // namespace chartpot::interp
