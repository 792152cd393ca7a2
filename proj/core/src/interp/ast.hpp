#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "interp/runtime.hpp"

namespace chartpot::interp {

struct Node {
  virtual ~Node() = default;
};

enum class NameScope : std::uint8_t { kUnresolved, kFrame, kBuiltin };

// Resolved variable reference: `depth` frames up from the current one.
struct NameRef {
  std::string id;
  NameScope scope = NameScope::kUnresolved;
  int depth = 0;
  int slot = -1;
  Builtin builtin = Builtin::kLen;
};

enum class ExprKind {
  kConst,
  kName,
  kFString,
  kList,
  kTuple,
  kDict,
  kComp,
  kBinOp,
  kUnary,
  kBoolOp,
  kCompare,
  kIfExp,
  kCall,
  kAttribute,
  kSubscript,
  kLambda,
};

struct Expr : Node {
  Expr(ExprKind k, int l) : kind(k), line(l) {}
  ExprKind kind;
  int line;
};

struct ConstExpr : Expr {
  explicit ConstExpr(int l) : Expr(ExprKind::kConst, l) {}
  Value value;
  std::unique_ptr<StrObj> owned;  // backing store for string constants
};

struct NameExpr : Expr {
  explicit NameExpr(int l) : Expr(ExprKind::kName, l) {}
  NameRef ref;
};

struct FStringPart {
  std::string literal;      // used when expr is null
  Expr* expr = nullptr;
  char conversion = 0;      // 0, 'r' or 's'
  bool has_spec = false;
  std::vector<FStringPart> spec;
};

struct FStringExpr : Expr {
  explicit FStringExpr(int l) : Expr(ExprKind::kFString, l) {}
  std::vector<FStringPart> parts;
};

struct SeqExpr : Expr {
  using Expr::Expr;
  std::vector<Expr*> items;
};

struct DictExpr : Expr {
  explicit DictExpr(int l) : Expr(ExprKind::kDict, l) {}
  std::vector<std::pair<Expr*, Expr*>> items;
};

struct Comprehension {
  Expr* target = nullptr;
  Expr* iter = nullptr;
  std::vector<Expr*> conds;
};

enum class CompKind { kList, kDict, kGen };

struct CompExpr : Expr {
  explicit CompExpr(int l) : Expr(ExprKind::kComp, l) {}
  CompKind comp = CompKind::kList;
  Expr* elt = nullptr;
  Expr* value = nullptr;  // dict comprehensions
  std::vector<Comprehension> gens;
  int nslots = 0;
};

struct BinExpr : Expr {
  explicit BinExpr(int l) : Expr(ExprKind::kBinOp, l) {}
  BinOp op = BinOp::kAdd;
  Expr* left = nullptr;
  Expr* right = nullptr;
};

enum class UnaryOp { kNeg, kPos, kNot };

struct UnaryExpr : Expr {
  explicit UnaryExpr(int l) : Expr(ExprKind::kUnary, l) {}
  UnaryOp op = UnaryOp::kNeg;
  Expr* operand = nullptr;
};

struct BoolExpr : Expr {
  explicit BoolExpr(int l) : Expr(ExprKind::kBoolOp, l) {}
  bool is_and = true;
  std::vector<Expr*> values;
};

struct CompareExpr : Expr {
  explicit CompareExpr(int l) : Expr(ExprKind::kCompare, l) {}
  Expr* left = nullptr;
  std::vector<std::pair<CmpOp, Expr*>> rest;
};

struct IfExpr : Expr {
  explicit IfExpr(int l) : Expr(ExprKind::kIfExp, l) {}
  Expr* cond = nullptr;
  Expr* then = nullptr;
  Expr* other = nullptr;
};

struct Keyword {
  std::string name;
  Expr* value = nullptr;
};

struct CallExpr : Expr {
  explicit CallExpr(int l) : Expr(ExprKind::kCall, l) {}
  Expr* func = nullptr;
  std::vector<Expr*> args;
  std::vector<Keyword> kwargs;
};

struct AttributeExpr : Expr {
  explicit AttributeExpr(int l) : Expr(ExprKind::kAttribute, l) {}
  Expr* object = nullptr;
  std::string attr;
};

struct SubscriptExpr : Expr {
  explicit SubscriptExpr(int l) : Expr(ExprKind::kSubscript, l) {}
  Expr* object = nullptr;
  Expr* index = nullptr;  // null for slices
  bool is_slice = false;
  Expr* lo = nullptr;
  Expr* hi = nullptr;
  Expr* step = nullptr;
};

struct Stmt;

struct FuncDef : Node {
  std::string name;  // "<lambda>" for lambdas
  std::vector<std::string> params;
  std::vector<Expr*> defaults;  // for the trailing params
  std::vector<Stmt*> body;
  Expr* lambda_body = nullptr;
  int nslots = 0;
  int line = 0;
};

struct LambdaExpr : Expr {
  explicit LambdaExpr(int l) : Expr(ExprKind::kLambda, l) {}
  FuncDef* def = nullptr;
};

enum class StmtKind {
  kExpr,
  kAssign,
  kAugAssign,
  kAnnAssign,
  kFor,
  kWhile,
  kIf,
  kReturn,
  kPass,
  kBreak,
  kContinue,
  kDef,
  kImport,
};

struct Stmt : Node {
  Stmt(StmtKind k, int l) : kind(k), line(l) {}
  StmtKind kind;
  int line;
};

struct ExprStmt : Stmt {
  explicit ExprStmt(int l) : Stmt(StmtKind::kExpr, l) {}
  Expr* value = nullptr;
};

struct AssignStmt : Stmt {
  explicit AssignStmt(int l) : Stmt(StmtKind::kAssign, l) {}
  std::vector<Expr*> targets;
  Expr* value = nullptr;
};

struct AugAssignStmt : Stmt {
  explicit AugAssignStmt(int l) : Stmt(StmtKind::kAugAssign, l) {}
  Expr* target = nullptr;
  BinOp op = BinOp::kAdd;
  Expr* value = nullptr;
};

struct AnnAssignStmt : Stmt {
  explicit AnnAssignStmt(int l) : Stmt(StmtKind::kAnnAssign, l) {}
  Expr* target = nullptr;
  Expr* value = nullptr;  // may be null (bare annotation)
};

struct LoopStmt : Stmt {
  using Stmt::Stmt;
  Expr* target = nullptr;  // for loops
  Expr* iter = nullptr;    // for: iterable, while: condition
  std::vector<Stmt*> body;
  std::vector<Stmt*> orelse;
};

struct IfStmt : Stmt {
  explicit IfStmt(int l) : Stmt(StmtKind::kIf, l) {}
  Expr* cond = nullptr;
  std::vector<Stmt*> body;
  std::vector<Stmt*> orelse;
};

struct ReturnStmt : Stmt {
  explicit ReturnStmt(int l) : Stmt(StmtKind::kReturn, l) {}
  Expr* value = nullptr;
};

struct DefStmt : Stmt {
  explicit DefStmt(int l) : Stmt(StmtKind::kDef, l) {}
  FuncDef* def = nullptr;
  NameExpr* target = nullptr;
};

struct ImportBinding {
  Value value;  // module or module function
  NameExpr* target = nullptr;
  std::string imported;  // for `from m import name`, the name
};

struct ImportStmt : Stmt {
  explicit ImportStmt(int l) : Stmt(StmtKind::kImport, l) {}
  ModuleId module = ModuleId::kStatistics;
  bool from = false;
  std::vector<ImportBinding> bindings;
};

struct Program {
  std::vector<std::unique_ptr<Node>> pool;
  std::vector<Stmt*> body;  // module level: imports and the entry def
  int module_slots = 0;
  const FuncDef* entry = nullptr;
  NameExpr* entry_name = nullptr;
  std::string source;

  template <class T, class... A>
  T* make(A&&... args) {
    auto node = std::make_unique<T>(std::forward<A>(args)...);
    T* raw = node.get();
    pool.push_back(std::move(node));
    return raw;
  }
};

}  // namespace chartpot::interp
