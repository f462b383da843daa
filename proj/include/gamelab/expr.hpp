#ifndef GAMELAB_EXPR_HPP
#define GAMELAB_EXPR_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gamelab/errors.hpp"

namespace gamelab {

enum class VarKind : std::uint8_t { Time, State, ControlU, ControlV };

enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };
enum class Builtin : std::uint8_t { Sin, Cos, Exp, Abs, Sqrt, Tanh, Min, Max };

// Variable bindings for evaluation. `t` is always bound; the indexed
// variables x1.., u1.., v1.. resolve against the spans (x1 -> x[0], ...).
struct EvalContext {
    double t = 0.0;
    std::span<const double> x{};
    std::span<const double> u{};
    std::span<const double> v{};
};

// Immutable arithmetic expression over {t, x1..xd, u1..um, v1..vk}.
//
// Stored as a flat postorder node pool, which doubles as the evaluation
// program: eval() is a small stack machine, cheap enough to sit inside the
// solver's innermost loops. Grammar (standard precedence, ^ right
// associative and binding tighter than unary minus):
//
//   expr  := term  (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := atom ('^' unary)?
//   atom  := number | func '(' args ')' | variable | '(' expr ')'
//
// Functions: sin cos exp abs sqrt tanh (one argument), min max (two).
class Expr {
  public:
    struct Node {
        enum class Kind : std::uint8_t { Literal, Variable, Negate, Binary, Call } kind;
        double literal = 0.0;
        VarKind var_kind = VarKind::Time;
        int var_index = 0;  // 0-based; unused for Time
        BinaryOp bop = BinaryOp::Add;
        Builtin fn = Builtin::Sin;
        int child0 = -1;
        int child1 = -1;
    };

    Expr() = default;

    double eval(const EvalContext& ctx) const;

    // Round-trip printer: parse_expression(to_string()) reconstructs the
    // same tree for any tree built by the parser (and for programmatic
    // trees whose literals are non-negative).
    std::string to_string() const;

    bool structurally_equal(const Expr& other) const;

    bool depends_on(VarKind kind) const;
    // Largest 1-based variable index of the given kind, 0 when absent.
    int max_index(VarKind kind) const;

    bool empty() const { return nodes_.empty(); }
    const std::vector<Node>& nodes() const { return nodes_; }

    // Programmatic constructors (used by tests and generators).
    static Expr literal(double c);
    static Expr variable(VarKind kind, int index_zero_based);
    static Expr negate(Expr e);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
    static Expr call(Builtin fn, Expr arg);
    static Expr call2(Builtin fn, Expr a, Expr b);

  private:
    friend struct ExprBuilder;  // internal parser access
    std::vector<Node> nodes_;  // postorder; root last
    int max_stack_ = 0;

    void finalize();
    int append_subtree(const Expr& sub);
};

// Parses `src`; throws ParseError (with byte offset) on syntax errors,
// unknown identifiers, and arity mismatches.
Expr parse_expression(std::string_view src);

const char* builtin_name(Builtin fn);

}  // namespace gamelab

#endif
