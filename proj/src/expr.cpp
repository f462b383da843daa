#include "gamelab/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>

namespace gamelab {

// Internal hatch for the parser to assemble the postorder node pool.
struct ExprBuilder {
    static std::vector<Expr::Node>& nodes(Expr& e) { return e.nodes_; }
    static void finalize(Expr& e) { e.finalize(); }
};

namespace {

constexpr int kMaxEvalStack = 256;

struct FuncInfo {
    std::string_view name;
    Builtin fn;
    int arity;
};

constexpr FuncInfo kFuncs[] = {
    {"sin", Builtin::Sin, 1},  {"cos", Builtin::Cos, 1},
    {"exp", Builtin::Exp, 1},  {"abs", Builtin::Abs, 1},
    {"sqrt", Builtin::Sqrt, 1}, {"tanh", Builtin::Tanh, 1},
    {"min", Builtin::Min, 2},  {"max", Builtin::Max, 2},
};

const FuncInfo* find_func(std::string_view name) {
    for (const auto& f : kFuncs) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

// Classifies an identifier as a variable. Indices are 1-based in source
// ("x1" is the first state coordinate) with no leading zeros.
std::optional<std::pair<VarKind, int>> classify_variable(std::string_view id) {
    if (id == "t") return {{VarKind::Time, 0}};
    if (id.size() < 2) return std::nullopt;
    VarKind kind;
    switch (id[0]) {
        case 'x': kind = VarKind::State; break;
        case 'u': kind = VarKind::ControlU; break;
        case 'v': kind = VarKind::ControlV; break;
        default: return std::nullopt;
    }
    if (id[1] == '0') return std::nullopt;
    int index = 0;
    for (std::size_t i = 1; i < id.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(id[i]))) return std::nullopt;
        if (index > 10'000) return std::nullopt;
        index = index * 10 + (id[i] - '0');
    }
    return {{kind, index - 1}};
}

class Parser {
  public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr run() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
        Expr e;
        parse_expr(e);
        skip_ws();
        if (pos_ < src_.size()) {
            throw ParseError("unexpected trailing input", pos_);
        }
        ExprBuilder::finalize(e);
        return e;
    }

  private:
    std::string_view src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() &&
               std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    bool peek_is(char c) {
        skip_ws();
        return pos_ < src_.size() && src_[pos_] == c;
    }

    bool consume(char c) {
        if (peek_is(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!consume(c)) {
            throw ParseError(std::string("expected '") + c + "' " + what, pos_);
        }
    }

    static int push_node(Expr& e, Expr::Node n) {
        auto& nodes = ExprBuilder::nodes(e);
        nodes.push_back(n);
        return static_cast<int>(nodes.size()) - 1;
    }

    // Each parse_* appends the subtree in postorder and returns the root index.
    int parse_expr(Expr& e) {
        int lhs = parse_term(e);
        for (;;) {
            skip_ws();
            if (consume('+')) {
                lhs = make_binary(e, BinaryOp::Add, lhs, parse_term(e));
            } else if (consume('-')) {
                lhs = make_binary(e, BinaryOp::Sub, lhs, parse_term(e));
            } else {
                return lhs;
            }
        }
    }

    int parse_term(Expr& e) {
        int lhs = parse_unary(e);
        for (;;) {
            skip_ws();
            if (consume('*')) {
                lhs = make_binary(e, BinaryOp::Mul, lhs, parse_unary(e));
            } else if (consume('/')) {
                lhs = make_binary(e, BinaryOp::Div, lhs, parse_unary(e));
            } else {
                return lhs;
            }
        }
    }

    int parse_unary(Expr& e) {
        skip_ws();
        if (consume('-')) {
            const int child = parse_unary(e);
            Expr::Node n;
            n.kind = Expr::Node::Kind::Negate;
            n.child0 = child;
            return push_node(e, n);
        }
        return parse_power(e);
    }

    int parse_power(Expr& e) {
        const int base = parse_atom(e);
        skip_ws();
        if (consume('^')) {
            return make_binary(e, BinaryOp::Pow, base, parse_unary(e));
        }
        return base;
    }

    int make_binary(Expr& e, BinaryOp op, int lhs, int rhs) {
        Expr::Node n;
        n.kind = Expr::Node::Kind::Binary;
        n.bop = op;
        n.child0 = lhs;
        n.child1 = rhs;
        return push_node(e, n);
    }

    int parse_atom(Expr& e) {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = parse_expr(e);
            expect(')', "to close parenthesis");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number(e);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return parse_identifier(e);
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    int parse_number(Expr& e) {
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        double value = 0.0;
        const auto res = std::from_chars(begin, end, value);
        if (res.ec != std::errc{} || res.ptr == begin) {
            throw ParseError("malformed number", pos_);
        }
        pos_ += static_cast<std::size_t>(res.ptr - begin);
        Expr::Node n;
        n.kind = Expr::Node::Kind::Literal;
        n.literal = value;
        return push_node(e, n);
    }

    int parse_identifier(Expr& e) {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view id = src_.substr(start, pos_ - start);
        if (const FuncInfo* f = find_func(id)) {
            skip_ws();
            if (!consume('(')) {
                throw ParseError("function '" + std::string(id) +
                                     "' requires parenthesized arguments",
                                 start);
            }
            const int a0 = parse_expr(e);
            int a1 = -1;
            int argc = 1;
            while (consume(',')) {
                if (argc == 1) {
                    a1 = parse_expr(e);
                } else {
                    parse_expr(e);  // consume, will fail the arity check
                }
                ++argc;
            }
            expect(')', "to close argument list");
            if (argc != f->arity) {
                throw ParseError("arity mismatch for '" + std::string(id) +
                                     "': expected " + std::to_string(f->arity) +
                                     ", got " + std::to_string(argc),
                                 start);
            }
            Expr::Node n;
            n.kind = Expr::Node::Kind::Call;
            n.fn = f->fn;
            n.child0 = a0;
            n.child1 = a1;
            return push_node(e, n);
        }
        const auto var = classify_variable(id);
        if (!var) {
            throw ParseError("unknown identifier '" + std::string(id) + "'", start);
        }
        Expr::Node n;
        n.kind = Expr::Node::Kind::Variable;
        n.var_kind = var->first;
        n.var_index = var->second;
        return push_node(e, n);
    }
};

double apply_builtin(Builtin fn, double a, double b) {
    switch (fn) {
        case Builtin::Sin: return std::sin(a);
        case Builtin::Cos: return std::cos(a);
        case Builtin::Exp: return std::exp(a);
        case Builtin::Abs: return std::fabs(a);
        case Builtin::Sqrt: return std::sqrt(a);
        case Builtin::Tanh: return std::tanh(a);
        case Builtin::Min: return std::fmin(a, b);
        case Builtin::Max: return std::fmax(a, b);
    }
    return 0.0;
}

const char* var_prefix(VarKind kind) {
    switch (kind) {
        case VarKind::Time: return "t";
        case VarKind::State: return "x";
        case VarKind::ControlU: return "u";
        case VarKind::ControlV: return "v";
    }
    return "?";
}

std::string format_double(double v) {
    char buf[48];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Precedence levels used by the printer; must stay aligned with the grammar.
int node_precedence(const Expr::Node& n) {
    switch (n.kind) {
        case Expr::Node::Kind::Literal:
        case Expr::Node::Kind::Variable:
        case Expr::Node::Kind::Call:
            return 5;
        case Expr::Node::Kind::Negate:
            return 3;
        case Expr::Node::Kind::Binary:
            switch (n.bop) {
                case BinaryOp::Add:
                case BinaryOp::Sub: return 1;
                case BinaryOp::Mul:
                case BinaryOp::Div: return 2;
                case BinaryOp::Pow: return 4;
            }
    }
    return 5;
}

}  // namespace

const char* builtin_name(Builtin fn) {
    for (const auto& f : kFuncs) {
        if (f.fn == fn) return f.name.data();
    }
    return "?";
}

void Expr::finalize() {
    // Required stack depth for the postorder program.
    int depth = 0;
    max_stack_ = 0;
    for (const auto& n : nodes_) {
        switch (n.kind) {
            case Node::Kind::Literal:
            case Node::Kind::Variable:
                ++depth;
                break;
            case Node::Kind::Negate:
                break;
            case Node::Kind::Binary:
                --depth;
                break;
            case Node::Kind::Call:
                if (n.child1 >= 0) --depth;
                break;
        }
        if (depth > max_stack_) max_stack_ = depth;
    }
    if (max_stack_ > kMaxEvalStack) {
        throw ParseError("expression too deeply nested", 0);
    }
}

double Expr::eval(const EvalContext& ctx) const {
    if (nodes_.empty()) throw EvalError("eval of empty expression");
    double stack[kMaxEvalStack];
    int sp = 0;
    for (const auto& n : nodes_) {
        switch (n.kind) {
            case Node::Kind::Literal:
                stack[sp++] = n.literal;
                break;
            case Node::Kind::Variable: {
                double value;
                if (n.var_kind == VarKind::Time) {
                    value = ctx.t;
                } else {
                    const std::span<const double>& bank =
                        n.var_kind == VarKind::State ? ctx.x
                        : n.var_kind == VarKind::ControlU ? ctx.u
                                                          : ctx.v;
                    if (n.var_index < 0 ||
                        static_cast<std::size_t>(n.var_index) >= bank.size()) {
                        throw EvalError(std::string("unbound variable ") +
                                        var_prefix(n.var_kind) +
                                        std::to_string(n.var_index + 1));
                    }
                    value = bank[static_cast<std::size_t>(n.var_index)];
                }
                stack[sp++] = value;
                break;
            }
            case Node::Kind::Negate:
                stack[sp - 1] = -stack[sp - 1];
                break;
            case Node::Kind::Binary: {
                const double b = stack[--sp];
                const double a = stack[sp - 1];
                double r;
                switch (n.bop) {
                    case BinaryOp::Add: r = a + b; break;
                    case BinaryOp::Sub: r = a - b; break;
                    case BinaryOp::Mul: r = a * b; break;
                    case BinaryOp::Div:
                        if (b == 0.0) {
                            throw EvalError("division by zero");
                        }
                        r = a / b;
                        break;
                    case BinaryOp::Pow: r = std::pow(a, b); break;
                }
                if (!std::isfinite(r)) {
                    throw EvalError("non-finite value in arithmetic");
                }
                stack[sp - 1] = r;
                break;
            }
            case Node::Kind::Call: {
                double r;
                if (n.child1 >= 0) {
                    const double b = stack[--sp];
                    const double a = stack[sp - 1];
                    r = apply_builtin(n.fn, a, b);
                } else {
                    r = apply_builtin(n.fn, stack[sp - 1], 0.0);
                }
                if (!std::isfinite(r)) {
                    throw EvalError(std::string("non-finite value from ") +
                                    builtin_name(n.fn));
                }
                stack[sp - 1] = r;
                break;
            }
        }
    }
    return stack[0];
}

namespace {

void print_node(const std::vector<Expr::Node>& nodes, int idx, std::string& out) {
    const Expr::Node& n = nodes[static_cast<std::size_t>(idx)];
    const auto child_str = [&nodes](int c, bool parens) {
        std::string s;
        if (parens) s += '(';
        print_node(nodes, c, s);
        if (parens) s += ')';
        return s;
    };
    switch (n.kind) {
        case Expr::Node::Kind::Literal:
            out += format_double(n.literal);
            break;
        case Expr::Node::Kind::Variable:
            out += var_prefix(n.var_kind);
            if (n.var_kind != VarKind::Time) {
                out += std::to_string(n.var_index + 1);
            }
            break;
        case Expr::Node::Kind::Negate: {
            const int cprec = node_precedence(nodes[static_cast<std::size_t>(n.child0)]);
            out += '-';
            out += child_str(n.child0, cprec < 3);
            break;
        }
        case Expr::Node::Kind::Call:
            out += builtin_name(n.fn);
            out += '(';
            print_node(nodes, n.child0, out);
            if (n.child1 >= 0) {
                out += ", ";
                print_node(nodes, n.child1, out);
            }
            out += ')';
            break;
        case Expr::Node::Kind::Binary: {
            const int p = node_precedence(n);
            const int lp = node_precedence(nodes[static_cast<std::size_t>(n.child0)]);
            const int rp = node_precedence(nodes[static_cast<std::size_t>(n.child1)]);
            const char* op = "?";
            bool lparen = false, rparen = false;
            switch (n.bop) {
                case BinaryOp::Add: op = " + "; lparen = lp < p; rparen = rp <= p; break;
                case BinaryOp::Sub: op = " - "; lparen = lp < p; rparen = rp <= p; break;
                case BinaryOp::Mul: op = "*"; lparen = lp < p; rparen = rp <= p; break;
                case BinaryOp::Div: op = "/"; lparen = lp < p; rparen = rp <= p; break;
                case BinaryOp::Pow:
                    // Grammar: base is an atom, exponent a unary expression.
                    op = "^";
                    lparen = lp < 5;
                    rparen = rp < 3;
                    break;
            }
            out += child_str(n.child0, lparen);
            out += op;
            out += child_str(n.child1, rparen);
            break;
        }
    }
}

bool nodes_equal(const std::vector<Expr::Node>& a, int ia,
                 const std::vector<Expr::Node>& b, int ib) {
    const auto& na = a[static_cast<std::size_t>(ia)];
    const auto& nb = b[static_cast<std::size_t>(ib)];
    if (na.kind != nb.kind) return false;
    switch (na.kind) {
        case Expr::Node::Kind::Literal:
            // Bit-level comparison keeps -0.0 and 0.0 distinct on purpose.
            return na.literal == nb.literal &&
                   std::signbit(na.literal) == std::signbit(nb.literal);
        case Expr::Node::Kind::Variable:
            return na.var_kind == nb.var_kind && na.var_index == nb.var_index;
        case Expr::Node::Kind::Negate:
            return nodes_equal(a, na.child0, b, nb.child0);
        case Expr::Node::Kind::Binary:
            return na.bop == nb.bop && nodes_equal(a, na.child0, b, nb.child0) &&
                   nodes_equal(a, na.child1, b, nb.child1);
        case Expr::Node::Kind::Call:
            if (na.fn != nb.fn) return false;
            if ((na.child1 >= 0) != (nb.child1 >= 0)) return false;
            if (!nodes_equal(a, na.child0, b, nb.child0)) return false;
            return na.child1 < 0 || nodes_equal(a, na.child1, b, nb.child1);
    }
    return false;
}

}  // namespace

std::string Expr::to_string() const {
    if (nodes_.empty()) return {};
    std::string out;
    print_node(nodes_, static_cast<int>(nodes_.size()) - 1, out);
    return out;
}

bool Expr::structurally_equal(const Expr& other) const {
    if (nodes_.empty() || other.nodes_.empty()) {
        return nodes_.empty() && other.nodes_.empty();
    }
    return nodes_equal(nodes_, static_cast<int>(nodes_.size()) - 1, other.nodes_,
                       static_cast<int>(other.nodes_.size()) - 1);
}

bool Expr::depends_on(VarKind kind) const {
    for (const auto& n : nodes_) {
        if (n.kind == Node::Kind::Variable && n.var_kind == kind) return true;
    }
    return false;
}

int Expr::max_index(VarKind kind) const {
    int mx = 0;
    for (const auto& n : nodes_) {
        if (n.kind == Node::Kind::Variable && n.var_kind == kind) {
            mx = std::max(mx, n.var_index + 1);
        }
    }
    return mx;
}

int Expr::append_subtree(const Expr& sub) {
    const int offset = static_cast<int>(nodes_.size());
    for (auto n : sub.nodes_) {
        if (n.child0 >= 0) n.child0 += offset;
        if (n.child1 >= 0) n.child1 += offset;
        nodes_.push_back(n);
    }
    return static_cast<int>(nodes_.size()) - 1;
}

Expr Expr::literal(double c) {
    Expr e;
    Node n;
    n.kind = Node::Kind::Literal;
    n.literal = c;
    e.nodes_.push_back(n);
    e.finalize();
    return e;
}

Expr Expr::variable(VarKind kind, int index_zero_based) {
    Expr e;
    Node n;
    n.kind = Node::Kind::Variable;
    n.var_kind = kind;
    n.var_index = index_zero_based;
    e.nodes_.push_back(n);
    e.finalize();
    return e;
}

Expr Expr::negate(Expr child) {
    Expr e;
    const int c = e.append_subtree(child);
    Node n;
    n.kind = Node::Kind::Negate;
    n.child0 = c;
    e.nodes_.push_back(n);
    e.finalize();
    return e;
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
    Expr e;
    const int a = e.append_subtree(lhs);
    const int b = e.append_subtree(rhs);
    Node n;
    n.kind = Node::Kind::Binary;
    n.bop = op;
    n.child0 = a;
    n.child1 = b;
    e.nodes_.push_back(n);
    e.finalize();
    return e;
}

Expr Expr::call(Builtin fn, Expr arg) {
    Expr e;
    const int a = e.append_subtree(arg);
    Node n;
    n.kind = Node::Kind::Call;
    n.fn = fn;
    n.child0 = a;
    e.nodes_.push_back(n);
    e.finalize();
    return e;
}

Expr Expr::call2(Builtin fn, Expr lhs, Expr rhs) {
    Expr e;
    const int a = e.append_subtree(lhs);
    const int b = e.append_subtree(rhs);
    Node n;
    n.kind = Node::Kind::Call;
    n.fn = fn;
    n.child0 = a;
    n.child1 = b;
    e.nodes_.push_back(n);
    e.finalize();
    return e;
}

Expr parse_expression(std::string_view src) {
    return Parser(src).run();
}

}  // namespace gamelab
