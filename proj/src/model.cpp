#include "gamelab/model.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "gamelab/numerics.hpp"
#include "gamelab/rng.hpp"

namespace gamelab {

int ActionGrid::nearest(std::span<const double> a) const {
    if (points.empty()) throw ConfigError("empty action grid");
    int best = 0;
    double best_d2 = -1.0;
    for (int i = 0; i < size(); ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        double d2 = 0.0;
        const std::size_t n = std::min(p.size(), a.size());
        for (std::size_t c = 0; c < n; ++c) {
            const double diff = p[c] - a[c];
            d2 += diff * diff;
        }
        if (best_d2 < 0.0 || d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

ActionGrid ActionGrid::from_ranges(
    const std::vector<std::array<double, 2>>& min_max,
    const std::vector<int>& counts, char label) {
    if (min_max.empty() || min_max.size() != counts.size()) {
        throw ConfigError("action grid needs one {min,max,count} per component");
    }
    std::vector<std::vector<double>> axes;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < 1) throw ConfigError("action grid count must be >= 1");
        if (counts[c] == 1 && min_max[c][0] != min_max[c][1]) {
            throw ConfigError("single-point action range requires min == max");
        }
        if (counts[c] > 1 && !(min_max[c][0] < min_max[c][1])) {
            throw ConfigError("action range needs min < max (points must be distinct)");
        }
        axes.push_back(linspace(min_max[c][0], min_max[c][1], counts[c]));
    }
    ActionGrid g;
    g.label = label;
    g.components = static_cast<int>(axes.size());
    // Cartesian product, last component fastest.
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.size();
    g.points.reserve(total);
    std::vector<std::size_t> idx(axes.size(), 0);
    for (std::size_t k = 0; k < total; ++k) {
        std::vector<double> p(axes.size());
        for (std::size_t c = 0; c < axes.size(); ++c) p[c] = axes[c][idx[c]];
        g.points.push_back(std::move(p));
        for (std::size_t c = axes.size(); c-- > 0;) {
            if (++idx[c] < axes[c].size()) break;
            idx[c] = 0;
        }
    }
    return g;
}

bool GameModel::coefficients_static() const {
    for (const auto& e : drift) {
        if (e.depends_on(VarKind::Time) || e.depends_on(VarKind::State)) return false;
    }
    for (const auto& row : sigma) {
        for (const auto& e : row) {
            if (e.depends_on(VarKind::Time) || e.depends_on(VarKind::State)) return false;
        }
    }
    return true;
}

void GameModel::validate() const {
    if (d < 1) throw ConfigError("state dimension d must be >= 1");
    if (d_prime < 1) throw ConfigError("noise dimension d_prime must be >= 1");
    if (!(horizon > 0.0)) throw ConfigError("horizon T must be positive");
    if (static_cast<int>(drift.size()) != d) {
        throw ConfigError("b must have exactly d = " + std::to_string(d) + " entries");
    }
    if (static_cast<int>(sigma.size()) != d) {
        throw ConfigError("sigma must have exactly d rows");
    }
    for (const auto& row : sigma) {
        if (static_cast<int>(row.size()) != d_prime) {
            throw ConfigError("every sigma row must have d_prime = " +
                              std::to_string(d_prime) + " entries");
        }
    }
    if (payoff.empty()) throw ConfigError("missing terminal payoff g");
    if (action_u.size() < 1 || action_v.size() < 1) {
        throw ConfigError("action grids must be non-empty");
    }
    const int m = action_u.components;
    const int k = action_v.components;
    const auto check = [&](const Expr& e, const std::string& name) {
        if (e.max_index(VarKind::State) > d) {
            throw ConfigError(name + " references x" +
                              std::to_string(e.max_index(VarKind::State)) +
                              " but d = " + std::to_string(d));
        }
        if (e.max_index(VarKind::ControlU) > m) {
            throw ConfigError(name + " references u" +
                              std::to_string(e.max_index(VarKind::ControlU)) +
                              " but the U grid has " + std::to_string(m) +
                              " component(s)");
        }
        if (e.max_index(VarKind::ControlV) > k) {
            throw ConfigError(name + " references v" +
                              std::to_string(e.max_index(VarKind::ControlV)) +
                              " but the V grid has " + std::to_string(k) +
                              " component(s)");
        }
    };
    for (std::size_t i = 0; i < drift.size(); ++i) {
        check(drift[i], "b[" + std::to_string(i) + "]");
    }
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        for (std::size_t j = 0; j < sigma[i].size(); ++j) {
            check(sigma[i][j],
                  "sigma[" + std::to_string(i) + "][" + std::to_string(j) + "]");
        }
    }
    check(payoff, "g");
    if (payoff.depends_on(VarKind::Time) || payoff.depends_on(VarKind::ControlU) ||
        payoff.depends_on(VarKind::ControlV)) {
        throw ConfigError("g must depend on x-variables only");
    }
}

// ---------------------------------------------------------------------------
// Config-file parsing: a line-oriented key/value format with [sections],
// numbers, quoted strings, nested [...] arrays and {k = v, ...} tables.

namespace {

struct Value {
    enum class Kind { Number, String, Array, Table } kind = Kind::Number;
    double number = 0.0;
    std::string str;
    std::vector<Value> array;
    std::vector<std::pair<std::string, Value>> table;

    const Value* find(std::string_view key) const {
        for (const auto& [k, v] : table) {
            if (k == key) return &v;
        }
        return nullptr;
    }
};

class ConfigScanner {
  public:
    ConfigScanner(std::string_view text, int line) : s_(text), line_(line) {}

    Value parse_value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        const char c = s_[pos_];
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        if (c == '{') return parse_table();
        return parse_number();
    }

    void expect_end() {
        skip_ws();
        if (pos_ < s_.size()) fail("trailing characters after value");
    }

  private:
    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;

    [[noreturn]] void fail(const std::string& msg) {
        throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < s_.size() &&
               std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Value parse_string() {
        ++pos_;  // opening quote
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') out += s_[pos_++];
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        Value v;
        v.kind = Value::Kind::String;
        v.str = std::move(out);
        return v;
    }

    Value parse_number() {
        const char* begin = s_.data() + pos_;
        const char* end = s_.data() + s_.size();
        double num = 0.0;
        const auto res = std::from_chars(begin, end, num);
        if (res.ec != std::errc{} || res.ptr == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(res.ptr - begin);
        Value v;
        v.kind = Value::Kind::Number;
        v.number = num;
        return v;
    }

    Value parse_array() {
        ++pos_;  // '['
        Value v;
        v.kind = Value::Kind::Array;
        if (consume(']')) return v;
        for (;;) {
            v.array.push_back(parse_value());
            if (consume(']')) return v;
            if (!consume(',')) fail("expected ',' or ']' in array");
        }
    }

    Value parse_table() {
        ++pos_;  // '{'
        Value v;
        v.kind = Value::Kind::Table;
        if (consume('}')) return v;
        for (;;) {
            skip_ws();
            std::string key;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                    s_[pos_] == '_')) {
                key += s_[pos_++];
            }
            if (key.empty()) fail("expected key in table");
            if (!consume('=')) fail("expected '=' after key '" + key + "'");
            v.table.emplace_back(std::move(key), parse_value());
            if (consume('}')) return v;
            if (!consume(',')) fail("expected ',' or '}' in table");
        }
    }
};

using Section = std::map<std::string, Value, std::less<>>;

std::map<std::string, Section, std::less<>> parse_config(std::string_view text) {
    std::map<std::string, Section, std::less<>> sections;
    std::string current;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        ++line_no;
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(start, nl - start);
        start = nl + 1;
        // Strip comments (naive: '#' cannot appear inside quoted strings in
        // this format's expressions, which use no '#').
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        std::size_t b = 0, e = line.size();
        while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
        line = line.substr(b, e - b);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']' &&
            line.find('=') == std::string_view::npos) {
            current = std::string(line.substr(1, line.size() - 2));
            if (current.empty()) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": empty section name");
            }
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        std::string key(line.substr(0, eq));
        while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) {
            key.pop_back();
        }
        if (key.empty() || current.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key outside of a [section]");
        }
        ConfigScanner scanner(line.substr(eq + 1), line_no);
        Value v = scanner.parse_value();
        scanner.expect_end();
        sections[current][key] = std::move(v);
    }
    return sections;
}

const Value& require(const Section& s, const std::string& section,
                     const std::string& key) {
    const auto it = s.find(key);
    if (it == s.end()) {
        throw ConfigError("missing field [" + section + "]." + key);
    }
    return it->second;
}

double require_number(const Section& s, const std::string& section,
                      const std::string& key) {
    const Value& v = require(s, section, key);
    if (v.kind != Value::Kind::Number) {
        throw ConfigError("[" + section + "]." + key + " must be a number");
    }
    return v.number;
}

int require_int(const Section& s, const std::string& section,
                const std::string& key) {
    const double x = require_number(s, section, key);
    const int n = static_cast<int>(std::llround(x));
    if (static_cast<double>(n) != x) {
        throw ConfigError("[" + section + "]." + key + " must be an integer");
    }
    return n;
}

Expr parse_coeff(const std::string& where, const Value& v) {
    if (v.kind != Value::Kind::String) {
        throw ConfigError(where + " must be a quoted expression string");
    }
    try {
        return parse_expression(v.str);
    } catch (const ParseError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

ActionGrid parse_action_grid(const std::string& section, const std::string& key,
                             const Value& v, char label) {
    std::vector<const Value*> specs;
    if (v.kind == Value::Kind::Table) {
        specs.push_back(&v);
    } else if (v.kind == Value::Kind::Array) {
        for (const auto& e : v.array) specs.push_back(&e);
    } else {
        throw ConfigError("[" + section + "]." + key +
                          " must be a {min,max,count} table or an array of them");
    }
    std::vector<std::array<double, 2>> ranges;
    std::vector<int> counts;
    for (const Value* spec : specs) {
        if (spec->kind != Value::Kind::Table) {
            throw ConfigError("[" + section + "]." + key +
                              ": each component must be a {min,max,count} table");
        }
        const Value* mn = spec->find("min");
        const Value* mx = spec->find("max");
        const Value* ct = spec->find("count");
        if (!mn || !mx || !ct || mn->kind != Value::Kind::Number ||
            mx->kind != Value::Kind::Number || ct->kind != Value::Kind::Number) {
            throw ConfigError("[" + section + "]." + key +
                              ": component needs numeric min, max, count");
        }
        ranges.push_back({mn->number, mx->number});
        counts.push_back(static_cast<int>(std::llround(ct->number)));
    }
    return ActionGrid::from_ranges(ranges, counts, label);
}

}  // namespace

GameModel load_model(std::string_view config_text) {
    const auto sections = parse_config(config_text);
    const auto dyn_it = sections.find("dynamics");
    if (dyn_it == sections.end()) throw ConfigError("missing [dynamics] section");
    const auto act_it = sections.find("actions");
    if (act_it == sections.end()) throw ConfigError("missing [actions] section");
    const Section& dyn = dyn_it->second;
    const Section& act = act_it->second;

    GameModel m;
    m.d = require_int(dyn, "dynamics", "d");
    m.d_prime = require_int(dyn, "dynamics", "d_prime");
    m.horizon = require_number(dyn, "dynamics", "T");

    const Value& b = require(dyn, "dynamics", "b");
    if (b.kind != Value::Kind::Array) {
        throw ConfigError("[dynamics].b must be an array of expression strings");
    }
    for (std::size_t i = 0; i < b.array.size(); ++i) {
        m.drift.push_back(parse_coeff("b[" + std::to_string(i) + "]", b.array[i]));
    }

    const Value& sg = require(dyn, "dynamics", "sigma");
    if (sg.kind != Value::Kind::Array) {
        throw ConfigError("[dynamics].sigma must be an array of rows");
    }
    for (std::size_t i = 0; i < sg.array.size(); ++i) {
        const Value& row = sg.array[i];
        if (row.kind != Value::Kind::Array) {
            throw ConfigError("[dynamics].sigma row " + std::to_string(i) +
                              " must be an array of expression strings");
        }
        std::vector<Expr> entries;
        for (std::size_t j = 0; j < row.array.size(); ++j) {
            entries.push_back(parse_coeff(
                "sigma[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                row.array[j]));
        }
        m.sigma.push_back(std::move(entries));
    }

    m.payoff = parse_coeff("g", require(dyn, "dynamics", "g"));
    m.action_u = parse_action_grid("actions", "u_grid",
                                   require(act, "actions", "u_grid"), 'U');
    m.action_v = parse_action_grid("actions", "v_grid",
                                   require(act, "actions", "v_grid"), 'V');
    m.validate();
    return m;
}

GameModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

// ---------------------------------------------------------------------------
// Assumption audit.

namespace {

struct CoeffRef {
    const Expr* expr;
    std::string name;
};

std::vector<CoeffRef> coefficient_list(const GameModel& m) {
    std::vector<CoeffRef> out;
    for (std::size_t i = 0; i < m.drift.size(); ++i) {
        out.push_back({&m.drift[i], "b[" + std::to_string(i) + "]"});
    }
    for (std::size_t i = 0; i < m.sigma.size(); ++i) {
        for (std::size_t j = 0; j < m.sigma[i].size(); ++j) {
            out.push_back({&m.sigma[i][j],
                           "sigma[" + std::to_string(i) + "][" + std::to_string(j) + "]"});
        }
    }
    return out;
}

std::string describe_sample(double t, std::span<const double> x) {
    std::ostringstream os;
    os << "t=" << t << ", x=(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << ", ";
        os << x[i];
    }
    os << ")";
    return os.str();
}

}  // namespace

bool AuditReport::all_continuous() const {
    for (const auto& f : continuity_flags) {
        if (!f.continuous) return false;
    }
    return true;
}

AuditReport audit_assumptions(const GameModel& m, std::uint64_t n_samples,
                              double K, std::uint64_t seed) {
    if (n_samples < 2) throw DomainError("audit_assumptions: n_samples must be >= 2");
    if (!(K > 0.0)) throw DomainError("audit_assumptions: K must be positive");
    m.validate();

    AuditReport report;
    report.seed = seed;
    report.samples_used = n_samples;
    report.radius = K;

    const auto coeffs = coefficient_list(m);
    std::vector<char> cont(coeffs.size(), 1);

    const int d = m.d;
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> y(static_cast<std::size_t>(d));
    std::vector<double> xp(static_cast<std::size_t>(d));

    const auto uniform = [&](std::uint64_t i, std::uint32_t slot, double lo,
                             double hi) {
        return lo + (hi - lo) * counter_rng_uniform(seed, RngStream::audit, i, 0, slot);
    };

    // |b| + |sigma| at (t, z, u, v); Euclidean norm for b, Frobenius for sigma.
    const auto coeff_norm = [&](double t, std::span<const double> z,
                                std::span<const double> uu,
                                std::span<const double> vv) {
        EvalContext ctx{t, z, uu, vv};
        double b2 = 0.0;
        for (const auto& e : m.drift) {
            const double val = e.eval(ctx);
            b2 += val * val;
        }
        double s2 = 0.0;
        for (const auto& row : m.sigma) {
            for (const auto& e : row) {
                const double val = e.eval(ctx);
                s2 += val * val;
            }
        }
        return std::sqrt(b2) + std::sqrt(s2);
    };

    double lip = 0.0;
    double growth = 0.0;
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        std::uint32_t slot = 0;
        const double t = uniform(i, slot++, 0.0, m.horizon);
        for (int c = 0; c < d; ++c) x[static_cast<std::size_t>(c)] = uniform(i, slot++, -K, K);
        for (int c = 0; c < d; ++c) y[static_cast<std::size_t>(c)] = uniform(i, slot++, -K, K);
        const int ui = static_cast<int>(counter_rng_u64(seed, RngStream::audit, i, 1, 0) %
                                        static_cast<std::uint64_t>(m.action_u.size()));
        const int vi = static_cast<int>(counter_rng_u64(seed, RngStream::audit, i, 1, 1) %
                                        static_cast<std::uint64_t>(m.action_v.size()));
        const auto& uu = m.action_u.point(ui);
        const auto& vv = m.action_v.point(vi);

        try {
            // Lipschitz ratio between the two sampled states.
            double diff2 = 0.0;
            for (int c = 0; c < d; ++c) {
                const double delta = x[static_cast<std::size_t>(c)] - y[static_cast<std::size_t>(c)];
                diff2 += delta * delta;
            }
            const double dist = std::sqrt(diff2);
            if (dist > 1e-12) {
                EvalContext cx{t, x, uu, vv};
                EvalContext cy{t, y, uu, vv};
                double num_b = 0.0;
                for (const auto& e : m.drift) {
                    const double delta = e.eval(cx) - e.eval(cy);
                    num_b += delta * delta;
                }
                double num_s = 0.0;
                for (const auto& row : m.sigma) {
                    for (const auto& e : row) {
                        const double delta = e.eval(cx) - e.eval(cy);
                        num_s += delta * delta;
                    }
                }
                const double ratio = (std::sqrt(num_b) + std::sqrt(num_s)) / dist;
                if (ratio > lip) lip = ratio;
            }

            double xnorm2 = 0.0;
            for (int c = 0; c < d; ++c) xnorm2 += x[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
            const double gr = coeff_norm(t, x, uu, vv) / (1.0 + std::sqrt(xnorm2));
            if (gr > growth) growth = gr;

            // Continuity probe: a small perturbation should produce a small
            // change. An evaluation fault on the perturbed point also trips
            // the flag. Heuristic by nature; it flags, it does not certify.
            const double h = 1e-7 * (1.0 + K);
            for (int c = 0; c < d; ++c) {
                xp[static_cast<std::size_t>(c)] =
                    x[static_cast<std::size_t>(c)] + ((c + static_cast<int>(i)) % 2 == 0 ? h : -h);
            }
            EvalContext cbase{t, x, uu, vv};
            EvalContext cpert{t + h, xp, uu, vv};
            for (std::size_t ci = 0; ci < coeffs.size(); ++ci) {
                if (!cont[ci]) continue;
                try {
                    const double f0 = coeffs[ci].expr->eval(cbase);
                    const double f1 = coeffs[ci].expr->eval(cpert);
                    if (std::fabs(f1 - f0) > 1e-3 * (1.0 + std::fabs(f0))) {
                        cont[ci] = 0;
                    }
                } catch (const EvalError&) {
                    cont[ci] = 0;
                }
            }
        } catch (const EvalError& e) {
            throw EvalError(std::string(e.what()) + " (audit sample " +
                            std::to_string(i) + ": " + describe_sample(t, x) + ")");
        }
    }
    report.lipschitz_estimate = lip;
    report.growth_constant = growth;
    for (std::size_t ci = 0; ci < coeffs.size(); ++ci) {
        report.continuity_flags.push_back({coeffs[ci].name, cont[ci] != 0});
    }
    return report;
}

}  // namespace gamelab
