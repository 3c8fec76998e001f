#include "hdsf/stl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hdsf/error.hpp"

namespace hdsf::stl {

const Node& Formula::node() const {
    if (!node_) {
        throw std::logic_error("empty formula handle");
    }
    return *node_;
}

Kind Formula::kind() const { return node().kind; }

bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) {
        return true;
    }
    if (!a.node_ || !b.node_) {
        return false;
    }
    const Node& x = *a.node_;
    const Node& y = *b.node_;
    if (x.kind != y.kind || x.children.size() != y.children.size()) {
        return false;
    }
    switch (x.kind) {
    case Kind::Atom:
        return x.signal == y.signal && x.op == y.op && x.rhs == y.rhs;
    case Kind::Prop:
        return x.signal == y.signal;
    case Kind::Globally:
    case Kind::Eventually:
    case Kind::Until:
        if (!(x.interval == y.interval)) {
            return false;
        }
        break;
    default:
        break;
    }
    return std::equal(x.children.begin(), x.children.end(), y.children.begin());
}

namespace {

Formula make(Node n) { return Formula(std::make_shared<const Node>(std::move(n))); }

Formula make_temporal(Kind kind, std::vector<Formula> children, Interval interval) {
    Node n;
    n.kind = kind;
    n.children = std::move(children);
    n.interval = std::move(interval);
    return make(std::move(n));
}

} // namespace

Formula atom(std::string signal, ComparisonOp op, Operand rhs) {
    Node n;
    n.kind = Kind::Atom;
    n.signal = std::move(signal);
    n.op = op;
    n.rhs = std::move(rhs);
    return make(std::move(n));
}

Formula prop(std::string signal) {
    Node n;
    n.kind = Kind::Prop;
    n.signal = std::move(signal);
    return make(std::move(n));
}

Formula negation(Formula f) {
    Node n;
    n.kind = Kind::Not;
    n.children = {std::move(f)};
    return make(std::move(n));
}

Formula conjunction(Formula a, Formula b) {
    Node n;
    n.kind = Kind::And;
    n.children = {std::move(a), std::move(b)};
    return make(std::move(n));
}

Formula disjunction(Formula a, Formula b) {
    Node n;
    n.kind = Kind::Or;
    n.children = {std::move(a), std::move(b)};
    return make(std::move(n));
}

Formula implication(Formula a, Formula b) {
    Node n;
    n.kind = Kind::Implies;
    n.children = {std::move(a), std::move(b)};
    return make(std::move(n));
}

Formula globally(Formula f, Interval interval) {
    return make_temporal(Kind::Globally, {std::move(f)}, std::move(interval));
}

Formula eventually(Formula f, Interval interval) {
    return make_temporal(Kind::Eventually, {std::move(f)}, std::move(interval));
}

Formula until(Formula a, Formula b, Interval interval) {
    return make_temporal(Kind::Until, {std::move(a), std::move(b)}, std::move(interval));
}

Interval window(double lo, double hi) { return Interval{Operand::number(lo), Operand::number(hi)}; }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

enum class Tok { Ident, Param, Number, LParen, RParen, LBracket, RBracket, Comma, Arrow, Cmp, End };

struct Token {
    Tok type = Tok::End;
    std::string text;
    double number = 0.0;
    ComparisonOp cmp = ComparisonOp::Le;
    std::size_t pos = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> tokenize(const std::string& s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.pos = i;
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < s.size() && ident_char(s[j])) {
                ++j;
            }
            t.type = Tok::Ident;
            t.text = s.substr(i, j - i);
            i = j;
        } else if (c == '$') {
            std::size_t j = i + 1;
            if (j >= s.size() || !ident_start(s[j])) {
                throw ParseError("expected parameter name after '$'", i);
            }
            while (j < s.size() && ident_char(s[j])) {
                ++j;
            }
            t.type = Tok::Param;
            t.text = s.substr(i + 1, j - i - 1);
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
                   ((c == '-' || c == '+') && i + 1 < s.size() &&
                    (std::isdigit(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '.'))) {
            const char* first = s.data() + i + (c == '+' ? 1 : 0);
            const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), t.number);
            if (ec != std::errc()) {
                throw ParseError("malformed number", i);
            }
            t.type = Tok::Number;
            i = static_cast<std::size_t>(ptr - s.data());
        } else if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
            t.type = Tok::Arrow;
            i += 2;
        } else if (c == '<' || c == '>' || c == '=') {
            const bool eq = i + 1 < s.size() && s[i + 1] == '=';
            t.type = Tok::Cmp;
            if (c == '<') {
                t.cmp = eq ? ComparisonOp::Le : ComparisonOp::Lt;
            } else if (c == '>') {
                t.cmp = eq ? ComparisonOp::Ge : ComparisonOp::Gt;
            } else {
                if (!eq) {
                    throw ParseError("expected '=='", i);
                }
                t.cmp = ComparisonOp::Eq;
            }
            i += eq ? 2 : 1;
        } else if (c == '(' || c == ')' || c == '[' || c == ']' || c == ',') {
            t.type = c == '('   ? Tok::LParen
                     : c == ')' ? Tok::RParen
                     : c == '[' ? Tok::LBracket
                     : c == ']' ? Tok::RBracket
                                : Tok::Comma;
            ++i;
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", i);
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.type = Tok::End;
    end.pos = s.size();
    out.push_back(end);
    return out;
}

class Parser {
  public:
    Parser(const std::string& text, const PredicateTable& predicates)
        : tokens_(tokenize(text)), predicates_(predicates) {}

    Formula parse() {
        Formula f = implies();
        if (peek().type != Tok::End) {
            throw ParseError("unexpected trailing input", peek().pos);
        }
        return f;
    }

  private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& next() { return tokens_[pos_++]; }
    bool keyword(const char* word) const { return peek().type == Tok::Ident && peek().text == word; }

    void expect(Tok type, const char* what) {
        if (peek().type != type) {
            throw ParseError(std::string("expected ") + what, peek().pos);
        }
        ++pos_;
    }

    Formula implies() {
        Formula lhs = disjunctions();
        if (peek().type == Tok::Arrow) {
            ++pos_;
            return implication(std::move(lhs), implies());
        }
        return lhs;
    }

    Formula disjunctions() {
        Formula lhs = conjunctions();
        while (keyword("or")) {
            ++pos_;
            lhs = disjunction(std::move(lhs), conjunctions());
        }
        return lhs;
    }

    Formula conjunctions() {
        Formula lhs = untils();
        while (keyword("and")) {
            ++pos_;
            lhs = conjunction(std::move(lhs), untils());
        }
        return lhs;
    }

    Formula untils() {
        Formula lhs = unary();
        while (keyword("U")) {
            ++pos_;
            Interval iv = optional_interval();
            lhs = until(std::move(lhs), unary(), std::move(iv));
        }
        return lhs;
    }

    Formula unary() {
        if (keyword("not")) {
            ++pos_;
            return negation(unary());
        }
        if (keyword("G") || keyword("F")) {
            const bool g = peek().text == "G";
            ++pos_;
            Interval iv = optional_interval();
            Formula body = unary();
            return g ? globally(std::move(body), std::move(iv)) : eventually(std::move(body), std::move(iv));
        }
        return primary();
    }

    Formula primary() {
        if (peek().type == Tok::LParen) {
            ++pos_;
            Formula f = implies();
            expect(Tok::RParen, "')'");
            return f;
        }
        if (peek().type != Tok::Ident || is_reserved(peek().text)) {
            throw ParseError("expected a signal, predicate or '('", peek().pos);
        }
        const Token& id = next();
        if (peek().type == Tok::Cmp) {
            const ComparisonOp op = next().cmp;
            return atom(id.text, op, operand());
        }
        if (const auto it = predicates_.find(id.text); it != predicates_.end()) {
            return it->second;
        }
        return prop(id.text);
    }

    Operand operand() {
        if (peek().type == Tok::Number) {
            return Operand::number(next().number);
        }
        if (peek().type == Tok::Param) {
            return Operand::parameter(next().text);
        }
        throw ParseError("expected a number or $parameter", peek().pos);
    }

    Interval optional_interval() {
        Interval iv;
        if (peek().type != Tok::LBracket) {
            return iv;
        }
        const std::size_t at = peek().pos;
        ++pos_;
        iv.lo = operand();
        expect(Tok::Comma, "','");
        if (keyword("inf")) {
            ++pos_;
        } else {
            iv.hi = operand();
        }
        expect(Tok::RBracket, "']'");
        const auto* lo = std::get_if<double>(&iv.lo.value);
        const auto* hi = iv.hi ? std::get_if<double>(&iv.hi->value) : nullptr;
        if ((lo && *lo < 0.0) || (lo && hi && *hi < *lo)) {
            throw ParseError("interval bounds must satisfy 0 <= lo <= hi", at);
        }
        return iv;
    }

    static bool is_reserved(const std::string& w) {
        return w == "and" || w == "or" || w == "not" || w == "G" || w == "F" || w == "U" || w == "inf";
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    const PredicateTable& predicates_;
};

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

int precedence(Kind k) {
    switch (k) {
    case Kind::Implies:
        return 1;
    case Kind::Or:
        return 2;
    case Kind::And:
        return 3;
    case Kind::Until:
        return 4;
    case Kind::Not:
    case Kind::Globally:
    case Kind::Eventually:
        return 5;
    default:
        return 6;
    }
}

std::string number_text(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string operand_text(const Operand& o) {
    if (const auto* p = std::get_if<std::string>(&o.value)) {
        return "$" + *p;
    }
    return number_text(std::get<double>(o.value));
}

std::string interval_text(const Interval& iv) {
    const bool zero_lo = !iv.lo.is_parameter() && std::get<double>(iv.lo.value) == 0.0 &&
                         !std::signbit(std::get<double>(iv.lo.value));
    if (!iv.hi && zero_lo) {
        return "";
    }
    return "[" + operand_text(iv.lo) + "," + (iv.hi ? operand_text(*iv.hi) : std::string("inf")) + "]";
}

const char* op_text(ComparisonOp op) {
    switch (op) {
    case ComparisonOp::Lt:
        return "<";
    case ComparisonOp::Le:
        return "<=";
    case ComparisonOp::Gt:
        return ">";
    case ComparisonOp::Ge:
        return ">=";
    case ComparisonOp::Eq:
        return "==";
    }
    return "?";
}

std::string render(const Formula& f, int min_prec);

std::string render_binary(const Node& n, const char* word, bool right_assoc) {
    const int p = precedence(n.kind);
    const std::string lhs = render(n.children[0], right_assoc ? p + 1 : p);
    const std::string rhs = render(n.children[1], right_assoc ? p : p + 1);
    return lhs + " " + word + " " + rhs;
}

std::string render(const Formula& f, int min_prec) {
    const Node& n = f.node();
    std::string s;
    switch (n.kind) {
    case Kind::Atom:
        s = n.signal + " " + op_text(n.op) + " " + operand_text(n.rhs);
        break;
    case Kind::Prop:
        s = n.signal;
        break;
    case Kind::Not:
        s = "not " + render(n.children[0], 5);
        break;
    case Kind::Globally:
    case Kind::Eventually: {
        const std::string iv = interval_text(n.interval);
        s = std::string(n.kind == Kind::Globally ? "G" : "F") + iv + " " + render(n.children[0], 5);
        break;
    }
    case Kind::Until: {
        const int p = precedence(n.kind);
        s = render(n.children[0], p) + " U" + interval_text(n.interval) + " " + render(n.children[1], p + 1);
        break;
    }
    case Kind::And:
        s = render_binary(n, "and", false);
        break;
    case Kind::Or:
        s = render_binary(n, "or", false);
        break;
    case Kind::Implies:
        s = render_binary(n, "->", true);
        break;
    }
    return precedence(n.kind) < min_prec ? "(" + s + ")" : s;
}

void collect(const Formula& f, std::set<std::string>* signals, std::set<std::string>* params) {
    const Node& n = f.node();
    auto add_operand = [&](const Operand& o) {
        if (params && o.is_parameter()) {
            params->insert(std::get<std::string>(o.value));
        }
    };
    if (n.kind == Kind::Atom || n.kind == Kind::Prop) {
        if (signals) {
            signals->insert(n.signal);
        }
        if (n.kind == Kind::Atom) {
            add_operand(n.rhs);
        }
    }
    if (n.kind == Kind::Globally || n.kind == Kind::Eventually || n.kind == Kind::Until) {
        add_operand(n.interval.lo);
        if (n.interval.hi) {
            add_operand(*n.interval.hi);
        }
    }
    for (const auto& c : n.children) {
        collect(c, signals, params);
    }
}

double resolve(const Operand& o, const Configuration& params) {
    if (const auto* name = std::get_if<std::string>(&o.value)) {
        if (!params.contains(*name)) {
            throw EvaluationError("formula parameter '$" + *name + "' is not bound");
        }
        return params.at(*name);
    }
    return std::get<double>(o.value);
}

} // namespace

Formula parse(const std::string& text, const PredicateTable& predicates) {
    return Parser(text, predicates).parse();
}

std::string to_string(const Formula& f) { return render(f, 0); }

std::string to_string(Outcome outcome) { return outcome == Outcome::Satisfied ? "Satisfied" : "Violated"; }

std::set<std::string> signals_of(const Formula& f) {
    std::set<std::string> out;
    collect(f, &out, nullptr);
    return out;
}

std::set<std::string> parameters_of(const Formula& f) {
    std::set<std::string> out;
    collect(f, nullptr, &out);
    return out;
}

std::size_t depth(const Formula& f) {
    std::size_t d = 0;
    for (const auto& c : f.node().children) {
        d = std::max(d, depth(c));
    }
    return d + 1;
}

Formula bind(const Formula& f, const Configuration& params) {
    const Node& n = f.node();
    Node out = n;
    if (n.kind == Kind::Atom) {
        out.rhs = Operand::number(resolve(n.rhs, params));
    }
    if (n.kind == Kind::Globally || n.kind == Kind::Eventually || n.kind == Kind::Until) {
        const double lo = resolve(n.interval.lo, params);
        out.interval.lo = Operand::number(lo);
        if (n.interval.hi) {
            const double hi = resolve(*n.interval.hi, params);
            if (!(lo >= 0.0) || !(hi >= lo)) {
                throw EvaluationError("interval [" + number_text(lo) + "," + number_text(hi) + "] is ill-ordered");
            }
            out.interval.hi = Operand::number(hi);
        } else if (!(lo >= 0.0)) {
            throw EvaluationError("interval lower bound must be non-negative");
        }
    }
    for (auto& c : out.children) {
        c = bind(c, params);
    }
    return make(std::move(out));
}

double max_time_bound(const Formula& f) {
    const Node& n = f.node();
    double m = 0.0;
    if ((n.kind == Kind::Globally || n.kind == Kind::Eventually || n.kind == Kind::Until) && n.interval.hi) {
        if (const auto* v = std::get_if<double>(&n.interval.hi->value)) {
            m = *v;
        }
    }
    for (const auto& c : n.children) {
        m = std::max(m, max_time_bound(c));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

std::size_t to_index(double seconds, double dt) {
    return static_cast<std::size_t>(std::floor(seconds / dt + 0.5));
}

/// next[i] = first j >= i with v[j] == want, or n.
std::vector<std::size_t> next_index(const std::vector<bool>& v, bool want) {
    const std::size_t n = v.size();
    std::vector<std::size_t> next(n + 1, n);
    for (std::size_t i = n; i-- > 0;) {
        next[i] = v[i] == want ? i : next[i + 1];
    }
    return next;
}

struct Window {
    std::size_t lo = 0;
    std::optional<std::size_t> hi;
};

Window index_window(const Interval& iv, double dt) {
    Window w;
    w.lo = to_index(std::get<double>(iv.lo.value), dt);
    if (iv.hi) {
        w.hi = to_index(std::get<double>(iv.hi->value), dt);
    }
    return w;
}

bool compare(double lhs, ComparisonOp op, double rhs) {
    switch (op) {
    case ComparisonOp::Lt:
        return lhs < rhs;
    case ComparisonOp::Le:
        return lhs <= rhs;
    case ComparisonOp::Gt:
        return lhs > rhs;
    case ComparisonOp::Ge:
        return lhs >= rhs;
    case ComparisonOp::Eq:
        return lhs == rhs;
    }
    return false;
}

std::vector<bool> sat(const Formula& f, const Trace& trace) {
    const Node& n = f.node();
    const std::size_t N = trace.size();
    std::vector<bool> out(N, false);
    switch (n.kind) {
    case Kind::Atom:
    case Kind::Prop: {
        const auto idx = trace.signal_index(n.signal);
        if (!idx) {
            throw EvaluationError("trace has no signal '" + n.signal + "'");
        }
        const double rhs = n.kind == Kind::Atom ? std::get<double>(n.rhs.value) : 0.5;
        const ComparisonOp op = n.kind == Kind::Atom ? n.op : ComparisonOp::Ge;
        for (std::size_t i = 0; i < N; ++i) {
            out[i] = compare(trace.value(i, *idx), op, rhs);
        }
        return out;
    }
    case Kind::Not: {
        const auto a = sat(n.children[0], trace);
        for (std::size_t i = 0; i < N; ++i) {
            out[i] = !a[i];
        }
        return out;
    }
    case Kind::And:
    case Kind::Or:
    case Kind::Implies: {
        const auto a = sat(n.children[0], trace);
        const auto b = sat(n.children[1], trace);
        for (std::size_t i = 0; i < N; ++i) {
            out[i] = n.kind == Kind::And ? (a[i] && b[i]) : n.kind == Kind::Or ? (a[i] || b[i]) : (!a[i] || b[i]);
        }
        return out;
    }
    case Kind::Globally:
    case Kind::Eventually: {
        const auto body = sat(n.children[0], trace);
        const bool g = n.kind == Kind::Globally;
        const auto next = next_index(body, !g);
        const Window w = index_window(n.interval, trace.dt());
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t s = i + w.lo;
            if (s >= N) {
                out[i] = g;
                continue;
            }
            const std::size_t e = w.hi ? std::min(i + *w.hi, N - 1) : N - 1;
            // G: no false in [s, e]; F: some true in [s, e].
            out[i] = g ? next[s] > e : next[s] <= e;
        }
        return out;
    }
    case Kind::Until: {
        const auto lhs = sat(n.children[0], trace);
        const auto rhs = sat(n.children[1], trace);
        const auto lhs_false = next_index(lhs, false);
        const auto rhs_true = next_index(rhs, true);
        const Window w = index_window(n.interval, trace.dt());
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t s = i + w.lo;
            if (s >= N) {
                continue;
            }
            const std::size_t e = w.hi ? std::min(i + *w.hi, N - 1) : N - 1;
            // Need j in [s, e] with rhs[j] and lhs on [i, j), i.e. j <= first lhs failure.
            const std::size_t limit = std::min(e, lhs_false[i]);
            out[i] = rhs_true[s] <= limit;
        }
        return out;
    }
    }
    return out;
}

void check_trace(const Trace& trace) {
    if (trace.empty()) {
        throw EvaluationError("cannot evaluate a property on an empty trace");
    }
    const double dt = trace.dt();
    if (!(dt > 0.0)) {
        throw EvaluationError("trace has non-positive dt");
    }
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const double expected = static_cast<double>(k) * dt;
        if (std::abs(trace.time(k) - expected) > 1e-9 * std::max(1.0, expected)) {
            throw EvaluationError("trace is not uniformly sampled at index " + std::to_string(k));
        }
    }
}

} // namespace

std::vector<bool> satisfaction(const Formula& f, const Trace& trace, const Configuration& params) {
    check_trace(trace);
    return sat(bind(f, params), trace);
}

Verdict evaluate(const Formula& f, const Trace& trace, const Configuration& params) {
    check_trace(trace);
    const Formula bound = bind(f, params);
    const Node& n = bound.node();
    if (n.kind != Kind::Globally) {
        const auto s = sat(bound, trace);
        return {s[0] ? Outcome::Satisfied : Outcome::Violated, std::nullopt};
    }
    const auto body = sat(n.children[0], trace);
    const Window w = index_window(n.interval, trace.dt());
    const std::size_t N = trace.size();
    if (w.lo >= N) {
        return {Outcome::Satisfied, std::nullopt};
    }
    const std::size_t e = w.hi ? std::min(*w.hi, N - 1) : N - 1;
    for (std::size_t j = w.lo; j <= e; ++j) {
        if (!body[j]) {
            return {Outcome::Violated, trace.time(j)};
        }
    }
    return {Outcome::Satisfied, std::nullopt};
}

Formula builtin_phi(double delta, double battery_threshold, double airborne_min_altitude) {
    if (!(delta > 0.0)) {
        throw SpecificationError("delta must be positive");
    }
    const auto p = builtin_predicates(battery_threshold, airborne_min_altitude);
    return globally(
        implication(conjunction(p.at("battery_low"), p.at("airborne")), eventually(p.at("deployed"), window(0.0, delta))));
}

Formula builtin_phi_parametric(double airborne_min_altitude) {
    const auto p = builtin_predicates_parametric(airborne_min_altitude);
    return globally(implication(conjunction(p.at("battery_low"), p.at("airborne")),
                                eventually(p.at("deployed"), Interval{Operand::number(0.0), Operand::parameter("delta")})));
}

PredicateTable builtin_predicates(double battery_threshold, double airborne_min_altitude) {
    return {
        {"battery_low", atom("battery", ComparisonOp::Le, Operand::number(battery_threshold))},
        {"airborne", atom("altitude", ComparisonOp::Gt, Operand::number(airborne_min_altitude))},
        {"deployed", atom("deployed_flag", ComparisonOp::Ge, Operand::number(0.5))},
    };
}

PredicateTable builtin_predicates_parametric(double airborne_min_altitude) {
    return {
        {"battery_low", atom("battery", ComparisonOp::Le, Operand::parameter("low_batt_threshold"))},
        {"airborne", atom("altitude", ComparisonOp::Gt, Operand::number(airborne_min_altitude))},
        {"deployed", atom("deployed_flag", ComparisonOp::Ge, Operand::number(0.5))},
    };
}

} // namespace hdsf::stl
