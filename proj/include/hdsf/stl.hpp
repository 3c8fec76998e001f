#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hdsf/config.hpp"
#include "hdsf/hybrid.hpp"

namespace hdsf::stl {

enum class ComparisonOp { Lt, Le, Gt, Ge, Eq };

/// A numeric literal or a `$name` reference bound from a Configuration at evaluation time.
struct Operand {
    std::variant<double, std::string> value;

    static Operand number(double v) { return {v}; }
    static Operand parameter(std::string name) { return {std::move(name)}; }
    bool is_parameter() const noexcept { return std::holds_alternative<std::string>(value); }
    bool operator==(const Operand&) const = default;
};

/// Time window in seconds; `hi` empty means unbounded.
struct Interval {
    Operand lo = Operand::number(0.0);
    std::optional<Operand> hi;

    bool operator==(const Interval&) const = default;
};

enum class Kind { Atom, Prop, Not, And, Or, Implies, Globally, Eventually, Until };

struct Node;

/// Immutable formula handle. Equality is structural.
class Formula {
  public:
    Formula() = default;
    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    const Node& node() const;
    Kind kind() const;
    bool valid() const noexcept { return static_cast<bool>(node_); }

    friend bool operator==(const Formula& a, const Formula& b);

  private:
    std::shared_ptr<const Node> node_;
};

struct Node {
    Kind kind = Kind::Atom;
    std::string signal;                  // Atom, Prop
    ComparisonOp op = ComparisonOp::Le;  // Atom
    Operand rhs = Operand::number(0.0);  // Atom
    Interval interval;                   // temporal operators
    std::vector<Formula> children;
};

Formula atom(std::string signal, ComparisonOp op, Operand rhs);
/// Boolean signal encoded as a real: true iff value >= 0.5.
Formula prop(std::string signal);
Formula negation(Formula f);
Formula conjunction(Formula a, Formula b);
Formula disjunction(Formula a, Formula b);
Formula implication(Formula a, Formula b);
Formula globally(Formula f, Interval interval = {});
Formula eventually(Formula f, Interval interval = {});
Formula until(Formula a, Formula b, Interval interval = {});

Interval window(double lo, double hi);

enum class Outcome { Satisfied, Violated };

struct Verdict {
    Outcome outcome = Outcome::Satisfied;
    /// First violating sample time when the top-level operator is Globally.
    std::optional<double> witness_time;

    bool satisfied() const noexcept { return outcome == Outcome::Satisfied; }
    bool operator==(const Verdict&) const = default;
};

/// Named sub-formulas substituted for bare identifiers while parsing.
using PredicateTable = std::map<std::string, Formula>;

/// Grammar: `G`, `F[lo,hi]`, `U[lo,hi]`, `and`, `or`, `not`, `->`, comparisons
/// `<= < >= > ==` between a signal and a number or `$parameter`, parentheses.
/// A bare identifier is looked up in `predicates`, otherwise it is a boolean signal.
Formula parse(const std::string& text, const PredicateTable& predicates = {});

/// Minimal-parenthesis rendering; `parse(to_string(f)) == f`.
std::string to_string(const Formula& f);
std::string to_string(Outcome outcome);

std::set<std::string> signals_of(const Formula& f);
std::set<std::string> parameters_of(const Formula& f);
std::size_t depth(const Formula& f);

/// Replaces every `$parameter` with its value. Throws EvaluationError on unbound
/// parameters or ill-ordered intervals.
Formula bind(const Formula& f, const Configuration& params);

/// Largest finite temporal bound in a bound formula (0 without temporal operators).
double max_time_bound(const Formula& f);

/// Pointwise satisfaction at every sample index. Windows are converted to index
/// offsets by rounding half up; windows that run past the last sample are judged on
/// the recorded part only (Eventually/Until fail there, Globally holds vacuously).
std::vector<bool> satisfaction(const Formula& f, const Trace& trace, const Configuration& params = {});

/// Verdict of `f` at the first sample.
Verdict evaluate(const Formula& f, const Trace& trace, const Configuration& params = {});

/// G((battery <= threshold and altitude > airborne_min) -> F[0,delta] deployed_flag >= 0.5)
Formula builtin_phi(double delta, double battery_threshold, double airborne_min_altitude);
/// The same property with `$delta` and `$low_batt_threshold` left symbolic.
Formula builtin_phi_parametric(double airborne_min_altitude);

/// battery_low, airborne and deployed as used in the built-in property.
PredicateTable builtin_predicates(double battery_threshold, double airborne_min_altitude);
PredicateTable builtin_predicates_parametric(double airborne_min_altitude);

} // namespace hdsf::stl
