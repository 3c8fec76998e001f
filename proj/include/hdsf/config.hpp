#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hdsf {

/// A parameter vector: named reals, ordered by name so iteration is deterministic.
class Configuration {
  public:
    Configuration() = default;
    Configuration(std::initializer_list<std::pair<const std::string, double>> init) : values_(init) {}

    /// Throws ConfigurationError when the parameter is absent.
    double at(const std::string& name) const;
    double get_or(const std::string& name, double fallback) const;
    bool contains(const std::string& name) const { return values_.count(name) != 0; }
    void set(const std::string& name, double value) { values_[name] = value; }

    const std::map<std::string, double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    /// True when every value is finite.
    bool finite() const;

    bool operator==(const Configuration&) const = default;

  private:
    std::map<std::string, double> values_;
};

struct ParameterBounds {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
    bool operator==(const ParameterBounds&) const = default;
};

/// Strict ordering `lower < upper` between two parameters of the same space.
struct OrderingConstraint {
    std::string lower;
    std::string upper;

    bool operator==(const OrderingConstraint&) const = default;
};

/// Closed box of parameter bounds plus strict ordering constraints.
struct ConfigSpace {
    std::vector<ParameterBounds> bounds;
    std::vector<OrderingConstraint> ordering;
    std::uint64_t rng_seed = 0;

    const ParameterBounds* find(const std::string& name) const;
    bool contains_parameter(const std::string& name) const { return find(name) != nullptr; }
    std::set<std::string> names() const;

    /// Throws SpaceError on inverted bounds, unknown names in constraints,
    /// cyclic constraints or an empty feasible region.
    void validate() const;

    /// Bounds and constraints restricted to `keep`; constraints need both ends kept.
    ConfigSpace restricted_to(const std::set<std::string>& keep) const;

    /// Constraint-respecting membership test.
    bool admits(const Configuration& config) const;

    /// Ordering constraints sorted so that every constraint on an upper member
    /// follows the constraints on its lower member.
    std::vector<OrderingConstraint> topological_ordering() const;

    bool operator==(const ConfigSpace&) const = default;
};

std::string to_json_text(const Configuration& config);
Configuration configuration_from_json_text(const std::string& text);
std::string to_json_text(const ConfigSpace& space);
ConfigSpace config_space_from_json_text(const std::string& text);

/// Reads a space file: `{"bounds": {"name": [lo, hi], ...}, "ordering": [["lo", "hi"], ...], "seed": n}`.
ConfigSpace load_config_space(const std::string& path);

} // namespace hdsf
