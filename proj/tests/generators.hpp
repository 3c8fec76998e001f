// Random inputs shared by the property tests and the acceptance run.
#pragma once

#include <random>
#include <vector>

#include "hdsf/hybrid.hpp"
#include "hdsf/stl.hpp"

namespace gen {

inline double pick(std::mt19937_64& rng, std::initializer_list<double> xs) {
    std::uniform_int_distribution<std::size_t> d(0, xs.size() - 1);
    return *(xs.begin() + d(rng));
}

/// Signals p, q (boolean-valued) and x, y (real in [-1, 1]) with dt from a small set.
inline hdsf::Trace random_trace(std::mt19937_64& rng, std::size_t max_len = 50) {
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_real_distribution<double> real(-1.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const double dt = pick(rng, {0.1, 0.25, 0.5, 1.0});
    hdsf::Trace tr(dt, {"p", "q", "x", "y"}, {"M"});
    const std::size_t n = len(rng);
    for (std::size_t k = 0; k < n; ++k) {
        const double row[4] = {coin(rng) ? 1.0 : 0.0, coin(rng) ? 1.0 : 0.0, real(rng), real(rng)};
        tr.add_sample(static_cast<double>(k) * dt, 0, row);
    }
    return tr;
}

/// Interval bounds are whole multiples of dt so both rounding rules agree.
inline hdsf::stl::Interval random_interval(std::mt19937_64& rng, double dt) {
    std::uniform_int_distribution<int> steps(0, 12);
    std::bernoulli_distribution unbounded(0.2);
    const int a = steps(rng);
    const int b = a + steps(rng);
    hdsf::stl::Interval iv;
    iv.lo = hdsf::stl::Operand::number(a * dt);
    if (!unbounded(rng)) {
        iv.hi = hdsf::stl::Operand::number(b * dt);
    }
    return iv;
}

inline hdsf::stl::Formula random_formula(std::mt19937_64& rng, int depth, double dt) {
    using namespace hdsf::stl;
    std::uniform_int_distribution<int> kind(0, depth <= 1 ? 1 : 9);
    std::uniform_real_distribution<double> level(-1.0, 1.0);
    std::uniform_int_distribution<int> op(0, 4);
    std::bernoulli_distribution coin(0.5);
    switch (kind(rng)) {
    case 0:
        return prop(coin(rng) ? "p" : "q");
    case 1:
        return atom(coin(rng) ? "x" : "y", static_cast<ComparisonOp>(op(rng)),
                    Operand::number(std::round(level(rng) * 8.0) / 8.0));
    case 2:
        return negation(random_formula(rng, depth - 1, dt));
    case 3:
        return conjunction(random_formula(rng, depth - 1, dt), random_formula(rng, depth - 1, dt));
    case 4:
        return disjunction(random_formula(rng, depth - 1, dt), random_formula(rng, depth - 1, dt));
    case 5:
        return implication(random_formula(rng, depth - 1, dt), random_formula(rng, depth - 1, dt));
    case 6:
        return globally(random_formula(rng, depth - 1, dt), random_interval(rng, dt));
    case 7:
        return eventually(random_formula(rng, depth - 1, dt), random_interval(rng, dt));
    default:
        return until(random_formula(rng, depth - 1, dt), random_formula(rng, depth - 1, dt), random_interval(rng, dt));
    }
}

} // namespace gen
