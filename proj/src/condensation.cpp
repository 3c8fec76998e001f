#include "hdsf/condensation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "hdsf/error.hpp"

namespace hdsf {

void LinearSystem::validate() const {
    if (K.rows() < 1 || K.rows() != K.cols()) {
        throw ConfigurationError("K must be a non-empty square matrix");
    }
    if (F.size() != K.rows()) {
        throw ConfigurationError("F has length " + std::to_string(F.size()) + ", K is " + std::to_string(K.rows()) +
                                 "x" + std::to_string(K.cols()));
    }
}

LinearSystem LinearSystem::assembled(const Configuration& mu) const {
    if (!parameter_hook) {
        return *this;
    }
    auto [k, f] = parameter_hook(mu);
    LinearSystem out{std::move(k), std::move(f), parameter_hook};
    out.validate();
    return out;
}

Partition::Partition(std::vector<int> interface_indices, std::vector<int> internal_indices, std::size_t n)
    : interface_(std::move(interface_indices)), internal_(std::move(internal_indices)) {
    std::vector<bool> seen(n, false);
    for (const auto* group : {&interface_, &internal_}) {
        for (const int k : *group) {
            if (k < 0 || static_cast<std::size_t>(k) >= n) {
                throw ConfigurationError("partition index " + std::to_string(k) + " out of range");
            }
            if (seen[static_cast<std::size_t>(k)]) {
                throw ConfigurationError("partition index " + std::to_string(k) + " listed twice");
            }
            seen[static_cast<std::size_t>(k)] = true;
        }
    }
    if (size() != n) {
        throw ConfigurationError("partition does not cover every degree of freedom");
    }
}

Partition Partition::with_interface(std::vector<int> interface_indices, std::size_t n) {
    const std::set<int> chosen(interface_indices.begin(), interface_indices.end());
    std::vector<int> internal;
    for (std::size_t k = 0; k < n; ++k) {
        if (!chosen.count(static_cast<int>(k))) {
            internal.push_back(static_cast<int>(k));
        }
    }
    return Partition(std::move(interface_indices), std::move(internal), n);
}

namespace {

/// 1/rcond of an LU factorization; infinity for an exactly singular matrix.
double condition_estimate(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
    const auto diag = lu.matrixLU().diagonal();
    for (Eigen::Index k = 0; k < diag.size(); ++k) {
        if (diag[k] == 0.0 || !std::isfinite(diag[k])) {
            return std::numeric_limits<double>::infinity();
        }
    }
    const double rcond = lu.rcond();
    return rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
}

} // namespace

CondensedSystem condense(const LinearSystem& system, const Partition& partition, const CondensationOptions& options) {
    system.validate();
    if (partition.size() != system.size()) {
        throw ConfigurationError("partition covers " + std::to_string(partition.size()) + " dofs, system has " +
                                 std::to_string(system.size()));
    }
    const auto& p = partition.interface_indices();
    const auto& i = partition.internal_indices();

    CondensedSystem cs;
    cs.partition = partition;
    cs.options = options;
    const Eigen::MatrixXd K_pp = system.K(p, p);
    const Eigen::VectorXd F_p = system.F(p);
    if (i.empty()) {
        cs.K_tilde = K_pp;
        cs.F_tilde = F_p;
        return cs;
    }

    const Eigen::MatrixXd K_ii = system.K(i, i);
    cs.internal_factorization.compute(K_ii);
    const double cond = condition_estimate(cs.internal_factorization);
    if (!(cond <= options.max_condition)) {
        std::ostringstream msg;
        msg << "internal block K_ii (" << i.size() << "x" << i.size() << ") is singular or ill-conditioned"
            << " (condition estimate " << cond << " > " << options.max_condition << ")";
        throw CondensationError(msg.str());
    }
    const Eigen::MatrixXd K_pi = system.K(p, i);
    const Eigen::MatrixXd K_ip = system.K(i, p);
    const Eigen::VectorXd F_i = system.F(i);

    // One solve against [K_ip | F_i] serves both operators.
    Eigen::MatrixXd rhs(static_cast<Eigen::Index>(i.size()), static_cast<Eigen::Index>(p.size()) + 1);
    rhs.leftCols(static_cast<Eigen::Index>(p.size())) = K_ip;
    rhs.rightCols(1) = F_i;
    const Eigen::MatrixXd eliminated = cs.internal_factorization.solve(rhs);

    cs.K_tilde = K_pp - K_pi * eliminated.leftCols(static_cast<Eigen::Index>(p.size()));
    cs.F_tilde = F_p - K_pi * eliminated.rightCols(1);
    return cs;
}

Eigen::VectorXd solve_condensed(const CondensedSystem& cs) {
    if (cs.K_tilde.rows() == 0) {
        return Eigen::VectorXd(0);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(cs.K_tilde);
    const double cond = condition_estimate(lu);
    if (!(cond <= cs.options.max_condition)) {
        std::ostringstream msg;
        msg << "condensed operator is singular or ill-conditioned (condition estimate " << cond << ")";
        throw SolveError(msg.str());
    }
    Eigen::VectorXd u = lu.solve(cs.F_tilde);
    // One step of iterative refinement keeps the residual at the round-off floor.
    u += lu.solve(cs.F_tilde - cs.K_tilde * u);
    const double residual = (cs.K_tilde * u - cs.F_tilde).norm();
    if (!(residual <= 1e-10 * (1.0 + cs.F_tilde.norm()))) {
        throw SolveError("condensed solve residual " + std::to_string(residual) + " above tolerance");
    }
    return u;
}

Eigen::VectorXd reconstruct_internal(const CondensedSystem& cs, const LinearSystem& system,
                                     const Eigen::VectorXd& interface_solution) {
    const auto& p = cs.partition.interface_indices();
    const auto& i = cs.partition.internal_indices();
    if (static_cast<std::size_t>(interface_solution.size()) != p.size()) {
        throw ConfigurationError("interface vector has length " + std::to_string(interface_solution.size()) +
                                 ", partition has " + std::to_string(p.size()) + " interface dofs");
    }
    if (i.empty()) {
        return Eigen::VectorXd(0);
    }
    const Eigen::VectorXd rhs = system.F(i) - system.K(i, p) * interface_solution;
    return cs.internal_factorization.solve(rhs);
}

Eigen::VectorXd assemble_solution(const Partition& partition, const Eigen::VectorXd& interface_solution,
                                  const Eigen::VectorXd& internal_solution) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(partition.size()));
    u(partition.interface_indices()) = interface_solution;
    u(partition.internal_indices()) = internal_solution;
    return u;
}

Eigen::MatrixXd read_matrix(std::istream& in) {
    long rows = 0;
    long cols = 0;
    if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
        throw ConfigurationError("matrix header must be 'rows cols'");
    }
    Eigen::MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            if (!(in >> m(r, c))) {
                throw ConfigurationError("matrix body ended after " + std::to_string(r * cols + c) + " entries");
            }
        }
    }
    return m;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    const auto old = out.precision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << (c ? " " : "") << m(r, c);
        }
        out << '\n';
    }
    out.precision(old);
}

Eigen::MatrixXd load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigurationError("cannot open matrix file '" + path + "'");
    }
    return read_matrix(in);
}

void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigurationError("cannot write matrix file '" + path + "'");
    }
    write_matrix(out, m);
}

} // namespace hdsf
