#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hdsf/config.hpp"

namespace hdsf {

/// Discretized parametric linear system K U = F.
struct LinearSystem {
    Eigen::MatrixXd K;
    Eigen::VectorXd F;
    /// Optional parametric assembly mu -> (K, F).
    std::function<std::pair<Eigen::MatrixXd, Eigen::VectorXd>(const Configuration&)> parameter_hook;

    /// Throws ConfigurationError unless K is square, N >= 1 and F has length N.
    void validate() const;
    std::size_t size() const { return static_cast<std::size_t>(K.rows()); }

    /// Assembles the system at `mu` through the hook (or returns a copy without one).
    LinearSystem assembled(const Configuration& mu) const;
};

/// Split of 0..N-1 into interface (p) and internal (i) degrees of freedom.
class Partition {
  public:
    Partition() = default;
    /// Throws ConfigurationError unless the two lists are disjoint and together cover 0..n-1.
    Partition(std::vector<int> interface_indices, std::vector<int> internal_indices, std::size_t n);

    /// Interface = the listed indices, internal = everything else in ascending order.
    static Partition with_interface(std::vector<int> interface_indices, std::size_t n);

    const std::vector<int>& interface_indices() const noexcept { return interface_; }
    const std::vector<int>& internal_indices() const noexcept { return internal_; }
    std::size_t size() const noexcept { return interface_.size() + internal_.size(); }

  private:
    std::vector<int> interface_;
    std::vector<int> internal_;
};

struct CondensationOptions {
    /// Largest accepted condition estimate of K_ii (and of K~ when solving).
    double max_condition = 1e12;
};

/// Interface-reduced operators K~ = K_pp - K_pi K_ii^-1 K_ip, F~ = F_p - K_pi K_ii^-1 F_i.
struct CondensedSystem {
    Eigen::MatrixXd K_tilde;
    Eigen::VectorXd F_tilde;
    Partition partition;
    /// LU factors of K_ii, computed once and reused for reconstruction. Empty when |i| = 0.
    Eigen::PartialPivLU<Eigen::MatrixXd> internal_factorization;
    CondensationOptions options;
};

/// Eliminates the internal block. Throws CondensationError when K_ii is singular or its
/// condition estimate exceeds `options.max_condition`.
CondensedSystem condense(const LinearSystem& system, const Partition& partition,
                         const CondensationOptions& options = {});

/// Solves K~ U_p = F~. Throws SolveError on a singular or ill-conditioned K~.
Eigen::VectorXd solve_condensed(const CondensedSystem& cs);

/// U_i = K_ii^-1 (F_i - K_ip U_p), reusing the stored factorization.
Eigen::VectorXd reconstruct_internal(const CondensedSystem& cs, const LinearSystem& system,
                                     const Eigen::VectorXd& interface_solution);

/// Scatters (U_p, U_i) back into original index order.
Eigen::VectorXd assemble_solution(const Partition& partition, const Eigen::VectorXd& interface_solution,
                                  const Eigen::VectorXd& internal_solution);

/// Plain-text dense format: first line "rows cols", then row-major entries.
Eigen::MatrixXd read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::string& path);
void save_matrix(const std::string& path, const Eigen::MatrixXd& m);

} // namespace hdsf
