#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "clinproj/constraints.hpp"
#include "clinproj/qp.hpp"

namespace clinproj {

struct SolverOptions {
    double gap_tol = 1e-6;   // absolute, on the squared-distance objective
    double feas_tol = 1e-6;
    long node_budget = 100000;  // per window
    double kkt_tol = 1e-8;
};

enum class SolveStatus { optimal, node_limit, infeasible };

struct ProjectionResult {
    Eigen::MatrixXd corrected;       // vitals x window_len, solve space
    Eigen::VectorXd phys_dist;       // per vital: sum_t (data - corrected)^2
    std::vector<std::uint8_t> binaries;  // chosen assignment, global binary ids
    SolveStatus status = SolveStatus::optimal;
    long nodes_explored = 0;
    double objective = 0.0;  // == phys_dist.sum(), summed in vital order
};

// Euclidean projection of one window onto the physical set: exact clamp plus
// feasibility check when that already lands inside, otherwise best-first
// branch and bound over the indicator binaries with a convex QP per node.
// Runs independently per connected component of coupled vitals; binaries of
// components that are feasible at the clamped point are fixed there and never
// branched on. Deterministic: equal-cost assignments resolve to the
// lexicographically smallest binary vector considered.
ProjectionResult project_physical(const Eigen::MatrixXd& window, const ConstraintSet& cs,
                                  const SolverOptions& opts = {});

// Deterministic parallel map of project_physical over windows; results are in
// input order regardless of thread count.
std::vector<ProjectionResult> project_cohort(const std::vector<Eigen::MatrixXd>& windows,
                                             const ConstraintSet& cs, const SolverOptions& opts,
                                             int threads = 1);

// Projection onto the normal set is a componentwise clamp to [0, 1]; only the
// per-vital squared distances are kept.
Eigen::VectorXd normal_distances(const Eigen::MatrixXd& corrected);

// Min-max statistics of per-vital normal distances, fit on the training
// population and frozen; application clips into [0, 1]. A constant column
// maps to 0.
struct TrustStats {
    Eigen::VectorXd lo, hi;

    static TrustStats fit(const std::vector<Eigen::VectorXd>& norm_dists);
    Eigen::VectorXd apply(const Eigen::VectorXd& norm_dist) const;
};

}  // namespace clinproj
