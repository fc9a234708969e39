#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "clinproj/constraints.hpp"

namespace clinproj {

struct QpError : std::runtime_error {
    double residual;
    QpError(const std::string& msg, double res) : std::runtime_error(msg), residual(res) {}
};

struct QpOptions {
    double kkt_tol = 1e-8;
    int max_iterations = 0;  // 0 = auto (scales with row count)
};

struct QpResult {
    Eigen::VectorXd x;
    double objective = 0.0;       // squared distance to the target
    double kkt_residual = 0.0;
    bool feasible = true;         // false when the row system is empty
    Eigen::VectorXd multipliers;  // one per row, >= 0
};

// min ||x - target||^2  s.t.  lo <= x <= hi  and  every LinearRow lhs <= rhs.
//
// Box-only problems are solved by exact componentwise clamping. With affine
// rows present, variables untouched by any row are still clamped exactly and
// the coupled remainder is solved as a least-distance program via
// Lawson-Hanson NNLS, then KKT-certified to opts.kkt_tol. Throws QpError when
// certification fails within the iteration budget.
QpResult solve_node_qp(const Eigen::VectorXd& target, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, const std::vector<LinearRow>& rows,
                       const QpOptions& opts = {});

// Generic path used by solve_node_qp once clamping is not enough: the full
// least-distance program with the box passed as ordinary rows. Exposed so
// tests can cross-check the closed-form paths against it.
QpResult solve_ldp(const Eigen::VectorXd& target, const Eigen::VectorXd& lo,
                   const Eigen::VectorXd& hi, const std::vector<LinearRow>& rows,
                   const QpOptions& opts = {});

// min ||E u - f||  s.t.  u >= 0 (Lawson-Hanson active set).
Eigen::VectorXd nnls(const Eigen::MatrixXd& E, const Eigen::VectorXd& f, int max_iter = 0);

}  // namespace clinproj
