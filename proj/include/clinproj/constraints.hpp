#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "clinproj/vitals.hpp"

namespace clinproj {

// Window variables are indexed flat: var(v, t) = v * window_len + t,
// v in registry order, t in 0..window_len-1.

// sum_j coef_j * x_{var_j} <= rhs
struct LinearRow {
    std::vector<std::pair<int, double>> terms;
    double rhs = 0.0;
    std::string label;

    double eval_lhs(const Eigen::VectorXd& x) const {
        double s = 0.0;
        for (auto [var, c] : terms) s += c * x[var];
        return s;
    }
};

// |x[v,t] - x[v,t-1]| <= bound, solve space
struct RateBound {
    int vital = 0;
    int t = 0;  // couples (t-1, t), t >= 1
    double bound = 0.0;
};

// sum_j a_j * x_{var_j} + sum_k g_k * z_{bin_k} <= rhs, z binary.
// Rows with empty x_terms constrain binaries only (e.g. z <= y + s).
struct MixedRow {
    std::vector<std::pair<int, double>> x_terms;
    std::vector<std::pair<int, double>> z_terms;
    double rhs = 0.0;
    std::string label;

    // row with the binaries substituted at fixed values
    LinearRow substitute(const std::vector<int>& z_values) const {
        LinearRow row{x_terms, rhs, label};
        for (auto [bin, g] : z_terms) row.rhs -= g * z_values[bin];
        return row;
    }
};

// One if-then clinical rule: its binaries (global ids within the set) and the
// big-M rows that encode it. Relaxation bounds in every row come from the
// solve-space box, never from hard-coded constants.
struct IndicatorGroup {
    std::string label;
    std::vector<int> binaries;              // global binary ids, lex order
    std::vector<std::string> binary_names;  // parallel to `binaries`
    std::vector<MixedRow> rows;             // rows touching continuous vars
    std::vector<MixedRow> binary_rows;      // rows over binaries only
};

struct Violation {
    std::string label;
    double slack = 0.0;  // negative = violated by |slack|
};

// Solver-ready constraint set over one window, fully in solve space.
struct ConstraintSet {
    int n_vitals = 0;
    int window_len = 0;
    Eigen::VectorXd box_lo, box_hi;  // per flat var
    std::vector<RateBound> rates;
    std::vector<LinearRow> linear;
    std::vector<IndicatorGroup> indicators;
    int n_binaries = 0;
    Eigen::VectorXd witness;  // feasible point, stored flat

    int var(int vital, int t) const { return vital * window_len + t; }
    int n_vars() const { return n_vitals * window_len; }

    // rate bounds expanded to one-sided rows, appended after `linear`
    std::vector<LinearRow> continuous_rows() const;

    // Checks box, rate, linear rows, and for each indicator group searches its
    // own binary assignments for one that satisfies every row. Empty result
    // means feasible within tol.
    std::vector<Violation> verify_feasibility(const Eigen::VectorXd& point,
                                              double tol = 1e-6) const;

    // Satisfying assignment for one group at a fixed point (lex-smallest),
    // or empty if none exists.
    std::vector<int> group_assignment(const IndicatorGroup& g, const Eigen::VectorXd& point,
                                      double tol) const;
};

// Physical set P: box + hourly-rate rows + cross-vital affine rows + if-then
// groups, each emitted only when every vital it touches is in the registry.
ConstraintSet build_physical(const VitalRegistry& registry, int window_len);

// Normal set N: the [0, 1] solve-space box per vital, nothing else.
ConstraintSet build_normal(const VitalRegistry& registry, int window_len);

}  // namespace clinproj
