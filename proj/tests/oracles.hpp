// Test-side oracles, independent of the library's solver path.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "clinproj/constraints.hpp"

namespace oracles {

// Dykstra's alternating projection onto box ∩ halfspaces. Exact projections
// per set, provably convergent for polyhedra; used as the independent check
// of the library's QP path.
inline Eigen::VectorXd dykstra_project(const Eigen::VectorXd& d, const Eigen::VectorXd& lo,
                                       const Eigen::VectorXd& hi,
                                       const std::vector<clinproj::LinearRow>& rows,
                                       long max_cycles = 2000000, double tol = 1e-13) {
    const int n = static_cast<int>(d.size());
    const std::size_t n_sets = rows.size() + 1;
    std::vector<Eigen::VectorXd> normals;
    for (const auto& row : rows) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        for (auto [var, c] : row.terms) a[var] += c;
        normals.push_back(std::move(a));
    }
    auto violation = [&](const Eigen::VectorXd& p) {
        double v = 0.0;
        for (int j = 0; j < n; ++j) v = std::max({v, lo[j] - p[j], p[j] - hi[j]});
        for (std::size_t r = 0; r < rows.size(); ++r)
            v = std::max(v, normals[r].dot(p) - rows[r].rhs);
        return v;
    };

    std::vector<Eigen::VectorXd> corrections(n_sets, Eigen::VectorXd::Zero(n));
    Eigen::VectorXd x = d;
    Eigen::VectorXd checkpoint = x;
    for (long cycle = 0; cycle < max_cycles; ++cycle) {
        for (std::size_t s = 0; s < n_sets; ++s) {
            Eigen::VectorXd y = x + corrections[s];
            Eigen::VectorXd px;
            if (s == 0) {
                px = y.cwiseMax(lo).cwiseMin(hi);
            } else {
                const Eigen::VectorXd& a = normals[s - 1];
                double viol = a.dot(y) - rows[s - 1].rhs;
                px = viol > 0.0 ? Eigen::VectorXd(y - a * (viol / a.squaredNorm())) : y;
            }
            corrections[s] = y - px;
            x = px;
        }
        // slow crawling defeats a per-cycle stall test, so compare against a
        // checkpoint 1000 cycles back and require feasibility as well
        if (cycle % 1000 == 999) {
            if ((x - checkpoint).lpNorm<Eigen::Infinity>() < tol && violation(x) < 1e-10) break;
            checkpoint = x;
        }
    }
    return x;
}

// Exhaustive KKT enumeration for tiny problems: every subset of rows (box
// sides included) is tried as the active set; the best feasible KKT point
// wins. Exponential, only for a handful of variables.
inline Eigen::VectorXd active_set_enumeration(const Eigen::VectorXd& d, const Eigen::VectorXd& lo,
                                              const Eigen::VectorXd& hi,
                                              const std::vector<clinproj::LinearRow>& rows) {
    const int n = static_cast<int>(d.size());
    std::vector<Eigen::VectorXd> gs;
    std::vector<double> hs;
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[j] = -1.0;
        gs.push_back(e);  // -x_j <= -lo_j
        hs.push_back(-lo[j]);
        e[j] = 1.0;
        gs.push_back(e);  // x_j <= hi_j
        hs.push_back(hi[j]);
    }
    for (const auto& r : rows) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        for (auto [var, c] : r.terms) a[var] += c;
        gs.push_back(a);
        hs.push_back(r.rhs);
    }
    const int m = static_cast<int>(gs.size());
    auto feasible = [&](const Eigen::VectorXd& x) {
        for (int i = 0; i < m; ++i)
            if (gs[static_cast<std::size_t>(i)].dot(x) > hs[static_cast<std::size_t>(i)] + 1e-9)
                return false;
        return true;
    };

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = d;
    bool found = false;
    for (long mask = 0; mask < (1L << m); ++mask) {
        int k = __builtin_popcountl(static_cast<unsigned long>(mask));
        if (k > n) continue;
        Eigen::MatrixXd A(k, n);
        Eigen::VectorXd b(k);
        int r = 0;
        for (int i = 0; i < m; ++i)
            if (mask & (1L << i)) {
                A.row(r) = gs[static_cast<std::size_t>(i)].transpose();
                b[r] = hs[static_cast<std::size_t>(i)];
                ++r;
            }
        Eigen::VectorXd x;
        if (k == 0) {
            x = d;
        } else {
            // projection onto the affine subspace A x = b
            Eigen::MatrixXd AAt = A * A.transpose();
            Eigen::VectorXd mult = AAt.fullPivLu().solve(A * d - b);
            if ((AAt * mult - (A * d - b)).lpNorm<Eigen::Infinity>() > 1e-8) continue;
            bool nonneg = true;
            for (int i = 0; i < k; ++i)
                if (mult[i] < -1e-9) nonneg = false;
            if (!nonneg) continue;
            x = d - A.transpose() * mult;
        }
        if (!feasible(x)) continue;
        double obj = (x - d).squaredNorm();
        if (obj < best - 1e-15) {
            best = obj;
            best_x = x;
            found = true;
        }
    }
    if (!found) throw std::runtime_error("active_set_enumeration: no feasible KKT point");
    return best_x;
}

// AUROC by direct pair counting, ties at half credit.
inline double pair_count_auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

}  // namespace oracles
