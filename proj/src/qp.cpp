#include "clinproj/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clinproj {

namespace {

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

Eigen::VectorXd nnls(const Eigen::MatrixXd& E, const Eigen::VectorXd& f, int max_iter) {
    const int m = static_cast<int>(E.cols());
    if (max_iter <= 0) max_iter = 3 * m + 50;

    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    std::vector<bool> passive(static_cast<std::size_t>(m), false);
    int n_passive = 0;
    const double w_tol = 1e-11 * (1.0 + E.cwiseAbs().maxCoeff());

    Eigen::VectorXd w = E.transpose() * (f - E * u);
    int outer = 0;
    while (outer++ < max_iter) {
        int j = -1;
        double wmax = w_tol;
        for (int i = 0; i < m; ++i)
            if (!passive[static_cast<std::size_t>(i)] && w[i] > wmax) {
                wmax = w[i];
                j = i;
            }
        if (j < 0) break;
        passive[static_cast<std::size_t>(j)] = true;
        ++n_passive;

        int inner = 0;
        for (;;) {
            if (inner++ > max_iter) throw QpError("nnls: inner loop budget exhausted", w.maxCoeff());
            Eigen::MatrixXd Ep(E.rows(), n_passive);
            std::vector<int> cols;
            cols.reserve(static_cast<std::size_t>(n_passive));
            for (int i = 0; i < m; ++i)
                if (passive[static_cast<std::size_t>(i)]) {
                    Ep.col(static_cast<Eigen::Index>(cols.size())) = E.col(i);
                    cols.push_back(i);
                }
            Eigen::VectorXd s = Ep.colPivHouseholderQr().solve(f);

            bool all_pos = true;
            for (int k = 0; k < n_passive; ++k)
                if (s[k] <= 0.0) {
                    all_pos = false;
                    break;
                }
            if (all_pos) {
                u.setZero();
                for (int k = 0; k < n_passive; ++k) u[cols[static_cast<std::size_t>(k)]] = s[k];
                break;
            }
            double alpha = std::numeric_limits<double>::infinity();
            for (int k = 0; k < n_passive; ++k) {
                int i = cols[static_cast<std::size_t>(k)];
                if (s[k] <= 0.0) alpha = std::min(alpha, u[i] / (u[i] - s[k]));
            }
            for (int k = 0; k < n_passive; ++k) {
                int i = cols[static_cast<std::size_t>(k)];
                u[i] += alpha * (s[k] - u[i]);
            }
            for (int k = 0; k < n_passive; ++k) {
                int i = cols[static_cast<std::size_t>(k)];
                if (s[k] <= 0.0 || u[i] <= 1e-14) {
                    if (passive[static_cast<std::size_t>(i)]) {
                        passive[static_cast<std::size_t>(i)] = false;
                        --n_passive;
                        u[i] = 0.0;
                    }
                }
            }
        }
        w = E.transpose() * (f - E * u);
    }
    if (outer > max_iter) throw QpError("nnls: iteration budget exhausted", w.maxCoeff());
    return u;
}

QpResult solve_ldp(const Eigen::VectorXd& target, const Eigen::VectorXd& lo,
                   const Eigen::VectorXd& hi, const std::vector<LinearRow>& rows,
                   const QpOptions& opts) {
    const int n = static_cast<int>(target.size());
    const int m = 2 * n + static_cast<int>(rows.size());

    // constraints as G y >= h with y = x - target
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, n);
    Eigen::VectorXd h(m);
    for (int j = 0; j < n; ++j) {
        G(j, j) = 1.0;
        h[j] = lo[j] - target[j];
        G(n + j, j) = -1.0;
        h[n + j] = target[j] - hi[j];
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        int i = 2 * n + static_cast<int>(r);
        double lhs_at_target = 0.0;
        for (auto [var, c] : rows[r].terms) {
            G(i, var) -= c;
            lhs_at_target += c * target[var];
        }
        h[i] = lhs_at_target - rows[r].rhs;
    }

    Eigen::MatrixXd E(n + 1, m);
    E.topRows(n) = G.transpose();
    E.row(n) = h.transpose();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n + 1);
    f[n] = 1.0;

    Eigen::VectorXd u = nnls(E, f, opts.max_iterations);
    Eigen::VectorXd resid = E * u - f;
    double rn2 = resid.squaredNorm();

    QpResult out;
    if (rn2 <= 1e-12) {
        out.feasible = false;
        return out;
    }
    Eigen::VectorXd y = -resid.head(n) / resid[n];
    Eigen::VectorXd lambda = u / rn2;

    // polish: re-solve on the detected active set for a clean KKT point
    auto kkt_residual = [&](const Eigen::VectorXd& yy, const Eigen::VectorXd& lam) {
        double stat = (yy - G.transpose() * lam).cwiseAbs().maxCoeff();
        Eigen::VectorXd slack = G * yy - h;
        double primal = std::max(0.0, -slack.minCoeff());
        double compl_ = (lam.array() * slack.array()).abs().maxCoeff();
        return std::max({stat, primal, compl_});
    };
    double res = kkt_residual(y, lambda);
    if (res > opts.kkt_tol) {
        std::vector<int> act;
        for (int i = 0; i < m; ++i)
            if (u[i] > 0.0) act.push_back(i);
        if (!act.empty()) {
            Eigen::MatrixXd Ga(static_cast<int>(act.size()), n);
            Eigen::VectorXd ha(static_cast<int>(act.size()));
            for (std::size_t k = 0; k < act.size(); ++k) {
                Ga.row(static_cast<int>(k)) = G.row(act[k]);
                ha[static_cast<int>(k)] = h[act[k]];
            }
            Eigen::MatrixXd GGt = Ga * Ga.transpose();
            Eigen::VectorXd lam_a = GGt.ldlt().solve(ha);
            Eigen::VectorXd y2 = Ga.transpose() * lam_a;
            Eigen::VectorXd lam2 = Eigen::VectorXd::Zero(m);
            bool sign_ok = true;
            for (std::size_t k = 0; k < act.size(); ++k) {
                if (lam_a[static_cast<int>(k)] < -opts.kkt_tol) sign_ok = false;
                lam2[act[k]] = std::max(0.0, lam_a[static_cast<int>(k)]);
            }
            if (sign_ok) {
                double res2 = kkt_residual(y2, lam2);
                if (res2 < res) {
                    y = y2;
                    lambda = lam2;
                    res = res2;
                }
            }
        }
    }
    if (res > opts.kkt_tol)
        throw QpError("solve_ldp: KKT residual " + std::to_string(res) + " above tolerance", res);

    out.x = target + y;
    out.objective = y.squaredNorm();
    out.kkt_residual = res;
    out.multipliers = lambda.tail(static_cast<int>(rows.size()));
    return out;
}

QpResult solve_node_qp(const Eigen::VectorXd& target, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, const std::vector<LinearRow>& rows,
                       const QpOptions& opts) {
    const int n = static_cast<int>(target.size());
    QpResult out;
    out.x.resize(n);
    for (int j = 0; j < n; ++j) out.x[j] = clampd(target[j], lo[j], hi[j]);
    out.multipliers = Eigen::VectorXd::Zero(static_cast<int>(rows.size()));

    bool clamp_feasible = true;
    for (const auto& r : rows)
        if (r.eval_lhs(out.x) > r.rhs + 1e-12) {
            clamp_feasible = false;
            break;
        }
    if (clamp_feasible) {
        out.objective = (out.x - target).squaredNorm();
        out.kkt_residual = 0.0;
        return out;
    }

    // only variables referenced by some row need the general solver
    std::vector<int> coupled;
    std::vector<int> pos(static_cast<std::size_t>(n), -1);
    for (const auto& r : rows)
        for (auto [var, c] : r.terms)
            if (pos[static_cast<std::size_t>(var)] < 0) {
                pos[static_cast<std::size_t>(var)] = static_cast<int>(coupled.size());
                coupled.push_back(var);
            }
    const int nc = static_cast<int>(coupled.size());
    Eigen::VectorXd td(nc), tl(nc), th(nc);
    for (int k = 0; k < nc; ++k) {
        td[k] = target[coupled[static_cast<std::size_t>(k)]];
        tl[k] = lo[coupled[static_cast<std::size_t>(k)]];
        th[k] = hi[coupled[static_cast<std::size_t>(k)]];
    }
    std::vector<LinearRow> sub_rows = rows;
    for (auto& r : sub_rows)
        for (auto& [var, c] : r.terms) var = pos[static_cast<std::size_t>(var)];

    QpResult sub = solve_ldp(td, tl, th, sub_rows, opts);
    if (!sub.feasible) {
        out.feasible = false;
        return out;
    }
    for (int k = 0; k < nc; ++k) out.x[coupled[static_cast<std::size_t>(k)]] = sub.x[k];
    out.objective = (out.x - target).squaredNorm();
    out.kkt_residual = sub.kkt_residual;
    out.multipliers = sub.multipliers;
    return out;
}

}  // namespace clinproj
