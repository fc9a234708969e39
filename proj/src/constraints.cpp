#include "clinproj/constraints.hpp"

#include <cmath>
#include <sstream>

namespace clinproj {

namespace {

// Σ alpha_v * raw_v <= beta over non-log vitals, rewritten in solve space.
LinearRow raw_affine_row(const VitalRegistry& reg, const ConstraintSet& cs,
                         const std::vector<std::pair<int, double>>& raw_terms, double beta,
                         int t, std::string label) {
    LinearRow row;
    row.rhs = beta;
    row.label = std::move(label);
    for (auto [v, alpha] : raw_terms) {
        const VitalSpec& s = reg.at(static_cast<std::size_t>(v));
        double den = s.norm_hi - s.norm_lo;
        row.terms.emplace_back(cs.var(v, t), alpha * den);
        row.rhs -= alpha * s.norm_lo;
    }
    return row;
}

struct GroupBuilder {
    const VitalRegistry& reg;
    ConstraintSet& cs;
    IndicatorGroup g;
    int t;

    int add_binary(const std::string& name) {
        int id = cs.n_binaries++;
        g.binaries.push_back(id);
        g.binary_names.push_back(name);
        return id;
    }

    // x_v <= threshold when binary == active_value, box upper bound otherwise
    void upper_when(int v, double raw_threshold, int bin, int active_value) {
        const VitalSpec& s = reg.at(static_cast<std::size_t>(v));
        double c = s.to_solve(raw_threshold);
        int var = cs.var(v, t);
        double hi = cs.box_hi[var];
        MixedRow r;
        r.label = g.label + ":" + s.name + "<=" + std::to_string(raw_threshold);
        r.x_terms.emplace_back(var, 1.0);
        if (active_value == 1) {
            r.z_terms.emplace_back(bin, hi - c);
            r.rhs = hi;
        } else {
            r.z_terms.emplace_back(bin, -(hi - c));
            r.rhs = c;
        }
        g.rows.push_back(std::move(r));
    }

    // x_v >= threshold when binary == active_value, box lower bound otherwise
    void lower_when(int v, double raw_threshold, int bin, int active_value) {
        const VitalSpec& s = reg.at(static_cast<std::size_t>(v));
        double c = s.to_solve(raw_threshold);
        int var = cs.var(v, t);
        double lo = cs.box_lo[var];
        MixedRow r;
        r.label = g.label + ":" + s.name + ">=" + std::to_string(raw_threshold);
        r.x_terms.emplace_back(var, -1.0);
        if (active_value == 1) {
            r.z_terms.emplace_back(bin, c - lo);
            r.rhs = -lo;
        } else {
            r.z_terms.emplace_back(bin, -(c - lo));
            r.rhs = -c;
        }
        g.rows.push_back(std::move(r));
    }

    // binary b forced to 1 iff x_v <= threshold (two-sided link)
    int link_le(const std::string& bname, int v, double threshold) {
        int b = add_binary(bname);
        upper_when(v, threshold, b, 1);
        lower_when(v, threshold, b, 0);
        return b;
    }

    // binary b forced to 1 iff x_v >= threshold
    int link_ge(const std::string& bname, int v, double threshold) {
        int b = add_binary(bname);
        lower_when(v, threshold, b, 1);
        upper_when(v, threshold, b, 0);
        return b;
    }

    // z <= sum of others
    void implies_any(int z, std::initializer_list<int> others) {
        MixedRow r;
        r.label = g.label + ":disjunction";
        r.z_terms.emplace_back(z, 1.0);
        for (int o : others) r.z_terms.emplace_back(o, -1.0);
        r.rhs = 0.0;
        g.binary_rows.push_back(std::move(r));
    }
};

}  // namespace

std::vector<LinearRow> ConstraintSet::continuous_rows() const {
    std::vector<LinearRow> rows = linear;
    for (const auto& rb : rates) {
        int a = var(rb.vital, rb.t - 1);
        int b = var(rb.vital, rb.t);
        std::string base = "rate[v" + std::to_string(rb.vital) + ",t" + std::to_string(rb.t) + "]";
        rows.push_back(LinearRow{{{b, 1.0}, {a, -1.0}}, rb.bound, base + "+"});
        rows.push_back(LinearRow{{{a, 1.0}, {b, -1.0}}, rb.bound, base + "-"});
    }
    return rows;
}

std::vector<int> ConstraintSet::group_assignment(const IndicatorGroup& g,
                                                 const Eigen::VectorXd& point, double tol) const {
    int nb = static_cast<int>(g.binaries.size());
    std::vector<int> values(static_cast<std::size_t>(n_binaries), 0);
    for (int mask = 0; mask < (1 << nb); ++mask) {
        // bit order chosen so ascending mask = lexicographic binary vector
        for (int j = 0; j < nb; ++j)
            values[g.binaries[static_cast<std::size_t>(j)]] = (mask >> (nb - 1 - j)) & 1;
        bool ok = true;
        for (const auto& rows : {g.rows, g.binary_rows}) {
            for (const auto& r : rows) {
                double lhs = 0.0;
                for (auto [v, c] : r.x_terms) lhs += c * point[v];
                for (auto [b, gcoef] : r.z_terms) lhs += gcoef * values[b];
                if (lhs > r.rhs + tol) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
        }
        if (ok) {
            std::vector<int> out(static_cast<std::size_t>(nb));
            for (int j = 0; j < nb; ++j) out[static_cast<std::size_t>(j)] = (mask >> (nb - 1 - j)) & 1;
            return out;
        }
    }
    return {};
}

std::vector<Violation> ConstraintSet::verify_feasibility(const Eigen::VectorXd& point,
                                                         double tol) const {
    std::vector<Violation> out;
    for (int v = 0; v < n_vitals; ++v) {
        for (int t = 0; t < window_len; ++t) {
            int i = var(v, t);
            if (point[i] < box_lo[i] - tol)
                out.push_back({"box[v" + std::to_string(v) + ",t" + std::to_string(t) + "] lower",
                               point[i] - box_lo[i]});
            if (point[i] > box_hi[i] + tol)
                out.push_back({"box[v" + std::to_string(v) + ",t" + std::to_string(t) + "] upper",
                               box_hi[i] - point[i]});
        }
    }
    for (const auto& rb : rates) {
        double diff = std::abs(point[var(rb.vital, rb.t)] - point[var(rb.vital, rb.t - 1)]);
        if (diff > rb.bound + tol)
            out.push_back({"rate[v" + std::to_string(rb.vital) + ",t" + std::to_string(rb.t) + "]",
                           rb.bound - diff});
    }
    for (const auto& row : linear) {
        double slack = row.rhs - row.eval_lhs(point);
        if (slack < -tol) out.push_back({row.label, slack});
    }
    for (const auto& g : indicators) {
        if (group_assignment(g, point, tol).empty()) {
            // report the least-bad assignment's worst slack
            int nb = static_cast<int>(g.binaries.size());
            double best = -std::numeric_limits<double>::infinity();
            std::vector<int> values(static_cast<std::size_t>(n_binaries), 0);
            for (int mask = 0; mask < (1 << nb); ++mask) {
                for (int j = 0; j < nb; ++j)
                    values[g.binaries[static_cast<std::size_t>(j)]] = (mask >> (nb - 1 - j)) & 1;
                double worst = std::numeric_limits<double>::infinity();
                for (const auto& rows : {g.rows, g.binary_rows})
                    for (const auto& r : rows) {
                        double lhs = 0.0;
                        for (auto [v, c] : r.x_terms) lhs += c * point[v];
                        for (auto [b, gc] : r.z_terms) lhs += gc * values[b];
                        worst = std::min(worst, r.rhs - lhs);
                    }
                best = std::max(best, worst);
            }
            out.push_back({g.label, best});
        }
    }
    return out;
}

ConstraintSet build_physical(const VitalRegistry& reg, int window_len) {
    if (window_len < 2) throw std::invalid_argument("build_physical: window_len must be >= 2");
    ConstraintSet cs;
    cs.n_vitals = static_cast<int>(reg.size());
    cs.window_len = window_len;
    cs.box_lo.resize(cs.n_vars());
    cs.box_hi.resize(cs.n_vars());

    for (int v = 0; v < cs.n_vitals; ++v) {
        const VitalSpec& s = reg.at(static_cast<std::size_t>(v));
        double lo = s.solve_lo(), hi = s.solve_hi();
        for (int t = 0; t < window_len; ++t) {
            cs.box_lo[cs.var(v, t)] = lo;
            cs.box_hi[cs.var(v, t)] = hi;
        }
        if (auto r = s.solve_rate())
            for (int t = 1; t < window_len; ++t) cs.rates.push_back({v, t, *r});
    }

    int map = reg.index_of("MAP"), dbp = reg.index_of("DBP"), sbp = reg.index_of("SBP");
    int bil_d = reg.index_of("BilirubinDirect"), bil_t = reg.index_of("BilirubinTotal");
    int hct = reg.index_of("HCT"), hgb = reg.index_of("Hgb");
    int hco3 = reg.index_of("HCO3"), be = reg.index_of("BaseExcess");
    int lact = reg.index_of("Lactate"), ph = reg.index_of("pH"), paco2 = reg.index_of("PaCO2");

    for (int t = 0; t < window_len; ++t) {
        std::string at = "@t" + std::to_string(t);

        // MAP within 5% of the 2/3 DBP + 1/3 SBP mean
        if (map >= 0 && dbp >= 0 && sbp >= 0) {
            cs.linear.push_back(raw_affine_row(
                reg, cs, {{dbp, 0.95 * 2.0 / 3.0}, {sbp, 0.95 / 3.0}, {map, -1.0}}, 0.0, t,
                "map_pressure_mean_lower" + at));
            cs.linear.push_back(raw_affine_row(
                reg, cs, {{map, 1.0}, {dbp, -1.05 * 2.0 / 3.0}, {sbp, -1.05 / 3.0}}, 0.0, t,
                "map_pressure_mean_upper" + at));
        }

        // direct bilirubin cannot exceed total; both log-scaled, and log is
        // monotone, so the row is affine in the logged values
        if (bil_d >= 0 && bil_t >= 0) {
            const VitalSpec& d = reg.at(static_cast<std::size_t>(bil_d));
            const VitalSpec& tt = reg.at(static_cast<std::size_t>(bil_t));
            double den_d = std::log10(d.norm_hi + 1.0) - std::log10(d.norm_lo + 1.0);
            double den_t = std::log10(tt.norm_hi + 1.0) - std::log10(tt.norm_lo + 1.0);
            LinearRow row;
            row.terms = {{cs.var(bil_d, t), den_d}, {cs.var(bil_t, t), -den_t}};
            row.rhs = std::log10(tt.norm_lo + 1.0) - std::log10(d.norm_lo + 1.0);
            row.label = "bilirubin_direct_le_total" + at;
            cs.linear.push_back(std::move(row));
        }

        // HCT >= 1.5 Hgb
        if (hct >= 0 && hgb >= 0)
            cs.linear.push_back(raw_affine_row(reg, cs, {{hgb, 1.5}, {hct, -1.0}}, 0.0, t,
                                               "hct_ge_1.5_hgb" + at));

        // low bicarbonate forces non-positive base excess
        if (hco3 >= 0 && be >= 0) {
            GroupBuilder b{reg, cs, {}, t};
            b.g.label = "hco3_le10_implies_be_le0" + at;
            int z = b.link_le("z_hco3", hco3, 10.0);
            b.upper_when(be, 0.0, z, 1);
            cs.indicators.push_back(std::move(b.g));
        }

        // high lactate forces non-positive base excess
        if (lact >= 0 && be >= 0) {
            GroupBuilder b{reg, cs, {}, t};
            b.g.label = "lactate_ge6_implies_be_le0" + at;
            int z = b.link_ge("z_lactate", lact, 6.0);
            b.upper_when(be, 0.0, z, 1);
            cs.indicators.push_back(std::move(b.g));
        }

        // non-positive base excess needs an acid source: high lactate or low bicarbonate
        if (be >= 0 && hco3 >= 0 && lact >= 0) {
            GroupBuilder b{reg, cs, {}, t};
            b.g.label = "be_le0_implies_lactate_ge6_or_hco3_le10" + at;
            int z = b.link_le("z_be", be, 0.0);
            int y = b.link_le("y_hco3", hco3, 10.0);
            int s = b.link_ge("s_lactate", lact, 6.0);
            b.implies_any(z, {y, s});
            cs.indicators.push_back(std::move(b.g));
        }

        // acidemia needs a respiratory or metabolic explanation
        if (ph >= 0 && paco2 >= 0 && hco3 >= 0) {
            GroupBuilder b{reg, cs, {}, t};
            b.g.label = "ph_le7_implies_paco2_le35_or_hco3_le10" + at;
            int z = b.link_le("z_ph", ph, 7.0);
            int s = b.link_le("s_hco3", hco3, 10.0);
            int y = b.link_le("y_paco2", paco2, 35.0);
            b.implies_any(z, {s, y});
            cs.indicators.push_back(std::move(b.g));
        }
    }

    // Feasibility witness: normal midpoints, with two adjusted coordinates.
    // FiO2's normal range lies below its physical range, so its witness is the
    // physical floor 21. The normal midpoints of MAP/DBP/SBP do not satisfy the
    // pressure-mean row, so the MAP coordinate is set onto the mean itself.
    cs.witness.resize(cs.n_vars());
    for (int v = 0; v < cs.n_vitals; ++v) {
        const VitalSpec& s = reg.at(static_cast<std::size_t>(v));
        double raw = s.name == "FiO2" ? 21.0 : s.normal_mid_raw();
        if (v == map && dbp >= 0 && sbp >= 0)
            raw = 2.0 / 3.0 * reg.at(static_cast<std::size_t>(dbp)).normal_mid_raw() +
                  1.0 / 3.0 * reg.at(static_cast<std::size_t>(sbp)).normal_mid_raw();
        double sv = s.to_solve(raw);
        for (int t = 0; t < window_len; ++t) cs.witness[cs.var(v, t)] = sv;
    }
    auto bad = cs.verify_feasibility(cs.witness, 1e-9);
    if (!bad.empty())
        throw std::logic_error("build_physical: witness infeasible at row " + bad.front().label);
    return cs;
}

ConstraintSet build_normal(const VitalRegistry& reg, int window_len) {
    if (window_len < 1) throw std::invalid_argument("build_normal: window_len must be >= 1");
    ConstraintSet cs;
    cs.n_vitals = static_cast<int>(reg.size());
    cs.window_len = window_len;
    cs.box_lo = Eigen::VectorXd::Zero(cs.n_vars());
    cs.box_hi = Eigen::VectorXd::Ones(cs.n_vars());
    cs.witness = Eigen::VectorXd::Constant(cs.n_vars(), 0.5);
    return cs;
}

}  // namespace clinproj
