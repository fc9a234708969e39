#include <cmath>
#include <set>

#include "clinproj/constraints.hpp"
#include "clinproj/rng.hpp"
#include "doctest.h"

using namespace clinproj;

TEST_CASE("binary counts: 8 per time step, 48 per 6h window") {
    const VitalRegistry& reg = standard_registry();
    ConstraintSet cs = build_physical(reg, 6);
    CHECK(cs.n_binaries == 48);

    int per_step[4] = {0, 0, 0, 0};
    for (const auto& g : cs.indicators) {
        if (g.label.rfind("hco3_le10", 0) == 0) per_step[0] += static_cast<int>(g.binaries.size());
        if (g.label.rfind("lactate_ge6", 0) == 0) per_step[1] += static_cast<int>(g.binaries.size());
        if (g.label.rfind("be_le0", 0) == 0) per_step[2] += static_cast<int>(g.binaries.size());
        if (g.label.rfind("ph_le7", 0) == 0) per_step[3] += static_cast<int>(g.binaries.size());
    }
    CHECK(per_step[0] == 6 * 1);
    CHECK(per_step[1] == 6 * 1);
    CHECK(per_step[2] == 6 * 3);
    CHECK(per_step[3] == 6 * 3);
}

TEST_CASE("Temp contributes 6 box rows and 5 rate pairs at window 6") {
    const VitalRegistry& reg = standard_registry();
    ConstraintSet cs = build_physical(reg, 6);
    int temp = reg.index_of("Temp");
    int rate_pairs = 0;
    for (const auto& rb : cs.rates)
        if (rb.vital == temp) ++rate_pairs;
    CHECK(rate_pairs == 5);
    // box rows exist per (vital, t) by construction
    for (int t = 0; t < 6; ++t) {
        CHECK(cs.box_lo[cs.var(temp, t)] == reg.at(static_cast<std::size_t>(temp)).solve_lo());
        CHECK(cs.box_hi[cs.var(temp, t)] == reg.at(static_cast<std::size_t>(temp)).solve_hi());
    }
}

TEST_CASE("witness is feasible with slack except rows it lies on") {
    const VitalRegistry& reg = standard_registry();
    ConstraintSet cs = build_physical(reg, 6);
    CHECK(cs.verify_feasibility(cs.witness, 1e-9).empty());
    // tightening the tolerance to negative would flag boundary rows only
    CHECK(cs.verify_feasibility(cs.witness, 1e-12).empty());
}

TEST_CASE("indicator thresholds round-trip through each vital's transform") {
    const VitalRegistry& reg = standard_registry();
    struct Expect {
        const char* vital;
        double raw;
    };
    // thresholds appearing in the if-then rules
    for (auto [name, raw] : {Expect{"HCO3", 10.0}, Expect{"BaseExcess", 0.0},
                             Expect{"Lactate", 6.0}, Expect{"pH", 7.0}, Expect{"PaCO2", 35.0}}) {
        const VitalSpec& s = reg.lookup(name);
        double solve = s.to_solve(raw);
        CHECK(std::abs(s.to_raw(solve) - raw) < 1e-9);
        CHECK(solve > s.solve_lo() - 1e-12);
        CHECK(solve < s.solve_hi() + 1e-12);
    }
    // spot value: HCO3 threshold 10 with normal range [22, 27]
    CHECK(reg.lookup("HCO3").to_solve(10.0) == doctest::Approx(-2.4).epsilon(1e-12));
}

TEST_CASE("affine rows agree with the raw-space inequality on random in-box points") {
    const VitalRegistry& reg = standard_registry();
    ConstraintSet cs = build_physical(reg, 2);
    Rng rng(7);

    int map = reg.index_of("MAP"), dbp = reg.index_of("DBP"), sbp = reg.index_of("SBP");
    int bd = reg.index_of("BilirubinDirect"), bt = reg.index_of("BilirubinTotal");
    int hct = reg.index_of("HCT"), hgb = reg.index_of("Hgb");

    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd x(cs.n_vars());
        for (int v = 0; v < cs.n_vitals; ++v)
            for (int t = 0; t < 2; ++t) {
                int i = cs.var(v, t);
                x[i] = rng.uniform(cs.box_lo[i], cs.box_hi[i]);
            }
        auto raw = [&](int v, int t) {
            return reg.at(static_cast<std::size_t>(v)).to_raw(x[cs.var(v, t)]);
        };
        for (const auto& row : cs.linear) {
            double solve_sign = row.eval_lhs(x) - row.rhs;  // <= 0 iff satisfied
            int t = row.label.back() - '0';
            double raw_sign = 0.0;
            if (row.label.rfind("map_pressure_mean_lower", 0) == 0)
                raw_sign = 0.95 * (2.0 / 3.0 * raw(dbp, t) + 1.0 / 3.0 * raw(sbp, t)) - raw(map, t);
            else if (row.label.rfind("map_pressure_mean_upper", 0) == 0)
                raw_sign = raw(map, t) - 1.05 * (2.0 / 3.0 * raw(dbp, t) + 1.0 / 3.0 * raw(sbp, t));
            else if (row.label.rfind("bilirubin_direct_le_total", 0) == 0)
                raw_sign = std::log10(raw(bd, t) + 1.0) - std::log10(raw(bt, t) + 1.0);
            else if (row.label.rfind("hct_ge_1.5_hgb", 0) == 0)
                raw_sign = 1.5 * raw(hgb, t) - raw(hct, t);
            else
                continue;
            // same sign and, for the non-log rows, the same magnitude up to the
            // affine scale; check sign agreement within 1e-9 slack
            if (raw_sign > 1e-9) CHECK(solve_sign > -1e-9);
            if (solve_sign > 1e-9) CHECK(raw_sign > -1e-9);
        }
    }
}

TEST_CASE("big-M rows stay inside the box at both binary values") {
    const VitalRegistry& reg = standard_registry();
    ConstraintSet cs = build_physical(reg, 2);
    for (const auto& g : cs.indicators) {
        for (const auto& r : g.rows) {
            REQUIRE(r.x_terms.size() == 1);
            REQUIRE(r.z_terms.size() == 1);
            auto [var, coef] = r.x_terms.front();
            for (int zv : {0, 1}) {
                std::vector<int> values(static_cast<std::size_t>(cs.n_binaries), 0);
                values[static_cast<std::size_t>(r.z_terms.front().first)] = zv;
                LinearRow sub = r.substitute(values);
                double bound = sub.rhs / coef;  // implied one-sided bound on x
                if (coef > 0) {
                    CHECK(bound >= cs.box_lo[var] - 1e-9);
                    CHECK(bound <= cs.box_hi[var] + 1e-9);
                } else {
                    CHECK(-sub.rhs >= cs.box_lo[var] - 1e-9);
                    CHECK(-sub.rhs <= cs.box_hi[var] + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("normal set is a bare [0,1] box") {
    const VitalRegistry& reg = standard_registry();
    ConstraintSet cs = build_normal(reg, 6);
    CHECK(cs.indicators.empty());
    CHECK(cs.linear.empty());
    CHECK(cs.rates.empty());
    CHECK(cs.box_lo.minCoeff() == 0.0);
    CHECK(cs.box_lo.maxCoeff() == 0.0);
    CHECK(cs.box_hi.minCoeff() == 1.0);
    CHECK(cs.box_hi.maxCoeff() == 1.0);
}

TEST_CASE("constraints drop out when their vitals are absent") {
    const VitalRegistry& reg = standard_registry();
    VitalRegistry pair = reg.subset({"HCO3", "BaseExcess"});
    ConstraintSet cs = build_physical(pair, 3);
    CHECK(cs.n_binaries == 3);  // one rule with one binary per step
    CHECK(cs.indicators.size() == 3);
    CHECK(cs.linear.empty());

    VitalRegistry acid = reg.subset({"pH", "PaCO2", "HCO3"});
    ConstraintSet cs2 = build_physical(acid, 2);
    CHECK(cs2.n_binaries == 6);  // the three-binary rule per step
}

TEST_CASE("verify_feasibility reports box and group violations") {
    const VitalRegistry& reg = standard_registry();
    ConstraintSet cs = build_physical(reg, 6);

    Eigen::VectorXd x = cs.witness;
    int temp = reg.index_of("Temp");
    double solve50 = reg.lookup("Temp").to_solve(50.0);
    for (int t = 0; t < 6; ++t) x[cs.var(temp, t)] = solve50;
    auto report = cs.verify_feasibility(x, 1e-6);
    CHECK(report.size() == 6);  // one box violation per hour
    CHECK(report.front().label.find("box") != std::string::npos);

    // low bicarbonate with positive base excess: no assignment satisfies the rule
    Eigen::VectorXd y = cs.witness;
    int hco3 = reg.index_of("HCO3"), be = reg.index_of("BaseExcess");
    y[cs.var(hco3, 0)] = reg.lookup("HCO3").to_solve(8.0);
    y[cs.var(be, 0)] = reg.lookup("BaseExcess").to_solve(5.0);
    auto report2 = cs.verify_feasibility(y, 1e-6);
    bool found = false;
    for (const auto& v : report2)
        if (v.label.find("hco3_le10_implies_be_le0@t0") != std::string::npos) found = true;
    CHECK(found);
}
