#include <cmath>

#include "clinproj/qp.hpp"
#include "clinproj/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace clinproj;

TEST_CASE("box-only target outside the box clamps componentwise") {
    Eigen::VectorXd d(3), lo(3), hi(3);
    d << -5.0, 0.5, 9.0;
    lo << 0.0, 0.0, 0.0;
    hi << 1.0, 1.0, 1.0;
    QpResult r = solve_node_qp(d, lo, hi, {});
    CHECK(r.x[0] == 0.0);
    CHECK(r.x[1] == 0.5);
    CHECK(r.x[2] == 1.0);
    CHECK(r.objective == doctest::Approx(25.0 + 64.0).epsilon(1e-15));
    CHECK(r.kkt_residual == 0.0);
}

TEST_CASE("single violated row puts the solution on the row with a nonnegative multiplier") {
    Eigen::VectorXd d(2), lo(2), hi(2);
    d << 1.0, 1.0;
    lo << -10.0, -10.0;
    hi << 10.0, 10.0;
    LinearRow row{{{0, 1.0}, {1, 1.0}}, 1.0, "sum<=1"};  // x0 + x1 <= 1
    QpResult r = solve_node_qp(d, lo, hi, {row});
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(r.multipliers[0] >= 0.0);
    CHECK(row.eval_lhs(r.x) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.kkt_residual <= 1e-8);
}

TEST_CASE("random 10-var instances match the alternating-projection oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 10;
        Eigen::VectorXd d(n), lo(n), hi(n);
        for (int j = 0; j < n; ++j) {
            lo[j] = rng.uniform(-2.0, 0.0);
            hi[j] = lo[j] + rng.uniform(0.5, 3.0);
            d[j] = rng.uniform(-4.0, 4.0);
        }
        std::vector<LinearRow> rows;
        int n_rows = 1 + static_cast<int>(rng.uniform_index(4));
        for (int r = 0; r < n_rows; ++r) {
            LinearRow row;
            int nnz = 2 + static_cast<int>(rng.uniform_index(3));
            for (int k = 0; k < nnz; ++k)
                row.terms.emplace_back(static_cast<int>(rng.uniform_index(n)),
                                       rng.uniform(-1.5, 1.5));
            // keep the region non-empty: pass the row through the box center
            Eigen::VectorXd center = 0.5 * (lo + hi);
            row.rhs = row.eval_lhs(center) + rng.uniform(0.0, 1.0);
            row.label = "r" + std::to_string(r);
            rows.push_back(std::move(row));
        }
        QpResult got = solve_node_qp(d, lo, hi, rows);
        REQUIRE(got.feasible);
        Eigen::VectorXd want = oracles::dykstra_project(d, lo, hi, rows);
        CHECK((got.x - want).lpNorm<Eigen::Infinity>() < 1e-7);
        CHECK(got.kkt_residual <= 1e-8);
    }
}

TEST_CASE("tiny instances match exhaustive active-set enumeration") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3;
        Eigen::VectorXd d(n), lo(n), hi(n);
        for (int j = 0; j < n; ++j) {
            lo[j] = rng.uniform(-1.0, 0.0);
            hi[j] = lo[j] + rng.uniform(0.5, 2.0);
            d[j] = rng.uniform(-3.0, 3.0);
        }
        std::vector<LinearRow> rows;
        for (int r = 0; r < 2; ++r) {
            LinearRow row;
            row.terms.emplace_back(static_cast<int>(rng.uniform_index(n)), rng.uniform(-1.0, 1.0));
            row.terms.emplace_back(static_cast<int>(rng.uniform_index(n)), rng.uniform(-1.0, 1.0));
            Eigen::VectorXd center = 0.5 * (lo + hi);
            row.rhs = row.eval_lhs(center) + rng.uniform(0.0, 0.5);
            rows.push_back(std::move(row));
        }
        QpResult got = solve_node_qp(d, lo, hi, rows);
        REQUIRE(got.feasible);
        Eigen::VectorXd want = oracles::active_set_enumeration(d, lo, hi, rows);
        CHECK(std::abs(got.objective - (want - d).squaredNorm()) < 1e-7);
    }
}

TEST_CASE("infeasible row system is reported, not solved") {
    Eigen::VectorXd d(1), lo(1), hi(1);
    d << 0.0;
    lo << 0.0;
    hi << 1.0;
    // x <= -1 conflicts with the box
    QpResult r = solve_node_qp(d, lo, hi, {LinearRow{{{0, 1.0}}, -1.0, "impossible"}});
    CHECK(!r.feasible);
}

TEST_CASE("generic LDP path agrees with the clamp on box-only problems") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 6;
        Eigen::VectorXd d(n), lo(n), hi(n);
        for (int j = 0; j < n; ++j) {
            lo[j] = rng.uniform(-1.0, 0.0);
            hi[j] = lo[j] + rng.uniform(0.1, 2.0);
            d[j] = rng.uniform(-3.0, 3.0);
        }
        QpResult generic = solve_ldp(d, lo, hi, {});
        Eigen::VectorXd clamp = d.cwiseMax(lo).cwiseMin(hi);
        CHECK((generic.x - clamp).lpNorm<Eigen::Infinity>() < 1e-9);
    }
}
