#include <cmath>
#include <set>

#include "clinproj/datagen.hpp"
#include "clinproj/projection.hpp"
#include "doctest.h"

using namespace clinproj;

namespace {

Eigen::MatrixXd to_solve_window(const PatientRecord& rec, const VitalRegistry& reg, int start,
                                int W) {
    Eigen::MatrixXd w(static_cast<Eigen::Index>(reg.size()), W);
    for (std::size_t v = 0; v < reg.size(); ++v)
        for (int t = 0; t < W; ++t)
            w(static_cast<Eigen::Index>(v), t) = reg.at(v).to_solve(rec.values(static_cast<Eigen::Index>(v), start + t));
    return w;
}

}  // namespace

TEST_CASE("generated cohorts are feasible, window by window") {
    const VitalRegistry& reg = standard_registry();
    CohortParams p;
    p.n_patients = 20;
    p.seed = 9;
    p.sepsis_rate = 0.3;
    auto cohort = generate_cohort(reg, p);
    REQUIRE(cohort.size() == 20);
    ConstraintSet cs = build_physical(reg, 6);
    for (const auto& rec : cohort) {
        for (int start = 0; start + 6 <= rec.hours(); start += 3) {
            Eigen::MatrixXd w = to_solve_window(rec, reg, start, 6);
            Eigen::VectorXd flat(cs.n_vars());
            for (int v = 0; v < cs.n_vitals; ++v)
                for (int t = 0; t < 6; ++t) flat[cs.var(v, t)] = w(v, t);
            CHECK(cs.verify_feasibility(flat, 1e-9).empty());
        }
    }
}

TEST_CASE("sepsis rate lands within the binomial 3-sigma band") {
    const VitalRegistry& reg = standard_registry();
    CohortParams p;
    p.n_patients = 1000;
    p.hours_lo = 18;
    p.hours_hi = 24;
    p.sepsis_rate = 0.072;
    p.seed = 5;
    auto cohort = generate_cohort(reg, p);
    int septic = 0;
    for (const auto& rec : cohort)
        for (int l : rec.sepsis_label)
            if (l) {
                ++septic;
                break;
            }
    double mean = 72.0, sigma = std::sqrt(1000 * 0.072 * 0.928);
    CHECK(std::abs(septic - mean) <= 3.0 * sigma);
}

TEST_CASE("non-septic records carry no labels; septic labels start six hours early") {
    const VitalRegistry& reg = standard_registry();
    CohortParams p;
    p.n_patients = 50;
    p.sepsis_rate = 0.5;
    p.seed = 123;
    auto cohort = generate_cohort(reg, p);
    for (const auto& rec : cohort) {
        int first = -1;
        for (std::size_t t = 0; t < rec.sepsis_label.size(); ++t)
            if (rec.sepsis_label[t]) {
                first = static_cast<int>(t);
                break;
            }
        if (first < 0) continue;
        // once labeled, labeled to the end
        for (std::size_t t = static_cast<std::size_t>(first); t < rec.sepsis_label.size(); ++t)
            CHECK(rec.sepsis_label[t] == 1);
    }
}

TEST_CASE("zero-probability corruption is the identity") {
    const VitalRegistry& reg = standard_registry();
    CohortParams p;
    p.n_patients = 2;
    p.seed = 1;
    auto cohort = generate_cohort(reg, p);
    auto [corrupted, mask] = corrupt(cohort[0], reg, CorruptionSpec{});
    CHECK(mask.cells.empty());
    CHECK((corrupted.values - cohort[0].values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("out-of-range corruption lands outside the physical range and is masked") {
    const VitalRegistry& reg = standard_registry();
    CohortParams p;
    p.n_patients = 5;
    p.seed = 2;
    auto cohort = generate_cohort(reg, p);
    CorruptionSpec spec;
    spec.p_out_of_range = 0.05;
    spec.seed = 77;
    int total = 0;
    for (const auto& rec : cohort) {
        auto [corrupted, mask] = corrupt(rec, reg, spec);
        for (const auto& cell : mask.cells) {
            REQUIRE(cell.kind == "bound");
            const VitalSpec& s = reg.at(static_cast<std::size_t>(cell.vital));
            double v = corrupted.values(cell.vital, cell.t);
            CHECK((v < s.phys_lo || v > s.phys_hi));
            CHECK(cell.original == rec.values(cell.vital, cell.t));
            ++total;
        }
    }
    CHECK(total > 0);
}

TEST_CASE("full missingness on one vital blanks the column and is fully masked") {
    const VitalRegistry& reg = standard_registry();
    CohortParams p;
    p.n_patients = 1;
    p.seed = 3;
    auto cohort = generate_cohort(reg, p);
    CorruptionSpec spec;
    spec.p_missing = 1.0;
    spec.bound_vitals = {"HeartRate"};  // keep bound corruption away
    spec.seed = 8;
    auto [corrupted, mask] = corrupt(cohort[0], reg, spec);
    int T = cohort[0].hours();
    std::set<std::pair<int, int>> masked;
    for (const auto& c : mask.cells)
        if (c.kind == "missing") masked.insert({c.vital, c.t});
    int wbc = reg.index_of("WBC");
    for (int t = 0; t < T; ++t) {
        CHECK(std::isnan(corrupted.values(wbc, t)));
        CHECK(masked.count({wbc, t}) == 1);
    }
}

TEST_CASE("bound-only corruption is restored exactly to the violated bound") {
    const VitalRegistry& reg = standard_registry();
    CohortParams p;
    p.n_patients = 10;
    p.seed = 21;
    auto cohort = generate_cohort(reg, p);
    ConstraintSet cs = build_physical(reg, 6);
    CorruptionSpec spec;
    spec.p_out_of_range = 0.04;
    spec.seed = 31;

    int cells_checked = 0;
    for (const auto& rec : cohort) {
        auto [corrupted, mask] = corrupt(rec, reg, spec);
        std::set<std::pair<int, int>> masked;
        for (const auto& c : mask.cells) masked.insert({c.vital, c.t});
        for (int start = 0; start + 6 <= corrupted.hours(); start += 3) {
            Eigen::MatrixXd w = to_solve_window(corrupted, reg, start, 6);
            ProjectionResult r = project_physical(w, cs);
            REQUIRE(r.status == SolveStatus::optimal);
            for (int v = 0; v < cs.n_vitals; ++v)
                for (int t = 0; t < 6; ++t) {
                    if (masked.count({v, start + t})) {
                        double lo = cs.box_lo[cs.var(v, t)], hi = cs.box_hi[cs.var(v, t)];
                        double expected = w(v, t) > hi ? hi : lo;
                        CHECK(r.corrected(v, t) == expected);
                        ++cells_checked;
                    } else {
                        CHECK(r.corrected(v, t) == w(v, t));
                    }
                }
        }
    }
    CHECK(cells_checked > 0);
}

TEST_CASE("corrupt -> impute -> project yields feasible windows") {
    const VitalRegistry& reg = standard_registry();
    CohortParams p;
    p.n_patients = 8;
    p.seed = 4;
    auto cohort = generate_cohort(reg, p);
    ConstraintSet cs = build_physical(reg, 6);
    CorruptionSpec spec;
    spec.p_out_of_range = 0.02;
    spec.p_rate_spike = 0.02;
    spec.p_logical_pair = 0.02;
    spec.p_missing = 0.05;
    spec.seed = 17;
    for (const auto& rec : cohort) {
        auto [corrupted, mask] = corrupt(rec, reg, spec);
        PatientRecord dense = impute(corrupted, reg);
        auto subs = make_subpatients(dense, reg, 6, 3);
        for (const auto& sp : subs) {
            ProjectionResult r = project_physical(sp.data, cs);
            REQUIRE(r.status == SolveStatus::optimal);
            Eigen::VectorXd flat(cs.n_vars());
            for (int v = 0; v < cs.n_vitals; ++v)
                for (int t = 0; t < 6; ++t) flat[cs.var(v, t)] = r.corrected(v, t);
            CHECK(cs.verify_feasibility(flat, 1e-6).empty());
        }
    }
}

TEST_CASE("generation is deterministic per seed") {
    const VitalRegistry& reg = standard_registry();
    CohortParams p;
    p.n_patients = 4;
    p.seed = 99;
    auto a = generate_cohort(reg, p);
    auto b = generate_cohort(reg, p);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].patient_id == b[i].patient_id);
        CHECK((a[i].values - b[i].values).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a[i].sepsis_label == b[i].sepsis_label);
    }
}
