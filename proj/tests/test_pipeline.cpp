#include <cmath>
#include <filesystem>

#include "clinproj/datagen.hpp"
#include "clinproj/ml/pipeline.hpp"
#include "clinproj/ml/split.hpp"
#include "clinproj/rng.hpp"
#include "doctest.h"

using namespace clinproj;
using namespace clinproj::ml;

namespace {

// small labeled feature set: positives shifted in a couple of coordinates
void toy_features(Rng& rng, int n, Eigen::MatrixXd& X, std::vector<int>& y) {
    X.resize(n, 6);
    y.clear();
    for (int i = 0; i < n; ++i) {
        bool pos = rng.bernoulli(0.15);
        for (int j = 0; j < 6; ++j) X(i, j) = rng.normal(0.0, 1.0);
        if (pos) {
            X(i, 1) += 2.5;
            X(i, 4) += 2.0;
        }
        y.push_back(pos ? 1 : 0);
    }
    if (std::count(y.begin(), y.end(), 1) < 8) {
        for (int i = 0; i < 8; ++i) {
            y[static_cast<std::size_t>(i)] = 1;
            X(i, 1) += 2.5;
        }
    }
}

}  // namespace

TEST_CASE("k=1 degenerates to a single global classifier") {
    Rng rng(1);
    Eigen::MatrixXd X;
    std::vector<int> y;
    toy_features(rng, 300, X, y);
    PipelineParams params;
    params.k = 1;
    params.gbt.rounds = 30;
    PipelineModel m = train_pipeline(X, y, params, 5);
    CHECK(m.units.size() == 1);
    CHECK(m.clusters.centers.rows() == 1);
    Prediction p = predict(m, X.row(0).transpose());
    CHECK(p.cluster == 0);
    CHECK(p.probability >= 0.0);
    CHECK(p.probability <= 1.0);
}

TEST_CASE("pure-majority cluster falls back to a constant that predicts 0") {
    // two far-apart blobs; the right blob has no positives, so after
    // clustering its model is the constant fallback
    Rng rng(2);
    const int n = 200;
    Eigen::MatrixXd X(n, 2);
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        bool right = i % 2 == 0;
        X(i, 0) = rng.normal(right ? 50.0 : 0.0, 0.5);
        X(i, 1) = rng.normal(0.0, 0.5);
        bool pos = !right && rng.bernoulli(0.5);
        if (pos) X(i, 1) += 2.0;
        y.push_back(pos ? 1 : 0);
    }
    PipelineParams params;
    params.k = 2;
    params.gbt.rounds = 20;
    params.smote_k = 3;
    PipelineModel m = train_pipeline(X, y, params, 11);

    bool found_constant = false;
    for (std::size_t c = 0; c < m.units.size(); ++c) {
        if (!m.units[c].constant) continue;
        found_constant = true;
        Eigen::VectorXd probe = m.clusters.centers.row(static_cast<Eigen::Index>(c)).transpose();
        Prediction p = predict(m, probe);
        CHECK(p.label == 0);
    }
    CHECK(found_constant);
    CHECK(!m.notes.empty());
}

TEST_CASE("same seed gives an identical manifest hash, different seed differs") {
    Rng rng(3);
    Eigen::MatrixXd X;
    std::vector<int> y;
    toy_features(rng, 250, X, y);
    PipelineParams params;
    params.k = 3;
    params.gbt.rounds = 15;
    PipelineModel a = train_pipeline(X, y, params, 21);
    PipelineModel b = train_pipeline(X, y, params, 21);
    PipelineModel c = train_pipeline(X, y, params, 22);
    CHECK(a.manifest_hash() == b.manifest_hash());
    CHECK(a.manifest_hash() != c.manifest_hash());
}

TEST_CASE("model artifact round trip preserves predictions") {
    Rng rng(4);
    Eigen::MatrixXd X;
    std::vector<int> y;
    toy_features(rng, 300, X, y);
    PipelineParams params;
    params.k = 4;
    params.gbt.rounds = 25;
    PipelineModel m = train_pipeline(X, y, params, 33);
    m.registry_fingerprint = standard_registry().fingerprint();
    m.with_trust = false;

    std::string path = "/tmp/clinproj_model.json";
    save_model(path, m);
    PipelineModel back = load_model(path);
    CHECK(back.manifest_hash() == m.manifest_hash());
    CHECK(back.registry_fingerprint == m.registry_fingerprint);
    for (int i = 0; i < 50; ++i) {
        Prediction pa = predict(m, X.row(i).transpose());
        Prediction pb = predict(back, X.row(i).transpose());
        CHECK(pa.probability == pb.probability);
        CHECK(pa.label == pb.label);
        CHECK(pa.cluster == pb.cluster);
    }
}

TEST_CASE("feature layout: window block, trust block, then demographics") {
    SubPatient sp;
    sp.data.resize(2, 3);
    sp.data << 1, 2, 3, 4, 5, 6;
    sp.age = 50;
    sp.gender = 1;
    sp.sofa = 2;
    sp.sirs = 1;
    Eigen::VectorXd trust(2);
    trust << 0.25, 0.75;

    Eigen::VectorXd with = build_features(sp, &trust);
    REQUIRE(with.size() == 2 * 3 + 2 + 4);
    CHECK(with[0] == 1);
    CHECK(with[5] == 6);
    CHECK(with[6] == 0.25);
    CHECK(with[7] == 0.75);
    CHECK(with[8] == 0.5);  // age / 100
    CHECK(with[9] == 1);
    CHECK(with[10] == 2);
    CHECK(with[11] == 1);

    Eigen::VectorXd without = build_features(sp, nullptr);
    REQUIRE(without.size() == 2 * 3 + 4);
    CHECK(without[6] == 0.5);
}

TEST_CASE("sofa baseline flags windows at SOFA >= 2") {
    std::vector<SubPatient> subs(4);
    subs[0].sofa = 0;
    subs[0].label = 0;
    subs[1].sofa = 2;
    subs[1].label = 1;
    subs[2].sofa = 3;
    subs[2].label = 0;
    subs[3].sofa = 1;
    subs[3].label = 1;
    Metrics m = sofa_baseline(subs);
    CHECK(m.tp == 1);
    CHECK(m.fp == 1);
    CHECK(m.tn == 1);
    CHECK(m.fn == 1);
}

TEST_CASE("time to detection follows the first-alert rule") {
    const VitalRegistry& reg = standard_registry();
    ConstraintSet phys = build_physical(reg, 6);

    // deterministic "model": constant clusters with thresholds arranged so a
    // window alerts iff its mean solve-space HeartRate exceeds 1 (out of normal)
    CohortParams cp;
    cp.n_patients = 30;
    cp.sepsis_rate = 0.65;
    cp.seed = 91;
    auto cohort = generate_cohort(reg, cp);

    // train a tiny real pipeline on this cohort's windows
    std::vector<SubPatient> subs;
    for (const auto& rec : cohort)
        for (auto& sp : make_subpatients(impute(rec, reg), reg, 6, 3)) subs.push_back(sp);
    std::vector<ProjectionResult> projs;
    std::vector<Eigen::VectorXd> dists;
    for (auto& sp : subs) {
        projs.push_back(project_physical(sp.data, phys));
        dists.push_back(normal_distances(projs.back().corrected));
    }
    TrustStats stats = TrustStats::fit(dists);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(subs.size()), 30 * 7 + 4);
    std::vector<int> y;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        SubPatient corrected = subs[i];
        corrected.data = projs[i].corrected;
        Eigen::VectorXd trust = stats.apply(dists[i]);
        X.row(static_cast<Eigen::Index>(i)) = build_features(corrected, &trust).transpose();
        y.push_back(subs[i].label);
    }
    PipelineParams params;
    params.k = 2;
    params.gbt.rounds = 30;
    params.smote_k = 3;
    PipelineModel model = train_pipeline(X, y, params, 7);
    model.with_trust = true;
    model.trust_stats = stats;
    model.window = 6;

    int with_onset = 0, alerted = 0;
    for (const auto& rec : cohort) {
        int first = -1;
        for (std::size_t t = 0; t < rec.sepsis_label.size(); ++t)
            if (rec.sepsis_label[t]) {
                first = static_cast<int>(t);
                break;
            }
        if (first < 0) continue;
        ++with_onset;
        double onset = first + 6.0;
        auto lead = time_to_detection(model, impute(rec, reg), reg, phys, 6, 3, {}, onset);
        if (!lead) continue;
        ++alerted;
        // lead = onset - window_end for some window; consistent with geometry
        CHECK(*lead <= onset - 6.0);
        double frac = *lead - std::floor(*lead);
        CHECK(frac == 0.0);  // whole hours
    }
    REQUIRE(with_onset > 0);
    CHECK(alerted > 0);

    // never-positive patient: a healthy record with a model that cannot alert
    PipelineModel mute = model;
    for (auto& u : mute.units) {
        u.constant = true;
        u.constant_prob = 0.0;
        u.threshold = 0.5;
    }
    auto none = time_to_detection(mute, impute(cohort[0], reg), reg, phys, 6, 3, {}, 20.0);
    CHECK(!none.has_value());
}
