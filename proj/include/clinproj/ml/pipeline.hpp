#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clinproj/ml/gbt.hpp"
#include "clinproj/ml/kmeans.hpp"
#include "clinproj/ml/metrics.hpp"
#include "clinproj/preprocess.hpp"
#include "clinproj/projection.hpp"

namespace clinproj::ml {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Feature layout: V*W window values (vital-major), V trust scores when
// enabled, then age/100, gender, SOFA, SIRS.
Eigen::VectorXd build_features(const SubPatient& sp, const Eigen::VectorXd* trust);

struct PipelineParams {
    int k = 25;
    GbtParams gbt;
    double minority_frac = 0.25;
    int smote_k = 5;
    int kmeans_restarts = 3;
    double threshold_grid = 0.01;
};

// Per-cluster classifier; clusters that come out single-class fall back to a
// constant model predicting the global majority.
struct ClusterUnit {
    bool constant = false;
    double constant_prob = 0.0;
    GbtModel model;
    double threshold = 0.5;
};

struct PipelineModel {
    int schema_version = 1;
    std::uint64_t registry_fingerprint = 0;
    int window = 6;
    bool with_trust = true;
    std::uint64_t seed = 0;
    PipelineParams params;
    TrustStats trust_stats;  // valid only when with_trust
    ClusterModel clusters;
    std::vector<ClusterUnit> units;
    std::vector<std::string> notes;  // e.g. constant-model fallbacks

    std::uint64_t manifest_hash() const;
};

// resample -> k-means -> per-cluster boosted trees -> per-cluster f-score
// threshold, all on the training matrix (rows = sub-patients).
PipelineModel train_pipeline(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             const PipelineParams& params, std::uint64_t seed);

struct Prediction {
    double probability = 0.0;
    int label = 0;
    int cluster = 0;
};
Prediction predict(const PipelineModel& model, const Eigen::VectorXd& features);

void save_model(const std::string& path, const PipelineModel& model);
PipelineModel load_model(const std::string& path);

// SOFA >= 2 detector over a window set; the raw SOFA value is the ranking
// score for the curve metrics.
Metrics sofa_baseline(const std::vector<SubPatient>& subpatients);

// Slides the patient's windows chronologically through the full projection +
// feature + predict path; returns onset_hour minus the end hour of the first
// window predicted positive, or nothing when no window alerts.
std::optional<double> time_to_detection(const PipelineModel& model, const PatientRecord& imputed,
                                        const VitalRegistry& registry, const ConstraintSet& phys,
                                        int window, int stride, const SolverOptions& opts,
                                        double onset_hour);

}  // namespace clinproj::ml
