#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace clinproj::ml {

struct ClusterModel {
    Eigen::MatrixXd centers;  // k x dim
    double mse = 0.0;         // mean squared distance to assigned center
    int iterations = 0;

    int assign(const Eigen::VectorXd& x) const;
};

// Lloyd iterations from kmeans++ seeding, best of `restarts` by within-cluster
// MSE. Empty clusters are re-seeded at the point farthest from its assigned
// center. The returned model is a fixed point: assignments are
// nearest-center and centers are assigned means.
ClusterModel kmeans_fit(const Eigen::MatrixXd& X, int k, int restarts, std::uint64_t seed);

std::vector<int> kmeans_assign_all(const ClusterModel& model, const Eigen::MatrixXd& X);

struct ClusterDiagnostic {
    int k;
    double mse;
    double max_concentration;  // highest within-cluster positive rate
};

// One fit per k, reporting the elbow curve data and the maximum
// within-cluster label concentration.
std::vector<ClusterDiagnostic> cluster_diagnostics(const Eigen::MatrixXd& X,
                                                   const std::vector<int>& labels,
                                                   const std::vector<int>& k_range, int restarts,
                                                   std::uint64_t seed);

}  // namespace clinproj::ml
