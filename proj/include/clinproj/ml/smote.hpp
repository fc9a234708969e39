#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace clinproj::ml {

// Undersample-then-oversample schedule: the majority class is randomly cut to
// (1-f)/f times the minority target, then the minority is grown with convex
// combinations of neighbor pairs until minority/total = f (within one
// sample). The minority target is capped at 3x the observed minority count.
struct ResampleResult {
    std::vector<int> majority_kept;  // indices into the input
    std::vector<int> minority_kept;  // all minority input indices
    struct Synthetic {
        int a, b;       // input indices of the parent pair
        double lambda;  // x = lambda * X[a] + (1 - lambda) * X[b]
        Eigen::VectorXd x;
    };
    std::vector<Synthetic> synthetic;

    // materialized design matrix / labels, synthetic rows last
    Eigen::MatrixXd matrix(const Eigen::MatrixXd& X) const;
    std::vector<int> labels(const std::vector<int>& y) const;
};

// X rows are samples; y is 0/1 with 1 the minority. Each synthetic point
// interpolates a random minority point and one of its smote_k nearest
// minority neighbors (Euclidean). Throws when the minority count is <=
// smote_k. Returns the input unchanged when the minority fraction already
// meets the target.
ResampleResult resample(const Eigen::MatrixXd& X, const std::vector<int>& y,
                        double minority_frac, int smote_k, std::uint64_t seed);

}  // namespace clinproj::ml
