#include "clinproj/ml/smote.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "clinproj/rng.hpp"

namespace clinproj::ml {

Eigen::MatrixXd ResampleResult::matrix(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(majority_kept.size() + minority_kept.size() +
                                                  synthetic.size()),
                        X.cols());
    Eigen::Index r = 0;
    for (int i : majority_kept) out.row(r++) = X.row(i);
    for (int i : minority_kept) out.row(r++) = X.row(i);
    for (const auto& s : synthetic) out.row(r++) = s.x.transpose();
    return out;
}

std::vector<int> ResampleResult::labels(const std::vector<int>&) const {
    std::vector<int> out(majority_kept.size(), 0);
    out.insert(out.end(), minority_kept.size() + synthetic.size(), 1);
    return out;
}

ResampleResult resample(const Eigen::MatrixXd& X, const std::vector<int>& y,
                        double minority_frac, int smote_k, std::uint64_t seed) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        throw std::invalid_argument("resample: X/y size mismatch");
    if (!(minority_frac > 0.0 && minority_frac < 1.0))
        throw std::invalid_argument("resample: minority_frac must be in (0,1)");

    std::vector<int> minority, majority;
    for (std::size_t i = 0; i < y.size(); ++i)
        (y[i] ? minority : majority).push_back(static_cast<int>(i));
    if (minority.empty() || majority.empty())
        throw std::invalid_argument("resample: both classes must be present");
    if (static_cast<int>(minority.size()) <= smote_k)
        throw std::invalid_argument(
            "resample: minority count " + std::to_string(minority.size()) +
            " must exceed smote_k=" + std::to_string(smote_k) + "; use a smaller smote_k");

    ResampleResult out;
    out.minority_kept = minority;

    const double m = static_cast<double>(minority.size());
    const double M = static_cast<double>(majority.size());
    const double per_major = minority_frac / (1.0 - minority_frac);
    if (m >= per_major * M) {  // already at or past the target ratio
        out.majority_kept = majority;
        return out;
    }

    // minority target capped at 3x observed; majority trimmed to match
    double target_minority = std::min(3.0 * m, std::round(per_major * M));
    double target_majority = std::min(M, std::round(target_minority / per_major));
    long n_synth = std::max(0L, std::lround(per_major * target_majority) -
                                    static_cast<long>(minority.size()));

    Rng rng(seed);
    std::vector<int> shuffled = majority;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
    shuffled.resize(static_cast<std::size_t>(target_majority));
    std::sort(shuffled.begin(), shuffled.end());
    out.majority_kept = shuffled;

    // k nearest minority neighbors of each minority point (self excluded)
    const int k = smote_k;
    std::vector<std::vector<int>> knn(minority.size());
    for (std::size_t a = 0; a < minority.size(); ++a) {
        std::vector<std::pair<double, int>> dist;
        dist.reserve(minority.size() - 1);
        for (std::size_t b = 0; b < minority.size(); ++b) {
            if (a == b) continue;
            double d = (X.row(minority[a]) - X.row(minority[b])).squaredNorm();
            dist.emplace_back(d, minority[b]);
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        for (int j = 0; j < k; ++j) knn[a].push_back(dist[static_cast<std::size_t>(j)].second);
    }

    out.synthetic.reserve(static_cast<std::size_t>(n_synth));
    for (long s = 0; s < n_synth; ++s) {
        std::size_t ai = rng.uniform_index(minority.size());
        int a = minority[ai];
        int b = knn[ai][rng.uniform_index(static_cast<std::uint64_t>(k))];
        double lambda = rng.uniform();
        ResampleResult::Synthetic syn;
        syn.a = a;
        syn.b = b;
        syn.lambda = lambda;
        syn.x = lambda * X.row(a).transpose() + (1.0 - lambda) * X.row(b).transpose();
        out.synthetic.push_back(std::move(syn));
    }
    return out;
}

}  // namespace clinproj::ml
