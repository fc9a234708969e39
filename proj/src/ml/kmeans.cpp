#include "clinproj/ml/kmeans.hpp"

#include <limits>
#include <stdexcept>

#include "clinproj/rng.hpp"

namespace clinproj::ml {

int ClusterModel::assign(const Eigen::VectorXd& x) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        double d = (centers.row(c).transpose() - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::vector<int> kmeans_assign_all(const ClusterModel& model, const Eigen::MatrixXd& X) {
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out[static_cast<std::size_t>(i)] = model.assign(X.row(i).transpose());
    return out;
}

namespace {

ClusterModel lloyd_once(const Eigen::MatrixXd& X, int k, Rng& rng, int max_iters) {
    const Eigen::Index n = X.rows(), dim = X.cols();
    ClusterModel model;
    model.centers.resize(k, dim);

    // kmeans++ seeding
    std::vector<double> d2(static_cast<std::size_t>(n),
                           std::numeric_limits<double>::infinity());
    Eigen::Index first = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    model.centers.row(0) = X.row(first);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double d = (X.row(i) - model.centers.row(c - 1)).squaredNorm();
            d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], d);
            total += d2[static_cast<std::size_t>(i)];
        }
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double r = rng.uniform() * total, acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        }
        model.centers.row(c) = X.row(pick);
    }

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        model.iterations = iter + 1;
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int a = model.assign(X.row(i).transpose());
            if (a != assign[static_cast<std::size_t>(i)]) {
                assign[static_cast<std::size_t>(i)] = a;
                changed = true;
            }
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, dim);
        std::vector<long> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                model.centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                // re-seed an empty cluster at the farthest point
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    double d = (X.row(i) - model.centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                model.centers.row(c) = X.row(far);
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
    }
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        sse += (X.row(i) - model.centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
    model.mse = sse / static_cast<double>(n);
    return model;
}

}  // namespace

ClusterModel kmeans_fit(const Eigen::MatrixXd& X, int k, int restarts, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("kmeans_fit: k must be >= 1");
    if (X.rows() < k) throw std::invalid_argument("kmeans_fit: fewer points than clusters");
    if (restarts < 1) restarts = 1;

    Rng master(seed);
    ClusterModel best;
    best.mse = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng rng = master.fork(static_cast<std::uint64_t>(r));
        ClusterModel m = lloyd_once(X, k, rng, 300);
        if (m.mse < best.mse) best = std::move(m);
    }
    return best;
}

std::vector<ClusterDiagnostic> cluster_diagnostics(const Eigen::MatrixXd& X,
                                                   const std::vector<int>& labels,
                                                   const std::vector<int>& k_range, int restarts,
                                                   std::uint64_t seed) {
    std::vector<ClusterDiagnostic> out;
    for (int k : k_range) {
        ClusterModel m = kmeans_fit(X, k, restarts, seed + static_cast<std::uint64_t>(k));
        std::vector<int> assign = kmeans_assign_all(m, X);
        std::vector<long> pos(static_cast<std::size_t>(k), 0), tot(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < assign.size(); ++i) {
            ++tot[static_cast<std::size_t>(assign[i])];
            if (labels[i]) ++pos[static_cast<std::size_t>(assign[i])];
        }
        double conc = 0.0;
        for (int c = 0; c < k; ++c)
            if (tot[static_cast<std::size_t>(c)] > 0)
                conc = std::max(conc, static_cast<double>(pos[static_cast<std::size_t>(c)]) /
                                          static_cast<double>(tot[static_cast<std::size_t>(c)]));
        out.push_back({k, m.mse, conc});
    }
    return out;
}

}  // namespace clinproj::ml
