#include "clinproj/ml/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace clinproj::ml {

double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

double logistic_loss(double margin, int y) {
    // -y log p - (1-y) log(1-p), numerically stable form
    double m = std::max(margin, 0.0);
    return m - margin * y + std::log1p(std::exp(-std::abs(margin)));
}

double logistic_grad(double margin, int y) { return sigmoid(margin) - y; }

double logistic_hess(double margin) {
    double p = sigmoid(margin);
    return p * (1.0 - p);
}

double Tree::predict(const Eigen::VectorXd& x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        i = x[n.feature] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

double GbtModel::predict_margin(const Eigen::VectorXd& x) const {
    double m = base_margin;
    for (const auto& t : trees) m += params.learning_rate * t.predict(x);
    return m;
}

std::vector<double> GbtModel::importance() const {
    std::vector<double> imp(total_gain.size(), 0.0);
    if (trees.empty()) return imp;
    for (std::size_t f = 0; f < imp.size(); ++f)
        imp[f] = total_gain[f] * total_gain[f] /
                 (static_cast<double>(split_count[f] > 0 ? split_count[f] : 1) *
                  static_cast<double>(trees.size()));
    return imp;
}

namespace {

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const Eigen::VectorXd& g;
    const Eigen::VectorXd& h;
    const GbtParams& p;
    Tree tree;
    std::vector<long>* split_count;
    std::vector<double>* total_gain;

    int build(std::vector<int>& idx, int depth) {
        double G = 0.0, H = 0.0;
        for (int i : idx) {
            G += g[i];
            H += h[i];
        }
        double parent_score = G * G / (H + p.reg_lambda);

        int best_f = -1;
        double best_gain = 1e-12, best_thr = 0.0;
        if (depth < p.depth && idx.size() > 1) {
            for (int f = 0; f < X.cols(); ++f) {
                std::sort(idx.begin(), idx.end(), [&](int a, int b) {
                    double xa = X(a, f), xb = X(b, f);
                    if (xa != xb) return xa < xb;
                    return a < b;
                });
                double GL = 0.0, HL = 0.0;
                for (std::size_t r = 0; r + 1 < idx.size(); ++r) {
                    GL += g[idx[r]];
                    HL += h[idx[r]];
                    if (X(idx[r], f) == X(idx[r + 1], f)) continue;
                    double HR = H - HL;
                    if (HL < p.min_child_weight || HR < p.min_child_weight) continue;
                    double GR = G - GL;
                    double gain = 0.5 * (GL * GL / (HL + p.reg_lambda) +
                                         GR * GR / (HR + p.reg_lambda) - parent_score);
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_f = f;
                        best_thr = 0.5 * (X(idx[r], f) + X(idx[r + 1], f));
                    }
                }
            }
        }

        int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (best_f < 0) {
            tree.nodes[static_cast<std::size_t>(node_id)].value = -G / (H + p.reg_lambda);
            return node_id;
        }
        (*split_count)[static_cast<std::size_t>(best_f)]++;
        (*total_gain)[static_cast<std::size_t>(best_f)] += best_gain;

        std::vector<int> left, right;
        for (int i : idx) (X(i, best_f) < best_thr ? left : right).push_back(i);
        tree.nodes[static_cast<std::size_t>(node_id)].feature = best_f;
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_thr;
        int l = build(left, depth + 1);
        int r = build(right, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].left = l;
        tree.nodes[static_cast<std::size_t>(node_id)].right = r;
        return node_id;
    }
};

}  // namespace

GbtModel gbt_train(const Eigen::MatrixXd& X, const std::vector<int>& y, const GbtParams& params) {
    const Eigen::Index n = X.rows();
    if (static_cast<std::size_t>(n) != y.size())
        throw std::invalid_argument("gbt_train: X/y size mismatch");
    long pos = std::accumulate(y.begin(), y.end(), 0L);
    if (pos == 0 || pos == n)
        throw std::invalid_argument("gbt_train: single-class training set");

    GbtModel model;
    model.params = params;
    double rate = static_cast<double>(pos) / static_cast<double>(n);
    model.base_margin = std::log(rate / (1.0 - rate));
    model.split_count.assign(static_cast<std::size_t>(X.cols()), 0);
    model.total_gain.assign(static_cast<std::size_t>(X.cols()), 0.0);

    Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, model.base_margin);
    Eigen::VectorXd g(n), h(n);
    for (int round = 0; round < params.rounds; ++round) {
        for (Eigen::Index i = 0; i < n; ++i) {
            g[i] = logistic_grad(margin[i], y[static_cast<std::size_t>(i)]);
            h[i] = logistic_hess(margin[i]);
        }
        TreeBuilder builder{X, g, h, params, {}, &model.split_count, &model.total_gain};
        std::vector<int> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        builder.build(idx, 0);
        for (Eigen::Index i = 0; i < n; ++i)
            margin[i] += params.learning_rate * builder.tree.predict(X.row(i).transpose());
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

}  // namespace clinproj::ml
