#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace clinproj::ml {

struct GbtParams {
    int depth = 4;
    int rounds = 200;
    double learning_rate = 0.1;
    double min_child_weight = 1.0;
    double reg_lambda = 1.0;
};

struct TreeNode {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;  // leaf weight

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double predict(const Eigen::VectorXd& x) const;
};

// logistic loss on margins; y in {0,1}
double logistic_loss(double margin, int y);
double logistic_grad(double margin, int y);   // p - y
double logistic_hess(double margin);          // p (1 - p)
double sigmoid(double margin);

struct GbtModel {
    double base_margin = 0.0;  // logit of the training base rate
    std::vector<Tree> trees;
    GbtParams params;
    std::vector<long> split_count;   // per feature
    std::vector<double> total_gain;  // per feature

    double predict_margin(const Eigen::VectorXd& x) const;
    double predict_prob(const Eigen::VectorXd& x) const { return sigmoid(predict_margin(x)); }

    // split count weighted by squared gain, averaged over trees
    std::vector<double> importance() const;
};

// Boosted regression trees on logistic gradients/hessians with exact greedy
// splits. Throws when y has a single class.
GbtModel gbt_train(const Eigen::MatrixXd& X, const std::vector<int>& y, const GbtParams& params);

}  // namespace clinproj::ml
