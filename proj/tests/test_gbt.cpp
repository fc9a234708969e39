#include <cmath>

#include "clinproj/ml/gbt.hpp"
#include "clinproj/rng.hpp"
#include "doctest.h"

using namespace clinproj;
using namespace clinproj::ml;

TEST_CASE("separable 1-D data reaches perfect training accuracy within 5 rounds") {
    Rng rng(1);
    const int n = 100;
    Eigen::MatrixXd X(n, 1);
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        bool pos = i % 2 == 0;
        X(i, 0) = pos ? rng.uniform(0.55, 1.0) : rng.uniform(0.0, 0.45);
        y.push_back(pos ? 1 : 0);
    }
    GbtParams p;
    p.rounds = 5;
    GbtModel m = gbt_train(X, y, p);
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        int pred = m.predict_prob(X.row(i).transpose()) >= 0.5 ? 1 : 0;
        correct += pred == y[static_cast<std::size_t>(i)];
    }
    CHECK(correct == n);
}

TEST_CASE("zero rounds predict the logit of the base rate") {
    Eigen::MatrixXd X(10, 2);
    X.setRandom();
    std::vector<int> y = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    GbtParams p;
    p.rounds = 0;
    GbtModel m = gbt_train(X, y, p);
    CHECK(m.trees.empty());
    double expected = std::log(0.3 / 0.7);
    CHECK(m.predict_margin(X.row(0).transpose()) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(m.predict_prob(X.row(0).transpose()) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("logistic gradient and hessian match central finite differences") {
    Rng rng(2);
    const double eps = 1e-5;
    for (int trial = 0; trial < 200; ++trial) {
        double margin = rng.uniform(-4.0, 4.0);
        int y = rng.bernoulli(0.5) ? 1 : 0;
        double g_fd = (logistic_loss(margin + eps, y) - logistic_loss(margin - eps, y)) / (2 * eps);
        double h_fd = (logistic_loss(margin + eps, y) - 2 * logistic_loss(margin, y) +
                       logistic_loss(margin - eps, y)) /
                      (eps * eps);
        CHECK(std::abs(logistic_grad(margin, y) - g_fd) < 1e-6);
        CHECK(std::abs(logistic_hess(margin) - h_fd) < 1e-4);
        // gradient is p - y
        CHECK(logistic_grad(margin, y) == doctest::Approx(sigmoid(margin) - y).epsilon(1e-15));
    }
}

TEST_CASE("single-class training set is rejected") {
    Eigen::MatrixXd X(5, 1);
    X.setRandom();
    CHECK_THROWS_AS(gbt_train(X, {1, 1, 1, 1, 1}, GbtParams{}), std::invalid_argument);
    CHECK_THROWS_AS(gbt_train(X, {0, 0, 0, 0, 0}, GbtParams{}), std::invalid_argument);
}

TEST_CASE("split-count and gain importances track the informative feature") {
    Rng rng(3);
    const int n = 400;
    Eigen::MatrixXd X(n, 3);
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.uniform(0.0, 1.0);   // noise
        X(i, 1) = rng.uniform(0.0, 1.0);   // signal
        X(i, 2) = rng.uniform(0.0, 1.0);   // noise
        y.push_back(X(i, 1) > 0.5 ? 1 : 0);
    }
    GbtParams p;
    p.rounds = 20;
    GbtModel m = gbt_train(X, y, p);
    CHECK(m.split_count[1] >= m.split_count[0]);
    CHECK(m.split_count[1] >= m.split_count[2]);
    CHECK(m.total_gain[1] > m.total_gain[0]);
    CHECK(m.total_gain[1] > m.total_gain[2]);
    auto imp = m.importance();
    CHECK(imp[1] > imp[0]);
    CHECK(imp[1] > imp[2]);
}

TEST_CASE("min_child_weight blocks tiny leaves") {
    Eigen::MatrixXd X(8, 1);
    for (int i = 0; i < 8; ++i) X(i, 0) = i;
    std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
    GbtParams p;
    p.rounds = 1;
    p.depth = 6;
    p.min_child_weight = 1e9;  // impossible to satisfy: no splits at all
    GbtModel m = gbt_train(X, y, p);
    REQUIRE(m.trees.size() == 1);
    CHECK(m.trees[0].nodes.size() == 1);
    CHECK(m.trees[0].nodes[0].is_leaf());
}

TEST_CASE("deterministic training") {
    Rng rng(4);
    Eigen::MatrixXd X(60, 4);
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
        for (int j = 0; j < 4; ++j) X(i, j) = rng.uniform(0.0, 1.0);
        y.push_back(rng.bernoulli(0.4) ? 1 : 0);
    }
    GbtParams p;
    p.rounds = 10;
    GbtModel a = gbt_train(X, y, p);
    GbtModel b = gbt_train(X, y, p);
    for (int i = 0; i < 60; ++i)
        CHECK(a.predict_margin(X.row(i).transpose()) == b.predict_margin(X.row(i).transpose()));
}
