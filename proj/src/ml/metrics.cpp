#include "clinproj/ml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace clinproj::ml {

double f_score_of(double precision, double recall) {
    double denom = precision + recall;
    return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

namespace {

// midrank AUROC
std::optional<double> auroc_of(const std::vector<double>& scores, const std::vector<int>& labels) {
    long n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) rank_sum_pos += midrank;
        i = j;
    }
    double n_pos_d = static_cast<double>(n_pos);
    return (rank_sum_pos - n_pos_d * (n_pos_d + 1.0) / 2.0) /
           (n_pos_d * static_cast<double>(n_neg));
}

// step integration of the precision-recall curve over distinct scores
std::optional<double> auprc_of(const std::vector<double>& scores, const std::vector<int>& labels) {
    long n_pos = 0;
    for (int l : labels) n_pos += l;
    if (n_pos == 0 || n_pos == static_cast<long>(labels.size())) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0, prev_recall = 0.0;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) (labels[order[k]] ? tp : fp)++;
        double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

}  // namespace

Metrics evaluate(const std::vector<double>& scores, const std::vector<int>& predictions,
                 const std::vector<int>& labels) {
    if (scores.size() != labels.size() || predictions.size() != labels.size())
        throw std::invalid_argument("evaluate: size mismatch");
    Metrics m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            predictions[i] ? ++m.tp : ++m.fn;
        } else {
            predictions[i] ? ++m.fp : ++m.tn;
        }
    }
    m.sensitivity = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.specificity = m.tn + m.fp > 0 ? static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp) : 0.0;
    m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.f_score = f_score_of(m.precision, m.sensitivity);
    m.auroc = auroc_of(scores, labels);
    m.auprc = auprc_of(scores, labels);
    return m;
}

Metrics evaluate(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<int> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= 0.5 ? 1 : 0;
    return evaluate(scores, preds, labels);
}

double select_threshold(const std::vector<double>& probs, const std::vector<int>& labels,
                        double grid_step) {
    if (probs.size() != labels.size())
        throw std::invalid_argument("select_threshold: size mismatch");
    long n_pos = 0;
    for (int l : labels) n_pos += l;
    if (n_pos == 0) throw std::invalid_argument("select_threshold: no positive labels");

    int steps = static_cast<int>(std::lround(1.0 / grid_step));
    double best_f = -1.0, best_thr = 0.0;
    for (int s = 0; s <= steps; ++s) {
        double thr = static_cast<double>(s) / static_cast<double>(steps);
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            bool pred = probs[i] >= thr;
            if (labels[i]) {
                pred ? ++tp : ++fn;
            } else if (pred) {
                ++fp;
            }
        }
        double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
        double f = f_score_of(precision, recall);
        if (f > best_f) {  // strict: ties keep the lowest threshold
            best_f = f;
            best_thr = thr;
        }
    }
    return best_thr;
}

std::vector<CurvePoint> roc_curve(const std::vector<double>& scores,
                                  const std::vector<int>& labels) {
    long n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<CurvePoint> out{{0.0, 0.0}};
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) (labels[order[k]] ? tp : fp)++;
        out.push_back({n_neg > 0 ? static_cast<double>(fp) / static_cast<double>(n_neg) : 0.0,
                       n_pos > 0 ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0});
        i = j;
    }
    return out;
}

std::vector<CurvePoint> pr_curve(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
    long n_pos = 0;
    for (int l : labels) n_pos += l;
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<CurvePoint> out;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) (labels[order[k]] ? tp : fp)++;
        out.push_back({n_pos > 0 ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0,
                       static_cast<double>(tp) / static_cast<double>(tp + fp)});
        i = j;
    }
    return out;
}

}  // namespace clinproj::ml
