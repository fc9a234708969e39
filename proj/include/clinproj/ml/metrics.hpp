#pragma once

#include <optional>
#include <vector>

namespace clinproj::ml {

struct Metrics {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double sensitivity = 0.0, specificity = 0.0, precision = 0.0, f_score = 0.0;
    std::optional<double> auroc, auprc;  // absent for single-class labels
};

// f = 2PR / (P + R), defined 0 when P + R = 0
double f_score_of(double precision, double recall);

// Confusion counts from the given hard predictions; AUROC by the midrank
// statistic, AUPRC by precision-recall step integration over the scores.
Metrics evaluate(const std::vector<double>& scores, const std::vector<int>& predictions,
                 const std::vector<int>& labels);

// Hard predictions at score >= 0.5.
Metrics evaluate(const std::vector<double>& scores, const std::vector<int>& labels);

// Grid threshold (0, step, 2*step, ..., 1) maximizing the f-score of
// "positive iff prob >= threshold"; ties go to the lowest threshold. Throws
// when labels has no positives.
double select_threshold(const std::vector<double>& probs, const std::vector<int>& labels,
                        double grid_step = 0.01);

struct CurvePoint {
    double x, y;
};
std::vector<CurvePoint> roc_curve(const std::vector<double>& scores,
                                  const std::vector<int>& labels);
std::vector<CurvePoint> pr_curve(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace clinproj::ml
