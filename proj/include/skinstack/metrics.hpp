#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "skinstack/matrix.hpp"

namespace skinstack {

/// counts[t][p]: samples of true class t predicted as p.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

    std::size_t classes() const { return classes_; }
    std::size_t operator()(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_ + pred]; }
    std::size_t& operator()(std::size_t truth, std::size_t pred) { return counts_[truth * classes_ + pred]; }

    std::size_t total() const;
    std::size_t row_sum(std::size_t truth) const;
    std::size_t col_sum(std::size_t pred) const;
    std::size_t trace() const;

private:
    std::size_t classes_;
    std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels, std::size_t classes);

double accuracy(const ConfusionMatrix& cm);

struct WeightedPRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Per-class precision, recall and F1 averaged with weights rowsum/total.
/// Zero denominators give 0 for that class.
WeightedPRF weighted_prf(const ConfusionMatrix& cm);

/// Mann-Whitney AUC of `scores` for the positive set, ties counted 1/2.
/// Throws ValidationError when either side is empty.
double binary_auc(std::span<const double> scores, const std::vector<bool>& positive);

enum class AucAverage { Weighted, Macro };

/// One-vs-rest AUC over the columns of `probabilities` (N x C). Classes
/// absent from `labels` are skipped (warning appended) and the remaining
/// weights renormalized. Throws ValidationError if fewer than two classes
/// are present.
double roc_auc_ovr(const Matrix& probabilities, std::span<const int> labels, AucAverage average,
                   std::vector<std::string>* warnings = nullptr);

inline double roc_auc_ovr_weighted(const Matrix& probabilities, std::span<const int> labels,
                                   std::vector<std::string>* warnings = nullptr) {
    return roc_auc_ovr(probabilities, labels, AucAverage::Weighted, warnings);
}

/// Mean -log p[label]. Probabilities are clamped below at 1e-15 with a warning.
double mean_ce_from_probabilities(const Matrix& probabilities, std::span<const int> labels,
                                  std::vector<std::string>* warnings = nullptr);
double mean_ce_from_logits(const Matrix& logits, std::span<const int> labels);

struct MetricsReport {
    double accuracy = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    double auc_ovr = 0.0;
    double mean_ce = 0.0;
};

/// Softmax, argmax, then every metric above.
MetricsReport full_report(const Matrix& logits, std::span<const int> labels,
                          AucAverage average = AucAverage::Weighted, std::vector<std::string>* warnings = nullptr);

struct NamedReport {
    std::string model;
    MetricsReport report;
};

/// `Model,Accuracy,F1 Score,Recall,Precision,AUC`, four decimals.
std::string report_csv(const std::vector<NamedReport>& rows);
std::string report_markdown(const std::vector<NamedReport>& rows);

}  // namespace skinstack
