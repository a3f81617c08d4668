#include "skinstack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "skinstack/errors.hpp"
#include "skinstack/fusion.hpp"
#include "skinstack/stacker.hpp"

namespace skinstack {

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p) s += (*this)(truth, p);
    return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t pred) const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t) s += (*this)(t, pred);
    return s;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t s = 0;
    for (std::size_t c = 0; c < classes_; ++c) s += (*this)(c, c);
    return s;
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels, std::size_t classes) {
    if (preds.size() != labels.size()) throw ValidationError("predictions and labels differ in length");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] < 0 || labels[i] < 0 || static_cast<std::size_t>(preds[i]) >= classes ||
            static_cast<std::size_t>(labels[i]) >= classes)
            throw ValidationError("class index out of range at sample " + std::to_string(i));
        ++cm(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(preds[i]));
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw ValidationError("accuracy of an empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

WeightedPRF weighted_prf(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw ValidationError("precision/recall of an empty confusion matrix");
    WeightedPRF out;
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        const auto support = cm.row_sum(c);
        if (support == 0) continue;
        const auto hit = static_cast<double>(cm(c, c));
        const auto predicted = cm.col_sum(c);
        const double p = predicted == 0 ? 0.0 : hit / static_cast<double>(predicted);
        const double r = hit / static_cast<double>(support);
        const double f = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
        const auto w = static_cast<double>(support);
        out.precision += w * p;
        out.recall += w * r;
        out.f1 += w * f;
    }
    const auto n = static_cast<double>(total);
    out.precision /= n;
    out.recall /= n;
    out.f1 /= n;
    return out;
}

double binary_auc(std::span<const double> scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size()) throw ValidationError("scores and labels differ in length");
    const auto n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks of the positives.
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (positive[order[k]]) {
                rank_sum += midrank;
                ++n_pos;
            }
        i = j;
    }
    const auto n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ValidationError("AUC needs both positive and negative samples");
    const double np = static_cast<double>(n_pos);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double roc_auc_ovr(const Matrix& probabilities, std::span<const int> labels, AucAverage average,
                   std::vector<std::string>* warnings) {
    const auto n = probabilities.rows();
    const auto classes = probabilities.cols();
    if (labels.size() != n) throw ValidationError("probabilities and labels differ in length");
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = probabilities.row(i);
        const double s = std::accumulate(row.begin(), row.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-6)
            throw ValidationError("probability row " + std::to_string(i) + " does not sum to 1");
    }

    std::vector<std::size_t> support(classes, 0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) throw ValidationError("label out of range");
        ++support[static_cast<std::size_t>(y)];
    }
    if (std::count_if(support.begin(), support.end(), [](std::size_t s) { return s > 0; }) < 2)
        throw ValidationError("AUC is undefined when every sample has the same class");

    double weighted = 0.0;
    double weight_total = 0.0;
    std::vector<double> column(n);
    std::vector<bool> positive(n);
    for (std::size_t c = 0; c < classes; ++c) {
        if (support[c] == 0) {
            if (warnings) warnings->push_back("class " + std::to_string(c) + " absent from labels; skipped in AUC");
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = probabilities(i, c);
            positive[i] = static_cast<std::size_t>(labels[i]) == c;
        }
        const double w = average == AucAverage::Weighted ? static_cast<double>(support[c]) : 1.0;
        weighted += w * binary_auc(column, positive);
        weight_total += w;
    }
    return weighted / weight_total;
}

double mean_ce_from_probabilities(const Matrix& probabilities, std::span<const int> labels,
                                  std::vector<std::string>* warnings) {
    if (labels.size() != probabilities.rows()) throw ValidationError("probabilities and labels differ in length");
    if (labels.empty()) throw ValidationError("cross-entropy of an empty set");
    constexpr double kFloor = 1e-15;
    double total = 0.0;
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= probabilities.cols())
            throw ValidationError("label out of range");
        double p = probabilities(i, static_cast<std::size_t>(labels[i]));
        if (p < kFloor) {
            p = kFloor;
            ++clamped;
        }
        total -= std::log(p);
    }
    if (clamped && warnings)
        warnings->push_back(std::to_string(clamped) + " probabilities at the true label clamped to 1e-15");
    return total / static_cast<double>(labels.size());
}

double mean_ce_from_logits(const Matrix& logits, std::span<const int> labels) {
    if (labels.size() != logits.rows()) throw ValidationError("logits and labels differ in length");
    if (labels.empty()) throw ValidationError("cross-entropy of an empty set");
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logits.cols())
            throw ValidationError("label out of range");
        total += ce_loss(logits.row(i), static_cast<std::size_t>(labels[i]));
    }
    return total / static_cast<double>(labels.size());
}

MetricsReport full_report(const Matrix& logits, std::span<const int> labels, AucAverage average,
                          std::vector<std::string>* warnings) {
    if (labels.empty()) throw ValidationError("cannot report on an empty set");
    if (labels.size() != logits.rows()) throw ValidationError("logits and labels differ in length");
    Matrix probs(logits.rows(), logits.cols());
    std::vector<int> preds(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto p = softmax(logits.row(i));
        std::copy(p.begin(), p.end(), probs.row(i).begin());
        preds[i] = static_cast<int>(predict_argmax(logits.row(i)));
    }
    const auto cm = confusion(preds, labels, logits.cols());
    const auto prf = weighted_prf(cm);
    MetricsReport r;
    r.accuracy = accuracy(cm);
    r.precision_weighted = prf.precision;
    r.recall_weighted = prf.recall;
    r.f1_weighted = prf.f1;
    r.auc_ovr = roc_auc_ovr(probs, labels, average, warnings);
    r.mean_ce = mean_ce_from_logits(logits, labels);
    return r;
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::vector<std::string> cells(const NamedReport& row) {
    const auto& r = row.report;
    return {row.model, fixed4(r.accuracy), fixed4(r.f1_weighted), fixed4(r.recall_weighted),
            fixed4(r.precision_weighted), fixed4(r.auc_ovr)};
}

const std::vector<std::string> kReportHeader = {"Model", "Accuracy", "F1 Score", "Recall", "Precision", "AUC"};

}  // namespace

std::string report_csv(const std::vector<NamedReport>& rows) {
    std::string out;
    auto emit = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + fields[i];
        out += '\n';
    };
    emit(kReportHeader);
    for (const auto& r : rows) emit(cells(r));
    return out;
}

std::string report_markdown(const std::vector<NamedReport>& rows) {
    std::vector<std::vector<std::string>> table = {kReportHeader};
    for (const auto& r : rows) table.push_back(cells(r));
    std::vector<std::size_t> width(kReportHeader.size(), 0);
    for (const auto& line : table)
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());

    std::string out;
    auto emit = [&](const std::vector<std::string>& fields) {
        out += '|';
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto pad = width[i] - fields[i].size();
            // Model name left-aligned, numbers right-aligned.
            out += ' ' + (i == 0 ? fields[i] + std::string(pad, ' ') : std::string(pad, ' ') + fields[i]) + " |";
        }
        out += '\n';
    };
    emit(table[0]);
    out += '|';
    for (std::size_t i = 0; i < width.size(); ++i)
        out += (i == 0 ? ":" + std::string(width[i] + 1, '-') : std::string(width[i] + 1, '-') + ":") + '|';
    out += '\n';
    for (std::size_t k = 1; k < table.size(); ++k) emit(table[k]);
    return out;
}

}  // namespace skinstack
