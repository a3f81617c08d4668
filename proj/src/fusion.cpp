#include "skinstack/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skinstack/errors.hpp"

namespace skinstack {

namespace {

std::size_t common_length(LogitList z) {
    if (z.empty()) throw ValidationError("fusion needs at least one model");
    const auto c = z.front().size();
    for (const auto& v : z)
        if (v.size() != c)
            throw ValidationError("logit vectors have mismatched lengths (" + std::to_string(c) + " vs " +
                                  std::to_string(v.size()) + ")");
    return c;
}

}  // namespace

std::string_view fusion_mode_name(FusionMode mode) {
    switch (mode) {
        case FusionMode::MaxVoting: return "max";
        case FusionMode::AverageVoting: return "avg";
        case FusionMode::WeightedConcat: return "concat";
    }
    return "?";
}

std::optional<FusionMode> parse_fusion_mode(std::string_view name) {
    if (name == "max") return FusionMode::MaxVoting;
    if (name == "avg") return FusionMode::AverageVoting;
    if (name == "concat") return FusionMode::WeightedConcat;
    return std::nullopt;
}

EnsembleWeights::EnsembleWeights(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw ValidationError("ensemble weights must not be empty");
    for (double v : w_)
        if (!std::isfinite(v) || !(v > 0.0)) throw ValidationError("ensemble weights must be finite and > 0");
}

std::vector<double> fuse_max(LogitList z) {
    const auto c = common_length(z);
    std::vector<double> out(z.front().begin(), z.front().end());
    for (std::size_t m = 1; m < z.size(); ++m)
        for (std::size_t k = 0; k < c; ++k) out[k] = std::max(out[k], z[m][k]);
    return out;
}

std::vector<double> fuse_avg(LogitList z) {
    const auto c = common_length(z);
    // Extended-precision sum: M copies of x sum and divide back to exactly x.
    std::vector<long double> sum(c, 0.0L);
    for (const auto& v : z)
        for (std::size_t k = 0; k < c; ++k) sum[k] += v[k];
    const auto m = static_cast<long double>(z.size());
    std::vector<double> out(c);
    for (std::size_t k = 0; k < c; ++k) out[k] = static_cast<double>(sum[k] / m);
    return out;
}

std::vector<double> weighted_concat(LogitList z, const EnsembleWeights& weights) {
    const auto c = common_length(z);
    if (weights.size() != z.size())
        throw ValidationError("got " + std::to_string(weights.size()) + " weights for " +
                              std::to_string(z.size()) + " models");
    std::vector<double> out;
    out.reserve(c * z.size());
    for (std::size_t m = 0; m < z.size(); ++m)
        for (double v : z[m]) out.push_back(weights[m] * v);
    return out;
}

std::vector<double> softmax(std::span<const double> z) {
    if (z.empty()) return {};
    const double top = *std::max_element(z.begin(), z.end());
    std::vector<double> out(z.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        out[k] = std::exp(z[k] - top);
        sum += out[k];
    }
    for (auto& v : out) v /= sum;
    return out;
}

std::size_t predict_argmax(std::span<const double> z) {
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

Matrix fuse_rows(std::span<const Matrix> views, FusionMode mode, const EnsembleWeights& weights) {
    if (views.empty()) throw ValidationError("fusion needs at least one model");
    const auto n = views.front().rows();
    const auto c = views.front().cols();
    for (const auto& v : views)
        if (v.rows() != n || v.cols() != c) throw ValidationError("model views have mismatched shapes");

    const auto width = mode == FusionMode::WeightedConcat ? c * views.size() : c;
    Matrix out(n, width);
    std::vector<std::span<const double>> rows(views.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < views.size(); ++m) rows[m] = views[m].row(i);
        std::vector<double> fused;
        switch (mode) {
            case FusionMode::MaxVoting: fused = fuse_max(rows); break;
            case FusionMode::AverageVoting: fused = fuse_avg(rows); break;
            case FusionMode::WeightedConcat: fused = weighted_concat(rows, weights); break;
        }
        std::copy(fused.begin(), fused.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace skinstack
