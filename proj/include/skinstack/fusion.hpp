#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "skinstack/matrix.hpp"

namespace skinstack {

enum class FusionMode { MaxVoting, AverageVoting, WeightedConcat };

std::string_view fusion_mode_name(FusionMode mode);
std::optional<FusionMode> parse_fusion_mode(std::string_view name);

/// Per-model scale factors applied before concatenation. Defaults to
/// (1.2, 1.2, 1.0) for the MobileNetV2, ResNet18, VGG11 order.
class EnsembleWeights {
public:
    EnsembleWeights() : w_{1.2, 1.2, 1.0} {}
    /// Throws ValidationError unless every weight is finite and > 0.
    explicit EnsembleWeights(std::vector<double> w);

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    const std::vector<double>& values() const { return w_; }

private:
    std::vector<double> w_;
};

using LogitList = std::span<const std::span<const double>>;

/// Element-wise maximum over models.
std::vector<double> fuse_max(LogitList z);
/// Element-wise mean over models.
std::vector<double> fuse_avg(LogitList z);
/// concat(w_1 z_1, ..., w_M z_M) in model order.
std::vector<double> weighted_concat(LogitList z, const EnsembleWeights& weights);

std::vector<double> softmax(std::span<const double> z);
/// Lowest index attaining the maximum.
std::size_t predict_argmax(std::span<const double> z);

/// Row-wise versions over aligned per-model views (each N x C). The result
/// is N x C for the voting modes and N x (M*C) for WeightedConcat.
Matrix fuse_rows(std::span<const Matrix> views, FusionMode mode,
                 const EnsembleWeights& weights = EnsembleWeights());

}  // namespace skinstack
