#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skinstack/dataset.hpp"

namespace skinstack {

/// Census of the deduplicated HAM10000 images per class (5,973 total).
inline constexpr std::array<std::size_t, kNumClasses> kHamCensus = {491, 4322, 261, 182, 581, 58, 78};

std::array<double, kNumClasses> ham_priors();

/// Class-conditional Gaussian logit generator. For model m, sample i and
/// class c:
///   z = mu * [c == label] + sqrt(rho) * shared + sqrt(1 - rho) * own
/// where `shared` is common to all models and both noises have std sigma.
struct SynthConfig {
    std::size_t n_samples = 5000;
    std::array<double, kNumClasses> class_priors = ham_priors();
    double mu = 2.0;
    double sigma = 1.0;
    double rho = 0.5;
    std::size_t n_models = 3;
    std::uint64_t seed = 0;

    /// Throws ValidationError on out-of-range fields.
    void validate() const;
};

struct SynthDataset {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<LogitTable> tables;

    std::vector<MetadataRecord> metadata() const;
};

SynthDataset gen_dataset(const SynthConfig& config);

/// Bisection on mu so that one model's accuracy on a probe set of `n_probe`
/// samples drawn with `base.seed` hits `target_accuracy` (within 0.01).
/// Only sigma and the priors of `base` matter: each model's marginal noise
/// is N(0, sigma^2) whatever rho is. Throws NumericError if 60 steps do not
/// get within tolerance.
double calibrate_mu(double target_accuracy, const SynthConfig& base, std::size_t n_probe);

/// Accuracy of argmax on one model's logits.
double model_accuracy(const LogitTable& table, const std::vector<std::string>& ids, const std::vector<int>& labels);

}  // namespace skinstack
