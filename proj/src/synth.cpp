#include "skinstack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numeric>
#include <random>

#include "skinstack/errors.hpp"
#include "skinstack/fusion.hpp"

namespace skinstack {

namespace {

std::string sample_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "s%06zu", i);
    return buf;
}

}  // namespace

std::array<double, kNumClasses> ham_priors() {
    const double total = static_cast<double>(std::accumulate(kHamCensus.begin(), kHamCensus.end(), std::size_t{0}));
    std::array<double, kNumClasses> out{};
    for (std::size_t c = 0; c < kNumClasses; ++c) out[c] = static_cast<double>(kHamCensus[c]) / total;
    return out;
}

void SynthConfig::validate() const {
    double sum = 0.0;
    for (double p : class_priors) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("class priors must be nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("class priors must sum to 1");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ValidationError("mu must be >= 0");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be > 0");
    if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("rho must be in [0, 1)");
    if (n_models < 1) throw ValidationError("n_models must be >= 1");
}

std::vector<MetadataRecord> SynthDataset::metadata() const {
    std::vector<MetadataRecord> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], ids[i], static_cast<Lesion>(labels[i])});
    return out;
}

SynthDataset gen_dataset(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::discrete_distribution<int> label_dist(config.class_priors.begin(), config.class_priors.end());
    std::normal_distribution<double> noise(0.0, config.sigma);
    const double shared_scale = std::sqrt(config.rho);
    const double own_scale = std::sqrt(1.0 - config.rho);

    SynthDataset out;
    out.ids.reserve(config.n_samples);
    out.labels.reserve(config.n_samples);
    for (std::size_t m = 0; m < config.n_models; ++m) out.tables.emplace_back("model_" + std::to_string(m + 1));

    std::array<double, kNumClasses> shared{};
    std::array<double, kNumClasses> z{};
    for (std::size_t i = 0; i < config.n_samples; ++i) {
        const int label = label_dist(rng);
        for (auto& s : shared) s = noise(rng);
        auto id = sample_name(i);
        for (auto& table : out.tables) {
            for (std::size_t c = 0; c < kNumClasses; ++c)
                z[c] = (static_cast<int>(c) == label ? config.mu : 0.0) + shared_scale * shared[c] +
                       own_scale * noise(rng);
            table.add(id, z);
        }
        out.ids.push_back(std::move(id));
        out.labels.push_back(label);
    }
    return out;
}

double calibrate_mu(double target_accuracy, const SynthConfig& base, std::size_t n_probe) {
    if (!(target_accuracy > 1.0 / static_cast<double>(kNumClasses) && target_accuracy < 1.0))
        throw ValidationError("target accuracy must lie in (1/7, 1)");
    if (n_probe == 0) throw ValidationError("probe set must be nonempty");
    SynthConfig probe = base;
    probe.mu = 0.0;
    probe.rho = 0.0;
    probe.n_models = 1;
    probe.n_samples = n_probe;
    probe.validate();

    // With mu = 0 the table holds pure noise; a sample is correct under mu
    // exactly when mu exceeds the gap between the best rival and the true class.
    const auto noise_only = gen_dataset(probe);
    std::vector<double> gap(n_probe);
    for (std::size_t i = 0; i < n_probe; ++i) {
        const auto z = noise_only.tables.front().row(i);
        const auto y = static_cast<std::size_t>(noise_only.labels[i]);
        double rival = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < kNumClasses; ++c)
            if (c != y) rival = std::max(rival, z[c]);
        gap[i] = rival - z[y];
    }
    auto probe_accuracy = [&](double mu) {
        std::size_t correct = 0;
        for (double g : gap)
            if (mu > g) ++correct;
        return static_cast<double>(correct) / static_cast<double>(n_probe);
    };

    double lo = 0.0;
    double hi = base.sigma;
    for (int k = 0; k < 60 && probe_accuracy(hi) < target_accuracy; ++k) {
        lo = hi;
        hi *= 2.0;
    }
    for (int step = 0; step < 60; ++step) {
        const double mid = 0.5 * (lo + hi);
        if (probe_accuracy(mid) < target_accuracy)
            lo = mid;
        else
            hi = mid;
    }
    const double achieved = probe_accuracy(hi);
    if (std::abs(achieved - target_accuracy) > 0.01)
        throw NumericError("mu calibration did not converge: probe accuracy " + std::to_string(achieved) +
                           " for target " + std::to_string(target_accuracy));
    return hi;
}

double model_accuracy(const LogitTable& table, const std::vector<std::string>& ids, const std::vector<int>& labels) {
    if (ids.size() != labels.size()) throw ValidationError("ids and labels differ in length");
    if (ids.empty()) throw ValidationError("accuracy of an empty set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (predict_argmax(table.row(ids[i])) == static_cast<std::size_t>(labels[i])) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ids.size());
}

}  // namespace skinstack
