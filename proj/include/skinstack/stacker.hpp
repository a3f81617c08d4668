#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "skinstack/fusion.hpp"
#include "skinstack/matrix.hpp"

namespace skinstack {

/// Affine meta-learner: logits = W * features + b, with W of shape
/// classes x inputs. `inputs` is models * classes for stacked logits.
struct StackerParams {
    Matrix weight;
    std::vector<double> bias;

    StackerParams() = default;
    StackerParams(std::size_t classes, std::size_t inputs)
        : weight(classes, inputs), bias(classes, 0.0) {}

    std::size_t classes() const { return weight.rows(); }
    std::size_t inputs() const { return weight.cols(); }

    friend bool operator==(const StackerParams&, const StackerParams&) = default;
};

/// Optimizer and early-stopping settings. Defaults: SGD lr 0.01 with
/// momentum 0.9, lr x0.1 after every 10 epochs, stop after 10 epochs without
/// a validation-accuracy gain.
struct TrainConfig {
    double lr0 = 0.01;
    double momentum = 0.9;
    double gamma = 0.1;
    int step_epochs = 10;
    int patience = 10;
    int max_epochs = 100;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    EnsembleWeights weights;

    /// Throws ValidationError on out-of-range fields.
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    bool stopped_early = false;
};

struct TrainResult {
    StackerParams params;
    TrainHistory history;
};

std::vector<double> forward(const StackerParams& params, std::span<const double> features);

/// -log softmax(logits)[label] via log-sum-exp.
double ce_loss(std::span<const double> logits, std::size_t label);

/// Mean cross-entropy over all rows.
double mean_loss(const StackerParams& params, const Matrix& features, std::span<const int> labels);

/// Gradient of the mean cross-entropy over the selected rows, returned in
/// the same shape as the parameters.
StackerParams grad(const StackerParams& params, const Matrix& features, std::span<const int> labels,
                   std::span<const std::size_t> rows);
StackerParams grad(const StackerParams& params, const Matrix& features, std::span<const int> labels);

/// lr0 * gamma^floor((epoch - 1) / step_epochs), epoch counted from 1.
double lr_at_epoch(const TrainConfig& config, int epoch);

/// v <- momentum * v + g; theta <- theta - lr * v. Throws NumericError if
/// the gradient holds a non-finite value.
void sgd_step(StackerParams& params, StackerParams& velocity, const StackerParams& gradient, double lr,
              double momentum);

double accuracy_of(const StackerParams& params, const Matrix& features, std::span<const int> labels);

/// Minibatch SGD from zero-initialized parameters. Features must already be
/// the weighted concatenation. Returns the parameters of the epoch with the
/// best validation accuracy (earliest on ties).
TrainResult train(const Matrix& train_features, std::span<const int> train_labels, const Matrix& val_features,
                  std::span<const int> val_labels, const TrainConfig& config, std::size_t classes);

/// Same, starting from `init`.
TrainResult train(const Matrix& train_features, std::span<const int> train_labels, const Matrix& val_features,
                  std::span<const int> val_labels, const TrainConfig& config, StackerParams init);

/// Parameter file: `C,M` header, then W row-major, then b, one value per line.
void write_params(const StackerParams& params, std::size_t models, const std::filesystem::path& path);
/// Returns the params and sets `models` from the header.
StackerParams load_params(const std::filesystem::path& path, std::size_t* models = nullptr);

/// `epoch,lr,train_loss,val_acc` CSV.
std::string history_csv(const TrainHistory& history);

}  // namespace skinstack
