#include "skinstack/stacker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "skinstack/csv.hpp"
#include "skinstack/errors.hpp"

namespace skinstack {

namespace {

void check_batch(const StackerParams& params, const Matrix& features, std::span<const int> labels) {
    if (features.cols() != params.inputs())
        throw ValidationError("feature width " + std::to_string(features.cols()) + " does not match stacker input " +
                              std::to_string(params.inputs()));
    if (labels.size() != features.rows()) throw ValidationError("feature rows and labels differ in length");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= params.classes())
            throw ValidationError("label " + std::to_string(y) + " out of range");
}

// Probability vector and loss for one row, sharing the log-sum-exp.
double softmax_with_loss(const StackerParams& params, std::span<const double> x, std::size_t label,
                         std::vector<double>& probs) {
    probs = forward(params, x);
    const double top = *std::max_element(probs.begin(), probs.end());
    double sum = 0.0;
    for (double v : probs) sum += std::exp(v - top);
    const double log_norm = top + std::log(sum);
    const double loss = log_norm - probs[label];
    for (auto& v : probs) v = std::exp(v - log_norm);
    return loss;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ValidationError("lr0 must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must be in [0, 1)");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must be in (0, 1]");
    if (step_epochs < 1) throw ValidationError("step_epochs must be >= 1");
    if (patience < 1) throw ValidationError("patience must be >= 1");
    if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
}

std::vector<double> forward(const StackerParams& params, std::span<const double> features) {
    if (features.size() != params.inputs())
        throw ValidationError("feature width " + std::to_string(features.size()) + " does not match stacker input " +
                              std::to_string(params.inputs()));
    std::vector<double> out(params.bias);
    for (std::size_t c = 0; c < params.classes(); ++c) {
        const auto w = params.weight.row(c);
        double acc = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * features[j];
        out[c] += acc;
    }
    return out;
}

double ce_loss(std::span<const double> logits, std::size_t label) {
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - top);
    // top - logits[label] >= 0 and log(sum) >= 0, so this never goes negative.
    return (top - logits[label]) + std::log(sum);
}

double mean_loss(const StackerParams& params, const Matrix& features, std::span<const int> labels) {
    check_batch(params, features, labels);
    if (labels.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < features.rows(); ++i)
        total += ce_loss(forward(params, features.row(i)), static_cast<std::size_t>(labels[i]));
    return total / static_cast<double>(labels.size());
}

StackerParams grad(const StackerParams& params, const Matrix& features, std::span<const int> labels,
                   std::span<const std::size_t> rows) {
    check_batch(params, features, labels);
    if (rows.empty()) throw ValidationError("gradient of an empty batch");

    StackerParams g(params.classes(), params.inputs());
    std::vector<double> probs;
    for (auto i : rows) {
        const auto x = features.row(i);
        const auto y = static_cast<std::size_t>(labels[i]);
        softmax_with_loss(params, x, y, probs);
        probs[y] -= 1.0;
        for (std::size_t c = 0; c < g.classes(); ++c) {
            g.bias[c] += probs[c];
            auto gw = g.weight.row(c);
            for (std::size_t j = 0; j < gw.size(); ++j) gw[j] += probs[c] * x[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto& v : g.weight.values()) v *= inv;
    for (auto& v : g.bias) v *= inv;
    return g;
}

StackerParams grad(const StackerParams& params, const Matrix& features, std::span<const int> labels) {
    std::vector<std::size_t> rows(features.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return grad(params, features, labels, rows);
}

double lr_at_epoch(const TrainConfig& config, int epoch) {
    if (epoch < 1) throw ValidationError("epochs are counted from 1");
    const int decays = (epoch - 1) / config.step_epochs;
    double lr = config.lr0;
    for (int k = 0; k < decays; ++k) lr *= config.gamma;
    return lr;
}

void sgd_step(StackerParams& params, StackerParams& velocity, const StackerParams& gradient, double lr,
              double momentum) {
    if (gradient.weight.rows() != params.weight.rows() || gradient.weight.cols() != params.weight.cols() ||
        velocity.weight.rows() != params.weight.rows() || velocity.weight.cols() != params.weight.cols() ||
        gradient.bias.size() != params.bias.size() || velocity.bias.size() != params.bias.size())
        throw ValidationError("sgd_step: parameter, velocity and gradient shapes differ");
    for (double v : gradient.weight.values())
        if (!std::isfinite(v)) throw NumericError("non-finite gradient");
    for (double v : gradient.bias)
        if (!std::isfinite(v)) throw NumericError("non-finite gradient");

    auto step = [&](std::span<double> theta, std::span<double> vel, std::span<const double> g) {
        for (std::size_t k = 0; k < theta.size(); ++k) {
            vel[k] = momentum * vel[k] + g[k];
            theta[k] -= lr * vel[k];
        }
    };
    step(params.weight.values(), velocity.weight.values(), gradient.weight.values());
    step(params.bias, velocity.bias, gradient.bias);
}

double accuracy_of(const StackerParams& params, const Matrix& features, std::span<const int> labels) {
    check_batch(params, features, labels);
    if (labels.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.rows(); ++i)
        if (predict_argmax(forward(params, features.row(i))) == static_cast<std::size_t>(labels[i])) ++correct;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

TrainResult train(const Matrix& train_features, std::span<const int> train_labels, const Matrix& val_features,
                  std::span<const int> val_labels, const TrainConfig& config, std::size_t classes) {
    return train(train_features, train_labels, val_features, val_labels, config,
                 StackerParams(classes, train_features.cols()));
}

TrainResult train(const Matrix& train_features, std::span<const int> train_labels, const Matrix& val_features,
                  std::span<const int> val_labels, const TrainConfig& config, StackerParams init) {
    config.validate();
    if (train_labels.empty()) throw ValidationError("training set is empty");
    if (val_labels.empty()) throw ValidationError("validation set is empty");
    check_batch(init, train_features, train_labels);
    check_batch(init, val_features, val_labels);

    StackerParams params = std::move(init);
    StackerParams velocity(params.classes(), params.inputs());
    TrainResult result{params, {}};
    double best_acc = -1.0;
    int since_best = 0;

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train_features.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> probs;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double lr = lr_at_epoch(config, epoch);
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const auto len = std::min(config.batch_size, order.size() - start);
            const std::span<const std::size_t> batch(order.data() + start, len);
            for (auto i : batch)
                loss_sum += softmax_with_loss(params, train_features.row(i), static_cast<std::size_t>(train_labels[i]),
                                              probs);
            sgd_step(params, velocity, grad(params, train_features, train_labels, batch), lr, config.momentum);
        }
        const double train_loss = loss_sum / static_cast<double>(order.size());
        if (!std::isfinite(train_loss)) throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));

        const double val_acc = accuracy_of(params, val_features, val_labels);
        result.history.epochs.push_back({epoch, lr, train_loss, val_acc});
        if (val_acc > best_acc) {
            best_acc = val_acc;
            result.history.best_epoch = epoch;
            result.params = params;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            result.history.stopped_early = true;
            break;
        }
    }
    return result;
}

void write_params(const StackerParams& params, std::size_t models, const std::filesystem::path& path) {
    if (models == 0 || params.inputs() != models * params.classes())
        throw ValidationError("stacker input width is not models x classes");
    std::string out = std::to_string(params.classes()) + "," + std::to_string(models) + "\n";
    for (double v : params.weight.values()) out += csv::format_double(v) + "\n";
    for (double v : params.bias) out += csv::format_double(v) + "\n";
    csv::write_file(path, out);
}

StackerParams load_params(const std::filesystem::path& path, std::size_t* models) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty parameter file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto head = csv::split(line);
    double c_raw = 0.0;
    double m_raw = 0.0;
    if (head.size() != 2 || !csv::parse_double(head[0], c_raw) || !csv::parse_double(head[1], m_raw) || c_raw < 1 ||
        m_raw < 1 || c_raw != std::floor(c_raw) || m_raw != std::floor(m_raw))
        throw DataError(path.string() + ":1: expected header 'C,M'");
    const auto c = static_cast<std::size_t>(c_raw);
    const auto m = static_cast<std::size_t>(m_raw);

    StackerParams params(c, c * m);
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double v = 0.0;
        if (!csv::parse_double(line, v) || !std::isfinite(v))
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad parameter value '" + line + "'");
        values.push_back(v);
    }
    const auto expected = c * c * m + c;
    if (values.size() != expected)
        throw DataError(path.string() + ": expected " + std::to_string(expected) + " values, got " +
                        std::to_string(values.size()));
    std::copy(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(c * c * m), params.weight.values().begin());
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(c * c * m), values.end(), params.bias.begin());
    if (models) *models = m;
    return params;
}

std::string history_csv(const TrainHistory& history) {
    std::string out = "epoch,lr,train_loss,val_acc\n";
    for (const auto& e : history.epochs)
        out += std::to_string(e.epoch) + "," + csv::format_double(e.lr) + "," + csv::format_double(e.train_loss) +
               "," + csv::format_double(e.val_accuracy) + "\n";
    return out;
}

}  // namespace skinstack
