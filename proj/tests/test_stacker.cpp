#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "skinstack/errors.hpp"
#include "skinstack/stacker.hpp"
#include "test_support.hpp"

using namespace skinstack;

namespace {

StackerParams random_params(std::mt19937_64& rng, std::size_t classes, std::size_t inputs, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    StackerParams p(classes, inputs);
    for (auto& w : p.weight.values()) w = nd(rng);
    for (auto& b : p.bias) b = nd(rng);
    return p;
}

struct Batch {
    Matrix x;
    std::vector<int> y;
};

Batch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t inputs, std::size_t classes) {
    std::normal_distribution<double> nd(0.0, 2.0);
    Batch b{Matrix(n, inputs), std::vector<int>(n)};
    for (auto& v : b.x.values()) v = nd(rng);
    for (auto& y : b.y) y = static_cast<int>(rng() % classes);
    return b;
}

// Three well-separated Gaussian blobs in a 21-wide feature space.
Batch separable(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 0.3);
    Batch b{Matrix(n, 21), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(i % 3);
        b.y[i] = y;
        for (std::size_t j = 0; j < 21; ++j) b.x(i, j) = nd(rng) + ((j % 7) == static_cast<std::size_t>(y) ? 4.0 : 0.0);
    }
    return b;
}

}  // namespace

TEST_CASE("forward") {
    StackerParams zero(7, 21);
    const std::vector<double> x(21, 3.5);
    CHECK(forward(zero, x) == std::vector<double>(7, 0.0));

    StackerParams id(2, 2);
    id.weight(0, 0) = 1.0;
    id.weight(1, 1) = 1.0;
    CHECK(forward(id, std::vector<double>{0.3, -4.0}) == std::vector<double>{0.3, -4.0});

    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(rng, 7, 21, 1.0);
        std::vector<double> in(21);
        for (auto& v : in) v = nd(rng);
        const auto out = forward(p, in);
        for (std::size_t c = 0; c < 7; ++c) {
            double dot = p.bias[c];
            for (std::size_t j = 0; j < 21; ++j) dot += p.weight(c, j) * in[j];
            CHECK(std::abs(out[c] - dot) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(forward(zero, std::vector<double>(20)), ValidationError);
}

TEST_CASE("ce_loss") {
    CHECK(ce_loss(std::vector<double>{0, 0}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    // log(1 + e^-30) = log1p(e^-30).
    CHECK(ce_loss(std::vector<double>{30, 0}, 0) == doctest::Approx(std::log1p(std::exp(-30.0))).epsilon(1e-12));
    CHECK(ce_loss(std::vector<double>{-800, 800}, 1) == 0.0);
    CHECK(ce_loss(std::vector<double>{-800, 800}, 0) == doctest::Approx(1600.0));

    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(0.0, 5.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> z(7);
        for (auto& v : z) v = nd(rng);
        const auto y = static_cast<std::size_t>(rng() % 7);
        const double loss = ce_loss(z, y);
        CHECK(loss > 0.0);
        auto shifted = z;
        for (auto& v : shifted) v += 123.25;
        CHECK(std::abs(ce_loss(shifted, y) - loss) <= 1e-12);
    }
}

TEST_CASE("grad: hand-evaluated and degenerate cases") {
    StackerParams p(2, 2);
    Matrix x(1, 2);
    x(0, 0) = 1.0;
    const std::vector<int> y = {0};
    const auto g = grad(p, x, y);
    CHECK(g.bias == std::vector<double>{-0.5, 0.5});
    CHECK(g.weight(0, 0) == -0.5);
    CHECK(g.weight(1, 0) == 0.5);
    CHECK(g.weight(0, 1) == 0.0);

    StackerParams sure(2, 2);
    sure.bias = {500.0, -500.0};
    const auto flat = grad(sure, x, y);
    for (double v : flat.weight.values()) CHECK(std::abs(v) < 1e-10);
    for (double v : flat.bias) CHECK(std::abs(v) < 1e-10);

    CHECK_THROWS_AS(grad(p, Matrix(0, 2), std::vector<int>{}), ValidationError);
}

TEST_CASE("grad matches central finite differences") {
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 32;
        const auto p = random_params(rng, 7, 21, 0.3);
        const auto b = random_batch(rng, n, 21, 7);
        const auto g = grad(p, b.x, b.y);
        const auto fd = oracle::fd_gradient(p, b.x, b.y, 1e-5);
        std::size_t k = 0;
        for (double v : g.weight.values()) worst = std::max(worst, oracle::rel_err(v, fd[k++]));
        for (double v : g.bias) worst = std::max(worst, oracle::rel_err(v, fd[k++]));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("lr_at_epoch") {
    const TrainConfig cfg;
    CHECK(lr_at_epoch(cfg, 1) == 0.01);
    CHECK(lr_at_epoch(cfg, 10) == 0.01);
    CHECK(lr_at_epoch(cfg, 11) == 0.001);
    CHECK(lr_at_epoch(cfg, 21) == 0.0001);
    double prev = lr_at_epoch(cfg, 1);
    for (int e = 2; e <= 100; ++e) {
        const double lr = lr_at_epoch(cfg, e);
        CHECK(lr <= prev);
        if ((e - 1) % cfg.step_epochs != 0) CHECK(lr == prev);
        prev = lr;
    }
    CHECK_THROWS_AS(lr_at_epoch(cfg, 0), ValidationError);
}

TEST_CASE("sgd_step recurrence") {
    StackerParams theta(1, 1), v(1, 1), g(1, 1);
    theta.weight(0, 0) = 1.0;
    theta.bias[0] = 1.0;
    g.weight(0, 0) = 0.5;
    g.bias[0] = 0.5;

    sgd_step(theta, v, g, 0.01, 0.9);
    CHECK(v.weight(0, 0) == 0.5);
    CHECK(theta.weight(0, 0) == doctest::Approx(0.995).epsilon(1e-15));
    sgd_step(theta, v, g, 0.01, 0.9);
    CHECK(v.weight(0, 0) == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(theta.weight(0, 0) == doctest::Approx(0.9855).epsilon(1e-15));
    CHECK(theta.bias[0] == theta.weight(0, 0));

    StackerParams plain(1, 1), pv(1, 1);
    plain.weight(0, 0) = 2.0;
    sgd_step(plain, pv, g, 0.1, 0.0);
    sgd_step(plain, pv, g, 0.1, 0.0);
    CHECK(plain.weight(0, 0) == doctest::Approx(2.0 - 2 * 0.1 * 0.5).epsilon(1e-15));

    g.bias[0] = std::nan("");
    CHECK_THROWS_AS(sgd_step(theta, v, g, 0.01, 0.9), NumericError);
}

TEST_CASE("train on separable data stops early at full accuracy") {
    const auto tr = separable(300, 1);
    const auto va = separable(90, 2);
    TrainConfig cfg;
    cfg.seed = 5;
    const auto result = train(tr.x, tr.y, va.x, va.y, cfg, 7);
    CHECK(result.history.stopped_early);
    CHECK(static_cast<int>(result.history.epochs.size()) < cfg.max_epochs);
    CHECK(accuracy_of(result.params, tr.x, tr.y) == 1.0);
    CHECK(result.history.epochs[static_cast<std::size_t>(result.history.best_epoch - 1)].val_accuracy == 1.0);
}

TEST_CASE("train with frozen learning rate and patience 1 stops at epoch 2") {
    // lr0 must stay positive, so freeze by making every update fall below the
    // resolution of nonzero starting parameters.
    const auto tr = separable(30, 3);
    std::mt19937_64 rng(8);
    const auto init = random_params(rng, 7, 21, 1.0);
    TrainConfig cfg;
    cfg.patience = 1;
    cfg.gamma = 1.0;
    cfg.lr0 = 1e-300;
    const auto result = train(tr.x, tr.y, tr.x, tr.y, cfg, init);
    CHECK(result.history.epochs.size() == 2);
    CHECK(result.history.best_epoch == 1);
    CHECK(result.history.stopped_early);
    CHECK(result.params == init);
}

TEST_CASE("train is deterministic for a seed") {
    std::mt19937_64 rng(4);
    const auto tr = random_batch(rng, 200, 21, 7);
    const auto va = random_batch(rng, 60, 21, 7);
    TrainConfig cfg;
    cfg.seed = 99;
    cfg.max_epochs = 25;
    const auto a = train(tr.x, tr.y, va.x, va.y, cfg, 7);
    const auto b = train(tr.x, tr.y, va.x, va.y, cfg, 7);
    CHECK(a.params == b.params);
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
        CHECK(a.history.epochs[e].train_loss == b.history.epochs[e].train_loss);
        CHECK(a.history.epochs[e].val_accuracy == b.history.epochs[e].val_accuracy);
    }
    CHECK(history_csv(a.history) == history_csv(b.history));
}

TEST_CASE("history invariants") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const auto tr = random_batch(rng, 120, 14, 7);
        const auto va = random_batch(rng, 40, 14, 7);
        TrainConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(trial);
        cfg.patience = 1 + trial % 4;
        cfg.max_epochs = 40;
        const auto r = train(tr.x, tr.y, va.x, va.y, cfg, 7);
        const auto& h = r.history;
        CHECK(static_cast<int>(h.epochs.size()) <= cfg.max_epochs);
        CHECK(static_cast<int>(h.epochs.size()) - h.best_epoch <= cfg.patience);
        double best = 0.0;
        for (const auto& e : h.epochs) best = std::max(best, e.val_accuracy);
        const auto& at_best = h.epochs[static_cast<std::size_t>(h.best_epoch - 1)];
        CHECK(at_best.val_accuracy == best);
        for (int e = 0; e < h.best_epoch - 1; ++e) CHECK(h.epochs[static_cast<std::size_t>(e)].val_accuracy < best);
        CHECK(accuracy_of(r.params, va.x, va.y) == best);
    }
}

TEST_CASE("train input validation") {
    const auto tr = separable(30, 3);
    TrainConfig cfg;
    CHECK_THROWS_AS(train(tr.x, tr.y, Matrix(0, 21), std::vector<int>{}, cfg, 7), ValidationError);
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(train(tr.x, tr.y, tr.x, tr.y, cfg, 7), ValidationError);
}

TEST_CASE("parameter file round trip") {
    skinstack::testing::TempDir dir;
    std::mt19937_64 rng(7);
    const auto p = random_params(rng, 7, 21, 3.0);
    write_params(p, 3, dir / "p.txt");
    std::size_t models = 0;
    const auto back = load_params(dir / "p.txt", &models);
    CHECK(models == 3);
    CHECK(back == p);

    const auto text = skinstack::testing::read_text(dir / "p.txt");
    CHECK(text.starts_with("7,3\n"));
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 7 * 21 + 7);

    skinstack::testing::write_text(dir / "short.txt", "7,3\n1\n2\n");
    CHECK_THROWS_AS(load_params(dir / "short.txt"), DataError);
    CHECK_THROWS_AS(write_params(p, 2, dir / "x.txt"), ValidationError);
}
