#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fsoqos/error.hpp"
#include "fsoqos/mlp.hpp"
#include "fsoqos/rng.hpp"
#include "gradient_check.hpp"

using namespace fsoqos;
using namespace fsoqos::mlp;

namespace {

Batch random_batch(std::size_t samples, std::size_t k, std::size_t l, std::uint64_t seed)
{
    Rng rng(seed);
    Batch b{Matrix(samples, k), Matrix(samples, l)};
    for (double& v : b.inputs.data()) v = rng.normal();
    for (double& v : b.targets.data()) v = rng.uniform(-1.0, 1.0);
    return b;
}

} // namespace

TEST_CASE("init_network")
{
    const auto a = init_network({2, 3, 1}, 42);
    const auto b = init_network({2, 3, 1}, 42);
    CHECK(a == b);
    CHECK(a.weights_input_hidden.rows() == 2);
    CHECK(a.weights_input_hidden.cols() == 3);
    CHECK(a.bias_hidden.size() == 3);
    CHECK(a.weights_hidden_output.rows() == 3);
    CHECK(a.weights_hidden_output.cols() == 1);
    CHECK(a.bias_output.size() == 1);
    CHECK(!(init_network({2, 3, 1}, 43) == a));
    for (double w : a.weights_input_hidden.data()) CHECK(std::abs(w) <= 1.0 / std::sqrt(2.0));
    for (double w : a.weights_hidden_output.data()) CHECK(std::abs(w) <= 1.0 / std::sqrt(3.0));
    for (double v : a.bias_hidden) CHECK(v == 0.0);
    CHECK_THROWS_AS(init_network({0, 3, 1}, 1), UsageError);
}

TEST_CASE("forward")
{
    auto net = init_network({3, 4, 1}, 1);
    for (double& w : net.weights_input_hidden.data()) w = 0.0;
    for (double& w : net.weights_hidden_output.data()) w = 0.0;
    const std::vector<double> x{0.3, -2.0, 5.0};
    CHECK(forward(net, x).output[0] == 0.0);

    net = init_network({3, 4, 1}, 2);
    for (double& w : net.weights_hidden_output.data()) w = 0.0;
    net.bias_output[0] = 0.625;
    CHECK(forward(net, x).output[0] == 0.625);

    auto tiny = init_network({1, 1, 1}, 3);
    tiny.weights_input_hidden(0, 0) = 1.0;
    tiny.weights_hidden_output(0, 0) = 1.0;
    const std::vector<double> half{0.5};
    CHECK(forward(tiny, half).output[0] == doctest::Approx(0.46211715726000974).epsilon(1e-14));

    const std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(forward(net, wrong), ShapeError);
}

TEST_CASE("loss")
{
    auto net = init_network({1, 1, 1}, 1);
    for (double& w : net.weights_hidden_output.data()) w = 0.0;
    net.bias_output[0] = 1.0; // output is always 1
    Batch b{Matrix(1, 1, 0.0), Matrix(1, 1, 1.0)};
    CHECK(loss(net, b) == 0.0);
    b.targets(0, 0) = 0.0;
    CHECK(loss(net, b) == 0.5);
    Batch two{Matrix(2, 1, 0.0), Matrix(2, 1, std::vector<double>{0.0, 4.0})};
    CHECK(loss(net, two) == 2.5);
    CHECK_THROWS_AS(loss(net, Batch{Matrix(0, 1), Matrix(0, 1)}), UsageError);
    CHECK_THROWS_AS(loss(net, Batch{Matrix(2, 1), Matrix(1, 1)}), ShapeError);
}

TEST_CASE("gradients")
{
    auto net = init_network({2, 3, 1}, 4);
    const auto b = random_batch(5, 2, 1, 8);
    Batch perfect = b;
    for (std::size_t s = 0; s < b.size(); ++s) perfect.targets(s, 0) = forward(net, b.inputs.row(s)).output[0];
    for (double g : gradcheck::flatten(gradients(net, perfect))) CHECK(g == 0.0);

    // Identity activations: loss = mean 0.5 (rho (w x + b) + d - y)^2.
    auto lin = init_network({1, 1, 1}, 5, Activation::Linear, Activation::Linear);
    lin.weights_input_hidden(0, 0) = 0.7;
    lin.bias_hidden[0] = 0.2;
    lin.weights_hidden_output(0, 0) = -1.3;
    lin.bias_output[0] = 0.4;
    const double x = 1.5;
    const double y = 0.25;
    Batch one{Matrix(1, 1, x), Matrix(1, 1, y)};
    const double hidden = 0.7 * x + 0.2;
    const double err = -1.3 * hidden + 0.4 - y;
    const auto g = gradients(lin, one);
    CHECK(g.bias_output[0] == doctest::Approx(err));
    CHECK(g.weights_hidden_output(0, 0) == doctest::Approx(err * hidden));
    CHECK(g.bias_hidden[0] == doctest::Approx(err * -1.3));
    CHECK(g.weights_input_hidden(0, 0) == doctest::Approx(err * -1.3 * x));
}

TEST_CASE("gradients match central differences on random nets")
{
    std::mt19937_64 gen(99);
    const Activation hiddens[] = {Activation::Tanh, Activation::Logistic};
    const Activation outputs[] = {Activation::Linear, Activation::Logistic};
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const LayerSizes sizes{1 + gen() % 4, 1 + gen() % 5, 1 + gen() % 2};
        auto net = init_network(sizes, gen(), hiddens[trial % 2], outputs[(trial / 2) % 2]);
        Rng rng(gen());
        for (double& v : net.bias_hidden) v = rng.uniform(-0.5, 0.5);
        for (double& v : net.bias_output) v = rng.uniform(-0.5, 0.5);
        const auto batch = random_batch(1 + gen() % 7, sizes.inputs, sizes.outputs, gen());
        worst = std::max(worst, gradcheck::max_relative_error(net, batch));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("gradient invariant under sample permutation")
{
    const auto net = init_network({3, 5, 2}, 6);
    const auto b = random_batch(300, 3, 2, 10);
    std::vector<std::size_t> perm(300);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 gen(4);
    std::shuffle(perm.begin(), perm.end(), gen);
    Batch p{Matrix(300, 3), Matrix(300, 2)};
    for (std::size_t s = 0; s < 300; ++s) {
        std::copy(b.inputs.row(perm[s]).begin(), b.inputs.row(perm[s]).end(), p.inputs.row(s).begin());
        std::copy(b.targets.row(perm[s]).begin(), b.targets.row(perm[s]).end(), p.targets.row(s).begin());
    }
    const auto g1 = gradcheck::flatten(gradients(net, b));
    const auto g2 = gradcheck::flatten(gradients(net, p));
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(std::abs(g1[i] - g2[i]) < 1e-12);
}

TEST_CASE("small descent step does not increase a quadratic loss")
{
    auto net = init_network({2, 3, 1}, 7, Activation::Linear, Activation::Linear);
    const auto b = random_batch(40, 2, 1, 12);
    const double before = loss(net, b);
    auto r = train(net, b, std::nullopt, TrainConfig{1e-3, 1, 0.0, 1});
    CHECK(r.history.size() == 1);
    CHECK(r.history[0].train_loss <= before);
}

TEST_CASE("train")
{
    // y = 2 x + small noise
    Rng rng(5);
    Batch b{Matrix(200, 1), Matrix(200, 1)};
    for (std::size_t s = 0; s < 200; ++s) {
        const double x = rng.uniform(-0.4, 0.4);
        b.inputs(s, 0) = x;
        b.targets(s, 0) = 2.0 * x + 0.01 * rng.normal();
    }
    const auto net = init_network({1, 6, 1}, 3);
    const double initial = loss(net, b);
    auto r = train(net, b, b, TrainConfig{0.2, 200, 0.0, 3});
    CHECK(r.history.size() == 200);
    CHECK(r.history.back().train_loss < initial);
    CHECK(r.history.back().train_loss < 0.01 * initial);
    REQUIRE(r.history.back().val_loss.has_value());
    CHECK(*r.history.back().val_loss == doctest::Approx(r.history.back().train_loss));
    for (std::size_t e = 0; e < r.history.size(); ++e) CHECK(r.history[e].epoch == static_cast<int>(e + 1));

    auto frozen = train(net, b, std::nullopt, TrainConfig{0.0, 5, 0.0, 3});
    CHECK(frozen.net == net);
    CHECK(frozen.history.size() == 5);
    for (const auto& h : frozen.history) {
        CHECK(h.train_loss == initial);
        CHECK(!h.val_loss.has_value());
    }

    auto stop = train(net, b, std::nullopt, TrainConfig{0.2, 50, 1e300, 3});
    CHECK(stop.history.size() == 1);

    auto none = train(net, b, std::nullopt, TrainConfig{0.2, 0, 0.0, 3});
    CHECK(none.history.empty());
    CHECK(none.net == net);

    // Deterministic
    CHECK(train(net, b, b, TrainConfig{0.2, 20, 0.0, 3}).net == train(net, b, b, TrainConfig{0.2, 20, 0.0, 3}).net);

    try {
        train(net, b, std::nullopt, TrainConfig{1e200, 5, 0.0, 3});
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.epoch() >= 1);
    }
    CHECK_THROWS_AS(train(net, b, std::nullopt, TrainConfig{-1.0, 5, 0.0, 3}), UsageError);
}

TEST_CASE("target scaling")
{
    const std::vector<double> y{-3.0, 5.0, 1.0};
    const auto s = TargetScaling::fit(y);
    CHECK(s.scale(-3.0) == -1.0);
    CHECK(s.scale(5.0) == 1.0);
    CHECK(s.scale(1.0) == 0.0);
    CHECK(s.unscale(s.scale(2.7)) == doctest::Approx(2.7));
    const std::vector<double> flat{4.0, 4.0};
    const auto f = TargetScaling::fit(flat);
    CHECK(f.scale(4.0) == 0.0);
    CHECK(f.unscale(0.3) == 4.0);
}

TEST_CASE("network JSON and loss CSV")
{
    const auto net = init_network({3, 4, 2}, 77, Activation::Logistic, Activation::Logistic);
    const auto j = nlohmann::json::parse(to_json(net, TargetScaling{1.0, 2.0}).dump());
    CHECK(network_from_json(j) == net);
    CHECK(target_scaling_from_json(j.at("target_scaling")) == TargetScaling{1.0, 2.0});
    auto bad = j;
    bad["bias_hidden"] = std::vector<double>{1.0};
    CHECK_THROWS_AS(network_from_json(bad), SchemaError);

    std::ostringstream os;
    const std::vector<EpochRecord> h{{1, 0.5, 0.25}, {2, 0.125, std::nullopt}};
    write_loss_csv(os, h);
    CHECK(os.str() == "epoch,train_loss,val_loss\n1,0.5,0.25\n2,0.125,\n");

    const auto c = train_config_from_json(nlohmann::json{{"learning_rate", 0.1}, {"max_epochs", 7}, {"seed", 9}});
    CHECK(c.learning_rate == 0.1);
    CHECK(c.max_epochs == 7);
    CHECK(c.seed == 9);
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"max_epochs", "ten"}}), UsageError);
}
