#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fsoqos/matrix.hpp"

namespace fsoqos::mlp {

enum class Activation { Tanh, Logistic, Linear };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

double activate(Activation a, double z);
// Derivative expressed through the pre-activation z.
double activate_derivative(Activation a, double z);

struct LayerSizes {
    std::size_t inputs = 1;
    std::size_t hidden = 10;
    std::size_t outputs = 1;

    friend bool operator==(const LayerSizes&, const LayerSizes&) = default;
};

// One hidden layer perceptron.
//   hidden_j = f(sum_i x_i w_ij + b_j)
//   output_n = g(sum_j hidden_j rho_jn + delta_n)
struct MlpNetwork {
    LayerSizes sizes;
    Matrix weights_input_hidden;  // inputs x hidden
    std::vector<double> bias_hidden;
    Matrix weights_hidden_output; // hidden x outputs
    std::vector<double> bias_output;
    Activation activation_hidden = Activation::Tanh;
    Activation activation_output = Activation::Linear;

    void validate() const;

    friend bool operator==(const MlpNetwork&, const MlpNetwork&) = default;
};

// Weights uniform in +-1/sqrt(fan_in), zero biases.
MlpNetwork init_network(const LayerSizes& sizes,
                        std::uint64_t seed,
                        Activation hidden = Activation::Tanh,
                        Activation output = Activation::Linear);

struct ForwardResult {
    std::vector<double> hidden;
    std::vector<double> output;
};

ForwardResult forward(const MlpNetwork& net, std::span<const double> x);

// Row per sample.
struct Batch {
    Matrix inputs;  // samples x inputs
    Matrix targets; // samples x outputs

    std::size_t size() const noexcept { return inputs.rows(); }
};

void check_batch(const MlpNetwork& net, const Batch& batch);

// Mean over samples of 0.5 * sum_n (target_n - output_n)^2.
double loss(const MlpNetwork& net, const Batch& batch);

// Parameter-shaped gradient of loss().
struct Gradients {
    Matrix weights_input_hidden;
    std::vector<double> bias_hidden;
    Matrix weights_hidden_output;
    std::vector<double> bias_output;

    static Gradients zeros_like(const MlpNetwork& net);
};

Gradients gradients(const MlpNetwork& net, const Batch& batch);

struct TrainConfig {
    double learning_rate = 0.01;
    int max_epochs = 50;
    double mse_stop = 0.0;
    std::uint64_t seed = 1;

    // max_epochs == 0 is accepted and leaves the network untouched.
    void validate() const;
};

struct EpochRecord {
    int epoch;
    double train_loss;
    std::optional<double> val_loss;
};

struct TrainResult {
    MlpNetwork net;
    std::vector<EpochRecord> history;
};

// Full-batch gradient descent. Epoch e records the losses after the e-th
// update; training stops once the epoch's mean squared error is at or
// below mse_stop, or after max_epochs.
TrainResult train(MlpNetwork net,
                  const Batch& train_set,
                  const std::optional<Batch>& val_set,
                  const TrainConfig& config);

void write_loss_csv(std::ostream& os, std::span<const EpochRecord> history);

// Maps [min, max] onto [-1, 1].
struct TargetScaling {
    double min = -1.0;
    double max = 1.0;

    static TargetScaling fit(std::span<const double> values);
    double scale(double y) const;
    double unscale(double s) const;

    friend bool operator==(const TargetScaling&, const TargetScaling&) = default;
};

nlohmann::json to_json(const MlpNetwork& net, const std::optional<TargetScaling>& scaling = std::nullopt);
MlpNetwork network_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TargetScaling& scaling);
TargetScaling target_scaling_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

} // namespace fsoqos::mlp
