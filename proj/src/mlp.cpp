#include "fsoqos/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "fsoqos/csv_format.hpp"
#include "fsoqos/error.hpp"
#include "fsoqos/kernels.hpp"
#include "fsoqos/rng.hpp"

namespace fsoqos::mlp {

Activation parse_activation(std::string_view name)
{
    if (name == "tanh") return Activation::Tanh;
    if (name == "logistic") return Activation::Logistic;
    if (name == "linear") return Activation::Linear;
    throw UsageError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Logistic: return "logistic";
    case Activation::Linear: return "linear";
    }
    return "linear";
}

double activate(Activation a, double z)
{
    switch (a) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::Logistic: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Linear: return z;
    }
    return z;
}

double activate_derivative(Activation a, double z)
{
    switch (a) {
    case Activation::Tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    case Activation::Logistic: {
        const double s = 1.0 / (1.0 + std::exp(-z));
        return s * (1.0 - s);
    }
    case Activation::Linear: return 1.0;
    }
    return 1.0;
}

void MlpNetwork::validate() const
{
    if (sizes.inputs < 1 || sizes.hidden < 1 || sizes.outputs < 1) {
        throw UsageError("every layer needs at least one node");
    }
    if (weights_input_hidden.rows() != sizes.inputs || weights_input_hidden.cols() != sizes.hidden
        || bias_hidden.size() != sizes.hidden || weights_hidden_output.rows() != sizes.hidden
        || weights_hidden_output.cols() != sizes.outputs || bias_output.size() != sizes.outputs) {
        throw ShapeError("network parameters disagree with layer sizes");
    }
    auto finite = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(weights_input_hidden.data()) || !finite(bias_hidden) || !finite(weights_hidden_output.data())
        || !finite(bias_output)) {
        throw NumericError("network has non-finite parameters");
    }
}

MlpNetwork init_network(const LayerSizes& sizes, std::uint64_t seed, Activation hidden, Activation output)
{
    if (sizes.inputs < 1 || sizes.hidden < 1 || sizes.outputs < 1) {
        throw UsageError("every layer needs at least one node");
    }
    MlpNetwork net;
    net.sizes = sizes;
    net.activation_hidden = hidden;
    net.activation_output = output;
    net.weights_input_hidden = Matrix(sizes.inputs, sizes.hidden);
    net.bias_hidden.assign(sizes.hidden, 0.0);
    net.weights_hidden_output = Matrix(sizes.hidden, sizes.outputs);
    net.bias_output.assign(sizes.outputs, 0.0);

    Rng rng(seed);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(sizes.inputs));
    for (double& w : net.weights_input_hidden.data()) {
        w = rng.uniform(-r1, r1);
    }
    const double r2 = 1.0 / std::sqrt(static_cast<double>(sizes.hidden));
    for (double& w : net.weights_hidden_output.data()) {
        w = rng.uniform(-r2, r2);
    }
    net.validate();
    return net;
}

ForwardResult forward(const MlpNetwork& net, std::span<const double> x)
{
    if (x.size() != net.sizes.inputs) {
        throw ShapeError("input has " + std::to_string(x.size()) + " values, network expects "
                         + std::to_string(net.sizes.inputs));
    }
    ForwardResult r{std::vector<double>(net.sizes.hidden), std::vector<double>(net.sizes.outputs)};
    for (std::size_t j = 0; j < net.sizes.hidden; ++j) {
        double z = net.bias_hidden[j];
        for (std::size_t i = 0; i < net.sizes.inputs; ++i) {
            z += x[i] * net.weights_input_hidden(i, j);
        }
        r.hidden[j] = activate(net.activation_hidden, z);
    }
    for (std::size_t n = 0; n < net.sizes.outputs; ++n) {
        double z = net.bias_output[n];
        for (std::size_t j = 0; j < net.sizes.hidden; ++j) {
            z += r.hidden[j] * net.weights_hidden_output(j, n);
        }
        r.output[n] = activate(net.activation_output, z);
    }
    return r;
}

void check_batch(const MlpNetwork& net, const Batch& batch)
{
    if (batch.size() == 0) {
        throw UsageError("batch is empty");
    }
    if (batch.targets.rows() != batch.inputs.rows()) {
        throw ShapeError("input and target sample counts differ");
    }
    if (batch.inputs.cols() != net.sizes.inputs || batch.targets.cols() != net.sizes.outputs) {
        throw ShapeError("batch widths do not match the network");
    }
}

double loss(const MlpNetwork& net, const Batch& batch)
{
    return kernels::batch_loss_parallel(net, batch);
}

Gradients Gradients::zeros_like(const MlpNetwork& net)
{
    return {Matrix(net.sizes.inputs, net.sizes.hidden), std::vector<double>(net.sizes.hidden, 0.0),
            Matrix(net.sizes.hidden, net.sizes.outputs), std::vector<double>(net.sizes.outputs, 0.0)};
}

Gradients gradients(const MlpNetwork& net, const Batch& batch)
{
    return kernels::loss_and_gradients_parallel(net, batch).grad;
}

void TrainConfig::validate() const
{
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw UsageError("learning_rate must be a non-negative finite number");
    }
    if (max_epochs < 0) {
        throw UsageError("max_epochs must be non-negative");
    }
    if (!(mse_stop >= 0.0)) {
        throw UsageError("mse_stop must be non-negative");
    }
}

namespace {

void descend(std::span<double> params, std::span<const double> grad, double rate)
{
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= rate * grad[i];
    }
}

} // namespace

TrainResult train(MlpNetwork net, const Batch& train_set, const std::optional<Batch>& val_set, const TrainConfig& config)
{
    config.validate();
    net.validate();
    check_batch(net, train_set);
    const bool has_val = val_set.has_value() && val_set->size() > 0;
    if (has_val) {
        check_batch(net, *val_set);
    }

    TrainResult result{std::move(net), {}};
    if (config.max_epochs == 0) {
        return result;
    }
    MlpNetwork& w = result.net;
    auto current = kernels::loss_and_gradients_parallel(w, train_set);
    if (!std::isfinite(current.loss)) {
        throw DivergenceError("initial training loss is not finite", 0);
    }
    const double outputs = static_cast<double>(w.sizes.outputs);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        descend(w.weights_input_hidden.data(), current.grad.weights_input_hidden.data(), config.learning_rate);
        descend(w.bias_hidden, current.grad.bias_hidden, config.learning_rate);
        descend(w.weights_hidden_output.data(), current.grad.weights_hidden_output.data(), config.learning_rate);
        descend(w.bias_output, current.grad.bias_output, config.learning_rate);

        current = kernels::loss_and_gradients_parallel(w, train_set);
        if (!std::isfinite(current.loss)) {
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch), epoch);
        }
        std::optional<double> val_loss;
        if (has_val) {
            val_loss = kernels::batch_loss_parallel(w, *val_set);
        }
        result.history.push_back({epoch, current.loss, val_loss});

        const double mse = 2.0 * current.loss / outputs;
        if (mse <= config.mse_stop) {
            break;
        }
    }
    return result;
}

void write_loss_csv(std::ostream& os, std::span<const EpochRecord> history)
{
    os << "epoch,train_loss,val_loss\n";
    for (const auto& h : history) {
        os << h.epoch << ',' << csv::exact(h.train_loss) << ',';
        if (h.val_loss) {
            os << csv::exact(*h.val_loss);
        }
        os << '\n';
    }
}

TargetScaling TargetScaling::fit(std::span<const double> values)
{
    if (values.empty()) {
        throw UsageError("cannot fit target scaling to an empty vector");
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return {*lo, *hi};
}

double TargetScaling::scale(double y) const
{
    if (max == min) {
        return 0.0;
    }
    return 2.0 * (y - min) / (max - min) - 1.0;
}

double TargetScaling::unscale(double s) const
{
    if (max == min) {
        return min;
    }
    return min + (s + 1.0) * 0.5 * (max - min);
}

namespace {

nlohmann::json rows_json(const Matrix& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    }
    return rows;
}

Matrix rows_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* name)
{
    if (!j.is_array() || j.size() != rows) {
        throw SchemaError(std::string("network field '") + name + "' has the wrong shape");
    }
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = j[r].get<std::vector<double>>();
        if (row.size() != cols) {
            throw SchemaError(std::string("network field '") + name + "' has the wrong shape");
        }
        std::copy(row.begin(), row.end(), m.row(r).begin());
    }
    return m;
}

} // namespace

nlohmann::json to_json(const MlpNetwork& net, const std::optional<TargetScaling>& scaling)
{
    nlohmann::json j = {
        {"layer_sizes", {net.sizes.inputs, net.sizes.hidden, net.sizes.outputs}},
        {"activation_hidden", std::string(to_string(net.activation_hidden))},
        {"activation_output", std::string(to_string(net.activation_output))},
        {"weights_input_hidden", rows_json(net.weights_input_hidden)},
        {"bias_hidden", net.bias_hidden},
        {"weights_hidden_output", rows_json(net.weights_hidden_output)},
        {"bias_output", net.bias_output},
    };
    if (scaling) {
        j["target_scaling"] = to_json(*scaling);
    }
    return j;
}

MlpNetwork network_from_json(const nlohmann::json& j)
{
    try {
        const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        if (sizes.size() != 3) {
            throw SchemaError("layer_sizes must have three entries");
        }
        MlpNetwork net;
        net.sizes = {sizes[0], sizes[1], sizes[2]};
        net.activation_hidden = parse_activation(j.at("activation_hidden").get<std::string>());
        net.activation_output = parse_activation(j.at("activation_output").get<std::string>());
        net.weights_input_hidden = rows_from_json(j.at("weights_input_hidden"), sizes[0], sizes[1], "weights_input_hidden");
        net.bias_hidden = j.at("bias_hidden").get<std::vector<double>>();
        net.weights_hidden_output = rows_from_json(j.at("weights_hidden_output"), sizes[1], sizes[2], "weights_hidden_output");
        net.bias_output = j.at("bias_output").get<std::vector<double>>();
        net.validate();
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed network: ") + e.what());
    } catch (const UsageError& e) {
        throw SchemaError(std::string("malformed network: ") + e.what());
    } catch (const ShapeError& e) {
        throw SchemaError(std::string("malformed network: ") + e.what());
    }
}

nlohmann::json to_json(const TargetScaling& scaling)
{
    return {{"min", scaling.min}, {"max", scaling.max}};
}

TargetScaling target_scaling_from_json(const nlohmann::json& j)
{
    try {
        return {j.at("min").get<double>(), j.at("max").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed target scaling: ") + e.what());
    }
}

nlohmann::json to_json(const TrainConfig& c)
{
    return {{"learning_rate", c.learning_rate}, {"max_epochs", c.max_epochs}, {"mse_stop", c.mse_stop}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j)
{
    TrainConfig c;
    auto read = [&](const char* key, auto& field) {
        if (!j.contains(key)) {
            return;
        }
        const auto& v = j.at(key);
        using T = std::decay_t<decltype(field)>;
        if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) {
                throw UsageError(std::string("train config key '") + key + "' must be a number");
            }
        } else {
            if (!v.is_number_integer()) {
                throw UsageError(std::string("train config key '") + key + "' must be an integer");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                    throw UsageError(std::string("train config key '") + key + "' must be non-negative");
                }
            }
        }
        field = v.get<T>();
    };
    read("learning_rate", c.learning_rate);
    read("max_epochs", c.max_epochs);
    read("mse_stop", c.mse_stop);
    read("seed", c.seed);
    c.validate();
    return c;
}

} // namespace fsoqos::mlp
