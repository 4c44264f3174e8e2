#include "fsoqos/pipeline.hpp"

#include <algorithm>
#include <string>

#include "fsoqos/error.hpp"

namespace fsoqos::pipeline {

nlohmann::json to_json(const HybridConfig& c)
{
    nlohmann::json j = mlp::to_json(c.train);
    j["hidden_width"] = c.hidden_width;
    j["activation_hidden"] = std::string(mlp::to_string(c.activation_hidden));
    j["activation_output"] = std::string(mlp::to_string(c.activation_output));
    j["pca_mode"] = std::string(pca::to_string(c.pca_mode));
    j["selection"] = pca::to_string(c.selection);
    return j;
}

HybridConfig hybrid_config_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw UsageError("train config must be a JSON object");
    }
    static constexpr std::string_view kKeys[] = {"learning_rate",     "max_epochs",        "mse_stop",
                                                 "seed",              "hidden_width",      "activation_hidden",
                                                 "activation_output", "pca_mode",          "selection"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
            throw UsageError("unknown train config key '" + key + "'");
        }
    }
    HybridConfig c;
    c.train = mlp::train_config_from_json(j);
    auto text = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key)) {
            return std::nullopt;
        }
        if (!j.at(key).is_string()) {
            throw UsageError(std::string("train config key '") + key + "' must be a string");
        }
        return j.at(key).get<std::string>();
    };
    if (j.contains("hidden_width")) {
        const auto& v = j.at("hidden_width");
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
            throw UsageError("train config key 'hidden_width' must be a positive integer");
        }
        c.hidden_width = v.get<std::size_t>();
    }
    if (auto s = text("activation_hidden")) c.activation_hidden = mlp::parse_activation(*s);
    if (auto s = text("activation_output")) c.activation_output = mlp::parse_activation(*s);
    if (auto s = text("pca_mode")) c.pca_mode = pca::parse_mode(*s);
    if (auto s = text("selection")) c.selection = pca::parse_selection_rule(*s);
    return c;
}

namespace {

const std::vector<double>& require_targets(const dataset::ObservationTable& t, const char* which)
{
    if (!t.target_snr_db) {
        throw SchemaError(std::string(which) + " data has no SNR target column");
    }
    return *t.target_snr_db;
}

mlp::Batch make_batch(const HybridModel& model, const dataset::ObservationTable& table)
{
    const auto& y = require_targets(table, "training");
    mlp::Batch b{scores(model, table), Matrix(table.size(), 1)};
    for (std::size_t s = 0; s < table.size(); ++s) {
        b.targets(s, 0) = model.target_scaling.scale(y[s]);
    }
    return b;
}

} // namespace

Matrix scores(const HybridModel& model, const dataset::ObservationTable& table)
{
    return pca::project(model.pca, table.features, model.k_selected).transposed();
}

FitResult fit_hybrid(const dataset::ObservationTable& train,
                     const dataset::ObservationTable& val,
                     const HybridConfig& config)
{
    train.validate();
    const auto& y = require_targets(train, "training");
    config.train.validate();
    if (config.hidden_width < 1) {
        throw UsageError("hidden_width must be positive");
    }

    HybridModel model;
    model.pca = pca::fit_pca(train.features, config.pca_mode);
    model.k_selected = pca::select_components(model.pca, config.selection);
    model.target_scaling = mlp::TargetScaling::fit(y);
    model.net = mlp::init_network({model.k_selected, config.hidden_width, 1}, config.train.seed,
                                  config.activation_hidden, config.activation_output);

    const mlp::Batch train_batch = make_batch(model, train);
    std::optional<mlp::Batch> val_batch;
    if (val.size() > 0) {
        val.validate();
        require_targets(val, "validation");
        val_batch = make_batch(model, val);
    }

    auto trained = mlp::train(std::move(model.net), train_batch, val_batch, config.train);
    model.net = std::move(trained.net);
    model.provenance.dataset_hash = dataset::content_hash(train);
    model.provenance.seeds = {{"init", config.train.seed}};
    model.provenance.configs = {{"hybrid", to_json(config)}};
    return {std::move(model), std::move(trained.history)};
}

std::vector<double> predict(const HybridModel& model, const dataset::ObservationTable& observations)
{
    if (observations.features.variable_names != model.pca.variable_names) {
        throw ShapeError("observation variables do not match the fitted model schema");
    }
    const Matrix x = scores(model, observations);
    std::vector<double> out(x.rows());
    for (std::size_t s = 0; s < x.rows(); ++s) {
        out[s] = model.target_scaling.unscale(mlp::forward(model.net, x.row(s)).output[0]);
    }
    return out;
}

metrics::MetricsReport evaluate_hybrid(const HybridModel& model, const dataset::ObservationTable& test)
{
    const auto& actual = require_targets(test, "test");
    const auto predicted = predict(model, test);
    return metrics::evaluate(actual, predicted, false);
}

nlohmann::json to_json(const HybridModel& m)
{
    return {
        {"format", "fsoqos-hybrid-model"},
        {"version", 1},
        {"pca", pca::to_json(m.pca)},
        {"k_selected", m.k_selected},
        {"net", mlp::to_json(m.net)},
        {"target_scaling", mlp::to_json(m.target_scaling)},
        {"provenance",
         {{"dataset_hash", m.provenance.dataset_hash}, {"seeds", m.provenance.seeds}, {"configs", m.provenance.configs}}},
    };
}

HybridModel hybrid_model_from_json(const nlohmann::json& j)
{
    try {
        if (j.at("format").get<std::string>() != "fsoqos-hybrid-model") {
            throw SchemaError("not a hybrid model document");
        }
        HybridModel m;
        m.pca = pca::pca_model_from_json(j.at("pca"));
        m.k_selected = j.at("k_selected").get<std::size_t>();
        m.net = mlp::network_from_json(j.at("net"));
        m.target_scaling = mlp::target_scaling_from_json(j.at("target_scaling"));
        const auto& p = j.at("provenance");
        m.provenance.dataset_hash = p.at("dataset_hash").get<std::string>();
        m.provenance.seeds = p.at("seeds");
        m.provenance.configs = p.at("configs");
        if (m.k_selected < 1 || m.k_selected > m.pca.dimension() || m.net.sizes.inputs != m.k_selected) {
            throw SchemaError("network input width disagrees with the selected component count");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed hybrid model: ") + e.what());
    }
}

} // namespace fsoqos::pipeline
