#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

#include "fsoqos/dataset.hpp"
#include "fsoqos/metrics.hpp"
#include "fsoqos/mlp.hpp"
#include "fsoqos/pca.hpp"

namespace fsoqos::pipeline {

struct HybridConfig {
    pca::Mode pca_mode = pca::Mode::Correlation;
    pca::SelectionRule selection = pca::SelectionRule::kaiser();
    std::size_t hidden_width = 10;
    mlp::Activation activation_hidden = mlp::Activation::Tanh;
    mlp::Activation activation_output = mlp::Activation::Linear;
    mlp::TrainConfig train;
};

nlohmann::json to_json(const HybridConfig& config);
// Accepts the TrainConfig keys plus hidden_width, activation_hidden,
// activation_output, pca_mode and selection.
HybridConfig hybrid_config_from_json(const nlohmann::json& j);

struct Provenance {
    std::string dataset_hash;
    nlohmann::json seeds = nlohmann::json::object();
    nlohmann::json configs = nlohmann::json::object();
};

struct HybridModel {
    pca::PcaModel pca;
    std::size_t k_selected = 1;
    mlp::MlpNetwork net;
    mlp::TargetScaling target_scaling;
    Provenance provenance;
};

struct FitResult {
    HybridModel model;
    std::vector<mlp::EpochRecord> history;
};

// PCA and target scaling are fitted on `train` only. `val` may be empty,
// in which case the history carries no validation loss.
FitResult fit_hybrid(const dataset::ObservationTable& train,
                     const dataset::ObservationTable& val,
                     const HybridConfig& config);

// Projected PC scores of the table as a samples x k batch input.
Matrix scores(const HybridModel& model, const dataset::ObservationTable& table);

std::vector<double> predict(const HybridModel& model, const dataset::ObservationTable& observations);

metrics::MetricsReport evaluate_hybrid(const HybridModel& model, const dataset::ObservationTable& test);

nlohmann::json to_json(const HybridModel& model);
HybridModel hybrid_model_from_json(const nlohmann::json& j);

} // namespace fsoqos::pipeline
