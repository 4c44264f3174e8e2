#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>

#include "json.hpp"

namespace fsoqos::metrics {

struct MetricsReport {
    std::optional<double> mape; // fraction, not percent
    double mae = 0.0;
    double rmse = 0.0;
    double mse = 0.0;
    std::size_t sample_count = 0;
};

// With require_mape, a zero actual value throws DomainError naming its
// index; otherwise MAPE is left empty when any actual value is zero.
MetricsReport evaluate(std::span<const double> actual,
                       std::span<const double> predicted,
                       bool require_mape = true);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);
void write_metrics_csv(std::ostream& os, const MetricsReport& report);

} // namespace fsoqos::metrics
