#include "fsoqos/metrics.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "fsoqos/csv_format.hpp"
#include "fsoqos/error.hpp"

namespace fsoqos::metrics {

MetricsReport evaluate(std::span<const double> actual, std::span<const double> predicted, bool require_mape)
{
    if (actual.size() != predicted.size()) {
        throw ShapeError("actual and predicted lengths differ (" + std::to_string(actual.size()) + " vs "
                         + std::to_string(predicted.size()) + ")");
    }
    if (actual.empty()) {
        throw ShapeError("metrics need at least one sample");
    }
    const std::size_t n = actual.size();
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double pct_sum = 0.0;
    bool mape_defined = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = actual[i] - predicted[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        if (actual[i] == 0.0) {
            if (require_mape) {
                throw DomainError("MAPE undefined: actual value at index " + std::to_string(i) + " is zero");
            }
            mape_defined = false;
        } else {
            pct_sum += std::abs(e / actual[i]);
        }
    }
    MetricsReport r;
    const double inv = 1.0 / static_cast<double>(n);
    if (mape_defined) {
        r.mape = pct_sum * inv;
    }
    r.mae = abs_sum * inv;
    r.mse = sq_sum * inv;
    r.rmse = std::sqrt(r.mse);
    r.sample_count = n;
    return r;
}

nlohmann::json to_json(const MetricsReport& r)
{
    nlohmann::json j;
    j["mape"] = r.mape ? nlohmann::json(*r.mape) : nlohmann::json(nullptr);
    j["mae"] = r.mae;
    j["rmse"] = r.rmse;
    j["mse"] = r.mse;
    j["sample_count"] = r.sample_count;
    return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j)
{
    try {
        MetricsReport r;
        if (!j.at("mape").is_null()) {
            r.mape = j.at("mape").get<double>();
        }
        r.mae = j.at("mae").get<double>();
        r.rmse = j.at("rmse").get<double>();
        r.mse = j.at("mse").get<double>();
        r.sample_count = j.at("sample_count").get<std::size_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed metrics report: ") + e.what());
    }
}

void write_metrics_csv(std::ostream& os, const MetricsReport& r)
{
    os << "mape,mae,rmse,mse,sample_count\n";
    os << (r.mape ? csv::exact(*r.mape) : std::string()) << ',' << csv::exact(r.mae) << ','
       << csv::exact(r.rmse) << ',' << csv::exact(r.mse) << ',' << r.sample_count << '\n';
}

} // namespace fsoqos::metrics
