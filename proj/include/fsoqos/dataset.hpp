#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fsoqos/atmos.hpp"
#include "fsoqos/link.hpp"
#include "fsoqos/pca.hpp"

namespace fsoqos::dataset {

enum class Slot { H08, H14, H20 };

Slot parse_slot(std::string_view text); // "08h00", "14h00", "20h00"
std::string_view to_string(Slot slot);

struct Timestamp {
    std::string date; // YYYY-MM-DD
    Slot slot = Slot::H08;

    std::string to_string() const; // "YYYY-MM-DD 08h00"

    friend bool operator==(const Timestamp&, const Timestamp&) = default;
    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct ObservationTable {
    std::string station;
    std::vector<Timestamp> timestamps;
    pca::DataMatrix features;
    std::optional<std::vector<double>> target_snr_db;
    std::size_t visibility_row = 0;
    std::size_t dropped_count = 0;

    std::size_t size() const noexcept { return timestamps.size(); }
    std::span<const double> visibility() const { return features.values.row(visibility_row); }

    // Throws SchemaError on inconsistent shapes or non-positive visibility.
    void validate() const;

    // Observations at the given column indices, in that order.
    ObservationTable subset(std::span<const std::size_t> columns) const;
};

struct Schema {
    std::string visibility_column = "visibility_km";
    std::string target_column = "snr_db";
    // When set, rows from other stations are skipped. When unset, the file
    // must hold a single station.
    std::optional<std::string> station;
};

// Header: station,date,slot,<feature columns>[,<target column>].
// Rows with an empty field are dropped and counted.
ObservationTable load_observations(std::istream& source, const Schema& schema = {});
ObservationTable load_observations_file(const std::string& path, const Schema& schema = {});

void save_observations(std::ostream& os, const ObservationTable& table, const Schema& schema = {});

struct SynthConfig {
    std::size_t n_features = 9;
    std::size_t m_observations = 2000;
    std::vector<double> factor_loadings; // empty -> 0.9 for every feature
    double noise_std = 0.45;
    double visibility_min_km = 0.5;
    double visibility_max_km = 20.0;
    std::uint64_t seed = 7;
    std::string station = "SYNTH";
    std::string start_date = "2010-01-01";

    void validate() const;
    std::vector<double> loadings() const;
};

// One-factor model z_i = loading_i f + noise_std e_i with f, e ~ N(0, 1).
// Row 0 is visibility, a monotone map of z_0 onto the configured range.
ObservationTable synthesize_weather(const SynthConfig& config);

nlohmann::json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& j);

struct TargetConfig {
    link::LinkParams link;
    atmos::SizeModel model = atmos::SizeModel::Kruse;
    double length_km = 1.0;
    double reference_wavelength_nm = atmos::kDefaultReferenceWavelengthNm;
    double noise_std_db = 0.0;
    std::uint64_t seed = 11;
};

nlohmann::json to_json(const TargetConfig& config);
TargetConfig target_config_from_json(const nlohmann::json& j);

// target[t] = snr_db(link, attenuation_db(lambda, L, V_t)) + N(0, noise_std_db^2).
// The wavelength is taken from link.wavelength_m.
ObservationTable attach_snr_target(ObservationTable table, const TargetConfig& config);

struct SplitFractions {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

struct Partitions {
    ObservationTable train;
    ObservationTable validation;
    ObservationTable test;
};

// Seeded shuffle then contiguous partition. Validation and test sizes are
// floor(fraction * m); the remainder goes to training.
Partitions split(const ObservationTable& table, const SplitFractions& fractions, std::uint64_t seed);

// FNV-1a over the canonical CSV serialisation.
std::string content_hash(const ObservationTable& table);

} // namespace fsoqos::dataset
