#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"

#include "fsoqos/atmos.hpp"

namespace fsoqos::link {

// Sign applied to the transmit-gain term. The link equation is implemented
// as published, which subtracts the transmit gain; set to +1.0 for the
// conventional budget.
inline constexpr double kTransmitGainSign = -1.0;

// Operating parameters carried for provenance only; they do not enter the
// SNR expression.
struct AuxParams {
    double divergence_mrad = 3.0;
    double tx_efficiency = 0.8;
    double rx_efficiency = 0.8;
    double rx_sensitivity_dbm = -40.0;
    double data_rate = 1e9;
    double load_ohm = 1000.0;
    double dark_current_na = 10.0;
    double responsivity_a_per_w = 0.7;
    double elec_bandwidth_ghz = 0.5;
    double photodiode_temp_k = 298.0;

    friend bool operator==(const AuxParams&, const AuxParams&) = default;
};

struct LinkParams {
    double power_tx_dbm = 20.0; // 100 mW
    double gain_tx_db = 0.0;
    double gain_rx_db = 0.0;
    double wavelength_m = 1550e-9;
    double bandwidth_hz = 1e6;
    double ambient_temp_k = 298.0;
    double boltzmann_j_per_k = 1.380649e-23;
    double noise_figure_db = 0.0;
    double fade_margin_db = 0.0;
    AuxParams aux;

    void validate() const;

    friend bool operator==(const LinkParams&, const LinkParams&) = default;
};

double snr_db(const LinkParams& params, double total_attenuation_db);

struct SnrRow {
    double tau_db;
    double snr_db;
};

// One row per attenuation value, in input order.
std::vector<SnrRow> snr_sweep(const LinkParams& params, std::span<const double> attenuations_db);

struct SnrVisibilityRow {
    double visibility_km;
    double wavelength_nm;
    double tau_db;
    double snr_db;
};

// Attenuation from the atmospheric model at each (visibility, wavelength);
// the wavelength also replaces params.wavelength_m in the spreading term.
std::vector<SnrVisibilityRow> snr_sweep(const LinkParams& params,
                                        std::span<const double> visibilities_km,
                                        std::span<const double> wavelengths_nm,
                                        atmos::SizeModel model,
                                        const atmos::SweepGeometry& geometry = {});

void write_snr_csv(std::ostream& os, std::span<const SnrRow> rows);
void write_snr_csv(std::ostream& os, std::span<const SnrVisibilityRow> rows);

nlohmann::json to_json(const LinkParams& params);
// Missing keys keep their defaults. Unknown or mistyped keys throw
// UsageError naming the key.
LinkParams link_params_from_json(const nlohmann::json& j);

} // namespace fsoqos::link
