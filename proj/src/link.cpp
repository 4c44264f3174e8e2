#include "fsoqos/link.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "fsoqos/csv_format.hpp"
#include "fsoqos/error.hpp"

namespace fsoqos::link {

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void require_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(name) + " must be positive");
    }
}

void require_non_negative(double v, const char* name)
{
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(name) + " must be non-negative");
    }
}

void require_efficiency(double v, const char* name)
{
    if (!(v > 0.0 && v <= 1.0)) {
        throw DomainError(std::string(name) + " must lie in (0, 1]");
    }
}

} // namespace

void LinkParams::validate() const
{
    if (!std::isfinite(power_tx_dbm) || !std::isfinite(gain_tx_db) || !std::isfinite(gain_rx_db)) {
        throw DomainError("power and gain fields must be finite");
    }
    if (!(wavelength_m > 1e-7 && wavelength_m < 1e-5)) {
        throw DomainError("wavelength_m must lie in (1e-7, 1e-5)");
    }
    require_positive(bandwidth_hz, "bandwidth_hz");
    require_positive(ambient_temp_k, "ambient_temp_k");
    require_positive(boltzmann_j_per_k, "boltzmann_j_per_k");
    require_non_negative(noise_figure_db, "noise_figure_db");
    require_non_negative(fade_margin_db, "fade_margin_db");

    require_positive(aux.divergence_mrad, "divergence_mrad");
    require_efficiency(aux.tx_efficiency, "tx_efficiency");
    require_efficiency(aux.rx_efficiency, "rx_efficiency");
    require_positive(aux.data_rate, "data_rate");
    require_positive(aux.load_ohm, "load_ohm");
    require_positive(aux.dark_current_na, "dark_current_na");
    require_positive(aux.responsivity_a_per_w, "responsivity_a_per_w");
    require_positive(aux.elec_bandwidth_ghz, "elec_bandwidth_ghz");
    require_positive(aux.photodiode_temp_k, "photodiode_temp_k");
    if (!std::isfinite(aux.rx_sensitivity_dbm)) {
        throw DomainError("rx_sensitivity_dbm must be finite");
    }
}

double snr_db(const LinkParams& p, double total_attenuation_db)
{
    p.validate();
    if (!(total_attenuation_db >= 0.0)) {
        throw DomainError("total attenuation must be non-negative");
    }
    const double spreading = 20.0 * std::log10(4.0 * std::numbers::pi / p.wavelength_m);
    const double thermal = 10.0 * std::log10(p.bandwidth_hz * p.ambient_temp_k * p.boltzmann_j_per_k);
    const double q = p.power_tx_dbm - 30.0
                   + kTransmitGainSign * 10.0 * std::log10(db_to_linear(p.gain_tx_db))
                   + 10.0 * std::log10(db_to_linear(p.gain_rx_db))
                   - spreading - thermal - total_attenuation_db - p.noise_figure_db - p.fade_margin_db;
    if (!std::isfinite(q)) {
        throw NumericError("SNR evaluated to a non-finite value");
    }
    return q;
}

std::vector<SnrRow> snr_sweep(const LinkParams& params, std::span<const double> attenuations_db)
{
    if (attenuations_db.empty()) {
        throw UsageError("SNR sweep needs at least one attenuation value");
    }
    std::vector<SnrRow> rows;
    rows.reserve(attenuations_db.size());
    for (double tau : attenuations_db) {
        rows.push_back({tau, snr_db(params, tau)});
    }
    return rows;
}

std::vector<SnrVisibilityRow> snr_sweep(const LinkParams& params,
                                        std::span<const double> visibilities_km,
                                        std::span<const double> wavelengths_nm,
                                        atmos::SizeModel model,
                                        const atmos::SweepGeometry& geometry)
{
    const auto atten = atmos::attenuation_sweep(visibilities_km, wavelengths_nm, model, geometry);
    std::vector<SnrVisibilityRow> rows;
    rows.reserve(atten.size());
    for (const auto& a : atten) {
        LinkParams p = params;
        p.wavelength_m = a.wavelength_nm * 1e-9;
        rows.push_back({a.visibility_km, a.wavelength_nm, a.atten_db, snr_db(p, a.atten_db)});
    }
    return rows;
}

void write_snr_csv(std::ostream& os, std::span<const SnrRow> rows)
{
    os << "tau_db,snr_db\n";
    for (const auto& r : rows) {
        os << csv::exact(r.tau_db) << ',' << csv::exact(r.snr_db) << '\n';
    }
}

void write_snr_csv(std::ostream& os, std::span<const SnrVisibilityRow> rows)
{
    os << "visibility_km,wavelength_nm,tau_db,snr_db\n";
    for (const auto& r : rows) {
        os << csv::fixed6(r.visibility_km) << ',' << csv::fixed6(r.wavelength_nm) << ','
           << csv::exact(r.tau_db) << ',' << csv::exact(r.snr_db) << '\n';
    }
}

namespace {

#define FSOQOS_LINK_FIELDS(X)                                                                      \
    X(power_tx_dbm) X(gain_tx_db) X(gain_rx_db) X(wavelength_m) X(bandwidth_hz) X(ambient_temp_k)   \
        X(boltzmann_j_per_k) X(noise_figure_db) X(fade_margin_db)

#define FSOQOS_AUX_FIELDS(X)                                                                       \
    X(divergence_mrad) X(tx_efficiency) X(rx_efficiency) X(rx_sensitivity_dbm) X(data_rate)        \
        X(load_ohm) X(dark_current_na) X(responsivity_a_per_w) X(elec_bandwidth_ghz)                \
            X(photodiode_temp_k)

double number_at(const nlohmann::json& j, const std::string& key)
{
    if (!j.is_number()) {
        throw UsageError("link config key '" + key + "' must be a number");
    }
    return j.get<double>();
}

} // namespace

nlohmann::json to_json(const LinkParams& p)
{
    nlohmann::json j = nlohmann::json::object();
#define X(name) j[#name] = p.name;
    FSOQOS_LINK_FIELDS(X)
#undef X
    nlohmann::json aux = nlohmann::json::object();
#define X(name) aux[#name] = p.aux.name;
    FSOQOS_AUX_FIELDS(X)
#undef X
    j["aux"] = std::move(aux);
    return j;
}

LinkParams link_params_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw UsageError("link config must be a JSON object");
    }
    LinkParams p;
    for (const auto& [key, value] : j.items()) {
        bool known = false;
#define X(name)                                                                                    \
    if (key == #name) {                                                                            \
        p.name = number_at(value, key);                                                            \
        known = true;                                                                              \
    }
        FSOQOS_LINK_FIELDS(X)
#undef X
        if (key == "aux") {
            if (!value.is_object()) {
                throw UsageError("link config key 'aux' must be an object");
            }
            for (const auto& [akey, avalue] : value.items()) {
                bool aknown = false;
#define X(name)                                                                                    \
    if (akey == #name) {                                                                           \
        p.aux.name = number_at(avalue, "aux." + akey);                                             \
        aknown = true;                                                                             \
    }
                FSOQOS_AUX_FIELDS(X)
#undef X
                if (!aknown) {
                    throw UsageError("unknown link config key 'aux." + akey + "'");
                }
            }
            known = true;
        }
        if (!known) {
            throw UsageError("unknown link config key '" + key + "'");
        }
    }
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw UsageError(std::string("invalid link config: ") + e.what());
    }
    return p;
}

} // namespace fsoqos::link
