#include "fsoqos/atmos.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "fsoqos/csv_format.hpp"
#include "fsoqos/error.hpp"

namespace fsoqos::atmos {

namespace {

void require_visibility(double v)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError("visibility must be positive and finite, got " + std::to_string(v));
    }
}

} // namespace

void OpticalPath::validate() const
{
    if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm)) {
        throw DomainError("wavelength_nm must be positive");
    }
    require_visibility(visibility_km);
    if (!(length_km >= 0.0) || !std::isfinite(length_km)) {
        throw DomainError("length_km must be non-negative");
    }
    if (!(reference_wavelength_nm > 0.0) || !std::isfinite(reference_wavelength_nm)) {
        throw DomainError("reference_wavelength_nm must be positive");
    }
}

SizeModel parse_size_model(std::string_view name)
{
    if (name == "kruse" || name == "Kruse") {
        return SizeModel::Kruse;
    }
    if (name == "kim" || name == "Kim") {
        return SizeModel::Kim;
    }
    throw UsageError("unknown size model '" + std::string(name) + "' (expected kruse or kim)");
}

std::string_view to_string(SizeModel model)
{
    return model == SizeModel::Kruse ? "kruse" : "kim";
}

double kruse_q(double v)
{
    require_visibility(v);
    if (v > 50.0) {
        return 1.6;
    }
    if (v > 6.0) {
        return 1.3;
    }
    return 0.585 * std::cbrt(v);
}

double kim_q(double v)
{
    require_visibility(v);
    if (v > 50.0) {
        return 1.6;
    }
    if (v > 6.0) {
        return 1.3;
    }
    if (v > 1.0) {
        return 0.16 * v + 0.34;
    }
    if (v > 0.5) {
        return v - 0.5;
    }
    return 0.0;
}

double size_exponent(double v, SizeModel model)
{
    return model == SizeModel::Kruse ? kruse_q(v) : kim_q(v);
}

double extinction_coefficient(const OpticalPath& path, SizeModel model)
{
    path.validate();
    const double q = size_exponent(path.visibility_km, model);
    return kVisibilityConstant / path.visibility_km
         * std::pow(path.wavelength_nm / path.reference_wavelength_nm, -q);
}

double transmittance(const OpticalPath& path, SizeModel model)
{
    return std::exp(-extinction_coefficient(path, model) * path.length_km);
}

double attenuation_db(const OpticalPath& path, SizeModel model)
{
    return kNeperToDb * extinction_coefficient(path, model) * path.length_km;
}

std::vector<AttenuationRow> attenuation_sweep(std::span<const double> visibilities_km,
                                              std::span<const double> wavelengths_nm,
                                              SizeModel model,
                                              const SweepGeometry& geometry)
{
    if (visibilities_km.empty() || wavelengths_nm.empty()) {
        throw UsageError("attenuation sweep needs at least one visibility and one wavelength");
    }
    for (double v : visibilities_km) {
        if (!(v > 0.0)) {
            throw UsageError("sweep visibilities must be strictly positive");
        }
    }
    for (double w : wavelengths_nm) {
        if (!(w > 0.0)) {
            throw UsageError("sweep wavelengths must be strictly positive");
        }
    }

    // Nothing may throw inside the parallel region.
    OpticalPath{wavelengths_nm[0], visibilities_km[0], geometry.length_km, geometry.reference_wavelength_nm}
        .validate();

    const std::size_t nw = wavelengths_nm.size();
    const auto total = static_cast<long long>(visibilities_km.size() * nw);
    std::vector<AttenuationRow> rows(static_cast<std::size_t>(total));

#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < total; ++idx) {
        const auto i = static_cast<std::size_t>(idx);
        OpticalPath path{wavelengths_nm[i % nw], visibilities_km[i / nw], geometry.length_km,
                         geometry.reference_wavelength_nm};
        const double beta = extinction_coefficient(path, model);
        rows[i] = {path.visibility_km, path.wavelength_nm, beta, kNeperToDb * beta * path.length_km};
    }
    return rows;
}

std::vector<double> linspace(double lo, double hi, int steps)
{
    if (steps < 1) {
        throw UsageError("steps must be at least 1");
    }
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
        throw UsageError("range must satisfy min <= max");
    }
    std::vector<double> out(static_cast<std::size_t>(steps));
    if (steps == 1) {
        out[0] = lo;
        return out;
    }
    const double step = (hi - lo) / (steps - 1);
    for (int i = 0; i < steps; ++i) {
        out[static_cast<std::size_t>(i)] = lo + step * i;
    }
    out.back() = hi;
    return out;
}

void write_attenuation_csv(std::ostream& os, std::span<const AttenuationRow> rows)
{
    os << "visibility_km,wavelength_nm,beta_np_per_km,atten_db\n";
    for (const auto& r : rows) {
        os << csv::fixed6(r.visibility_km) << ',' << csv::fixed6(r.wavelength_nm) << ','
           << csv::fixed6(r.beta_np_per_km) << ',' << csv::fixed6(r.atten_db) << '\n';
    }
}

} // namespace fsoqos::atmos
