#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace fsoqos::atmos {

// -ln(0.02): extinction over one visibility length at the 2% contrast threshold.
inline constexpr double kVisibilityConstant = 3.9120230054281460;
// 10 log10(e), converts Np to dB.
inline constexpr double kNeperToDb = 4.3429448190325182;
inline constexpr double kDefaultReferenceWavelengthNm = 550.0;

struct OpticalPath {
    double wavelength_nm = 1550.0;
    double visibility_km = 1.0;
    double length_km = 1.0;
    double reference_wavelength_nm = kDefaultReferenceWavelengthNm;

    // Throws DomainError when a field is out of range.
    void validate() const;
};

enum class SizeModel { Kruse, Kim };

SizeModel parse_size_model(std::string_view name);
std::string_view to_string(SizeModel model);

// Particle size exponent q(V). Upper branch bounds are inclusive.
double kruse_q(double visibility_km);
double kim_q(double visibility_km);
double size_exponent(double visibility_km, SizeModel model);

// beta = (3.912 / V) * (lambda / lambda_ref)^(-q(V)), in Np/km.
double extinction_coefficient(const OpticalPath& path, SizeModel model);

// exp(-beta * L)
double transmittance(const OpticalPath& path, SizeModel model);

// 10 log10(e) * beta * L
double attenuation_db(const OpticalPath& path, SizeModel model);

struct AttenuationRow {
    double visibility_km;
    double wavelength_nm;
    double beta_np_per_km;
    double atten_db;
};

struct SweepGeometry {
    double length_km = 1.0;
    double reference_wavelength_nm = kDefaultReferenceWavelengthNm;
};

// Rows ordered visibility-major, wavelength-minor.
std::vector<AttenuationRow> attenuation_sweep(std::span<const double> visibilities_km,
                                              std::span<const double> wavelengths_nm,
                                              SizeModel model,
                                              const SweepGeometry& geometry = {});

// `steps` evenly spaced points from lo to hi inclusive; steps == 1 yields {lo}.
std::vector<double> linspace(double lo, double hi, int steps);

void write_attenuation_csv(std::ostream& os, std::span<const AttenuationRow> rows);

} // namespace fsoqos::atmos
