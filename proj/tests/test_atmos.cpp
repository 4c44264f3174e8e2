#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "fsoqos/atmos.hpp"
#include "fsoqos/error.hpp"

using namespace fsoqos;
using namespace fsoqos::atmos;

TEST_CASE("kruse_q branches")
{
    CHECK(kruse_q(60.0) == 1.6);
    CHECK(kruse_q(10.0) == 1.3);
    CHECK(kruse_q(1.0) == doctest::Approx(0.585).epsilon(1e-15));
    // upper bounds inclusive
    CHECK(kruse_q(50.0) == 1.3);
    CHECK(kruse_q(6.0) == doctest::Approx(0.585 * std::cbrt(6.0)));
    CHECK_THROWS_AS(kruse_q(0.0), DomainError);
    CHECK_THROWS_AS(kruse_q(-1.0), DomainError);
}

TEST_CASE("kim_q branches and continuity")
{
    CHECK(kim_q(0.4) == 0.0);
    CHECK(kim_q(1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kim_q(10.0) == 1.3);
    CHECK(kim_q(60.0) == 1.6);
    CHECK_THROWS_AS(kim_q(0.0), DomainError);

    // Adjacent branches agree at 0.5, 1 and 6.
    CHECK(kim_q(0.5) == 0.0);
    CHECK(0.5 - 0.5 == 0.0);
    CHECK(kim_q(1.0) == doctest::Approx(0.16 * 1.0 + 0.34));
    CHECK(kim_q(6.0) == doctest::Approx(1.3));
    for (double v : {0.5, 1.0, 6.0}) {
        CHECK(kim_q(v + 1e-9) == doctest::Approx(kim_q(v)).epsilon(1e-7));
    }
    // Known jump at 50 km.
    CHECK(kim_q(50.0) == 1.3);
    CHECK(kim_q(50.0 + 1e-9) == 1.6);
}

TEST_CASE("extinction coefficient reference values")
{
    CHECK(extinction_coefficient({1550, 1, 1}, SizeModel::Kruse) == doctest::Approx(2.134).epsilon(0.005 / 2.134));
    CHECK(extinction_coefficient({1550, 1, 1}, SizeModel::Kruse) == doctest::Approx(2.1338777252437113).epsilon(1e-12));
    CHECK(extinction_coefficient({760, 1, 1}, SizeModel::Kruse) == doctest::Approx(3.238).epsilon(0.005 / 3.238));
    for (auto model : {SizeModel::Kruse, SizeModel::Kim}) {
        CHECK(extinction_coefficient({550, 2, 1}, model) == doctest::Approx(1.956).epsilon(1e-4));
    }
    CHECK_THROWS_AS(extinction_coefficient({1550, 0, 1}, SizeModel::Kruse), DomainError);
    CHECK_THROWS_AS(extinction_coefficient({-1, 1, 1}, SizeModel::Kim), DomainError);
    CHECK_THROWS_AS(extinction_coefficient({1550, 1, -1}, SizeModel::Kim), DomainError);
}

TEST_CASE("transmittance and dB attenuation")
{
    CHECK(transmittance({1550, 3, 0}, SizeModel::Kruse) == 1.0);
    for (double v : {0.5, 1.0, 5.0, 20.0, 70.0}) {
        CHECK(std::abs(transmittance({550, v, v}, SizeModel::Kim) - 0.02) < 1e-12);
    }
    CHECK(transmittance({1550, 1, 1}, SizeModel::Kruse) == doctest::Approx(0.1183).epsilon(1e-3));

    CHECK(attenuation_db({1550, 1, 0}, SizeModel::Kruse) == 0.0);
    CHECK(attenuation_db({550, 1, 1}, SizeModel::Kruse) == doctest::Approx(16.99).epsilon(1e-3));
    CHECK(attenuation_db({1550, 1, 1}, SizeModel::Kruse) == doctest::Approx(9.27).epsilon(1e-3));
}

TEST_CASE("monotonicity in visibility and length")
{
    const auto vis = linspace(0.05, 120.0, 600);
    for (auto model : {SizeModel::Kruse, SizeModel::Kim}) {
        for (double lambda : {550.0, 760.0, 860.0, 960.0, 1260.0, 1550.0}) {
            double prev_beta = INFINITY;
            double prev_db = INFINITY;
            for (double v : vis) {
                const OpticalPath p{lambda, v, 0.7};
                const double beta = extinction_coefficient(p, model);
                const double db = attenuation_db(p, model);
                CHECK(beta < prev_beta);
                CHECK(db < prev_db);
                CHECK(db >= 0.0);
                const double t = transmittance(p, model);
                CHECK((t > 0.0 && t <= 1.0));
                prev_beta = beta;
                prev_db = db;
            }
            double prev = -1.0;
            for (double len : {0.0, 0.1, 0.5, 1.0}) {
                const double db = attenuation_db({lambda, 2.0, len}, model);
                CHECK(db >= prev);
                prev = db;
            }
        }
    }
}

TEST_CASE("extinction decreases with wavelength where q > 0")
{
    for (auto model : {SizeModel::Kruse, SizeModel::Kim}) {
        for (double v : {0.51, 0.8, 1.0, 3.0, 6.0, 20.0, 60.0}) {
            double prev = INFINITY;
            for (double lambda : {600.0, 760.0, 860.0, 960.0, 1260.0, 1550.0}) {
                const double beta = extinction_coefficient({lambda, v, 1}, model);
                CHECK(beta < prev);
                prev = beta;
            }
        }
    }
}

TEST_CASE("relative decline 760 to 1550 nm at 1 km")
{
    const double b760 = extinction_coefficient({760, 1, 1}, SizeModel::Kruse);
    const double b1550 = extinction_coefficient({1550, 1, 1}, SizeModel::Kruse);
    CHECK(1.0 - b1550 / b760 == doctest::Approx(1.0 - std::pow(1550.0 / 760.0, -0.585)).epsilon(1e-12));
    CHECK(std::abs((1.0 - b1550 / b760) * 100.0 - 34.2) < 0.3);
}

TEST_CASE("attenuation sweep")
{
    const std::vector<double> one{1.0};
    const std::vector<double> l1550{1550.0};
    auto rows = attenuation_sweep(one, l1550, SizeModel::Kruse);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].beta_np_per_km == doctest::Approx(2.134).epsilon(0.0025));

    const std::vector<double> v12{1.0, 2.0};
    const std::vector<double> l2{760.0, 1550.0};
    rows = attenuation_sweep(v12, l2, SizeModel::Kim);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].visibility_km == 1.0);
    CHECK(rows[1].wavelength_nm == 1550.0);
    CHECK(rows[2].visibility_km == 2.0);

    const auto vis = linspace(1.0, 10.0, 10);
    rows = attenuation_sweep(vis, l1550, SizeModel::Kruse);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].beta_np_per_km < rows[i - 1].beta_np_per_km);
    }

    const std::vector<double> empty;
    CHECK_THROWS_AS(attenuation_sweep(empty, l1550, SizeModel::Kruse), UsageError);
    CHECK_THROWS_AS(attenuation_sweep(one, empty, SizeModel::Kruse), UsageError);
    const std::vector<double> bad{0.0};
    CHECK_THROWS_AS(attenuation_sweep(bad, l1550, SizeModel::Kruse), UsageError);
}

TEST_CASE("attenuation CSV format")
{
    const std::vector<double> one{1.0};
    const std::vector<double> l1550{1550.0};
    std::ostringstream os;
    write_attenuation_csv(os, attenuation_sweep(one, l1550, SizeModel::Kruse));
    CHECK(os.str() == "visibility_km,wavelength_nm,beta_np_per_km,atten_db\n"
                      "1.000000,1550.000000,2.133878,9.267313\n");
}

TEST_CASE("linspace")
{
    CHECK(linspace(1, 1, 1) == std::vector<double>{1.0});
    CHECK(linspace(1, 3, 3) == std::vector<double>{1.0, 2.0, 3.0});
    CHECK_THROWS_AS(linspace(1, 3, 0), UsageError);
    CHECK_THROWS_AS(linspace(3, 1, 2), UsageError);
}

TEST_CASE("size model names")
{
    CHECK(parse_size_model("kruse") == SizeModel::Kruse);
    CHECK(parse_size_model("kim") == SizeModel::Kim);
    CHECK_THROWS_AS(parse_size_model("mie"), UsageError);
}
