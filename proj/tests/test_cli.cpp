#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fsoqos/csv_format.hpp"
#include "fsoqos/link.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& scratch()
{
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("fsoqos_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Run run(const std::string& args)
{
    const auto out = scratch() / "stdout.txt";
    const auto err = scratch() / "stderr.txt";
    const std::string cmd = "env -u FSOQOS_OUT_DIR " + std::string(FSOQOS_CLI) + " " + args + " >" + out.string() +
                            " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

fs::path write_scratch(const std::string& name, const std::string& text)
{
    const auto p = scratch() / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        for (auto f : fsoqos::csv::split_fields(line)) row.emplace_back(f);
        rows.push_back(row);
    }
    return rows;
}

double num(const std::string& s)
{
    double v = 0.0;
    REQUIRE(fsoqos::csv::parse_double(s, v));
    return v;
}

std::string dir(const std::string& name) { return (scratch() / name).string(); }

const char* kSynth = R"({"m_observations": 300, "seed": 5, "visibility_min_km": 2, "visibility_max_km": 20,
  "snr_target": {"noise_std_db": 0.5, "seed": 3}})";
const char* kTrain = R"({"learning_rate": 0.3, "max_epochs": 20, "seed": 2, "split_seed": 4})";

} // namespace

TEST_CASE("cli attenuation")
{
    auto r = run("attenuation --wavelengths 1550 --visibility-min 1 --visibility-max 1 --steps 1 --out " + dir("att"));
    REQUIRE(r.code == 0);
    const auto rows = read_csv(scratch() / "att" / "attenuation.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"visibility_km", "wavelength_nm", "beta_np_per_km", "atten_db"});
    CHECK(std::abs(num(rows[1][2]) - 2.134) < 1e-3);
    const auto manifest = json::parse(slurp(scratch() / "att" / "manifest.json"));
    CHECK(manifest.at("command") == "attenuation");
    CHECK(manifest.contains("tool_version"));

    CHECK(run("attenuation --wavelengths 1550").code == 2);
    CHECK(run("attenuation --steps 0 --out " + dir("att0")).code == 2);
    CHECK(run("attenuation --model mie --out " + dir("att1")).code == 2);
    CHECK(run("attenuation --wavelengths -5 --out " + dir("att2")).code == 2);
    CHECK(run("bogus").code == 2);
    CHECK(run("").code == 2);

    const auto env_dir = dir("att_env");
    const std::string cmd = "FSOQOS_OUT_DIR=" + env_dir + " " + FSOQOS_CLI + " attenuation --steps 3 >/dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(read_csv(fs::path(env_dir) / "attenuation.csv").size() == 1 + 3 * 5);
}

TEST_CASE("cli snr")
{
    REQUIRE(run("snr --tau 0,1 --out " + dir("snr")).code == 0);
    const auto rows = read_csv(scratch() / "snr" / "snr.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"tau_db", "snr_db"});
    CHECK(num(rows[1][1]) - num(rows[2][1]) == 1.0);

    const auto cfg = write_scratch("link.json", R"({"power_tx_dbm": 23.0, "bandwidth_hz": 2e6})");
    REQUIRE(run("snr --link-config " + cfg.string() + " --visibility-min 1 --visibility-max 10 --steps 4 "
                "--wavelengths 850,1550 --out " + dir("snr_vis")).code == 0);
    const auto params = fsoqos::link::link_params_from_json(json::parse(slurp(cfg)));
    const auto vis = read_csv(scratch() / "snr_vis" / "snr.csv");
    REQUIRE(vis.size() == 1 + 8);
    for (std::size_t i = 1; i < vis.size(); ++i) {
        auto p = params;
        p.wavelength_m = num(vis[i][1]) * 1e-9;
        CHECK(std::abs(num(vis[i][3]) - fsoqos::link::snr_db(p, num(vis[i][2]))) < 1e-9);
    }

    const auto bad = write_scratch("bad_link.json", R"({"power_tx_dbm": 20, "gain_typo": 1})");
    const auto r = run("snr --tau 0 --link-config " + bad.string() + " --out " + dir("snr_bad"));
    CHECK(r.code == 2);
    CHECK(r.err.find("gain_typo") != std::string::npos);
    CHECK(run("snr --tau 0 --steps 3 --out " + dir("snr_both")).code == 2);
}

TEST_CASE("cli fit and predict")
{
    const auto synth = write_scratch("synth.json", kSynth);
    const auto train = write_scratch("train.json", kTrain);
    const std::string base = "fit --synth-config " + synth.string() + " --train-config " + train.string();
    const auto a = run(base + " --out-report " + dir("fit_a"));
    REQUIRE(a.code == 0);
    const auto b = run(base + " --out-report " + dir("fit_b"));
    REQUIRE(b.code == 0);

    CHECK(a.out == b.out);
    CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 1);
    for (const char* f : {"model.json", "scree.csv", "loss.csv", "metrics.json", "train.csv", "test.csv",
                          "validation.csv", "dataset.csv"}) {
        CHECK_MESSAGE(slurp(scratch() / "fit_a" / f) == slurp(scratch() / "fit_b" / f), f);
    }

    const auto printed = json::parse(a.out);
    CHECK(printed == json::parse(slurp(scratch() / "fit_a" / "metrics.json")));
    for (const char* part : {"train", "validation", "test"}) {
        const auto& m = printed.at(part);
        const double rmse = m.at("rmse").get<double>();
        CHECK(rmse * rmse == doctest::Approx(m.at("mse").get<double>()).epsilon(1e-12));
    }

    const auto scree = read_csv(scratch() / "fit_a" / "scree.csv");
    CHECK(scree.size() == 10);
    CHECK(std::abs(num(scree.back()[3]) - 1.0) < 1e-9);
    CHECK(read_csv(scratch() / "fit_a" / "loss.csv").size() == 21);

    const auto manifest = json::parse(slurp(scratch() / "fit_a" / "manifest.json"));
    CHECK(manifest.at("command") == "fit");
    CHECK(manifest.at("seeds").at("split") == 4);
    CHECK(manifest.at("config_paths").size() == 2);

    // Predicting the training partition reproduces the reported train metrics.
    const std::string model = (scratch() / "fit_a" / "model.json").string();
    const auto p = run("predict --model " + model + " --data " + dir("fit_a") + "/train.csv --out " + dir("pred"));
    REQUIRE(p.code == 0);
    const auto pm = json::parse(p.out);
    CHECK(pm.at("rmse").get<double>() == doctest::Approx(printed.at("train").at("rmse").get<double>()).epsilon(1e-12));
    CHECK(pm.at("mae").get<double>() == doctest::Approx(printed.at("train").at("mae").get<double>()).epsilon(1e-12));
    const auto preds = read_csv(scratch() / "pred" / "predictions.csv");
    CHECK(preds[0] == std::vector<std::string>{"timestamp", "predicted_snr_db", "actual_snr_db", "abs_error"});
    CHECK(preds.size() == 1 + 210);

    // Identical rows, no target column.
    const auto twins = write_scratch(
        "twins.csv",
        "station,date,slot,visibility_km,wind_speed_ms,relative_humidity_pct,air_temperature_c,dew_point_c,"
        "pressure_hpa,cloud_cover_okta,rainfall_mm,solar_radiation_wm2\n"
        "SYNTH,2020-01-01,08h00,5,5,60,18,9,1013,4,2,500\n"
        "SYNTH,2020-01-01,14h00,5,5,60,18,9,1013,4,2,500\n");
    REQUIRE(run("predict --model " + model + " --data " + twins.string() + " --out " + dir("pred_twins")).code == 0);
    const auto tw = read_csv(scratch() / "pred_twins" / "predictions.csv");
    REQUIRE(tw.size() == 3);
    CHECK(tw[0] == std::vector<std::string>{"timestamp", "predicted_snr_db"});
    CHECK(tw[1][1] == tw[2][1]);
    CHECK(tw[1][0] == "2020-01-01 08h00");

    const auto empty = write_scratch("empty.csv", "");
    CHECK(run("predict --model " + model + " --data " + empty.string() + " --out " + dir("pred_empty")).code == 1);
    const auto narrow = write_scratch("narrow.csv", "station,date,slot,visibility_km\nS,2020-01-01,08h00,5\n");
    CHECK(run("predict --model " + model + " --data " + narrow.string() + " --out " + dir("pred_narrow")).code == 1);
    CHECK(run("predict --model " + narrow.string() + " --data " + narrow.string() + " --out " + dir("pred_badmodel")).code == 1);
}

TEST_CASE("cli fit errors")
{
    const auto synth = write_scratch("synth2.json", kSynth);
    const auto data = write_scratch("obs.csv", "station,date,slot,visibility_km,snr_db\nS,2020-01-01,08h00,5,1\n");
    CHECK(run("fit --out " + dir("fe1")).code == 2);
    CHECK(run("fit --synth-config " + synth.string() + " --data " + data.string() + " --out " + dir("fe2")).code == 2);
    CHECK(run("fit --synth-config " + synth.string() + " --select most --out " + dir("fe3")).code == 2);
    const auto bad_train = write_scratch("bad_train.json", R"({"learning_rate": "fast"})");
    CHECK(run("fit --synth-config " + synth.string() + " --train-config " + bad_train.string() + " --out " + dir("fe4")).code == 2);
    // A single observation cannot be split into three partitions.
    CHECK(run("fit --data " + data.string() + " --out " + dir("fe5")).code == 2);
    const auto broken = write_scratch("broken.csv", "station,date,slot,visibility_km,snr_db\nS,2020-01-01,08h00,abc,1\n");
    const auto r = run("fit --data " + broken.string() + " --out " + dir("fe6"));
    CHECK(r.code == 1);
    CHECK(r.err.find("line 2") != std::string::npos);
}
