#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fsoqos/atmos.hpp"
#include "fsoqos/csv_format.hpp"
#include "fsoqos/dataset.hpp"
#include "fsoqos/error.hpp"
#include "fsoqos/link.hpp"
#include "fsoqos/metrics.hpp"
#include "fsoqos/pca.hpp"
#include "fsoqos/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fsoqos;

namespace {

constexpr const char* kOutDirEnv = "FSOQOS_OUT_DIR";

fs::path output_directory(const std::string& flag)
{
    std::string dir = flag;
    if (dir.empty()) {
        if (const char* env = std::getenv(kOutDirEnv)) {
            dir = env;
        }
    }
    if (dir.empty()) {
        throw UsageError(std::string("an output directory is required (--out or ") + kOutDirEnv + ")");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
    }
    return dir;
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("invalid JSON in '" + path + "': " + e.what());
    }
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer)
{
    std::ostringstream os;
    writer(os);
    write_file(path, os.str());
}

void write_manifest(const fs::path& dir,
                    const std::string& command,
                    const std::vector<std::string>& config_paths,
                    const json& seeds)
{
    const json manifest = {
        {"command", command},
        {"config_paths", config_paths},
        {"seeds", seeds},
        {"output_directory", dir.string()},
        {"tool_version", FSOQOS_VERSION},
    };
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::string> present(std::initializer_list<std::string> paths)
{
    std::vector<std::string> out;
    for (const auto& p : paths) {
        if (!p.empty()) out.push_back(p);
    }
    return out;
}

struct SweepFlags {
    std::vector<double> wavelengths{760.0, 860.0, 960.0, 1260.0, 1550.0};
    double visibility_min = 0.5;
    double visibility_max = 20.0;
    int steps = 40;
    std::string model = "kruse";
    double length = 1.0;
    double reference_wavelength = atmos::kDefaultReferenceWavelengthNm;
};

void add_sweep_flags(CLI::App& cmd, SweepFlags& f)
{
    cmd.add_option("--wavelengths", f.wavelengths, "Comma-separated wavelengths in nm")->delimiter(',');
    cmd.add_option("--visibility-min", f.visibility_min, "Lowest visibility in km");
    cmd.add_option("--visibility-max", f.visibility_max, "Highest visibility in km");
    cmd.add_option("--steps", f.steps, "Number of visibility points");
    cmd.add_option("--model", f.model, "Particle size model: kruse or kim");
    cmd.add_option("--length", f.length, "Path length in km");
    cmd.add_option("--reference-wavelength", f.reference_wavelength, "Reference wavelength in nm");
}

struct AttenuationFlags {
    SweepFlags sweep;
    std::string out;
};

void run_attenuation(const AttenuationFlags& f)
{
    const auto visibilities = atmos::linspace(f.sweep.visibility_min, f.sweep.visibility_max, f.sweep.steps);
    const auto rows = atmos::attenuation_sweep(visibilities, f.sweep.wavelengths,
                                               atmos::parse_size_model(f.sweep.model),
                                               {f.sweep.length, f.sweep.reference_wavelength});
    const auto dir = output_directory(f.out);
    write_with(dir / "attenuation.csv", [&](std::ostream& os) { atmos::write_attenuation_csv(os, rows); });
    write_manifest(dir, "attenuation", {}, json::object());
}

struct SnrFlags {
    SweepFlags sweep;
    std::string link_config;
    std::vector<double> tau;
    std::string out;
};

void run_snr(const SnrFlags& f)
{
    link::LinkParams params;
    if (!f.link_config.empty()) {
        params = link::link_params_from_json(read_json_file(f.link_config));
    }
    const auto dir = output_directory(f.out);
    if (!f.tau.empty()) {
        const auto rows = link::snr_sweep(params, f.tau);
        write_with(dir / "snr.csv", [&](std::ostream& os) { link::write_snr_csv(os, rows); });
    } else {
        const auto visibilities = atmos::linspace(f.sweep.visibility_min, f.sweep.visibility_max, f.sweep.steps);
        const auto rows = link::snr_sweep(params, visibilities, f.sweep.wavelengths,
                                          atmos::parse_size_model(f.sweep.model),
                                          {f.sweep.length, f.sweep.reference_wavelength});
        write_with(dir / "snr.csv", [&](std::ostream& os) { link::write_snr_csv(os, rows); });
    }
    write_manifest(dir, "snr", present({f.link_config}), json::object());
}

struct FitFlags {
    std::string data;
    std::string synth_config;
    std::string station;
    std::string visibility_column = "visibility_km";
    std::string target_column = "snr_db";
    std::string pca_mode;
    std::string select;
    std::string train_config;
    std::string out_model;
    std::string out_report;
};

dataset::SplitFractions parse_split(const json& j)
{
    dataset::SplitFractions s;
    try {
        if (j.is_array() && j.size() == 3) {
            s = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
        } else if (j.is_object()) {
            s.train = j.value("train", s.train);
            s.validation = j.value("validation", s.validation);
            s.test = j.value("test", s.test);
        } else {
            throw UsageError("train config key 'split' must be [train, validation, test]");
        }
    } catch (const json::exception&) {
        throw UsageError("train config key 'split' must hold numbers");
    }
    return s;
}

json metrics_json(const metrics::MetricsReport& r) { return metrics::to_json(r); }

void run_fit(const FitFlags& f)
{
    if (f.data.empty() == f.synth_config.empty()) {
        throw UsageError("exactly one of --data and --synth-config is required");
    }

    json seeds = json::object();
    pipeline::HybridConfig config;
    dataset::SplitFractions fractions;
    std::uint64_t split_seed = 1;
    if (!f.train_config.empty()) {
        json j = read_json_file(f.train_config);
        if (!j.is_object()) {
            throw UsageError("train config must be a JSON object");
        }
        if (j.contains("split")) {
            fractions = parse_split(j.at("split"));
            j.erase("split");
        }
        if (j.contains("split_seed")) {
            if (!j.at("split_seed").is_number_integer() || j.at("split_seed").get<std::int64_t>() < 0) {
                throw UsageError("train config key 'split_seed' must be a non-negative integer");
            }
            split_seed = j.at("split_seed").get<std::uint64_t>();
            j.erase("split_seed");
        }
        config = pipeline::hybrid_config_from_json(j);
    }
    if (!f.pca_mode.empty()) config.pca_mode = pca::parse_mode(f.pca_mode);
    if (!f.select.empty()) config.selection = pca::parse_selection_rule(f.select);

    const auto dir = output_directory(f.out_report);

    dataset::ObservationTable table;
    if (!f.synth_config.empty()) {
        const json j = read_json_file(f.synth_config);
        const auto synth = dataset::synth_config_from_json(j);
        dataset::TargetConfig target;
        if (j.contains("snr_target")) {
            target = dataset::target_config_from_json(j.at("snr_target"));
        }
        table = dataset::attach_snr_target(dataset::synthesize_weather(synth), target);
        seeds["synth"] = synth.seed;
        seeds["target_noise"] = target.seed;
    } else {
        dataset::Schema schema;
        schema.visibility_column = f.visibility_column;
        schema.target_column = f.target_column;
        if (!f.station.empty()) schema.station = f.station;
        table = dataset::load_observations_file(f.data, schema);
    }
    if (!table.target_snr_db) {
        throw SchemaError("dataset has no '" + f.target_column + "' column");
    }

    const auto parts = dataset::split(table, fractions, split_seed);
    auto fit = pipeline::fit_hybrid(parts.train, parts.validation, config);
    seeds["split"] = split_seed;
    seeds["init"] = config.train.seed;
    fit.model.provenance.seeds = seeds;
    fit.model.provenance.configs["split"] = {fractions.train, fractions.validation, fractions.test};

    const json report = {
        {"train", metrics_json(pipeline::evaluate_hybrid(fit.model, parts.train))},
        {"validation", metrics_json(pipeline::evaluate_hybrid(fit.model, parts.validation))},
        {"test", metrics_json(pipeline::evaluate_hybrid(fit.model, parts.test))},
    };

    const fs::path model_path = f.out_model.empty() ? dir / "model.json" : fs::path(f.out_model);
    if (model_path.has_parent_path()) {
        fs::create_directories(model_path.parent_path());
    }
    write_file(model_path, pipeline::to_json(fit.model).dump(2) + "\n");
    write_with(dir / "scree.csv", [&](std::ostream& os) { pca::write_scree_csv(os, fit.model.pca); });
    write_with(dir / "loss.csv", [&](std::ostream& os) { mlp::write_loss_csv(os, fit.history); });
    write_file(dir / "metrics.json", report.dump(2) + "\n");
    const std::pair<const char*, const dataset::ObservationTable*> tables[] = {
        {"dataset.csv", &table}, {"train.csv", &parts.train}, {"validation.csv", &parts.validation}, {"test.csv", &parts.test}};
    for (const auto& [name, t] : tables) {
        write_with(dir / name, [&](std::ostream& os) { dataset::save_observations(os, *t); });
    }
    write_manifest(dir, "fit", present({f.data, f.synth_config, f.train_config}), seeds);
    std::cout << report.dump() << '\n';
}

struct PredictFlags {
    std::string model;
    std::string data;
    std::string station;
    std::string out;
};

void run_predict(const PredictFlags& f)
{
    std::ifstream in(f.model);
    if (!in) {
        throw UsageError("cannot open model '" + f.model + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("model '" + f.model + "' is not valid JSON: " + e.what());
    }
    const auto model = pipeline::hybrid_model_from_json(j);

    dataset::Schema schema;
    if (!f.station.empty()) schema.station = f.station;
    const auto table = dataset::load_observations_file(f.data, schema);
    const auto predicted = pipeline::predict(model, table);

    const auto dir = output_directory(f.out);
    const auto& actual = table.target_snr_db;
    write_with(dir / "predictions.csv", [&](std::ostream& os) {
        os << "timestamp,predicted_snr_db" << (actual ? ",actual_snr_db,abs_error" : "") << '\n';
        for (std::size_t i = 0; i < table.size(); ++i) {
            os << table.timestamps[i].to_string() << ',' << csv::exact(predicted[i]);
            if (actual) {
                os << ',' << csv::exact((*actual)[i]) << ',' << csv::exact(std::abs((*actual)[i] - predicted[i]));
            }
            os << '\n';
        }
    });
    write_manifest(dir, "predict", present({f.model, f.data}), json::object());
    if (actual) {
        std::cout << metrics_json(metrics::evaluate(*actual, predicted, false)).dump() << '\n';
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Free-space optical link attenuation, SNR and hybrid PCA/MLP QoS modelling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", FSOQOS_VERSION);

    AttenuationFlags att;
    auto* att_cmd = app.add_subcommand("attenuation", "Atmospheric attenuation sweep over visibility and wavelength");
    add_sweep_flags(*att_cmd, att.sweep);
    att_cmd->add_option("--out", att.out, "Output directory");

    SnrFlags snr;
    auto* snr_cmd = app.add_subcommand("snr", "Link SNR over an attenuation list or a visibility sweep");
    add_sweep_flags(*snr_cmd, snr.sweep);
    snr_cmd->add_option("--link-config", snr.link_config, "Link parameter JSON")->check(CLI::ExistingFile);
    auto* tau_opt = snr_cmd->add_option("--tau", snr.tau, "Comma-separated attenuations in dB")->delimiter(',');
    for (const char* name : {"--visibility-min", "--visibility-max", "--steps", "--wavelengths", "--model"}) {
        tau_opt->excludes(snr_cmd->get_option(name));
    }
    snr_cmd->add_option("--out", snr.out, "Output directory");

    FitFlags fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the hybrid PCA/MLP model and write a report");
    auto* data_opt = fit_cmd->add_option("--data", fit.data, "Observation CSV")->check(CLI::ExistingFile);
    fit_cmd->add_option("--synth-config", fit.synth_config, "Synthetic dataset JSON")
        ->check(CLI::ExistingFile)
        ->excludes(data_opt);
    fit_cmd->add_option("--station", fit.station, "Keep only this station's rows");
    fit_cmd->add_option("--visibility-column", fit.visibility_column, "Visibility column name");
    fit_cmd->add_option("--target-column", fit.target_column, "SNR target column name");
    fit_cmd->add_option("--pca-mode", fit.pca_mode, "correlation or covariance");
    fit_cmd->add_option("--select", fit.select, "kaiser, cumulative:<t> or fixed:<k>");
    fit_cmd->add_option("--train-config", fit.train_config, "Training JSON")->check(CLI::ExistingFile);
    fit_cmd->add_option("--out-model", fit.out_model, "Model JSON path (default <report>/model.json)");
    fit_cmd->add_option("--out-report,--out", fit.out_report, "Report directory");

    PredictFlags pred;
    auto* pred_cmd = app.add_subcommand("predict", "Predict SNR for observations with a fitted model");
    pred_cmd->add_option("--model", pred.model, "Model JSON")->required();
    pred_cmd->add_option("--data", pred.data, "Observation CSV")->required();
    pred_cmd->add_option("--station", pred.station, "Keep only this station's rows");
    pred_cmd->add_option("--out", pred.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    // Sweep commands take every input from flags, so any rejected value is a usage error.
    const bool flags_only = att_cmd->parsed() || snr_cmd->parsed();
    try {
        if (att_cmd->parsed()) run_attenuation(att);
        if (snr_cmd->parsed()) run_snr(snr);
        if (fit_cmd->parsed()) run_fit(fit);
        if (pred_cmd->parsed()) run_predict(pred);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return flags_only ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
