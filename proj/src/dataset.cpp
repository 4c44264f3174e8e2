#include "fsoqos/dataset.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fsoqos/csv_format.hpp"
#include "fsoqos/error.hpp"
#include "fsoqos/rng.hpp"

namespace fsoqos::dataset {

Slot parse_slot(std::string_view text)
{
    if (text == "08h00") return Slot::H08;
    if (text == "14h00") return Slot::H14;
    if (text == "20h00") return Slot::H20;
    throw UsageError("invalid slot '" + std::string(text) + "' (expected 08h00, 14h00 or 20h00)");
}

std::string_view to_string(Slot slot)
{
    switch (slot) {
    case Slot::H08: return "08h00";
    case Slot::H14: return "14h00";
    case Slot::H20: return "20h00";
    }
    return "08h00";
}

std::string Timestamp::to_string() const
{
    return date + " " + std::string(dataset::to_string(slot));
}

namespace {

std::optional<std::chrono::year_month_day> parse_date(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (text[i] < '0' || text[i] > '9') {
            return std::nullopt;
        }
    }
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    const std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                          std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                          std::chrono::day{static_cast<unsigned>(num(8, 2))}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return ymd;
}

std::string format_date(std::chrono::year_month_day ymd)
{
    std::array<char, 16> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf.data();
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

} // namespace

void ObservationTable::validate() const
{
    const std::size_t m = timestamps.size();
    if (features.values.cols() != m) {
        throw SchemaError("timestamp count does not match observation count");
    }
    if (features.variable_names.size() != features.values.rows()) {
        throw SchemaError("feature name count does not match feature rows");
    }
    if (visibility_row >= features.values.rows()) {
        throw SchemaError("visibility row is missing");
    }
    for (double v : visibility()) {
        if (!(v > 0.0)) {
            throw SchemaError("visibility must be strictly positive");
        }
    }
    if (target_snr_db && target_snr_db->size() != m) {
        throw SchemaError("target count does not match observation count");
    }
}

ObservationTable ObservationTable::subset(std::span<const std::size_t> columns) const
{
    ObservationTable out;
    out.station = station;
    out.visibility_row = visibility_row;
    out.features.variable_names = features.variable_names;
    out.features.values = Matrix(features.values.rows(), columns.size());
    if (target_snr_db) {
        out.target_snr_db.emplace();
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const std::size_t src = columns[c];
        if (src >= size()) {
            throw ShapeError("subset column out of range");
        }
        out.timestamps.push_back(timestamps[src]);
        for (std::size_t r = 0; r < features.values.rows(); ++r) {
            out.features.values(r, c) = features.values(r, src);
        }
        if (target_snr_db) {
            out.target_snr_db->push_back((*target_snr_db)[src]);
        }
    }
    return out;
}

ObservationTable load_observations(std::istream& source, const Schema& schema)
{
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(source, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) {
            continue;
        }
        for (auto f : csv::split_fields(t)) {
            header.emplace_back(trim(f));
        }
        break;
    }
    if (header.size() < 4 || header[0] != "station" || header[1] != "date" || header[2] != "slot") {
        throw SchemaError("missing header: expected 'station,date,slot,<features...>'");
    }

    std::vector<std::size_t> feature_cols;
    std::optional<std::size_t> target_col;
    std::optional<std::size_t> visibility_row;
    ObservationTable table;
    for (std::size_t c = 3; c < header.size(); ++c) {
        if (header[c] == schema.target_column) {
            target_col = c;
            continue;
        }
        if (header[c] == schema.visibility_column) {
            visibility_row = feature_cols.size();
        }
        feature_cols.push_back(c);
        table.features.variable_names.push_back(header[c]);
    }
    if (!visibility_row) {
        throw SchemaError("visibility column '" + schema.visibility_column + "' not found in header");
    }
    table.visibility_row = *visibility_row;

    std::vector<std::vector<double>> columns;
    std::vector<double> targets;
    std::optional<std::string> station;
    while (std::getline(source, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) {
            continue;
        }
        auto fields = csv::split_fields(t);
        for (auto& f : fields) {
            f = trim(f);
        }
        if (fields.size() > header.size()) {
            throw ParseError(at_line(line_no) + "too many fields", line_no);
        }
        const bool missing = fields.size() < header.size()
                          || std::any_of(fields.begin(), fields.end(), [](std::string_view f) { return f.empty(); });
        if (missing) {
            ++table.dropped_count;
            continue;
        }
        const std::string row_station(fields[0]);
        if (schema.station && row_station != *schema.station) {
            continue;
        }
        if (!station) {
            station = row_station;
        } else if (*station != row_station) {
            throw SchemaError(at_line(line_no) + "file mixes stations '" + *station + "' and '" + row_station
                              + "'; select one station");
        }
        if (!parse_date(fields[1])) {
            throw ParseError(at_line(line_no) + "invalid date '" + std::string(fields[1]) + "'", line_no);
        }
        Slot slot;
        try {
            slot = parse_slot(fields[2]);
        } catch (const UsageError& e) {
            throw ParseError(at_line(line_no) + e.what(), line_no);
        }
        std::vector<double> row(feature_cols.size());
        for (std::size_t i = 0; i < feature_cols.size(); ++i) {
            const auto cell = fields[feature_cols[i]];
            if (!csv::parse_double(cell, row[i])) {
                throw ParseError(at_line(line_no) + "non-numeric value '" + std::string(cell) + "' in column '"
                                     + header[feature_cols[i]] + "'",
                                 line_no);
            }
        }
        if (!(row[*visibility_row] > 0.0)) {
            throw ParseError(at_line(line_no) + "visibility must be strictly positive", line_no);
        }
        if (target_col) {
            double y = 0.0;
            if (!csv::parse_double(fields[*target_col], y)) {
                throw ParseError(at_line(line_no) + "non-numeric target '" + std::string(fields[*target_col]) + "'",
                                 line_no);
            }
            targets.push_back(y);
        }
        table.timestamps.push_back({std::string(fields[1]), slot});
        columns.push_back(std::move(row));
    }
    if (columns.empty()) {
        throw SchemaError("no complete observations found");
    }

    table.station = station.value_or("");
    const std::size_t n = feature_cols.size();
    const std::size_t m = columns.size();
    table.features.values = Matrix(n, m);
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t r = 0; r < n; ++r) {
            table.features.values(r, c) = columns[c][r];
        }
    }
    if (target_col) {
        table.target_snr_db = std::move(targets);
    }
    table.validate();
    return table;
}

ObservationTable load_observations_file(const std::string& path, const Schema& schema)
{
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open data file '" + path + "'");
    }
    return load_observations(in, schema);
}

void save_observations(std::ostream& os, const ObservationTable& table, const Schema& schema)
{
    os << "station,date,slot";
    for (const auto& name : table.features.variable_names) {
        os << ',' << name;
    }
    if (table.target_snr_db) {
        os << ',' << schema.target_column;
    }
    os << '\n';
    for (std::size_t c = 0; c < table.size(); ++c) {
        os << table.station << ',' << table.timestamps[c].date << ',' << to_string(table.timestamps[c].slot);
        for (std::size_t r = 0; r < table.features.values.rows(); ++r) {
            os << ',' << csv::exact(table.features.values(r, c));
        }
        if (table.target_snr_db) {
            os << ',' << csv::exact((*table.target_snr_db)[c]);
        }
        os << '\n';
    }
}

void SynthConfig::validate() const
{
    if (n_features < 2) {
        throw UsageError("n_features must be at least 2");
    }
    if (m_observations < 1) {
        throw UsageError("m_observations must be positive");
    }
    if (!factor_loadings.empty() && factor_loadings.size() != n_features) {
        throw UsageError("factor_loadings must have n_features entries");
    }
    if (!(noise_std > 0.0)) {
        throw UsageError("noise_std must be positive");
    }
    if (!(visibility_min_km > 0.0 && visibility_min_km < visibility_max_km)) {
        throw UsageError("visibility range must satisfy 0 < min < max");
    }
    if (!parse_date(start_date)) {
        throw UsageError("start_date must be YYYY-MM-DD");
    }
    if (station.empty() || station.find(',') != std::string::npos) {
        throw UsageError("station must be a non-empty name without commas");
    }
}

std::vector<double> SynthConfig::loadings() const
{
    return factor_loadings.empty() ? std::vector<double>(n_features, 0.9) : factor_loadings;
}

namespace {

struct FeatureStyle {
    const char* name;
    double offset;
    double scale;
};

// Plausible units for the non-visibility columns; correlation structure is
// unaffected by the affine map.
constexpr std::array<FeatureStyle, 8> kFeatureStyles{{
    {"wind_speed_ms", 5.0, 2.0},
    {"relative_humidity_pct", 60.0, 15.0},
    {"air_temperature_c", 18.0, 6.0},
    {"dew_point_c", 9.0, 5.0},
    {"pressure_hpa", 1013.0, 6.0},
    {"cloud_cover_okta", 4.0, 2.0},
    {"rainfall_mm", 2.0, 1.5},
    {"solar_radiation_wm2", 500.0, 200.0},
}};

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

} // namespace

ObservationTable synthesize_weather(const SynthConfig& config)
{
    config.validate();
    const auto loadings = config.loadings();
    const std::size_t n = config.n_features;
    const std::size_t m = config.m_observations;

    ObservationTable table;
    table.station = config.station;
    table.visibility_row = 0;
    table.features.values = Matrix(n, m);
    table.features.variable_names.push_back("visibility_km");
    for (std::size_t i = 1; i < n; ++i) {
        if (i - 1 < kFeatureStyles.size()) {
            table.features.variable_names.emplace_back(kFeatureStyles[i - 1].name);
        } else {
            table.features.variable_names.push_back("feature_" + std::to_string(i));
        }
    }

    Rng rng(config.seed);
    const double vis_sd = std::sqrt(loadings[0] * loadings[0] + config.noise_std * config.noise_std);
    const double vis_span = config.visibility_max_km - config.visibility_min_km;
    for (std::size_t c = 0; c < m; ++c) {
        const double factor = rng.normal();
        for (std::size_t i = 0; i < n; ++i) {
            const double z = loadings[i] * factor + config.noise_std * rng.normal();
            double value;
            if (i == 0) {
                value = config.visibility_min_km + vis_span * standard_normal_cdf(z / vis_sd);
                value = std::clamp(value, config.visibility_min_km, config.visibility_max_km);
            } else if (i - 1 < kFeatureStyles.size()) {
                value = kFeatureStyles[i - 1].offset + kFeatureStyles[i - 1].scale * z;
            } else {
                value = z;
            }
            table.features.values(i, c) = value;
        }
    }

    const auto start = std::chrono::sys_days(*parse_date(config.start_date));
    for (std::size_t c = 0; c < m; ++c) {
        const auto day = start + std::chrono::days(static_cast<long>(c / 3));
        table.timestamps.push_back({format_date(std::chrono::year_month_day(day)), static_cast<Slot>(c % 3)});
    }
    table.validate();
    return table;
}

namespace {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& field)
{
    if (!j.contains(key)) {
        return;
    }
    try {
        field = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, const char* what)
{
    if (!j.is_object()) {
        throw UsageError(std::string(what) + " must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw UsageError(std::string("unknown ") + what + " key '" + key + "'");
        }
    }
}

} // namespace

nlohmann::json to_json(const SynthConfig& c)
{
    return {
        {"n_features", c.n_features},
        {"m_observations", c.m_observations},
        {"factor_loadings", c.factor_loadings},
        {"noise_std", c.noise_std},
        {"visibility_min_km", c.visibility_min_km},
        {"visibility_max_km", c.visibility_max_km},
        {"seed", c.seed},
        {"station", c.station},
        {"start_date", c.start_date},
    };
}

SynthConfig synth_config_from_json(const nlohmann::json& j)
{
    reject_unknown(j,
                   {"n_features", "m_observations", "factor_loadings", "noise_std", "visibility_min_km",
                    "visibility_max_km", "seed", "station", "start_date", "snr_target"},
                   "synth config");
    SynthConfig c;
    read_key(j, "n_features", c.n_features);
    read_key(j, "m_observations", c.m_observations);
    read_key(j, "factor_loadings", c.factor_loadings);
    read_key(j, "noise_std", c.noise_std);
    read_key(j, "visibility_min_km", c.visibility_min_km);
    read_key(j, "visibility_max_km", c.visibility_max_km);
    read_key(j, "seed", c.seed);
    read_key(j, "station", c.station);
    read_key(j, "start_date", c.start_date);
    c.validate();
    return c;
}

nlohmann::json to_json(const TargetConfig& c)
{
    return {
        {"link", link::to_json(c.link)},
        {"size_model", std::string(atmos::to_string(c.model))},
        {"length_km", c.length_km},
        {"reference_wavelength_nm", c.reference_wavelength_nm},
        {"noise_std_db", c.noise_std_db},
        {"seed", c.seed},
    };
}

TargetConfig target_config_from_json(const nlohmann::json& j)
{
    reject_unknown(j, {"link", "size_model", "length_km", "reference_wavelength_nm", "noise_std_db", "seed"},
                   "snr_target");
    TargetConfig c;
    if (j.contains("link")) {
        c.link = link::link_params_from_json(j.at("link"));
    }
    std::string model = std::string(atmos::to_string(c.model));
    read_key(j, "size_model", model);
    c.model = atmos::parse_size_model(model);
    read_key(j, "length_km", c.length_km);
    read_key(j, "reference_wavelength_nm", c.reference_wavelength_nm);
    read_key(j, "noise_std_db", c.noise_std_db);
    read_key(j, "seed", c.seed);
    if (!(c.noise_std_db >= 0.0)) {
        throw UsageError("noise_std_db must be non-negative");
    }
    return c;
}

ObservationTable attach_snr_target(ObservationTable table, const TargetConfig& config)
{
    table.validate();
    if (!(config.noise_std_db >= 0.0)) {
        throw UsageError("noise_std_db must be non-negative");
    }
    const double wavelength_nm = config.link.wavelength_m * 1e9;
    Rng rng(config.seed);
    std::vector<double> target(table.size());
    const auto vis = table.visibility();
    for (std::size_t t = 0; t < table.size(); ++t) {
        const atmos::OpticalPath path{wavelength_nm, vis[t], config.length_km, config.reference_wavelength_nm};
        const double tau = atmos::attenuation_db(path, config.model);
        target[t] = link::snr_db(config.link, tau);
        if (config.noise_std_db > 0.0) {
            target[t] += config.noise_std_db * rng.normal();
        }
    }
    table.target_snr_db = std::move(target);
    return table;
}

Partitions split(const ObservationTable& table, const SplitFractions& f, std::uint64_t seed)
{
    if (!(f.train > 0.0 && f.validation > 0.0 && f.test > 0.0)) {
        throw UsageError("split fractions must be positive");
    }
    if (std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) {
        throw UsageError("split fractions must sum to 1");
    }
    const std::size_t m = table.size();
    const auto n_val = static_cast<std::size_t>(std::floor(f.validation * static_cast<double>(m) + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(f.test * static_cast<double>(m) + 1e-9));
    if (n_val == 0 || n_test == 0 || n_val + n_test >= m) {
        throw UsageError("split of " + std::to_string(m) + " observations leaves an empty partition");
    }
    const std::size_t n_train = m - n_val - n_test;

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    for (std::size_t i = m - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.below(i + 1)]);
    }
    const std::span<const std::size_t> all(perm);
    return {table.subset(all.subspan(0, n_train)), table.subset(all.subspan(n_train, n_val)),
            table.subset(all.subspan(n_train + n_val))};
}

std::string content_hash(const ObservationTable& table)
{
    std::ostringstream os;
    save_observations(os, table);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : os.str()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
    return buf.data();
}

} // namespace fsoqos::dataset
