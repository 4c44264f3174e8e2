#include "fsoqos/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "fsoqos/csv_format.hpp"
#include "fsoqos/error.hpp"
#include "fsoqos/kernels.hpp"

namespace fsoqos::pca {

void DataMatrix::validate(std::size_t min_observations) const
{
    if (values.rows() < 1) {
        throw ShapeError("data matrix needs at least one variable");
    }
    if (values.cols() < min_observations) {
        throw ShapeError("data matrix needs at least " + std::to_string(min_observations)
                         + " observations, got " + std::to_string(values.cols()));
    }
    if (variable_names.size() != values.rows()) {
        throw ShapeError("variable name count does not match the number of rows");
    }
    for (std::size_t r = 0; r < values.rows(); ++r) {
        for (double v : values.row(r)) {
            if (!std::isfinite(v)) {
                throw DomainError("non-finite value in variable '" + variable_names[r] + "'");
            }
        }
    }
}

Mode parse_mode(std::string_view name)
{
    if (name == "correlation") {
        return Mode::Correlation;
    }
    if (name == "covariance") {
        return Mode::Covariance;
    }
    throw UsageError("unknown PCA mode '" + std::string(name) + "' (expected correlation or covariance)");
}

std::string_view to_string(Mode mode)
{
    return mode == Mode::Correlation ? "correlation" : "covariance";
}

Standardized standardize(const DataMatrix& x, Mode mode)
{
    x.validate(2);
    const std::size_t n = x.variables();
    const std::size_t m = x.observations();

    Standardized out{x, std::vector<double>(n), std::vector<double>(n, 1.0)};
    for (std::size_t r = 0; r < n; ++r) {
        auto row = out.data.values.row(r);
        const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(m);
        double ss = 0.0;
        for (double& v : row) {
            v -= mean;
            ss += v * v;
        }
        out.means[r] = mean;
        if (mode == Mode::Correlation) {
            const double sd = std::sqrt(ss / static_cast<double>(m - 1));
            if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
                throw DegenerateError("variable '" + x.variable_names[r]
                                      + "' has zero variance and cannot be standardized");
            }
            for (double& v : row) {
                v /= sd;
            }
            out.scales[r] = sd;
        }
    }
    return out;
}

Matrix covariance(const Matrix& centered)
{
    if (centered.cols() < 2) {
        throw ShapeError("covariance needs at least two observations");
    }
    for (std::size_t r = 0; r < centered.rows(); ++r) {
        const auto row = centered.row(r);
        const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
        if (std::abs(mean) > 1e-9) {
            throw PreconditionError("covariance input row " + std::to_string(r) + " is not centered");
        }
    }
    return kernels::covariance_parallel(centered);
}

namespace {

double off_diagonal_norm(const Matrix& a)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (i != j) {
                sum += a(i, j) * a(i, j);
            }
        }
    }
    return std::sqrt(sum);
}

// Applies the rotation in the (p, q) plane that annihilates a(p, q).
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q)
{
    const std::size_t n = a.rows();
    const double apq = a(p, q);
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;

    for (std::size_t k = 0; k < n; ++k) {
        if (k == p || k == q) {
            continue;
        }
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = a(p, k) = c * akp - s * akq;
        a(k, q) = a(q, k) = s * akp + c * akq;
    }
    a(p, p) -= t * apq;
    a(q, q) += t * apq;
    a(p, q) = a(q, p) = 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

} // namespace

Eigensystem eigh_symmetric(const Matrix& s, const JacobiOptions& options)
{
    const std::size_t n = s.rows();
    if (n == 0 || s.cols() != n) {
        throw ShapeError("eigh_symmetric needs a non-empty square matrix");
    }
    double max_abs = 0.0;
    for (double v : s.data()) {
        if (!std::isfinite(v)) {
            throw DomainError("matrix has non-finite entries");
        }
        max_abs = std::max(max_abs, std::abs(v));
    }
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(s(i, j) - s(j, i)) > 1e-9 * std::max(1.0, max_abs)) {
                throw ShapeError("matrix is not symmetric");
            }
            a(i, j) = 0.5 * (s(i, j) + s(j, i));
        }
    }

    Matrix v = Matrix::identity(n);
    const double threshold = options.relative_tolerance * frobenius_norm(a);
    bool converged = false;
    for (int sweep = 0; sweep <= options.max_sweeps; ++sweep) {
        if (off_diagonal_norm(a) <= threshold) {
            converged = true;
            break;
        }
        if (sweep == options.max_sweeps) {
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) != 0.0) {
                    rotate(a, v, p, q);
                }
            }
        }
    }
    if (!converged) {
        throw ConvergenceError("Jacobi iteration did not converge within "
                               + std::to_string(options.max_sweeps) + " sweeps");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    Eigensystem out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.values[c] = a(src, src);
        std::size_t pivot = 0;
        for (std::size_t r = 1; r < n; ++r) {
            if (std::abs(v(r, src)) > std::abs(v(pivot, src))) {
                pivot = r;
            }
        }
        const double sign = v(pivot, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) {
            out.vectors(r, c) = sign * v(r, src);
        }
    }
    return out;
}

PcaModel fit_pca(const DataMatrix& x, Mode mode)
{
    const Standardized z = standardize(x, mode);
    const Matrix analyzed = covariance(z.data.values);
    Eigensystem eig = eigh_symmetric(analyzed);

    double trace = 0.0;
    for (std::size_t i = 0; i < analyzed.rows(); ++i) {
        trace += analyzed(i, i);
    }
    for (double& ev : eig.values) {
        if (ev < 0.0 && ev >= -1e-10 * std::max(1.0, trace)) {
            ev = 0.0;
        }
    }

    PcaModel model;
    model.variable_names = x.variable_names;
    model.means = z.means;
    model.scales = z.scales;
    model.eigenvalues = std::move(eig.values);
    model.loadings = eig.vectors;
    model.eigenvectors = std::move(eig.vectors);
    model.mode = mode;
    model.analyzed_trace = trace;
    return model;
}

SelectionRule parse_selection_rule(std::string_view text)
{
    if (text == "kaiser") {
        return SelectionRule::kaiser();
    }
    const auto colon = text.find(':');
    const auto head = text.substr(0, colon);
    const auto arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    double value = 0.0;
    if (head == "cumulative" && csv::parse_double(arg, value)) {
        if (!(value > 0.0 && value <= 1.0)) {
            throw UsageError("cumulative threshold must lie in (0, 1]");
        }
        return SelectionRule::cumulative(value);
    }
    if (head == "fixed" && csv::parse_double(arg, value)) {
        if (!(value >= 1.0) || value != std::floor(value)) {
            throw UsageError("fixed component count must be a positive integer");
        }
        return SelectionRule::fixed(static_cast<std::size_t>(value));
    }
    throw UsageError("unknown selection rule '" + std::string(text)
                     + "' (expected kaiser, cumulative:<t> or fixed:<k>)");
}

std::string to_string(const SelectionRule& rule)
{
    switch (rule.kind) {
    case SelectionRule::Kind::Kaiser:
        return "kaiser";
    case SelectionRule::Kind::Cumulative:
        return "cumulative:" + csv::exact(rule.threshold);
    case SelectionRule::Kind::Fixed:
        return "fixed:" + std::to_string(rule.k);
    }
    return "kaiser";
}

std::size_t select_components(std::span<const double> eigenvalues, const SelectionRule& rule)
{
    const std::size_t n = eigenvalues.size();
    if (n == 0) {
        throw UsageError("no eigenvalues to select from");
    }
    switch (rule.kind) {
    case SelectionRule::Kind::Kaiser: {
        const auto above = static_cast<std::size_t>(
            std::count_if(eigenvalues.begin(), eigenvalues.end(), [](double ev) { return ev > 1.0; }));
        return std::max<std::size_t>(above, 1);
    }
    case SelectionRule::Kind::Cumulative: {
        if (!(rule.threshold > 0.0 && rule.threshold <= 1.0)) {
            throw UsageError("cumulative threshold must lie in (0, 1]");
        }
        const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
        if (!(total > 0.0)) {
            throw DegenerateError("eigenvalues sum to zero");
        }
        double running = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            running += eigenvalues[k];
            if (running / total >= rule.threshold - 1e-12) {
                return k + 1;
            }
        }
        return n;
    }
    case SelectionRule::Kind::Fixed:
        if (rule.k < 1 || rule.k > n) {
            throw UsageError("fixed component count " + std::to_string(rule.k) + " outside [1, "
                             + std::to_string(n) + "]");
        }
        return rule.k;
    }
    throw UsageError("invalid selection rule");
}

std::size_t select_components(const PcaModel& model, const SelectionRule& rule)
{
    return select_components(model.eigenvalues, rule);
}

Matrix project(const PcaModel& model, const DataMatrix& x, std::size_t k)
{
    const std::size_t n = model.dimension();
    if (x.variables() != n || x.variable_names != model.variable_names) {
        throw ShapeError("data variables do not match the fitted PCA model");
    }
    if (k < 1 || k > n) {
        throw UsageError("component count " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    }
    x.validate(1);
    const std::size_t m = x.observations();

    Matrix z(n, m);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            z(r, c) = (x.values(r, c) - model.means[r]) / model.scales[r];
        }
    }
    Matrix scores(k, m);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t r = 0; r < n; ++r) {
            const double e = model.eigenvectors(r, i);
            for (std::size_t c = 0; c < m; ++c) {
                scores(i, c) += e * z(r, c);
            }
        }
    }
    return scores;
}

ExplainedVariance explained_variance(const PcaModel& model)
{
    const double total = std::accumulate(model.eigenvalues.begin(), model.eigenvalues.end(), 0.0);
    if (!(total > 0.0)) {
        throw DegenerateError("all eigenvalues are zero; explained variance is undefined");
    }
    ExplainedVariance out;
    double running = 0.0;
    for (double ev : model.eigenvalues) {
        running += ev;
        out.ratios.push_back(ev / total);
        out.cumulative.push_back(running / total);
    }
    return out;
}

void write_scree_csv(std::ostream& os, const PcaModel& model)
{
    const auto ev = explained_variance(model);
    os << "component,eigenvalue,variance_ratio,cumulative_ratio\n";
    for (std::size_t i = 0; i < model.eigenvalues.size(); ++i) {
        os << (i + 1) << ',' << csv::exact(model.eigenvalues[i]) << ',' << csv::exact(ev.ratios[i]) << ','
           << csv::exact(ev.cumulative[i]) << '\n';
    }
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* name)
{
    if (!j.is_array() || j.size() != rows) {
        throw SchemaError(std::string("PCA field '") + name + "' has the wrong number of rows");
    }
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = j[r].get<std::vector<double>>();
        if (row.size() != cols) {
            throw SchemaError(std::string("PCA field '") + name + "' has the wrong number of columns");
        }
        std::copy(row.begin(), row.end(), m.row(r).begin());
    }
    return m;
}

} // namespace

nlohmann::json to_json(const PcaModel& model)
{
    return {
        {"mode", std::string(to_string(model.mode))},
        {"variable_names", model.variable_names},
        {"means", model.means},
        {"scales", model.scales},
        {"eigenvalues", model.eigenvalues},
        {"eigenvectors", matrix_to_json(model.eigenvectors)},
        {"loadings", matrix_to_json(model.loadings)},
        {"analyzed_trace", model.analyzed_trace},
    };
}

PcaModel pca_model_from_json(const nlohmann::json& j)
{
    try {
        PcaModel m;
        m.mode = parse_mode(j.at("mode").get<std::string>());
        m.variable_names = j.at("variable_names").get<std::vector<std::string>>();
        m.means = j.at("means").get<std::vector<double>>();
        m.scales = j.at("scales").get<std::vector<double>>();
        m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        const std::size_t n = m.variable_names.size();
        if (m.means.size() != n || m.scales.size() != n || m.eigenvalues.size() != n) {
            throw SchemaError("PCA model vectors disagree with the variable count");
        }
        m.eigenvectors = matrix_from_json(j.at("eigenvectors"), n, n, "eigenvectors");
        m.loadings = matrix_from_json(j.at("loadings"), n, n, "loadings");
        m.analyzed_trace = j.at("analyzed_trace").get<double>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed PCA model: ") + e.what());
    } catch (const UsageError& e) {
        throw SchemaError(std::string("malformed PCA model: ") + e.what());
    }
}

} // namespace fsoqos::pca
