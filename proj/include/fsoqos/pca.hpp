#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fsoqos/matrix.hpp"

namespace fsoqos::pca {

// n variables as rows, m observations as columns.
struct DataMatrix {
    Matrix values;
    std::vector<std::string> variable_names;

    std::size_t variables() const noexcept { return values.rows(); }
    std::size_t observations() const noexcept { return values.cols(); }

    // Checks n >= 1, m >= min_observations, finite entries, one name per row.
    void validate(std::size_t min_observations = 2) const;
};

enum class Mode { Correlation, Covariance };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

struct Standardized {
    DataMatrix data;
    std::vector<double> means;
    std::vector<double> scales;
};

// Centers every row; in correlation mode also divides by the sample
// standard deviation (divisor m - 1).
Standardized standardize(const DataMatrix& x, Mode mode);

// (1 / (m - 1)) X X^T for a row-centered X.
Matrix covariance(const Matrix& centered);

struct JacobiOptions {
    double relative_tolerance = 1e-12;
    int max_sweeps = 100;
};

struct Eigensystem {
    std::vector<double> values; // descending
    Matrix vectors;             // eigenvectors as columns
};

// Cyclic Jacobi diagonalisation of a symmetric matrix. Each eigenvector is
// signed so that its largest-magnitude entry is positive.
Eigensystem eigh_symmetric(const Matrix& s, const JacobiOptions& options = {});

struct PcaModel {
    std::vector<std::string> variable_names;
    std::vector<double> means;
    std::vector<double> scales;
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
    Matrix loadings;
    Mode mode = Mode::Correlation;
    double analyzed_trace = 0.0;

    std::size_t dimension() const noexcept { return eigenvalues.size(); }

    friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

PcaModel fit_pca(const DataMatrix& x, Mode mode = Mode::Correlation);

struct SelectionRule {
    enum class Kind { Kaiser, Cumulative, Fixed };
    Kind kind = Kind::Kaiser;
    double threshold = 1.0;
    std::size_t k = 1;

    static SelectionRule kaiser() { return {}; }
    static SelectionRule cumulative(double threshold) { return {Kind::Cumulative, threshold, 1}; }
    static SelectionRule fixed(std::size_t k) { return {Kind::Fixed, 1.0, k}; }
};

// "kaiser", "cumulative:<threshold>", or "fixed:<k>".
SelectionRule parse_selection_rule(std::string_view text);
std::string to_string(const SelectionRule& rule);

std::size_t select_components(std::span<const double> eigenvalues, const SelectionRule& rule);
std::size_t select_components(const PcaModel& model, const SelectionRule& rule);

// Standardizes x with the model statistics and projects it onto the
// leading k eigenvectors. Result is k x m.
Matrix project(const PcaModel& model, const DataMatrix& x, std::size_t k);

struct ExplainedVariance {
    std::vector<double> ratios;
    std::vector<double> cumulative;
};

ExplainedVariance explained_variance(const PcaModel& model);

void write_scree_csv(std::ostream& os, const PcaModel& model);

nlohmann::json to_json(const PcaModel& model);
PcaModel pca_model_from_json(const nlohmann::json& j);

} // namespace fsoqos::pca
