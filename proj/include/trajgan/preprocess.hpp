#pragma once
// Preprocessing for multivariate time series: cubic-spline gap imputation,
// trailing moving-average smoothing, min-max normalization with exact
// inverse, and Spearman rank-correlation feature analysis.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajgan {

struct PreprocessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major N x d matrix with named feature columns.
struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> names, std::size_t n_rows)
      : feature_names(std::move(names)),
        values(n_rows * feature_names.size(), 0.0),
        rows(n_rows),
        cols(feature_names.size()) {}

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

struct MinMaxScaler {
  std::vector<std::string> feature_names;
  std::vector<double> x_min;
  std::vector<double> x_max;
};

struct SpearmanMatrix {
  std::vector<std::string> feature_names;
  std::vector<double> rho;  // d x d, row-major; symmetric, unit diagonal
  // Constant columns have no defined rank correlation; their off-diagonal
  // entries hold 0.0 with this flag set.
  std::vector<char> constant_feature;

  std::size_t dim() const { return feature_names.size(); }
  double at(std::size_t i, std::size_t j) const { return rho[i * dim() + j]; }
  bool undefined(std::size_t i, std::size_t j) const {
    return i != j && (constant_feature[i] || constant_feature[j]);
  }
};

struct FeatureReportRow {
  std::string name;
  double rho = 0.0;
  bool undefined = false;
  std::string marker;  // "retain" or "undefined correlation"
};

struct FeatureReport {
  std::string target;
  std::vector<FeatureReportRow> rows;
  std::string recommendation;
};

// `values` uses NaN for missing entries; `times` must be strictly
// increasing. Fits a natural cubic spline through the observed knots and
// fills every missing time; queries outside the observed span clamp to the
// boundary values.
std::vector<double> cubic_spline_impute(const std::vector<double>& times,
                                        const std::vector<double>& values);

// Evaluates the natural cubic spline through (knot_t, knot_v) at the given
// query points (clamped outside the span). Exposed for direct testing.
std::vector<double> natural_spline_eval(const std::vector<double>& knot_t,
                                        const std::vector<double>& knot_v,
                                        const std::vector<double>& query_t);

// Trailing window mean of the last n samples; the first n-1 positions use
// the partial prefix mean so the output length equals the input length.
std::vector<double> moving_average(const std::vector<double>& x, int n);

std::pair<FeatureMatrix, MinMaxScaler> minmax_fit_transform(
    const FeatureMatrix& data);
FeatureMatrix minmax_transform(const FeatureMatrix& data,
                               const MinMaxScaler& scaler);
FeatureMatrix minmax_inverse(const FeatureMatrix& normalized,
                             const MinMaxScaler& scaler);

SpearmanMatrix spearman_matrix(const FeatureMatrix& data);

// Mid-ranks (ties share the average of the positions they occupy).
std::vector<double> midranks(const std::vector<double>& x);

FeatureReport feature_report(const SpearmanMatrix& matrix,
                             const std::string& target);
std::string render(const FeatureReport& report);

}  // namespace trajgan
