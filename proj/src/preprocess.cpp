#include "trajgan/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace trajgan {

namespace {

// Natural cubic spline second derivatives via the standard tridiagonal
// system (Thomas algorithm); M_0 = M_{n-1} = 0.
std::vector<double> spline_second_derivs(const std::vector<double>& t,
                                         const std::vector<double>& v) {
  const std::size_t n = t.size();
  std::vector<double> M(n, 0.0);
  if (n < 3) return M;
  const std::size_t m = n - 2;  // interior unknowns
  std::vector<double> diag(m), upper(m), lower(m), rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double h0 = t[i + 1] - t[i];
    const double h1 = t[i + 2] - t[i + 1];
    lower[i] = h0 / 6.0;
    diag[i] = (h0 + h1) / 3.0;
    upper[i] = h1 / 6.0;
    rhs[i] = (v[i + 2] - v[i + 1]) / h1 - (v[i + 1] - v[i]) / h0;
  }
  for (std::size_t i = 1; i < m; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  M[m] = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i > 0; --i)
    M[i] = (rhs[i - 1] - upper[i - 1] * M[i + 1]) / diag[i - 1];
  return M;
}

double spline_eval_one(const std::vector<double>& t, const std::vector<double>& v,
                       const std::vector<double>& M, double q) {
  if (q <= t.front()) return v.front();
  if (q >= t.back()) return v.back();
  // rightmost interval with t[i] <= q
  const auto it = std::upper_bound(t.begin(), t.end(), q);
  const std::size_t i = std::size_t(it - t.begin()) - 1;
  const double h = t[i + 1] - t[i];
  const double a = (t[i + 1] - q) / h;
  const double b = (q - t[i]) / h;
  return a * v[i] + b * v[i + 1] +
         ((a * a * a - a) * M[i] + (b * b * b - b) * M[i + 1]) * (h * h) / 6.0;
}

}  // namespace

std::vector<double> natural_spline_eval(const std::vector<double>& knot_t,
                                        const std::vector<double>& knot_v,
                                        const std::vector<double>& query_t) {
  if (knot_t.size() != knot_v.size())
    throw PreprocessError("spline: knot arrays differ in length");
  if (knot_t.size() < 2)
    throw PreprocessError("spline: need at least 2 observed points, got " +
                          std::to_string(knot_t.size()));
  for (std::size_t i = 1; i < knot_t.size(); ++i)
    if (!(knot_t[i] > knot_t[i - 1]))
      throw PreprocessError("spline: knot times must be strictly increasing");
  const auto M = spline_second_derivs(knot_t, knot_v);
  std::vector<double> out;
  out.reserve(query_t.size());
  for (double q : query_t) out.push_back(spline_eval_one(knot_t, knot_v, M, q));
  return out;
}

std::vector<double> cubic_spline_impute(const std::vector<double>& times,
                                        const std::vector<double>& values) {
  if (times.size() != values.size())
    throw PreprocessError("impute: times and values differ in length");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw PreprocessError(
          "impute: duplicate or non-increasing time at index " +
          std::to_string(i));
  std::vector<double> kt, kv;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!std::isnan(values[i])) {
      kt.push_back(times[i]);
      kv.push_back(values[i]);
    }
  if (kt.size() == values.size()) return values;
  if (kt.size() < 2)
    throw PreprocessError("impute: need at least 2 observed points, got " +
                          std::to_string(kt.size()));
  const auto M = spline_second_derivs(kt, kv);
  std::vector<double> out(values);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (std::isnan(out[i])) out[i] = spline_eval_one(kt, kv, M, times[i]);
  return out;
}

std::vector<double> moving_average(const std::vector<double>& x, int n) {
  if (n <= 0)
    throw PreprocessError("moving_average: window must be positive, got " +
                          std::to_string(n));
  std::vector<double> out(x.size());
  double running = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    running += x[t];
    if (t >= std::size_t(n)) running -= x[t - std::size_t(n)];
    const std::size_t width = std::min<std::size_t>(t + 1, std::size_t(n));
    out[t] = running / double(width);
  }
  return out;
}

std::pair<FeatureMatrix, MinMaxScaler> minmax_fit_transform(
    const FeatureMatrix& data) {
  if (data.rows == 0 || data.cols == 0)
    throw PreprocessError("minmax: empty matrix");
  MinMaxScaler scaler;
  scaler.feature_names = data.feature_names;
  scaler.x_min.assign(data.cols, 0.0);
  scaler.x_max.assign(data.cols, 0.0);
  for (std::size_t c = 0; c < data.cols; ++c) {
    double lo = data.at(0, c), hi = data.at(0, c);
    for (std::size_t r = 1; r < data.rows; ++r) {
      lo = std::min(lo, data.at(r, c));
      hi = std::max(hi, data.at(r, c));
    }
    scaler.x_min[c] = lo;
    scaler.x_max[c] = hi;
  }
  return {minmax_transform(data, scaler), std::move(scaler)};
}

FeatureMatrix minmax_transform(const FeatureMatrix& data,
                               const MinMaxScaler& scaler) {
  if (scaler.feature_names != data.feature_names)
    throw PreprocessError("minmax: scaler fitted on different features");
  FeatureMatrix out(data.feature_names, data.rows);
  for (std::size_t c = 0; c < data.cols; ++c) {
    const double lo = scaler.x_min[c];
    const double range = scaler.x_max[c] - lo;
    for (std::size_t r = 0; r < data.rows; ++r)
      out.at(r, c) = range == 0.0 ? 0.0 : (data.at(r, c) - lo) / range;
  }
  return out;
}

FeatureMatrix minmax_inverse(const FeatureMatrix& normalized,
                             const MinMaxScaler& scaler) {
  if (scaler.feature_names != normalized.feature_names)
    throw PreprocessError("minmax_inverse: feature names do not match scaler");
  FeatureMatrix out(normalized.feature_names, normalized.rows);
  for (std::size_t c = 0; c < normalized.cols; ++c) {
    const double lo = scaler.x_min[c];
    const double range = scaler.x_max[c] - lo;
    for (std::size_t r = 0; r < normalized.rows; ++r)
      out.at(r, c) = lo + normalized.at(r, c) * range;
  }
  return out;
}

std::vector<double> midranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    // positions i..j (0-based) share the mid-rank of 1-based positions
    const double r = double(i + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

// Equal values share a mid-rank, so ties show up as duplicate ranks.
bool has_ties(const std::vector<double>& ranks) {
  std::vector<double> sorted(ranks);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] == sorted[i - 1]) return true;
  return false;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(n);
  mb /= double(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

SpearmanMatrix spearman_matrix(const FeatureMatrix& data) {
  if (data.rows < 3)
    throw PreprocessError("spearman: need at least 3 rows, got " +
                          std::to_string(data.rows));
  const std::size_t d = data.cols;
  SpearmanMatrix out;
  out.feature_names = data.feature_names;
  out.rho.assign(d * d, 0.0);
  out.constant_feature.assign(d, 0);

  std::vector<std::vector<double>> cols(d), ranks(d);
  for (std::size_t c = 0; c < d; ++c) {
    cols[c].resize(data.rows);
    for (std::size_t r = 0; r < data.rows; ++r) cols[c][r] = data.at(r, c);
    out.constant_feature[c] =
        std::all_of(cols[c].begin(), cols[c].end(),
                    [&](double v) { return v == cols[c][0]; })
            ? 1
            : 0;
    ranks[c] = midranks(cols[c]);
  }

  const double n = double(data.rows);
  for (std::size_t i = 0; i < d; ++i) {
    out.rho[i * d + i] = 1.0;
    for (std::size_t j = i + 1; j < d; ++j) {
      double rho = 0.0;
      if (!out.constant_feature[i] && !out.constant_feature[j]) {
        if (!has_ties(ranks[i]) && !has_ties(ranks[j])) {
          double sd2 = 0.0;
          for (std::size_t r = 0; r < data.rows; ++r) {
            const double diff = ranks[i][r] - ranks[j][r];
            sd2 += diff * diff;
          }
          rho = 1.0 - 6.0 * sd2 / (n * (n * n - 1.0));
        } else {
          rho = pearson(ranks[i], ranks[j]);
        }
      }
      out.rho[i * d + j] = rho;
      out.rho[j * d + i] = rho;
    }
  }
  return out;
}

FeatureReport feature_report(const SpearmanMatrix& matrix,
                             const std::string& target) {
  const auto it = std::find(matrix.feature_names.begin(),
                            matrix.feature_names.end(), target);
  if (it == matrix.feature_names.end())
    throw PreprocessError("feature_report: unknown target feature '" + target +
                          "'");
  const std::size_t ti = std::size_t(it - matrix.feature_names.begin());
  FeatureReport report;
  report.target = target;
  for (std::size_t i = 0; i < matrix.dim(); ++i) {
    if (i == ti) continue;
    FeatureReportRow row;
    row.name = matrix.feature_names[i];
    row.undefined = matrix.undefined(i, ti);
    row.rho = matrix.at(i, ti);
    row.marker = row.undefined ? "undefined correlation" : "retain";
    report.rows.push_back(std::move(row));
  }
  report.recommendation = "retain all features";
  return report;
}

std::string render(const FeatureReport& report) {
  std::ostringstream os;
  os << "feature correlation vs " << report.target << "\n";
  for (const auto& row : report.rows) {
    os << "  " << row.name << ": ";
    if (row.undefined)
      os << "-";
    else
      os << row.rho;
    os << " [" << row.marker << "]\n";
  }
  os << "recommendation: " << report.recommendation << "\n";
  return os.str();
}

}  // namespace trajgan
