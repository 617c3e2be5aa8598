#include "trajgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include <Eigen/Dense>

#include "trajgan/losses_training.hpp"
#include "trajgan/rng.hpp"
#include "trajgan/tensor.hpp"

namespace trajgan {

namespace {

constexpr double kCovShrinkage = 1e-6;
constexpr double kEigTolerance = -1e-8;

void require_same_size(const std::vector<double>& a,
                       const std::vector<double>& b, const char* who) {
  if (a.size() != b.size())
    throw ShapeError(std::string(who) + ": size " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
}

std::uint64_t fingerprint(DiscriminatorParams& params) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto& np : params.named())
    for (float v : np.tensor.data()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int s = 0; s < 32; s += 8) {
        h ^= (bits >> s) & 0xff;
        h *= 1099511628211ull;
      }
    }
  return h;
}

Eigen::MatrixXd to_matrix(const FeatureEmbedding& e) {
  Eigen::MatrixXd m(Eigen::Index(e.n), Eigen::Index(e.k));
  for (std::size_t i = 0; i < e.n; ++i)
    for (std::size_t j = 0; j < e.k; ++j)
      m(Eigen::Index(i), Eigen::Index(j)) = e.at(i, j);
  return m;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  Eigen::RowVectorXd mean = m.colwise().mean();
  Eigen::MatrixXd centered = m.rowwise() - mean;
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / double(n - 1);
  cov.diagonal().array() += kCovShrinkage;
  return cov;
}

// V f(D) V^T for a symmetric matrix, with small negative eigenvalues clamped.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sym, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericalError(std::string("eigendecomposition failed for ") + what);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < kEigTolerance)
      throw NumericalError(std::string(what) + " has eigenvalue " +
                           std::to_string(ev[i]) +
                           " below the PSD tolerance");
    if (ev[i] < 0) ev[i] = 0;
    ev[i] = std::sqrt(ev[i]);
  }
  return es.eigenvectors() * ev.asDiagonal() *
         es.eigenvectors().transpose();
}

double sq_dist(const FeatureEmbedding& a, std::size_t i,
               const FeatureEmbedding& b, std::size_t j) {
  double s = 0;
  for (std::size_t c = 0; c < a.k; ++c) {
    const double d = a.at(i, c) - b.at(j, c);
    s += d * d;
  }
  return s;
}

}  // namespace

double mse(const std::vector<double>& real, const std::vector<double>& gen) {
  require_same_size(real, gen, "mse");
  if (real.empty()) throw std::invalid_argument("mse: empty input");
  double acc = 0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    const double d = real[i] - gen[i];
    acc += d * d;
  }
  return acc / double(real.size());
}

double psnr(const std::vector<double>& real, const std::vector<double>& gen,
            double max_val) {
  if (max_val <= 0)
    throw std::invalid_argument("psnr: max_val must be positive");
  const double m = mse(real, gen);
  if (m == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / m);
}

FeatureEmbedding feature_embed(const std::vector<AisSequence>& sequences,
                               const RandomProjection& extractor) {
  if (sequences.empty())
    throw std::invalid_argument("feature_embed: no sequences");
  if (extractor.k == 0)
    throw std::invalid_argument("feature_embed: k must be positive");
  const std::size_t T = sequences.front().steps();
  const std::size_t d = sequences.front().dims();
  const std::size_t in = T * d;
  for (const auto& s : sequences)
    if (s.steps() != T || s.dims() != d)
      throw MetricsContractError(
          "feature_embed: sequences disagree on T x d shape");

  Rng rng(extractor.seed);
  const double scale = 1.0 / std::sqrt(double(in));
  std::vector<double> proj(extractor.k * in);
  for (auto& v : proj) v = rng.normal(0.0, scale);

  FeatureEmbedding out;
  out.n = sequences.size();
  out.k = extractor.k;
  out.extractor = "random_projection(seed=" + std::to_string(extractor.seed) +
                  ",k=" + std::to_string(extractor.k) +
                  ",in=" + std::to_string(in) + ")";
  out.data.resize(out.n * out.k);
  for (std::size_t i = 0; i < out.n; ++i) {
    const auto& vals = sequences[i].values;
    for (std::size_t j = 0; j < out.k; ++j) {
      double acc = 0;
      for (std::size_t c = 0; c < in; ++c) acc += proj[j * in + c] * vals[c];
      out.data[i * out.k + j] = std::tanh(acc);
    }
  }
  return out;
}

FeatureEmbedding feature_embed(const std::vector<AisSequence>& sequences,
                               DiscriminatorParams& critic) {
  if (sequences.empty())
    throw std::invalid_argument("feature_embed: no sequences");
  const auto& cfg = critic.config;
  for (const auto& s : sequences)
    if (std::int64_t(s.steps()) != cfg.sequence_length ||
        std::int64_t(s.dims()) != cfg.input_features)
      throw MetricsContractError(
          "feature_embed: sequence shape does not match the critic (" +
          std::to_string(s.steps()) + "x" + std::to_string(s.dims()) +
          " vs " + std::to_string(cfg.sequence_length) + "x" +
          std::to_string(cfg.input_features) + ")");

  std::vector<std::uint64_t> idx(sequences.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto batch = pack_batch(sequences, idx);

  auto h = add_scalar(mul_scalar(batch, 2.0f), -1.0f);
  for (auto& layer : critic.convs) {
    h = bias_add_channel(conv1d(h, layer.w, 2, 1), layer.b);
    h = leaky_relu(h, 0.2f);
  }

  FeatureEmbedding out;
  out.n = sequences.size();
  out.k = std::size_t(h.shape()[1] * h.shape()[2]);
  char desc[160];
  std::snprintf(desc, sizeof(desc),
                "critic_penultimate(d=%lld,T=%lld,base=%lld,layers=%lld,fp=%016llx)",
                static_cast<long long>(cfg.input_features),
                static_cast<long long>(cfg.sequence_length),
                static_cast<long long>(cfg.base_channels),
                static_cast<long long>(cfg.num_conv_layers),
                static_cast<unsigned long long>(fingerprint(critic)));
  out.extractor = desc;
  out.data.resize(out.n * out.k);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = double(h.data()[i]);
  return out;
}

double fid(const FeatureEmbedding& emb_real, const FeatureEmbedding& emb_gen,
           std::string* warning) {
  if (emb_real.extractor != emb_gen.extractor)
    throw MetricsContractError("fid: embeddings from different extractors (" +
                               emb_real.extractor + " vs " +
                               emb_gen.extractor + ")");
  if (emb_real.k != emb_gen.k)
    throw ShapeError("fid: embedding widths differ");
  if (emb_real.n < 2 || emb_gen.n < 2)
    throw std::invalid_argument("fid: need at least 2 samples per side");
  if (warning) {
    warning->clear();
    if (emb_real.n < emb_real.k + 1 || emb_gen.n < emb_gen.k + 1)
      *warning = "sample count below k+1; covariance estimate is singular "
                 "before shrinkage";
  }

  const auto mr = to_matrix(emb_real);
  const auto mg = to_matrix(emb_gen);
  Eigen::RowVectorXd mu_r = mr.colwise().mean();
  Eigen::RowVectorXd mu_g = mg.colwise().mean();
  const Eigen::MatrixXd cov_r = covariance(mr);
  const Eigen::MatrixXd cov_g = covariance(mg);

  const Eigen::MatrixXd root_r = psd_sqrt(cov_r, "real covariance");
  Eigen::MatrixXd inner = root_r * cov_g * root_r;
  inner = ((inner + inner.transpose()) * 0.5).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed for the product matrix");
  double tr_sqrt = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double ev = es.eigenvalues()[i];
    if (ev < kEigTolerance)
      throw NumericalError("product matrix has eigenvalue " +
                           std::to_string(ev) + " below the PSD tolerance");
    if (ev < 0) ev = 0;
    tr_sqrt += std::sqrt(ev);
  }

  const double mean_term = (mu_r - mu_g).squaredNorm();
  return mean_term + cov_r.trace() + cov_g.trace() - 2.0 * tr_sqrt;
}

double mmd_rbf(const FeatureEmbedding& X, const FeatureEmbedding& Y,
               double bandwidth) {
  if (X.k != Y.k) throw ShapeError("mmd_rbf: embedding widths differ");
  if (X.n < 2 || Y.n < 2)
    throw std::invalid_argument(
        "mmd_rbf: unbiased estimator needs at least 2 samples per side");
  if (bandwidth < 0)
    throw std::invalid_argument("mmd_rbf: bandwidth must be positive");

  const std::size_t N = X.n, M = Y.n;
  if (bandwidth == 0) {
    std::vector<double> dists;
    dists.reserve((N + M) * (N + M - 1) / 2);
    auto row = [&](std::size_t i) -> const FeatureEmbedding& {
      return i < N ? X : Y;
    };
    auto ri = [&](std::size_t i) { return i < N ? i : i - N; };
    for (std::size_t i = 0; i < N + M; ++i)
      for (std::size_t j = i + 1; j < N + M; ++j)
        dists.push_back(std::sqrt(sq_dist(row(i), ri(i), row(j), ri(j))));
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2,
                     dists.end());
    bandwidth = dists[dists.size() / 2];
    if (bandwidth == 0) bandwidth = 1.0;
  }
  const double denom = 2.0 * bandwidth * bandwidth;
  auto kern = [&](double d2) { return std::exp(-d2 / denom); };

  if (N == M) {
    // Paired U-statistic: exactly zero when X and Y are the same sample.
    double acc = 0;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        if (i == j) continue;
        acc += kern(sq_dist(X, i, X, j)) + kern(sq_dist(Y, i, Y, j)) -
               kern(sq_dist(X, i, Y, j)) - kern(sq_dist(Y, i, X, j));
      }
    return acc / double(N * (N - 1));
  }

  double xx = 0, yy = 0, xy = 0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      if (i != j) xx += kern(sq_dist(X, i, X, j));
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      if (i != j) yy += kern(sq_dist(Y, i, Y, j));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < M; ++j) xy += kern(sq_dist(X, i, Y, j));
  return xx / double(N * (N - 1)) + yy / double(M * (M - 1)) -
         2.0 * xy / double(N * M);
}

double wasserstein1d(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty())
    throw std::invalid_argument("wasserstein1d: empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const std::size_t N = x.size(), M = y.size();
  std::size_t i = 0, j = 0;
  double q = 0, w = 0;
  while (i < N && j < M) {
    // Next quantile breakpoint: min((i+1)/N, (j+1)/M), compared exactly.
    const std::uint64_t lhs = std::uint64_t(i + 1) * M;
    const std::uint64_t rhs = std::uint64_t(j + 1) * N;
    const double qn = lhs <= rhs ? double(i + 1) / double(N)
                                 : double(j + 1) / double(M);
    w += (qn - q) * std::abs(x[i] - y[j]);
    q = qn;
    if (lhs <= rhs) ++i;
    if (rhs <= lhs) ++j;
  }
  return w;
}

RegressionMetrics regression_metrics(const std::vector<double>& y_true,
                                     const std::vector<double>& y_pred) {
  require_same_size(y_true, y_pred, "regression_metrics");
  if (y_true.size() < 2)
    throw std::invalid_argument("regression_metrics: need at least 2 points");

  const std::size_t n = y_true.size();
  double abs_acc = 0, sq_acc = 0, mean = 0;
  for (double v : y_true) mean += v;
  mean /= double(n);

  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y_true[i] - y_pred[i];
    abs_acc += std::abs(e);
    sq_acc += e * e;
    ss_res += e * e;
    const double d = y_true[i] - mean;
    ss_tot += d * d;
  }

  RegressionMetrics out;
  out.mae = abs_acc / double(n);
  out.rmse = std::sqrt(sq_acc / double(n));
  if (ss_tot == 0) {
    out.r2_defined = false;
    out.r2 = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.r2 = 1.0 - ss_res / ss_tot;
  }
  return out;
}

std::string render_csv(const MetricsReport& report) {
  std::string out = "metric,value,extractor,n_real,n_gen\n";
  char buf[256];
  for (const auto& m : report.values) {
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%s,%zu,%zu\n", m.name.c_str(),
                  m.value, report.extractor.c_str(), report.n_real,
                  report.n_gen);
    out += buf;
  }
  return out;
}

GenerationEval evaluate_generation(GeneratorParams& generator,
                                   const std::vector<AisSequence>& source,
                                   const std::vector<AisSequence>& target,
                                   std::uint64_t seed,
                                   std::size_t embed_width) {
  constexpr double kPsnrCap = 200.0;
  constexpr std::uint64_t kEmbedSeed = 0x5EED;
  Rng gen_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<AisSequence> fakes =
      translate_sequences(generator, source, gen_rng, BnMode::eval);
  for (AisSequence& s : fakes)
    for (double& v : s.values) v = std::clamp(v, 0.0, 1.0);

  const std::size_t m = std::min(target.size(), fakes.size());
  std::vector<double> real_flat, fake_flat;
  for (std::size_t i = 0; i < m; ++i) {
    real_flat.insert(real_flat.end(), target[i].values.begin(),
                     target[i].values.end());
    fake_flat.insert(fake_flat.end(), fakes[i].values.begin(),
                     fakes[i].values.end());
  }
  GenerationEval out;
  out.psnr = std::min(psnr(real_flat, fake_flat, 1.0), kPsnrCap);
  RandomProjection proj{kEmbedSeed, embed_width};
  out.fid = fid(feature_embed(target, proj), feature_embed(fakes, proj));
  return out;
}

}  // namespace trajgan
