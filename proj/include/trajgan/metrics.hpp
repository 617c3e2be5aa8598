#pragma once
// Evaluation metrics: MSE/PSNR, Frechet distance over feature embeddings,
// unbiased RBF MMD, 1D Wasserstein, and regression metrics.
//
// FID needs a feature extractor; an image-pretrained network cannot consume
// 1D sequences, so two substitutes are provided: a seeded Gaussian random
// projection (reproducible default) and the penultimate activation of a
// trained critic. Values are comparable only within one extractor, so every
// embedding carries its extractor descriptor and fid() refuses mixed ones.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajgan/ais_ingest.hpp"
#include "trajgan/model.hpp"

namespace trajgan {

struct MetricsContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FeatureEmbedding {
  std::vector<double> data;  // n x k row-major
  std::size_t n = 0;
  std::size_t k = 0;
  std::string extractor;

  double at(std::size_t i, std::size_t j) const { return data[i * k + j]; }
};

// Mean of squared differences over all elements.
double mse(const std::vector<double>& real, const std::vector<double>& gen);

// 10*log10(max_val^2 / mse); +infinity when the arrays are identical.
double psnr(const std::vector<double>& real, const std::vector<double>& gen,
            double max_val = 1.0);

struct RandomProjection {
  std::uint64_t seed = 0;
  std::size_t k = 64;
};

// Flattens each T x d sequence, projects with a seeded Gaussian matrix and
// applies tanh. All sequences must share one T x d shape.
FeatureEmbedding feature_embed(const std::vector<AisSequence>& sequences,
                               const RandomProjection& extractor);

// Critic forward stopped before the final dense layer.
FeatureEmbedding feature_embed(const std::vector<AisSequence>& sequences,
                               DiscriminatorParams& critic);

// Frechet distance between Gaussian fits of the two embeddings. `warning`
// (when given) receives a note if a sample count is below k+1.
double fid(const FeatureEmbedding& emb_real, const FeatureEmbedding& emb_gen,
           std::string* warning = nullptr);

// Unbiased MMD^2 with Gaussian kernel. bandwidth <= 0 selects the median
// pairwise-distance heuristic over the pooled sample.
double mmd_rbf(const FeatureEmbedding& X, const FeatureEmbedding& Y,
               double bandwidth = 0.0);

double wasserstein1d(std::vector<double> x, std::vector<double> y);

struct RegressionMetrics {
  double mae = 0;
  double rmse = 0;
  double r2 = 0;
  bool r2_defined = true;  // false when y_true is constant
};

RegressionMetrics regression_metrics(const std::vector<double>& y_true,
                                     const std::vector<double>& y_pred);

struct MetricValue {
  std::string name;
  double value = 0;
  std::string unit;
};

struct MetricsReport {
  std::vector<MetricValue> values;
  std::string extractor;
  std::size_t n_real = 0;
  std::size_t n_gen = 0;
};

// CSV rows: metric,value,extractor,n_real,n_gen (with header).
std::string render_csv(const MetricsReport& report);

// Translation quality proxy shared by tuning, ablation and the CLI: maps
// source through the generator (eval mode, rng derived from seed), clamps to
// [0,1], pairs real/generated by index for PSNR (capped at 200 dB so exact
// matches stay finite) and compares seeded random-projection embeddings of
// width embed_width for FID.
struct GenerationEval {
  double psnr = 0.0;
  double fid = 0.0;
};
GenerationEval evaluate_generation(GeneratorParams& generator,
                                   const std::vector<AisSequence>& source,
                                   const std::vector<AisSequence>& target,
                                   std::uint64_t seed,
                                   std::size_t embed_width = 8);

}  // namespace trajgan
