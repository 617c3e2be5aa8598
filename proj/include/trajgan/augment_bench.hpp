#pragma once
// Downstream-utility harness: trains a small next-step regressor on real
// sequences with and without synthetic augmentation and reports the metric
// deltas, plus a generator-depth ablation sweep.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajgan/losses_training.hpp"
#include "trajgan/metrics.hpp"

namespace trajgan {

struct BenchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Small 1D-conv regressor reusing the critic layer stack: conv(k4,s2) blocks
// into a dense head, trained with Adam on squared error.
struct RegressorConfig {
  std::int64_t base_channels = 8;
  std::int64_t num_conv_layers = 2;
  double learning_rate = 1e-3;
  std::int64_t batch_size = 8;
  std::int64_t epochs = 30;
};

struct BenchProtocol {
  std::string target = "sog";  // feature regressed at the final step
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  double augmentation_ratio = 1.0;  // synthetic:real, capped by availability
  RegressorConfig regressor;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::uint64_t split_seed = 4242;  // one pooled split shared by all seeds
};

// Fractions must be positive and sum to 1, ratio >= 0, seeds nonempty.
void validate_protocol(const BenchProtocol& protocol);

// Fingerprints of the held-out test sequences; every fit call asserts its
// inputs against this set so leakage throws instead of biasing results.
struct SplitGuard {
  std::vector<std::uint64_t> test_fingerprints;

  void assert_clean(const std::vector<AisSequence>& fit_inputs,
                    const std::string& what) const;
};

std::uint64_t sequence_fingerprint(const AisSequence& seq);

struct BenchSplit {
  std::vector<AisSequence> train, val, test;
  std::vector<char> train_from_source;  // parallel to train
  SplitGuard guard;
};

// Pools both domains, shuffles with split_seed and cuts by the protocol
// fractions. Every slice keeps at least one sequence or this throws.
BenchSplit pool_and_split(const DomainSplit& data,
                          const BenchProtocol& protocol);

struct BenchArm {
  std::string model;  // "baseline" or "augmented"
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
};

struct BenchDeltas {
  double mae = 0.0;   // baseline - augmented (positive = augmentation helped)
  double rmse = 0.0;  // baseline - augmented
  double r2 = 0.0;    // augmented - baseline
};

// Antisymmetric: compute_deltas(a, b) == -compute_deltas(b, a) fieldwise.
BenchDeltas compute_deltas(const BenchArm& baseline, const BenchArm& augmented);

struct BenchSeedRun {
  std::uint64_t seed = 0;
  BenchArm baseline, augmented;
  BenchDeltas deltas;
  std::size_t synthetic_count = 0;
};

struct BenchReport {
  std::vector<BenchSeedRun> runs;
  BenchArm baseline_mean, augmented_mean;
  BenchArm baseline_spread, augmented_spread;  // sample stddev across seeds
  BenchDeltas delta_mean;
};

// Trains the regressor per seed twice (same init seed for both arms): once
// on the real train split, once on real plus generator(source-domain train
// sequences), both scored on the untouched test split. Passing a null
// generator leaves the augmented arm purely real. Throws BenchError on
// feature-schema mismatch, a missing target feature, or test leakage.
BenchReport run_bench(const DomainSplit& data, CycleGanModel* generator,
                      const BenchProtocol& protocol);

// CSV rows baseline/augmented (means), *_spread, delta under the header
// model,mae,rmse,r2.
std::string render_bench_csv(const BenchReport& report);

struct AblationRow {
  std::string configuration;
  std::int64_t cnn_layers = 0;
  double psnr = 0.0;
  double fid = 0.0;
  bool failed = false;
  std::string note;
};

// Trains one CycleGAN per requested generator depth with the identical
// budget and seed, then scores source->target translation. A depth whose
// run throws is kept as a flagged row instead of aborting the sweep.
std::vector<AblationRow> run_ablation(const DomainSplit& data,
                                      const std::vector<std::int64_t>& depths,
                                      const GeneratorConfig& gen_base,
                                      const DiscriminatorConfig& disc_base,
                                      const TrainConfig& train_base);

// CSV under the header configuration,cnn_layers,psnr,fid; failed rows carry
// the note inside the configuration cell and NaN metrics.
std::string render_ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace trajgan
