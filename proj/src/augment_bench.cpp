#include "trajgan/augment_bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>

namespace trajgan {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void fnv_mix(std::uint64_t& h, const void* bytes, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

void check_uniform_shape(const std::vector<AisSequence>& seqs) {
  for (const AisSequence& s : seqs)
    if (s.steps() != seqs[0].steps() || s.dims() != seqs[0].dims() ||
        s.feature_names != seqs[0].feature_names)
      throw BenchError("sequences disagree on length or feature schema");
}

int target_index(const AisSequence& seq, const std::string& target) {
  const int idx = seq.feature_index(target);
  if (idx < 0)
    throw BenchError("target feature '" + target +
                     "' is not in the sequence schema");
  return idx;
}

// Inputs are the first T-1 steps of every feature; the label is the target
// feature at the final step.
void pack_windows(const std::vector<AisSequence>& seqs,
                  const std::vector<std::size_t>& idx, int target_idx,
                  Tensor<float>& x, Tensor<float>& y) {
  const std::int64_t d = std::int64_t(seqs[0].dims());
  const std::int64_t T = std::int64_t(seqs[0].steps());
  const std::int64_t B = std::int64_t(idx.size());
  std::vector<float> xv(static_cast<std::size_t>(B * d * (T - 1)));
  std::vector<float> yv(static_cast<std::size_t>(B));
  for (std::int64_t b = 0; b < B; ++b) {
    const AisSequence& s = seqs[idx[std::size_t(b)]];
    for (std::int64_t f = 0; f < d; ++f)
      for (std::int64_t t = 0; t + 1 < T; ++t)
        xv[std::size_t((b * d + f) * (T - 1) + t)] =
            float(s.at(std::size_t(t), std::size_t(f)));
    yv[std::size_t(b)] =
        float(s.at(std::size_t(T - 1), std::size_t(target_idx)));
  }
  x = Tensor<float>::from({B, d, T - 1}, std::move(xv));
  y = Tensor<float>::from({B, 1}, std::move(yv));
}

DiscriminatorParams fit_regressor(const std::vector<AisSequence>& train,
                                  int target_idx, const RegressorConfig& cfg,
                                  std::uint64_t seed,
                                  const SplitGuard& guard) {
  guard.assert_clean(train, "regressor fit");
  if (train.empty()) throw BenchError("regressor fit got no sequences");
  if (train[0].steps() < 2)
    throw BenchError("regression needs at least 2 steps per sequence");
  DiscriminatorConfig dc;
  dc.input_features = std::int64_t(train[0].dims());
  dc.sequence_length = std::int64_t(train[0].steps()) - 1;
  dc.base_channels = cfg.base_channels;
  dc.num_conv_layers = cfg.num_conv_layers;
  DiscriminatorParams params = init_discriminator(dc, seed);
  AdamState opt = init_adam(params.named());
  Rng rng(seed ^ 0xB45CULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += std::size_t(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + std::size_t(cfg.batch_size));
      std::vector<std::size_t> idx(order.begin() + std::ptrdiff_t(start),
                                   order.begin() + std::ptrdiff_t(stop));
      Tensor<float> x, y;
      pack_windows(train, idx, target_idx, x, y);
      auto loss = mean_all(square(sub(discriminator_forward(params, x), y)));
      backward(loss);
      adam_step(params.named(), opt, cfg.learning_rate);
    }
  }
  return params;
}

BenchArm score_regressor(DiscriminatorParams& params,
                         const std::vector<AisSequence>& test,
                         int target_idx, const std::string& model) {
  std::vector<std::size_t> idx(test.size());
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  Tensor<float> x, y;
  pack_windows(test, idx, target_idx, x, y);
  Tensor<float> pred = discriminator_forward(params, x).detach();
  std::vector<double> y_true(test.size()), y_pred(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    y_true[i] = double(y.data()[i]);
    y_pred[i] = double(pred.data()[i]);
  }
  const RegressionMetrics m = regression_metrics(y_true, y_pred);
  return {model, m.mae, m.rmse, m.r2};
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / double(v.size() - 1));
}

}  // namespace

void validate_protocol(const BenchProtocol& protocol) {
  const double sum = protocol.train_fraction + protocol.val_fraction +
                     protocol.test_fraction;
  if (protocol.train_fraction <= 0 || protocol.val_fraction <= 0 ||
      protocol.test_fraction <= 0 || std::fabs(sum - 1.0) > 1e-9)
    throw BenchError("split fractions must be positive and sum to 1");
  if (protocol.augmentation_ratio < 0)
    throw BenchError("augmentation ratio must be >= 0");
  if (protocol.seeds.empty()) throw BenchError("seeds list is empty");
  if (protocol.target.empty()) throw BenchError("target feature is empty");
  if (protocol.regressor.base_channels < 1 ||
      protocol.regressor.num_conv_layers < 1 ||
      protocol.regressor.batch_size < 1 || protocol.regressor.epochs < 1 ||
      protocol.regressor.learning_rate <= 0)
    throw BenchError("regressor config fields must be positive");
}

std::uint64_t sequence_fingerprint(const AisSequence& seq) {
  std::uint64_t h = 1469598103934665603ULL;
  fnv_mix(h, &seq.mmsi, sizeof(seq.mmsi));
  fnv_mix(h, &seq.start_time, sizeof(seq.start_time));
  if (!seq.values.empty())
    fnv_mix(h, seq.values.data(), seq.values.size() * sizeof(double));
  if (!seq.rel_time.empty())
    fnv_mix(h, seq.rel_time.data(), seq.rel_time.size() * sizeof(double));
  return h;
}

void SplitGuard::assert_clean(const std::vector<AisSequence>& fit_inputs,
                              const std::string& what) const {
  for (const AisSequence& s : fit_inputs) {
    const std::uint64_t fp = sequence_fingerprint(s);
    for (std::uint64_t t : test_fingerprints)
      if (t == fp)
        throw BenchError("test sequence leaked into " + what);
  }
}

BenchSplit pool_and_split(const DomainSplit& data,
                          const BenchProtocol& protocol) {
  validate_protocol(protocol);
  std::vector<AisSequence> pool = data.source;
  std::vector<char> from_source(data.source.size(), 1);
  pool.insert(pool.end(), data.target.begin(), data.target.end());
  from_source.insert(from_source.end(), data.target.size(), 0);
  if (pool.empty()) throw BenchError("no sequences to split");
  check_uniform_shape(pool);

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  Rng rng(protocol.split_seed);
  rng.shuffle(order);

  const std::size_t n = pool.size();
  const std::size_t n_train = std::size_t(protocol.train_fraction * double(n));
  const std::size_t n_val = std::size_t(protocol.val_fraction * double(n));
  if (n_train < 1 || n_val < 1 || n_train + n_val >= n)
    throw BenchError("too few sequences for the requested split fractions");

  BenchSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = order[i];
    if (i < n_train) {
      split.train.push_back(pool[j]);
      split.train_from_source.push_back(from_source[j]);
    } else if (i < n_train + n_val) {
      split.val.push_back(pool[j]);
    } else {
      split.test.push_back(pool[j]);
      split.guard.test_fingerprints.push_back(sequence_fingerprint(pool[j]));
    }
  }
  return split;
}

BenchDeltas compute_deltas(const BenchArm& baseline,
                           const BenchArm& augmented) {
  return {baseline.mae - augmented.mae, baseline.rmse - augmented.rmse,
          augmented.r2 - baseline.r2};
}

BenchReport run_bench(const DomainSplit& data, CycleGanModel* generator,
                      const BenchProtocol& protocol) {
  BenchSplit split = pool_and_split(data, protocol);
  const int tgt = target_index(split.train[0], protocol.target);
  if (generator) {
    const GeneratorConfig& gc = generator->g_st.config;
    if (gc.input_features != std::int64_t(split.train[0].dims()) ||
        gc.sequence_length != std::int64_t(split.train[0].steps()))
      throw BenchError("generator expects " +
                       std::to_string(gc.sequence_length) + "x" +
                       std::to_string(gc.input_features) +
                       " sequences, data is " +
                       std::to_string(split.train[0].steps()) + "x" +
                       std::to_string(split.train[0].dims()));
  }

  std::vector<AisSequence> aug_sources;
  for (std::size_t i = 0; i < split.train.size(); ++i)
    if (split.train_from_source[i]) aug_sources.push_back(split.train[i]);

  BenchReport report;
  std::vector<double> b_mae, b_rmse, b_r2, a_mae, a_rmse, a_r2;
  for (std::uint64_t seed : protocol.seeds) {
    BenchSeedRun run;
    run.seed = seed;

    DiscriminatorParams base = fit_regressor(split.train, tgt,
                                             protocol.regressor, seed,
                                             split.guard);
    run.baseline = score_regressor(base, split.test, tgt, "baseline");

    std::vector<AisSequence> aug_train = split.train;
    if (generator && protocol.augmentation_ratio > 0 &&
        !aug_sources.empty()) {
      split.guard.assert_clean(aug_sources, "augmentation");
      Rng gen_rng(seed ^ 0x5AD5ULL);
      std::vector<AisSequence> synth = translate_sequences(
          generator->g_st, aug_sources, gen_rng, BnMode::eval);
      for (AisSequence& s : synth)
        for (double& v : s.values) v = std::clamp(v, 0.0, 1.0);
      const std::size_t want = std::size_t(std::llround(
          protocol.augmentation_ratio * double(split.train.size())));
      run.synthetic_count = std::min(want, synth.size());
      aug_train.insert(aug_train.end(), synth.begin(),
                       synth.begin() + std::ptrdiff_t(run.synthetic_count));
    }
    DiscriminatorParams aug = fit_regressor(aug_train, tgt,
                                            protocol.regressor, seed,
                                            split.guard);
    run.augmented = score_regressor(aug, split.test, tgt, "augmented");
    run.deltas = compute_deltas(run.baseline, run.augmented);

    b_mae.push_back(run.baseline.mae);
    b_rmse.push_back(run.baseline.rmse);
    b_r2.push_back(run.baseline.r2);
    a_mae.push_back(run.augmented.mae);
    a_rmse.push_back(run.augmented.rmse);
    a_r2.push_back(run.augmented.r2);
    report.runs.push_back(std::move(run));
  }

  const double ns = double(report.runs.size());
  auto mean = [ns](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / ns;
  };
  report.baseline_mean = {"baseline", mean(b_mae), mean(b_rmse), mean(b_r2)};
  report.augmented_mean = {"augmented", mean(a_mae), mean(a_rmse),
                           mean(a_r2)};
  report.baseline_spread = {"baseline_spread", sample_stddev(b_mae),
                            sample_stddev(b_rmse), sample_stddev(b_r2)};
  report.augmented_spread = {"augmented_spread", sample_stddev(a_mae),
                             sample_stddev(a_rmse), sample_stddev(a_r2)};
  report.delta_mean =
      compute_deltas(report.baseline_mean, report.augmented_mean);
  return report;
}

std::string render_bench_csv(const BenchReport& report) {
  std::string out = "model,mae,rmse,r2\n";
  char buf[160];
  auto row = [&](const BenchArm& arm) {
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g\n",
                  arm.model.c_str(), arm.mae, arm.rmse, arm.r2);
    out += buf;
  };
  row(report.baseline_mean);
  row(report.augmented_mean);
  row(report.baseline_spread);
  row(report.augmented_spread);
  std::snprintf(buf, sizeof(buf), "delta,%.10g,%.10g,%.10g\n",
                report.delta_mean.mae, report.delta_mean.rmse,
                report.delta_mean.r2);
  out += buf;
  return out;
}

std::vector<AblationRow> run_ablation(const DomainSplit& data,
                                      const std::vector<std::int64_t>& depths,
                                      const GeneratorConfig& gen_base,
                                      const DiscriminatorConfig& disc_base,
                                      const TrainConfig& train_base) {
  std::vector<AblationRow> rows;
  for (std::int64_t depth : depths) {
    AblationRow row;
    row.configuration = std::to_string(depth) + " conv layers";
    row.cnn_layers = depth;
    try {
      GeneratorConfig gc = gen_base;
      gc.num_conv_layers = depth;
      TrainState state = train(data, gc, disc_base, train_base);
      const GenerationEval ev = evaluate_generation(
          state.model.g_st, data.source, data.target, train_base.seed);
      row.psnr = ev.psnr;
      row.fid = ev.fid;
    } catch (const std::exception& e) {
      row.failed = true;
      row.note = e.what();
      row.psnr = kNan;
      row.fid = kNan;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "configuration,cnn_layers,psnr,fid\n";
  char buf[320];
  for (const AblationRow& r : rows) {
    std::string label = r.configuration;
    if (r.failed) label += " (failed: " + r.note + ")";
    for (char& c : label)
      if (c == ',' || c == '\n') c = ';';
    std::snprintf(buf, sizeof(buf), "%s,%lld,%.10g,%.10g\n", label.c_str(),
                  static_cast<long long>(r.cnn_layers), r.psnr, r.fid);
    out += buf;
  }
  return out;
}

}  // namespace trajgan
