#pragma once
// Flat INI-style run configuration: [section] headers and key = value lines,
// full-line comments starting with # or ;. Every key is checked against the
// fixed schema below before any work starts; unknown sections or keys and
// duplicate keys are errors, missing keys keep their defaults.
//
// Sections and keys:
//   [run]        seed, out_dir
//   [ingest]     window, stride, features, max_gap_seconds, domain_rule
//                (lon_split | bbox | all_source), meridian,
//                source_lat_min/_max, source_lon_min/_max,
//                target_lat_min/_max, target_lon_min/_max
//   [preprocess] sma_window, sma_features
//   [model]      base_channels, conv_layers, residual_blocks, noise_alpha,
//                disc_base_channels, disc_conv_layers
//   [train]      learning_rate, batch_size, epochs, critic_iters,
//                lambda_cyc, lambda_id, lambda_gp, fd_epsilon,
//                gp_directions, checkpoint_interval
//   [tune]       method (gwo | grid | random), budget, dims
//                (name:scale:lower:upper[:v1|v2|...], comma separated)
//   [metrics]    embedding (random_projection | critic), embed_width,
//                mmd_bandwidth
//   [bench]      target, train_fraction, val_fraction, test_fraction,
//                augmentation_ratio, seeds, split_seed, reg_base_channels,
//                reg_conv_layers, reg_learning_rate, reg_batch_size,
//                reg_epochs, ablation_depths

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trajgan/ais_ingest.hpp"
#include "trajgan/augment_bench.hpp"
#include "trajgan/gwo_tuner.hpp"

namespace trajgan {

struct IniLine {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// Order-preserving parse; throws ConfigError with the offending line number.
std::vector<IniLine> parse_ini(const std::string& text);

struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "out";

  std::size_t window = 64;
  std::size_t stride = 32;
  std::vector<std::string> features = {"sog", "cog"};
  double max_gap_seconds = kDefaultMaxGapSeconds;
  std::string domain_rule = "lon_split";
  double meridian = -90.0;
  BoundingBox source_box{0, 0, 0, 0};
  BoundingBox target_box{0, 0, 0, 0};

  int sma_window = 5;
  std::vector<std::string> sma_features = {"sog", "cog"};

  GeneratorConfig generator;        // sized to the data at use time
  DiscriminatorConfig discriminator;

  TrainConfig train;

  std::string tune_method = "gwo";
  std::size_t tune_budget = 30;
  SearchSpace tune_space;

  std::string embedding = "random_projection";
  std::size_t embed_width = 64;
  double mmd_bandwidth = 0.0;

  BenchProtocol bench;
  std::vector<std::int64_t> ablation_depths = {1, 2, 3, 5, 7};

  RunConfig();
};

RunConfig run_config_from_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Resolved configuration echoed back as INI (stable order, all keys).
std::string render_run_config(const RunConfig& cfg);

// Domain rule named by cfg.domain_rule, built from its parameters.
DomainRule config_domain_rule(const RunConfig& cfg);

}  // namespace trajgan
