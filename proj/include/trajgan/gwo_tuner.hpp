#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajgan/losses_training.hpp"

namespace trajgan {

// Thrown when gwo_update is asked to step a pack past its horizon.
struct HorizonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ScaleKind { linear, log };

struct SearchDimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  ScaleKind scale = ScaleKind::linear;
  // Explicit candidate values for grid_search; ignored by the other methods.
  std::vector<double> grid;
};

struct SearchSpace {
  std::vector<SearchDimension> dims;
};

// Throws ConfigError unless every dim has lower < upper, a nonempty name,
// and log dims have lower > 0.
void validate_space(const SearchSpace& space);

// Positions are stored in internal coordinates: identity for linear dims,
// natural log for log dims. Raw points are recovered via to_raw.
double to_internal(const SearchDimension& dim, double raw);
double to_raw(const SearchDimension& dim, double internal);

// Lower-is-better objective over a raw-space point.
using Objective = std::function<double(const std::vector<double>&)>;

struct WolfPack {
  std::size_t pack_size = 0;
  std::size_t dim_count = 0;
  std::vector<double> positions;  // pack_size x dim_count, internal coords
  std::vector<double> fitness;    // pack_size
  std::size_t alpha = 0, beta = 0, delta = 0;
  std::int64_t t = 0;
  std::int64_t t_max = 0;
  bool single_leader = false;
};

// Uniform positions in internal coordinates, fitness set to +infinity.
WolfPack init_pack(const SearchSpace& space, std::size_t pack_size,
                   std::int64_t t_max, Rng& rng);

// Sets alpha/beta/delta to the indices of the three lowest fitnesses
// (distinct indices, ties broken by index).
void rank_pack(WolfPack& pack);

// Convergence control: a = 2 * (1 - t / t_max), decaying 2 -> 0.
double gwo_control(std::int64_t t, std::int64_t t_max);

// One encircling step along one dimension: leader - A * |C * leader - wolf|.
double gwo_candidate(double leader_pos, double wolf_pos, double A, double C);

// Moves every wolf toward the pack leaders and increments t. Each wolf, dim
// and leader draws fresh A = 2*a*r1 - a and C = 2*r2. New position is the
// mean of the three leader candidates (or the alpha candidate alone when
// single_leader is set), clamped to the internal bounds. Throws HorizonError
// once t reaches t_max.
void gwo_update(WolfPack& pack, const SearchSpace& space, Rng& rng);

struct SearchEval {
  std::vector<double> point;  // raw coordinates
  double fitness = 0.0;
};

struct SearchResult {
  std::vector<double> best_point;  // raw coordinates
  double best_fitness = 0.0;
  // Best-ever fitness after each evaluation; non-increasing.
  std::vector<double> trace;
  std::vector<SearchEval> table;  // every evaluation, in order
};

// Pack-based minimization: pack_size >= 4, t_max >= 1. Runs t_max update
// rounds after the initial evaluation. Non-finite objective values are
// treated as +infinity and the search continues.
SearchResult gwo_search(const Objective& objective, const SearchSpace& space,
                        std::size_t pack_size, std::int64_t t_max,
                        std::uint64_t seed, bool single_leader = false);

// Exhaustive Cartesian sweep over the per-dim grid lists (last dim fastest).
// Throws ConfigError when any dim has an empty grid.
SearchResult grid_search(const Objective& objective, const SearchSpace& space);

// n independent uniform draws (per-dim scale-aware).
SearchResult random_search(const Objective& objective,
                           const SearchSpace& space, std::size_t n,
                           std::uint64_t seed);

enum class TuneMethod { gwo, grid, random };

struct TuneRow {
  std::string technique;
  double psnr = 0.0;
  double fid = 0.0;
  double seconds = 0.0;
};

struct TuneResult {
  TrainConfig best_config;
  double best_fitness = 0.0;
  double best_psnr = 0.0;  // raw dB for the best point
  double best_fid = 0.0;   // raw FID for the best point
  bool truncated = false;  // budget ran out before the search plan finished
  std::size_t evaluations = 0;
  std::vector<TuneRow> rows;
  SearchResult search;
};

// Hyperparameter tuning over TrainConfig fields. Recognized dim names:
// learning_rate, lambda_cyc, lambda_id, lambda_gp, batch_size, epochs,
// critic_iters (the last three round to integers at evaluation time).
// Each evaluation trains from scratch on a head split of `data` and scores
// the source->target generator on the held-out tail: fitness =
// norm(FID) - norm(PSNR), both min-max scaled over the values observed so
// far (0.5 when only one value has been seen). budget counts evaluations;
// when the plan outgrows it the result is flagged truncated and carries the
// best point seen. Throws ConfigError for a zero budget or unknown dims.
TuneResult tune_training(const DomainSplit& data, const SearchSpace& space,
                         std::size_t budget, TuneMethod method,
                         std::uint64_t seed, const GeneratorConfig& gen_base,
                         const DiscriminatorConfig& disc_base,
                         const TrainConfig& train_base);

// CSV with header technique,psnr,fid,time_seconds.
std::string render_tune_csv(const std::vector<TuneRow>& rows);

}  // namespace trajgan
