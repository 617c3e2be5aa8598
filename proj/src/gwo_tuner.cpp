#include "trajgan/gwo_tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "trajgan/metrics.hpp"

namespace trajgan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kTunePackSize = 6;
constexpr std::size_t kTuneEmbedWidth = 8;

double internal_lower(const SearchDimension& dim) {
  return dim.scale == ScaleKind::log ? std::log(dim.lower) : dim.lower;
}

double internal_upper(const SearchDimension& dim) {
  return dim.scale == ScaleKind::log ? std::log(dim.upper) : dim.upper;
}

std::vector<double> raw_point(const WolfPack& pack, const SearchSpace& space,
                              std::size_t wolf) {
  std::vector<double> p(pack.dim_count);
  for (std::size_t d = 0; d < pack.dim_count; ++d)
    p[d] = to_raw(space.dims[d], pack.positions[wolf * pack.dim_count + d]);
  return p;
}

// Tracks best-ever/trace/table across evaluations; shared by all searchers.
struct SearchLog {
  SearchResult result;

  double record(const std::vector<double>& raw, double fitness) {
    if (!std::isfinite(fitness)) fitness = kInf;
    if (result.table.empty() || fitness < result.best_fitness) {
      result.best_fitness = fitness;
      result.best_point = raw;
    }
    result.table.push_back({raw, fitness});
    result.trace.push_back(result.best_fitness);
    return fitness;
  }
};

void evaluate_pack(WolfPack& pack, const SearchSpace& space,
                   const Objective& objective, SearchLog& log) {
  for (std::size_t i = 0; i < pack.pack_size; ++i) {
    std::vector<double> raw = raw_point(pack, space, i);
    pack.fitness[i] = log.record(raw, objective(raw));
  }
}

}  // namespace

void validate_space(const SearchSpace& space) {
  if (space.dims.empty()) throw ConfigError("search space has no dimensions");
  for (std::size_t i = 0; i < space.dims.size(); ++i) {
    const SearchDimension& d = space.dims[i];
    if (d.name.empty())
      throw ConfigError("search dim " + std::to_string(i) + " has no name");
    if (!(d.lower < d.upper))
      throw ConfigError("search dim '" + d.name + "': lower " +
                        std::to_string(d.lower) + " must be < upper " +
                        std::to_string(d.upper));
    if (d.scale == ScaleKind::log && !(d.lower > 0))
      throw ConfigError("search dim '" + d.name +
                        "': log scale needs lower > 0");
    for (std::size_t j = 0; j < i; ++j)
      if (space.dims[j].name == d.name)
        throw ConfigError("duplicate search dim '" + d.name + "'");
  }
}

double to_internal(const SearchDimension& dim, double raw) {
  return dim.scale == ScaleKind::log ? std::log(raw) : raw;
}

double to_raw(const SearchDimension& dim, double internal) {
  return dim.scale == ScaleKind::log ? std::exp(internal) : internal;
}

WolfPack init_pack(const SearchSpace& space, std::size_t pack_size,
                   std::int64_t t_max, Rng& rng) {
  validate_space(space);
  if (pack_size < 1) throw ConfigError("pack_size must be >= 1");
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  WolfPack pack;
  pack.pack_size = pack_size;
  pack.dim_count = space.dims.size();
  pack.t_max = t_max;
  pack.positions.resize(pack_size * pack.dim_count);
  pack.fitness.assign(pack_size, kInf);
  for (std::size_t i = 0; i < pack_size; ++i)
    for (std::size_t d = 0; d < pack.dim_count; ++d)
      pack.positions[i * pack.dim_count + d] = rng.uniform(
          internal_lower(space.dims[d]), internal_upper(space.dims[d]));
  return pack;
}

void rank_pack(WolfPack& pack) {
  if (pack.pack_size < 3)
    throw ConfigError("rank_pack needs at least 3 wolves");
  std::vector<std::size_t> order(pack.pack_size);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     double fa = pack.fitness[a], fb = pack.fitness[b];
                     if (std::isnan(fa)) fa = kInf;
                     if (std::isnan(fb)) fb = kInf;
                     return fa < fb;
                   });
  pack.alpha = order[0];
  pack.beta = order[1];
  pack.delta = order[2];
}

double gwo_control(std::int64_t t, std::int64_t t_max) {
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  return 2.0 * (1.0 - double(t) / double(t_max));
}

double gwo_candidate(double leader_pos, double wolf_pos, double A, double C) {
  return leader_pos - A * std::fabs(C * leader_pos - wolf_pos);
}

void gwo_update(WolfPack& pack, const SearchSpace& space, Rng& rng) {
  if (space.dims.size() != pack.dim_count)
    throw ConfigError("space has " + std::to_string(space.dims.size()) +
                      " dims, pack has " + std::to_string(pack.dim_count));
  if (pack.alpha >= pack.pack_size || pack.beta >= pack.pack_size ||
      pack.delta >= pack.pack_size)
    throw ConfigError("pack leaders are out of range");
  if (pack.t >= pack.t_max)
    throw HorizonError("gwo_update: t = " + std::to_string(pack.t) +
                       " has reached the horizon t_max = " +
                       std::to_string(pack.t_max));
  const double a = gwo_control(pack.t, pack.t_max);
  const std::size_t D = pack.dim_count;
  std::vector<std::size_t> leaders;
  if (pack.single_leader)
    leaders = {pack.alpha};
  else
    leaders = {pack.alpha, pack.beta, pack.delta};
  std::vector<double> leader_pos(leaders.size() * D);
  for (std::size_t l = 0; l < leaders.size(); ++l)
    for (std::size_t d = 0; d < D; ++d)
      leader_pos[l * D + d] = pack.positions[leaders[l] * D + d];
  for (std::size_t i = 0; i < pack.pack_size; ++i) {
    for (std::size_t d = 0; d < D; ++d) {
      double sum = 0.0;
      for (std::size_t l = 0; l < leaders.size(); ++l) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        const double A = 2.0 * a * r1 - a;
        const double C = 2.0 * r2;
        sum += gwo_candidate(leader_pos[l * D + d],
                             pack.positions[i * D + d], A, C);
      }
      const double lo = internal_lower(space.dims[d]);
      const double hi = internal_upper(space.dims[d]);
      pack.positions[i * D + d] =
          std::clamp(sum / double(leaders.size()), lo, hi);
    }
  }
  ++pack.t;
}

SearchResult gwo_search(const Objective& objective, const SearchSpace& space,
                        std::size_t pack_size, std::int64_t t_max,
                        std::uint64_t seed, bool single_leader) {
  validate_space(space);
  if (pack_size < 4) throw ConfigError("gwo_search needs pack_size >= 4");
  if (t_max < 1) throw ConfigError("gwo_search needs t_max >= 1");
  Rng rng(seed);
  WolfPack pack = init_pack(space, pack_size, t_max, rng);
  pack.single_leader = single_leader;
  SearchLog log;
  evaluate_pack(pack, space, objective, log);
  rank_pack(pack);
  for (std::int64_t round = 0; round < t_max; ++round) {
    gwo_update(pack, space, rng);
    evaluate_pack(pack, space, objective, log);
    rank_pack(pack);
  }
  return log.result;
}

SearchResult grid_search(const Objective& objective,
                         const SearchSpace& space) {
  validate_space(space);
  for (const SearchDimension& d : space.dims) {
    if (d.grid.empty())
      throw ConfigError("grid for dim '" + d.name + "' is empty");
    for (double v : d.grid)
      if (v < d.lower || v > d.upper)
        throw ConfigError("grid value " + std::to_string(v) + " for dim '" +
                          d.name + "' is out of bounds");
  }
  const std::size_t D = space.dims.size();
  std::vector<std::size_t> odo(D, 0);
  SearchLog log;
  for (;;) {
    std::vector<double> raw(D);
    for (std::size_t d = 0; d < D; ++d) raw[d] = space.dims[d].grid[odo[d]];
    log.record(raw, objective(raw));
    std::size_t d = D;
    while (d > 0) {
      --d;
      if (++odo[d] < space.dims[d].grid.size()) break;
      odo[d] = 0;
      if (d == 0) return log.result;
    }
  }
}

SearchResult random_search(const Objective& objective,
                           const SearchSpace& space, std::size_t n,
                           std::uint64_t seed) {
  validate_space(space);
  if (n < 1) throw ConfigError("random_search needs n >= 1");
  Rng rng(seed);
  SearchLog log;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> raw(space.dims.size());
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
      const SearchDimension& dim = space.dims[d];
      raw[d] = to_raw(dim, rng.uniform(internal_lower(dim),
                                       internal_upper(dim)));
    }
    log.record(raw, objective(raw));
  }
  return log.result;
}

namespace {

// Signals that the evaluation budget ran out mid-search.
struct TuneBudgetExhausted {};

std::int64_t round_positive(double v) {
  return std::max<std::int64_t>(1, std::llround(v));
}

TrainConfig apply_point(const TrainConfig& base, const SearchSpace& space,
                        const std::vector<double>& point) {
  TrainConfig cfg = base;
  for (std::size_t d = 0; d < space.dims.size(); ++d) {
    const std::string& name = space.dims[d].name;
    const double v = point[d];
    if (name == "learning_rate")
      cfg.learning_rate = v;
    else if (name == "lambda_cyc")
      cfg.weights.lambda_cyc = v;
    else if (name == "lambda_id")
      cfg.weights.lambda_id = v;
    else if (name == "lambda_gp")
      cfg.weights.lambda_gp = v;
    else if (name == "batch_size")
      cfg.batch_size = round_positive(v);
    else if (name == "epochs")
      cfg.epochs = round_positive(v);
    else if (name == "critic_iters")
      cfg.critic_iters = round_positive(v);
    else
      throw ConfigError("unknown tuning dimension '" + name + "'");
  }
  return cfg;
}

void split_domain(const std::vector<AisSequence>& all,
                  std::vector<AisSequence>& head,
                  std::vector<AisSequence>& tail) {
  if (all.size() >= 8) {
    const std::size_t val = std::max<std::size_t>(2, all.size() / 10);
    head.assign(all.begin(), all.end() - std::ptrdiff_t(val));
    tail.assign(all.end() - std::ptrdiff_t(val), all.end());
  } else {
    head = all;
    tail = all;
  }
}

double minmax_norm(double v, double lo, double hi) {
  return hi > lo ? (v - lo) / (hi - lo) : 0.5;
}

const char* technique_name(TuneMethod method) {
  switch (method) {
    case TuneMethod::gwo:
      return "GWO";
    case TuneMethod::grid:
      return "Grid Search";
    default:
      return "Random Search";
  }
}

}  // namespace

TuneResult tune_training(const DomainSplit& data, const SearchSpace& space,
                         std::size_t budget, TuneMethod method,
                         std::uint64_t seed, const GeneratorConfig& gen_base,
                         const DiscriminatorConfig& disc_base,
                         const TrainConfig& train_base) {
  validate_space(space);
  if (budget < 1) throw ConfigError("tune_training needs budget >= 1");
  if (data.source.size() < 2 || data.target.size() < 2)
    throw ConfigError("tune_training needs at least 2 sequences per domain");
  apply_point(train_base, space,
              std::vector<double>(space.dims.size(), 1.0));

  DomainSplit fit;
  std::vector<AisSequence> val_source, val_target;
  split_domain(data.source, fit.source, val_source);
  split_domain(data.target, fit.target, val_target);

  std::size_t evals = 0;
  double psnr_lo = kInf, psnr_hi = -kInf, fid_lo = kInf, fid_hi = -kInf;
  SearchLog log;
  TuneResult out;
  out.best_fitness = kInf;

  Objective objective = [&](const std::vector<double>& point) {
    if (evals >= budget) throw TuneBudgetExhausted{};
    ++evals;
    TrainConfig cfg = apply_point(train_base, space, point);
    cfg.checkpoint_interval = 0;
    cfg.checkpoint_dir.clear();
    TrainState state = train(fit, gen_base, disc_base, cfg);

    const GenerationEval ev = evaluate_generation(
        state.model.g_st, val_source, val_target, seed, kTuneEmbedWidth);
    const double psnr_raw = ev.psnr;
    const double fid_raw = ev.fid;

    psnr_lo = std::min(psnr_lo, psnr_raw);
    psnr_hi = std::max(psnr_hi, psnr_raw);
    fid_lo = std::min(fid_lo, fid_raw);
    fid_hi = std::max(fid_hi, fid_raw);
    const double fitness = minmax_norm(fid_raw, fid_lo, fid_hi) -
                           minmax_norm(psnr_raw, psnr_lo, psnr_hi);
    if (evals == 1 || fitness < out.best_fitness) {
      out.best_fitness = fitness;
      out.best_psnr = psnr_raw;
      out.best_fid = fid_raw;
      out.best_config = cfg;
    }
    log.record(point, fitness);
    return fitness;
  };

  const auto start = std::chrono::steady_clock::now();
  try {
    switch (method) {
      case TuneMethod::gwo: {
        const std::int64_t t_max = std::max<std::int64_t>(
            1, std::int64_t(budget / kTunePackSize) - 1);
        gwo_search(objective, space, kTunePackSize, t_max, seed);
        break;
      }
      case TuneMethod::grid:
        grid_search(objective, space);
        break;
      case TuneMethod::random:
        random_search(objective, space, budget, seed);
        break;
    }
  } catch (const TuneBudgetExhausted&) {
    out.truncated = true;
  }
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;

  out.evaluations = evals;
  out.search = log.result;
  out.rows.push_back(
      {technique_name(method), out.best_psnr, out.best_fid, elapsed.count()});
  return out;
}

std::string render_tune_csv(const std::vector<TuneRow>& rows) {
  std::string out = "technique,psnr,fid,time_seconds\n";
  char buf[160];
  for (const TuneRow& r : rows) {
    std::snprintf(buf, sizeof(buf), ",%.10g,%.10g,%.10g\n", r.psnr, r.fid,
                  r.seconds);
    out += r.technique;
    out += buf;
  }
  return out;
}

}  // namespace trajgan
