// Pipeline entry point: preprocess | train | tune | generate | evaluate |
// bench | ablate. Every command takes --config/--seed/--out, echoes its
// resolved configuration into the output directory, and exits 0 only when
// all declared outputs exist. Outputs are byte-identical across reruns for
// fixed inputs and seed; wall-clock readings live in run_meta.json only.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "trajgan/ais_ingest.hpp"
#include "trajgan/augment_bench.hpp"
#include "trajgan/complexity_report.hpp"
#include "trajgan/config.hpp"
#include "trajgan/gwo_tuner.hpp"
#include "trajgan/losses_training.hpp"
#include "trajgan/metrics.hpp"
#include "trajgan/model.hpp"
#include "trajgan/preprocess.hpp"
#include "trajgan/seqstore.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trajgan;

namespace {

constexpr double kPsnrCapDb = 200.0;
constexpr std::uint64_t kEvalRngSalt = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kProjSeed = 0x5EED;

[[noreturn]] void missing_input(const std::string& path) {
  std::cerr << "error: missing input file: " << path << "\n";
  std::exit(2);
}

void require_input(const std::string& path) {
  if (!fs::exists(path)) missing_input(path);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string now_iso_utc() {
  std::time_t t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

// config.ini is deterministic; run_meta.json is the timestamp sidecar.
void write_meta(const RunConfig& cfg, const std::string& command,
                const std::vector<std::string>& inputs, json extra) {
  json meta = {{"command", command},
               {"inputs", inputs},
               {"seed", cfg.seed},
               {"written_at", now_iso_utc()}};
  for (auto& [k, v] : extra.items()) meta[k] = v;
  write_text(fs::path(cfg.out_dir) / "run_meta.json", meta.dump(2) + "\n");
}

int finish(const RunConfig& cfg, const std::vector<std::string>& outputs) {
  bool ok = true;
  for (const std::string& name : outputs) {
    fs::path p = fs::path(cfg.out_dir) / name;
    if (!fs::exists(p)) {
      std::cerr << "error: declared output missing: " << p.string() << "\n";
      ok = false;
      continue;
    }
    std::cout << "wrote " << p.string() << " (" << fs::file_size(p)
              << " bytes)\n";
  }
  return ok ? 0 : 1;
}

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration file");
  cmd->add_option("--seed", c.seed, "global seed override");
  cmd->add_option("--out", c.out, "output directory override");
}

RunConfig resolve(CLI::App* cmd, const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) {
    require_input(c.config);
    cfg = load_run_config(c.config);
  }
  if (cmd->count("--seed")) cfg.seed = c.seed;
  if (cmd->count("--out")) cfg.out_dir = c.out;
  cfg.train.seed = cfg.seed;
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / "config.ini", render_run_config(cfg));
  return cfg;
}

FeatureMatrix seq_matrix(const AisSequence& s) {
  FeatureMatrix m(s.feature_names, s.steps());
  for (std::size_t t = 0; t < s.steps(); ++t)
    for (std::size_t f = 0; f < s.dims(); ++f) m.at(t, f) = s.at(t, f);
  return m;
}

void matrix_into_seq(const FeatureMatrix& m, AisSequence& s) {
  for (std::size_t t = 0; t < s.steps(); ++t)
    for (std::size_t f = 0; f < s.dims(); ++f) s.at(t, f) = m.at(t, f);
}

AisSequence project_features(const AisSequence& s,
                             const std::vector<std::string>& names) {
  AisSequence out;
  out.mmsi = s.mmsi;
  out.start_time = s.start_time;
  out.feature_names = names;
  out.rel_time = s.rel_time;
  out.values.resize(s.steps() * names.size());
  out.mask.resize(s.steps() * names.size());
  for (std::size_t f = 0; f < names.size(); ++f) {
    int src = s.feature_index(names[f]);
    if (src < 0) throw IngestError("feature '" + names[f] + "' not built");
    for (std::size_t t = 0; t < s.steps(); ++t) {
      out.values[t * names.size() + f] = s.at(t, std::size_t(src));
      out.mask[t * names.size() + f] = s.mask[t * s.dims() + std::size_t(src)];
    }
  }
  return out;
}

std::vector<double> flatten_values(const std::vector<AisSequence>& seqs) {
  std::vector<double> out;
  for (const AisSequence& s : seqs)
    out.insert(out.end(), s.values.begin(), s.values.end());
  return out;
}

void clamp_unit(std::vector<AisSequence>& seqs) {
  for (AisSequence& s : seqs)
    for (double& v : s.values) v = std::min(1.0, std::max(0.0, v));
}

void save_scaler(const MinMaxScaler& scaler, const fs::path& path) {
  json j = {{"feature_names", scaler.feature_names},
            {"x_min", scaler.x_min},
            {"x_max", scaler.x_max}};
  write_text(path, j.dump(2) + "\n");
}

MinMaxScaler load_scaler(const std::string& path) {
  require_input(path);
  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw PreprocessError("cannot parse scaler file " + path + ": " + e.what());
  }
  MinMaxScaler s;
  s.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  s.x_min = j.at("x_min").get<std::vector<double>>();
  s.x_max = j.at("x_max").get<std::vector<double>>();
  if (s.x_min.size() != s.feature_names.size() ||
      s.x_max.size() != s.feature_names.size())
    throw PreprocessError("scaler file " + path + " has mismatched lengths");
  return s;
}

// Store dims must match the checkpoint's generator schema.
void check_generator_schema(const TrainState& state,
                            const std::vector<AisSequence>& seqs,
                            const std::string& what) {
  if (seqs.empty()) throw StoreError(what + ": empty sequence store");
  if (std::int64_t(seqs[0].dims()) != state.gen_config.input_features ||
      std::int64_t(seqs[0].steps()) != state.gen_config.sequence_length)
    throw ConfigError(
        what + ": store shape [" + std::to_string(seqs[0].dims()) + " x " +
        std::to_string(seqs[0].steps()) + "] does not match checkpoint [" +
        std::to_string(state.gen_config.input_features) + " x " +
        std::to_string(state.gen_config.sequence_length) + "]");
}

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n') c = ';';
  return s;
}

// ---------------------------------------------------------------- preprocess

int cmd_preprocess(CLI::App* cmd, const Common& common,
                   const std::string& input) {
  RunConfig cfg = resolve(cmd, common);
  require_input(input);
  auto t0 = std::chrono::steady_clock::now();

  ParseResult parsed = parse_ais_csv_file(input);
  std::vector<std::string> built = cfg.features;
  for (const char* geo : {"lat", "lon"})
    if (std::find(built.begin(), built.end(), geo) == built.end())
      built.push_back(geo);
  std::vector<AisSequence> seqs = build_sequences(
      parsed.records, cfg.window, cfg.stride, built, cfg.max_gap_seconds);

  // Impute per feature column (NaN or masked-out entries), then smooth.
  std::vector<AisSequence> kept;
  std::vector<std::string> drops;
  for (AisSequence& s : seqs) {
    bool good = true;
    for (std::size_t f = 0; f < s.dims() && good; ++f) {
      std::vector<double> col(s.steps());
      for (std::size_t t = 0; t < s.steps(); ++t) {
        double v = s.at(t, f);
        col[t] = s.observed(t, f) && std::isfinite(v)
                     ? v
                     : std::numeric_limits<double>::quiet_NaN();
      }
      try {
        col = cubic_spline_impute(s.rel_time, col);
      } catch (const PreprocessError& e) {
        drops.push_back("sequence mmsi " + std::to_string(s.mmsi) + " start " +
                        fmt(s.start_time) + "\t" + s.feature_names[f] + ": " +
                        e.what());
        good = false;
        break;
      }
      if (std::find(cfg.sma_features.begin(), cfg.sma_features.end(),
                    s.feature_names[f]) != cfg.sma_features.end())
        col = moving_average(col, cfg.sma_window);
      for (std::size_t t = 0; t < s.steps(); ++t) s.at(t, f) = col[t];
    }
    if (good) kept.push_back(std::move(s));
  }

  DomainSplit split = partition_domains(kept, config_domain_rule(cfg));
  if (split.source.empty() || split.target.empty())
    throw IngestError("domain rule '" + cfg.domain_rule + "' left " +
                      std::to_string(split.source.size()) + " source and " +
                      std::to_string(split.target.size()) +
                      " target sequences; both domains need data");

  std::vector<AisSequence> source, target;
  for (const AisSequence& s : split.source)
    source.push_back(project_features(s, cfg.features));
  for (const AisSequence& s : split.target)
    target.push_back(project_features(s, cfg.features));

  // One scaler over both domains so source and target share units.
  std::size_t total_rows = 0;
  for (const AisSequence& s : source) total_rows += s.steps();
  for (const AisSequence& s : target) total_rows += s.steps();
  FeatureMatrix pooled(cfg.features, total_rows);
  std::size_t r = 0;
  for (const std::vector<AisSequence>* dom : {&source, &target})
    for (const AisSequence& s : *dom)
      for (std::size_t t = 0; t < s.steps(); ++t, ++r)
        for (std::size_t f = 0; f < s.dims(); ++f)
          pooled.at(r, f) = s.at(t, f);
  auto [pooled_norm, scaler] = minmax_fit_transform(pooled);
  auto shared_scaler = std::make_shared<const MinMaxScaler>(scaler);
  for (std::vector<AisSequence>* dom : {&source, &target})
    for (AisSequence& s : *dom) {
      matrix_into_seq(minmax_transform(seq_matrix(s), scaler), s);
      s.scaler = shared_scaler;
    }

  fs::path out(cfg.out_dir);
  save_sequences(source, (out / "source.tgsq").string());
  save_sequences(target, (out / "target.tgsq").string());
  save_scaler(scaler, out / "scaler.json");

  std::string rej = render_rejections(parsed.rejections);
  for (const std::string& d : drops) rej += d + "\n";
  write_text(out / "rejections.log", rej);

  SpearmanMatrix sm = spearman_matrix(pooled_norm);
  std::string report_target =
      std::find(cfg.features.begin(), cfg.features.end(), cfg.bench.target) !=
              cfg.features.end()
          ? cfg.bench.target
          : cfg.features[0];
  FeatureReport report = feature_report(sm, report_target);
  std::string sm_csv = "feature";
  for (const std::string& n : sm.feature_names) sm_csv += "," + n;
  sm_csv += "\n";
  for (std::size_t i = 0; i < sm.dim(); ++i) {
    sm_csv += sm.feature_names[i];
    for (std::size_t j = 0; j < sm.dim(); ++j)
      sm_csv += "," + std::string(sm.undefined(i, j) ? "nan" : fmt(sm.at(i, j)));
    sm_csv += "\n";
  }
  write_text(out / "spearman.csv", sm_csv);
  std::string fr_csv = "name,rho,undefined,marker\n";
  for (const FeatureReportRow& row : report.rows)
    fr_csv += row.name + "," + (row.undefined ? "nan" : fmt(row.rho)) + "," +
              (row.undefined ? "1" : "0") + "," + csv_safe(row.marker) + "\n";
  fr_csv += "recommendation,,," + csv_safe(report.recommendation) + "\n";
  write_text(out / "feature_report.csv", fr_csv);

  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_meta(cfg, "preprocess", {input},
             {{"records", parsed.records.size()},
              {"rejections", parsed.rejections.size()},
              {"sequences_built", seqs.size()},
              {"sequences_dropped", drops.size()},
              {"discarded_by_rule", split.discarded},
              {"source_sequences", source.size()},
              {"target_sequences", target.size()},
              {"seconds", seconds}});
  std::cout << "parsed " << parsed.records.size() << " records ("
            << parsed.rejections.size() << " rejected), built " << seqs.size()
            << " sequences, source/target " << source.size() << "/"
            << target.size() << "\n";
  return finish(cfg, {"source.tgsq", "target.tgsq", "scaler.json",
                      "rejections.log", "spearman.csv", "feature_report.csv",
                      "config.ini", "run_meta.json"});
}

// --------------------------------------------------------------------- train

int cmd_train(CLI::App* cmd, const Common& common, const std::string& source,
              const std::string& target, const std::string& resume) {
  RunConfig cfg = resolve(cmd, common);
  require_input(source);
  require_input(target);
  DomainSplit data;
  data.source = load_sequences(source);
  data.target = load_sequences(target);
  if (data.source.empty() || data.target.empty())
    throw StoreError("training needs nonempty source and target stores");

  auto t0 = std::chrono::steady_clock::now();
  TrainState state;
  if (!resume.empty()) {
    require_input(resume);
    state = load_checkpoint(resume);
    check_generator_schema(state, data.source, "resume source store");
  } else {
    GeneratorConfig gc = cfg.generator;
    gc.input_features = std::int64_t(data.source[0].dims());
    gc.sequence_length = std::int64_t(data.source[0].steps());
    DiscriminatorConfig dc = cfg.discriminator;
    dc.input_features = gc.input_features;
    dc.sequence_length = gc.sequence_length;
    TrainConfig tc = cfg.train;
    if (tc.checkpoint_interval > 0) tc.checkpoint_dir = cfg.out_dir;
    state = init_train_state(gc, dc, tc);
  }
  run_training(state, data);

  fs::path out(cfg.out_dir);
  save_checkpoint(state, (out / "checkpoint.tgck").string());
  export_history_csv(state.history, (out / "history.csv").string());

  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  ComplexityRecord record;
  record.parameter_count = count_parameters(state.model);
  record.train_seconds = seconds;
  write_meta(cfg, "train", {source, target, resume},
             {{"steps", state.step},
              {"parameter_count", record.parameter_count},
              {"train_seconds", seconds},
              {"complexity", complexity(record)}});
  std::cout << "trained to step " << state.step << " ("
            << record.parameter_count << " parameters, " << fmt(seconds)
            << "s)\n";
  return finish(cfg, {"checkpoint.tgck", "history.csv", "config.ini",
                      "run_meta.json"});
}

// ---------------------------------------------------------------------- tune

int cmd_tune(CLI::App* cmd, const Common& common, const std::string& source,
             const std::string& target) {
  RunConfig cfg = resolve(cmd, common);
  require_input(source);
  require_input(target);
  DomainSplit data;
  data.source = load_sequences(source);
  data.target = load_sequences(target);
  if (data.source.empty() || data.target.empty())
    throw StoreError("tuning needs nonempty source and target stores");

  SearchSpace space = cfg.tune_space;
  if (space.dims.empty()) {
    space.dims.push_back({"learning_rate", 1e-5, 1e-2, ScaleKind::log, {}});
    space.dims.push_back({"lambda_cyc", 0.05, 10.0, ScaleKind::linear, {}});
  }
  TuneMethod method = cfg.tune_method == "grid"     ? TuneMethod::grid
                      : cfg.tune_method == "random" ? TuneMethod::random
                                                    : TuneMethod::gwo;
  GeneratorConfig gc = cfg.generator;
  gc.input_features = std::int64_t(data.source[0].dims());
  gc.sequence_length = std::int64_t(data.source[0].steps());
  DiscriminatorConfig dc = cfg.discriminator;
  dc.input_features = gc.input_features;
  dc.sequence_length = gc.sequence_length;

  auto t0 = std::chrono::steady_clock::now();
  TuneResult result = tune_training(data, space, cfg.tune_budget, method,
                                    cfg.seed, gc, dc, cfg.train);
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  fs::path out(cfg.out_dir);
  write_text(out / "tune_table.csv", render_tune_csv(result.rows));
  RunConfig best = cfg;
  best.train = result.best_config;
  write_text(out / "best_config.ini", render_run_config(best));
  write_meta(cfg, "tune", {source, target},
             {{"evaluations", result.evaluations},
              {"truncated", result.truncated},
              {"best_fitness", result.best_fitness},
              {"best_psnr", result.best_psnr},
              {"best_fid", result.best_fid},
              {"tune_seconds", seconds}});
  std::cout << "tuned " << result.evaluations << " evaluations ("
            << (result.truncated ? "budget exhausted" : "plan complete")
            << "), best psnr " << fmt(result.best_psnr) << " dB, best fid "
            << fmt(result.best_fid) << "\n";
  return finish(cfg, {"tune_table.csv", "best_config.ini", "config.ini",
                      "run_meta.json"});
}

// ------------------------------------------------------------------ generate

int cmd_generate(CLI::App* cmd, const Common& common, const std::string& model,
                 const std::string& input, const std::string& scaler_path) {
  RunConfig cfg = resolve(cmd, common);
  require_input(model);
  require_input(input);
  TrainState state = load_checkpoint(model);
  std::vector<AisSequence> inputs = load_sequences(input);
  check_generator_schema(state, inputs, "generate input store");

  Rng rng(cfg.seed ^ kEvalRngSalt);
  std::vector<AisSequence> fakes =
      translate_sequences(state.model.g_st, inputs, rng);
  clamp_unit(fakes);

  fs::path out(cfg.out_dir);
  save_sequences(fakes, (out / "generated.tgsq").string());

  std::vector<AisSequence> denorm = fakes;
  if (!scaler_path.empty()) {
    MinMaxScaler scaler = load_scaler(scaler_path);
    for (AisSequence& s : denorm)
      matrix_into_seq(minmax_inverse(seq_matrix(s), scaler), s);
  }

  std::string csv = "mmsi,start_time,step,rel_time";
  for (const std::string& n : denorm[0].feature_names) csv += "," + n;
  csv += "\n";
  for (const AisSequence& s : denorm)
    for (std::size_t t = 0; t < s.steps(); ++t) {
      csv += std::to_string(s.mmsi) + "," + fmt(s.start_time) + "," +
             std::to_string(t) + "," + fmt(s.rel_time[t]);
      for (std::size_t f = 0; f < s.dims(); ++f) csv += "," + fmt(s.at(t, f));
      csv += "\n";
    }
  write_text(out / "generated.csv", csv);

  ExportResult geo = export_geojson(denorm, (out / "generated.geojson").string());
  for (const std::string& w : geo.warnings)
    std::cerr << "warning: " << w << "\n";

  write_meta(cfg, "generate", {model, input, scaler_path},
             {{"translated", fakes.size()},
              {"geojson_written", geo.written},
              {"geojson_skipped", geo.skipped}});
  std::cout << "translated " << fakes.size() << " sequences ("
            << geo.written << " exported to geojson)\n";
  return finish(cfg, {"generated.tgsq", "generated.csv", "generated.geojson",
                      "config.ini", "run_meta.json"});
}

// ------------------------------------------------------------------ evaluate

int cmd_evaluate(CLI::App* cmd, const Common& common, const std::string& model,
                 const std::string& source, const std::string& target) {
  RunConfig cfg = resolve(cmd, common);
  require_input(model);
  require_input(source);
  require_input(target);
  TrainState state = load_checkpoint(model);
  std::vector<AisSequence> src = load_sequences(source);
  std::vector<AisSequence> tgt = load_sequences(target);
  check_generator_schema(state, src, "evaluate source store");
  if (tgt.empty()) throw StoreError("evaluate: empty target store");

  Rng rng(cfg.seed ^ kEvalRngSalt);
  std::vector<AisSequence> fakes =
      translate_sequences(state.model.g_st, src, rng);
  clamp_unit(fakes);

  std::vector<double> real_flat = flatten_values(tgt);
  std::vector<double> fake_flat = flatten_values(fakes);
  std::size_t m = std::min(real_flat.size(), fake_flat.size());
  std::vector<double> real_m(real_flat.begin(),
                             real_flat.begin() + std::ptrdiff_t(m));
  std::vector<double> fake_m(fake_flat.begin(),
                             fake_flat.begin() + std::ptrdiff_t(m));
  double psnr_db = std::min(psnr(real_m, fake_m, 1.0), kPsnrCapDb);

  FeatureEmbedding emb_real, emb_fake;
  if (cfg.embedding == "critic") {
    emb_real = feature_embed(tgt, state.model.d_t);
    emb_fake = feature_embed(fakes, state.model.d_t);
  } else {
    RandomProjection proj{kProjSeed, cfg.embed_width};
    emb_real = feature_embed(tgt, proj);
    emb_fake = feature_embed(fakes, proj);
  }
  std::string fid_warning;
  double fid_value = fid(emb_real, emb_fake, &fid_warning);
  double mmd2 = mmd_rbf(emb_real, emb_fake, cfg.mmd_bandwidth);
  double w1 = wasserstein1d(real_flat, fake_flat);

  MetricsReport report;
  report.extractor = emb_real.extractor;
  report.n_real = tgt.size();
  report.n_gen = fakes.size();
  report.values = {{"psnr", psnr_db, "dB"},
                   {"fid", fid_value, ""},
                   {"mmd2", mmd2, ""},
                   {"w1", w1, ""}};
  fs::path out(cfg.out_dir);
  write_text(out / "metrics.csv", render_csv(report));
  if (!fid_warning.empty()) std::cerr << "warning: " << fid_warning << "\n";

  write_meta(cfg, "evaluate", {model, source, target},
             {{"psnr", psnr_db},
              {"fid", fid_value},
              {"mmd2", mmd2},
              {"w1", w1}});
  std::cout << "psnr " << fmt(psnr_db) << " dB, fid " << fmt(fid_value)
            << ", mmd2 " << fmt(mmd2) << ", w1 " << fmt(w1) << "\n";
  return finish(cfg, {"metrics.csv", "config.ini", "run_meta.json"});
}

// --------------------------------------------------------------------- bench

int cmd_bench(CLI::App* cmd, const Common& common, const std::string& source,
              const std::string& target, const std::string& model) {
  RunConfig cfg = resolve(cmd, common);
  require_input(source);
  require_input(target);
  DomainSplit data;
  data.source = load_sequences(source);
  data.target = load_sequences(target);

  TrainState state;
  CycleGanModel* generator = nullptr;
  if (!model.empty()) {
    require_input(model);
    state = load_checkpoint(model);
    generator = &state.model;
  }
  BenchReport report = run_bench(data, generator, cfg.bench);
  fs::path out(cfg.out_dir);
  write_text(out / "bench.csv", render_bench_csv(report));
  write_meta(cfg, "bench", {source, target, model},
             {{"seeds", cfg.bench.seeds.size()},
              {"baseline_mae", report.baseline_mean.mae},
              {"augmented_mae", report.augmented_mean.mae},
              {"delta_mae", report.delta_mean.mae}});
  std::cout << "bench over " << cfg.bench.seeds.size()
            << " seeds: baseline mae " << fmt(report.baseline_mean.mae)
            << ", augmented mae " << fmt(report.augmented_mean.mae) << "\n";
  return finish(cfg, {"bench.csv", "config.ini", "run_meta.json"});
}

// -------------------------------------------------------------------- ablate

int cmd_ablate(CLI::App* cmd, const Common& common, const std::string& source,
               const std::string& target) {
  RunConfig cfg = resolve(cmd, common);
  require_input(source);
  require_input(target);
  DomainSplit data;
  data.source = load_sequences(source);
  data.target = load_sequences(target);
  if (data.source.empty() || data.target.empty())
    throw StoreError("ablation needs nonempty source and target stores");

  GeneratorConfig gc = cfg.generator;
  gc.input_features = std::int64_t(data.source[0].dims());
  gc.sequence_length = std::int64_t(data.source[0].steps());
  DiscriminatorConfig dc = cfg.discriminator;
  dc.input_features = gc.input_features;
  dc.sequence_length = gc.sequence_length;

  std::vector<AblationRow> rows =
      run_ablation(data, cfg.ablation_depths, gc, dc, cfg.train);
  fs::path out(cfg.out_dir);
  write_text(out / "ablation.csv", render_ablation_csv(rows));
  std::size_t failed = 0;
  for (const AblationRow& row : rows) failed += row.failed ? 1 : 0;
  write_meta(cfg, "ablate", {source, target},
             {{"depths", cfg.ablation_depths.size()}, {"failed", failed}});
  std::cout << "ablation over " << rows.size() << " depths (" << failed
            << " failed)\n";
  return finish(cfg, {"ablation.csv", "config.ini", "run_meta.json"});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AIS trajectory domain-translation pipeline"};
  app.require_subcommand(1);

  Common c_pre, c_train, c_tune, c_gen, c_eval, c_bench, c_abl;
  std::string in_csv, train_src, train_tgt, train_resume;
  std::string tune_src, tune_tgt;
  std::string gen_model, gen_input, gen_scaler;
  std::string eval_model, eval_src, eval_tgt;
  std::string bench_src, bench_tgt, bench_model;
  std::string abl_src, abl_tgt;

  CLI::App* pre = app.add_subcommand(
      "preprocess", "csv -> imputed, smoothed, normalized sequence stores");
  add_common(pre, c_pre);
  pre->add_option("--input", in_csv, "raw AIS csv")->required();

  CLI::App* train =
      app.add_subcommand("train", "adversarial training on two stores");
  add_common(train, c_train);
  train->add_option("--source", train_src, "source-domain store")->required();
  train->add_option("--target", train_tgt, "target-domain store")->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from");

  CLI::App* tune =
      app.add_subcommand("tune", "hyperparameter search over training runs");
  add_common(tune, c_tune);
  tune->add_option("--source", tune_src, "source-domain store")->required();
  tune->add_option("--target", tune_tgt, "target-domain store")->required();

  CLI::App* gen = app.add_subcommand(
      "generate", "translate source sequences through the trained generator");
  add_common(gen, c_gen);
  gen->add_option("--model", gen_model, "checkpoint")->required();
  gen->add_option("--input", gen_input, "source-domain store")->required();
  gen->add_option("--scaler", gen_scaler, "scaler json for inverse transform");

  CLI::App* eval = app.add_subcommand(
      "evaluate", "distribution metrics for translated sequences");
  add_common(eval, c_eval);
  eval->add_option("--model", eval_model, "checkpoint")->required();
  eval->add_option("--source", eval_src, "source-domain store")->required();
  eval->add_option("--target", eval_tgt, "target-domain store")->required();

  CLI::App* bench = app.add_subcommand(
      "bench", "augmentation benchmark for next-step regression");
  add_common(bench, c_bench);
  bench->add_option("--source", bench_src, "source-domain store")->required();
  bench->add_option("--target", bench_tgt, "target-domain store")->required();
  bench->add_option("--model", bench_model, "checkpoint for augmentation");

  CLI::App* abl =
      app.add_subcommand("ablate", "generator depth ablation table");
  add_common(abl, c_abl);
  abl->add_option("--source", abl_src, "source-domain store")->required();
  abl->add_option("--target", abl_tgt, "target-domain store")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) return cmd_preprocess(pre, c_pre, in_csv);
    if (train->parsed())
      return cmd_train(train, c_train, train_src, train_tgt, train_resume);
    if (tune->parsed()) return cmd_tune(tune, c_tune, tune_src, tune_tgt);
    if (gen->parsed())
      return cmd_generate(gen, c_gen, gen_model, gen_input, gen_scaler);
    if (eval->parsed())
      return cmd_evaluate(eval, c_eval, eval_model, eval_src, eval_tgt);
    if (bench->parsed())
      return cmd_bench(bench, c_bench, bench_src, bench_tgt, bench_model);
    if (abl->parsed()) return cmd_ablate(abl, c_abl, abl_src, abl_tgt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
