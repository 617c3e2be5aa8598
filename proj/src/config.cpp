#include "trajgan/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "trajgan/model.hpp"

namespace trajgan {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

[[noreturn]] void bad_value(const IniLine& ln, const std::string& want) {
  throw ConfigError("[" + ln.section + "] " + ln.key + ": expected " + want +
                    ", got '" + ln.value + "'");
}

double parse_f64(const IniLine& ln) {
  const char* s = ln.value.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0') bad_value(ln, "a number");
  return v;
}

std::int64_t parse_i64(const IniLine& ln) {
  const char* s = ln.value.c_str();
  char* end = nullptr;
  long long v = std::strtoll(s, &end, 10);
  if (end == s || *end != '\0') bad_value(ln, "an integer");
  return v;
}

std::uint64_t parse_u64(const IniLine& ln) {
  if (!ln.value.empty() && ln.value[0] == '-') bad_value(ln, "a non-negative integer");
  const char* s = ln.value.c_str();
  char* end = nullptr;
  unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0') bad_value(ln, "a non-negative integer");
  return v;
}

std::size_t parse_size(const IniLine& ln) {
  return static_cast<std::size_t>(parse_u64(ln));
}

std::vector<std::string> parse_names(const IniLine& ln) {
  std::vector<std::string> out = split(ln.value, ',');
  for (const std::string& n : out) {
    if (n.empty()) bad_value(ln, "a comma-separated name list");
  }
  return out;
}

std::vector<std::int64_t> parse_i64_list(const IniLine& ln) {
  std::vector<std::int64_t> out;
  for (const std::string& item : split(ln.value, ',')) {
    const char* s = item.c_str();
    char* end = nullptr;
    long long v = std::strtoll(s, &end, 10);
    if (end == s || *end != '\0') bad_value(ln, "a comma-separated integer list");
    out.push_back(v);
  }
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const IniLine& ln) {
  std::vector<std::uint64_t> out;
  for (std::int64_t v : parse_i64_list(ln)) {
    if (v < 0) bad_value(ln, "a comma-separated non-negative integer list");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

// name:scale:lower:upper with an optional |-separated grid as a fifth field.
SearchSpace parse_dims(const IniLine& ln) {
  SearchSpace space;
  for (const std::string& entry : split(ln.value, ',')) {
    std::vector<std::string> fields = split(entry, ':');
    if (fields.size() != 4 && fields.size() != 5) {
      bad_value(ln, "entries of the form name:scale:lower:upper[:v1|v2|...]");
    }
    SearchDimension dim;
    dim.name = fields[0];
    if (fields[1] == "linear") {
      dim.scale = ScaleKind::linear;
    } else if (fields[1] == "log") {
      dim.scale = ScaleKind::log;
    } else {
      bad_value(ln, "scale 'linear' or 'log'");
    }
    char* end = nullptr;
    dim.lower = std::strtod(fields[2].c_str(), &end);
    if (end == fields[2].c_str() || *end != '\0') bad_value(ln, "numeric bounds");
    dim.upper = std::strtod(fields[3].c_str(), &end);
    if (end == fields[3].c_str() || *end != '\0') bad_value(ln, "numeric bounds");
    if (fields.size() == 5) {
      for (const std::string& item : split(fields[4], '|')) {
        double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0') bad_value(ln, "numeric grid values");
        dim.grid.push_back(v);
      }
    }
    space.dims.push_back(std::move(dim));
  }
  return space;
}

void apply_line(RunConfig& cfg, const IniLine& ln) {
  const std::string& s = ln.section;
  const std::string& k = ln.key;
  if (s == "run") {
    if (k == "seed") { cfg.seed = parse_u64(ln); return; }
    if (k == "out_dir") { cfg.out_dir = ln.value; return; }
  } else if (s == "ingest") {
    if (k == "window") { cfg.window = parse_size(ln); return; }
    if (k == "stride") { cfg.stride = parse_size(ln); return; }
    if (k == "features") { cfg.features = parse_names(ln); return; }
    if (k == "max_gap_seconds") { cfg.max_gap_seconds = parse_f64(ln); return; }
    if (k == "domain_rule") { cfg.domain_rule = ln.value; return; }
    if (k == "meridian") { cfg.meridian = parse_f64(ln); return; }
    if (k == "source_lat_min") { cfg.source_box.lat_min = parse_f64(ln); return; }
    if (k == "source_lat_max") { cfg.source_box.lat_max = parse_f64(ln); return; }
    if (k == "source_lon_min") { cfg.source_box.lon_min = parse_f64(ln); return; }
    if (k == "source_lon_max") { cfg.source_box.lon_max = parse_f64(ln); return; }
    if (k == "target_lat_min") { cfg.target_box.lat_min = parse_f64(ln); return; }
    if (k == "target_lat_max") { cfg.target_box.lat_max = parse_f64(ln); return; }
    if (k == "target_lon_min") { cfg.target_box.lon_min = parse_f64(ln); return; }
    if (k == "target_lon_max") { cfg.target_box.lon_max = parse_f64(ln); return; }
  } else if (s == "preprocess") {
    if (k == "sma_window") { cfg.sma_window = static_cast<int>(parse_i64(ln)); return; }
    if (k == "sma_features") { cfg.sma_features = parse_names(ln); return; }
  } else if (s == "model") {
    if (k == "base_channels") { cfg.generator.base_channels = parse_i64(ln); return; }
    if (k == "conv_layers") { cfg.generator.num_conv_layers = parse_i64(ln); return; }
    if (k == "residual_blocks") { cfg.generator.num_residual_blocks = parse_i64(ln); return; }
    if (k == "noise_alpha") { cfg.generator.noise_alpha = parse_f64(ln); return; }
    if (k == "disc_base_channels") { cfg.discriminator.base_channels = parse_i64(ln); return; }
    if (k == "disc_conv_layers") { cfg.discriminator.num_conv_layers = parse_i64(ln); return; }
  } else if (s == "train") {
    if (k == "learning_rate") { cfg.train.learning_rate = parse_f64(ln); return; }
    if (k == "batch_size") { cfg.train.batch_size = parse_i64(ln); return; }
    if (k == "epochs") { cfg.train.epochs = parse_i64(ln); return; }
    if (k == "critic_iters") { cfg.train.critic_iters = parse_i64(ln); return; }
    if (k == "lambda_cyc") { cfg.train.weights.lambda_cyc = parse_f64(ln); return; }
    if (k == "lambda_id") { cfg.train.weights.lambda_id = parse_f64(ln); return; }
    if (k == "lambda_gp") { cfg.train.weights.lambda_gp = parse_f64(ln); return; }
    if (k == "fd_epsilon") { cfg.train.fd_epsilon = parse_f64(ln); return; }
    if (k == "gp_directions") { cfg.train.gp_directions = parse_i64(ln); return; }
    if (k == "checkpoint_interval") { cfg.train.checkpoint_interval = parse_i64(ln); return; }
  } else if (s == "tune") {
    if (k == "method") { cfg.tune_method = ln.value; return; }
    if (k == "budget") { cfg.tune_budget = parse_size(ln); return; }
    if (k == "dims") { cfg.tune_space = parse_dims(ln); return; }
  } else if (s == "metrics") {
    if (k == "embedding") { cfg.embedding = ln.value; return; }
    if (k == "embed_width") { cfg.embed_width = parse_size(ln); return; }
    if (k == "mmd_bandwidth") { cfg.mmd_bandwidth = parse_f64(ln); return; }
  } else if (s == "bench") {
    if (k == "target") { cfg.bench.target = ln.value; return; }
    if (k == "train_fraction") { cfg.bench.train_fraction = parse_f64(ln); return; }
    if (k == "val_fraction") { cfg.bench.val_fraction = parse_f64(ln); return; }
    if (k == "test_fraction") { cfg.bench.test_fraction = parse_f64(ln); return; }
    if (k == "augmentation_ratio") { cfg.bench.augmentation_ratio = parse_f64(ln); return; }
    if (k == "seeds") { cfg.bench.seeds = parse_u64_list(ln); return; }
    if (k == "split_seed") { cfg.bench.split_seed = parse_u64(ln); return; }
    if (k == "reg_base_channels") { cfg.bench.regressor.base_channels = parse_i64(ln); return; }
    if (k == "reg_conv_layers") { cfg.bench.regressor.num_conv_layers = parse_i64(ln); return; }
    if (k == "reg_learning_rate") { cfg.bench.regressor.learning_rate = parse_f64(ln); return; }
    if (k == "reg_batch_size") { cfg.bench.regressor.batch_size = parse_i64(ln); return; }
    if (k == "reg_epochs") { cfg.bench.regressor.epochs = parse_i64(ln); return; }
    if (k == "ablation_depths") { cfg.ablation_depths = parse_i64_list(ln); return; }
  } else {
    throw ConfigError("line " + std::to_string(ln.line) + ": unknown section '" +
                      s + "'");
  }
  throw ConfigError("line " + std::to_string(ln.line) + ": unknown key '" + k +
                    "' in [" + s + "]");
}

std::string fmt_f64(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ",";
    out += names[i];
  }
  return out;
}

template <typename T>
std::string join_ints(const std::vector<T>& vals) {
  std::string out;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(vals[i]);
  }
  return out;
}

std::string render_dims(const SearchSpace& space) {
  std::string out;
  for (std::size_t i = 0; i < space.dims.size(); ++i) {
    const SearchDimension& dim = space.dims[i];
    if (i) out += ",";
    out += dim.name;
    out += dim.scale == ScaleKind::log ? ":log:" : ":linear:";
    out += fmt_f64(dim.lower) + ":" + fmt_f64(dim.upper);
    for (std::size_t j = 0; j < dim.grid.size(); ++j) {
      out += j == 0 ? ":" : "|";
      out += fmt_f64(dim.grid[j]);
    }
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  generator.base_channels = 32;
  discriminator.base_channels = 32;
}

std::vector<IniLine> parse_ini(const std::string& text) {
  std::vector<IniLine> out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line[0] == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": empty section name");
      }
      out.push_back(IniLine{section, "", "", line_no});
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value, got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                        "' appears before any [section] header");
    }
    out.push_back(IniLine{section, key, value, line_no});
  }
  return out;
}

RunConfig run_config_from_text(const std::string& text) {
  static const std::set<std::string> kSections = {
      "run", "ingest", "preprocess", "model", "train",
      "tune", "metrics", "bench"};
  RunConfig cfg;
  std::set<std::pair<std::string, std::string>> seen;
  for (const IniLine& ln : parse_ini(text)) {
    if (ln.key.empty()) {
      if (!kSections.count(ln.section)) {
        throw ConfigError("line " + std::to_string(ln.line) +
                          ": unknown section '" + ln.section + "'");
      }
      continue;
    }
    if (!seen.insert({ln.section, ln.key}).second) {
      throw ConfigError("line " + std::to_string(ln.line) + ": duplicate key '" +
                        ln.key + "' in [" + ln.section + "]");
    }
    apply_line(cfg, ln);
  }
  if (cfg.domain_rule != "lon_split" && cfg.domain_rule != "bbox" &&
      cfg.domain_rule != "all_source") {
    throw ConfigError("[ingest] domain_rule: expected lon_split, bbox, or "
                      "all_source, got '" + cfg.domain_rule + "'");
  }
  if (cfg.tune_method != "gwo" && cfg.tune_method != "grid" &&
      cfg.tune_method != "random") {
    throw ConfigError("[tune] method: expected gwo, grid, or random, got '" +
                      cfg.tune_method + "'");
  }
  if (cfg.embedding != "random_projection" && cfg.embedding != "critic") {
    throw ConfigError("[metrics] embedding: expected random_projection or "
                      "critic, got '" + cfg.embedding + "'");
  }
  if (!cfg.tune_space.dims.empty()) validate_space(cfg.tune_space);
  if (cfg.window < 2) throw ConfigError("[ingest] window: must be at least 2");
  if (cfg.stride == 0) throw ConfigError("[ingest] stride: must be positive");
  if (cfg.features.empty()) throw ConfigError("[ingest] features: must be nonempty");
  if (cfg.sma_window < 1) throw ConfigError("[preprocess] sma_window: must be positive");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_config_from_text(buf.str());
}

std::string render_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "\n[ingest]\n";
  out << "window = " << cfg.window << "\n";
  out << "stride = " << cfg.stride << "\n";
  out << "features = " << join_names(cfg.features) << "\n";
  out << "max_gap_seconds = " << fmt_f64(cfg.max_gap_seconds) << "\n";
  out << "domain_rule = " << cfg.domain_rule << "\n";
  out << "meridian = " << fmt_f64(cfg.meridian) << "\n";
  out << "source_lat_min = " << fmt_f64(cfg.source_box.lat_min) << "\n";
  out << "source_lat_max = " << fmt_f64(cfg.source_box.lat_max) << "\n";
  out << "source_lon_min = " << fmt_f64(cfg.source_box.lon_min) << "\n";
  out << "source_lon_max = " << fmt_f64(cfg.source_box.lon_max) << "\n";
  out << "target_lat_min = " << fmt_f64(cfg.target_box.lat_min) << "\n";
  out << "target_lat_max = " << fmt_f64(cfg.target_box.lat_max) << "\n";
  out << "target_lon_min = " << fmt_f64(cfg.target_box.lon_min) << "\n";
  out << "target_lon_max = " << fmt_f64(cfg.target_box.lon_max) << "\n";
  out << "\n[preprocess]\n";
  out << "sma_window = " << cfg.sma_window << "\n";
  out << "sma_features = " << join_names(cfg.sma_features) << "\n";
  out << "\n[model]\n";
  out << "base_channels = " << cfg.generator.base_channels << "\n";
  out << "conv_layers = " << cfg.generator.num_conv_layers << "\n";
  out << "residual_blocks = " << cfg.generator.num_residual_blocks << "\n";
  out << "noise_alpha = " << fmt_f64(cfg.generator.noise_alpha) << "\n";
  out << "disc_base_channels = " << cfg.discriminator.base_channels << "\n";
  out << "disc_conv_layers = " << cfg.discriminator.num_conv_layers << "\n";
  out << "\n[train]\n";
  out << "learning_rate = " << fmt_f64(cfg.train.learning_rate) << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n";
  out << "epochs = " << cfg.train.epochs << "\n";
  out << "critic_iters = " << cfg.train.critic_iters << "\n";
  out << "lambda_cyc = " << fmt_f64(cfg.train.weights.lambda_cyc) << "\n";
  out << "lambda_id = " << fmt_f64(cfg.train.weights.lambda_id) << "\n";
  out << "lambda_gp = " << fmt_f64(cfg.train.weights.lambda_gp) << "\n";
  out << "fd_epsilon = " << fmt_f64(cfg.train.fd_epsilon) << "\n";
  out << "gp_directions = " << cfg.train.gp_directions << "\n";
  out << "checkpoint_interval = " << cfg.train.checkpoint_interval << "\n";
  out << "\n[tune]\n";
  out << "method = " << cfg.tune_method << "\n";
  out << "budget = " << cfg.tune_budget << "\n";
  if (!cfg.tune_space.dims.empty()) {
    out << "dims = " << render_dims(cfg.tune_space) << "\n";
  }
  out << "\n[metrics]\n";
  out << "embedding = " << cfg.embedding << "\n";
  out << "embed_width = " << cfg.embed_width << "\n";
  out << "mmd_bandwidth = " << fmt_f64(cfg.mmd_bandwidth) << "\n";
  out << "\n[bench]\n";
  out << "target = " << cfg.bench.target << "\n";
  out << "train_fraction = " << fmt_f64(cfg.bench.train_fraction) << "\n";
  out << "val_fraction = " << fmt_f64(cfg.bench.val_fraction) << "\n";
  out << "test_fraction = " << fmt_f64(cfg.bench.test_fraction) << "\n";
  out << "augmentation_ratio = " << fmt_f64(cfg.bench.augmentation_ratio) << "\n";
  out << "seeds = " << join_ints(cfg.bench.seeds) << "\n";
  out << "split_seed = " << cfg.bench.split_seed << "\n";
  out << "reg_base_channels = " << cfg.bench.regressor.base_channels << "\n";
  out << "reg_conv_layers = " << cfg.bench.regressor.num_conv_layers << "\n";
  out << "reg_learning_rate = " << fmt_f64(cfg.bench.regressor.learning_rate) << "\n";
  out << "reg_batch_size = " << cfg.bench.regressor.batch_size << "\n";
  out << "reg_epochs = " << cfg.bench.regressor.epochs << "\n";
  out << "ablation_depths = " << join_ints(cfg.ablation_depths) << "\n";
  return out.str();
}

DomainRule config_domain_rule(const RunConfig& cfg) {
  if (cfg.domain_rule == "lon_split") return lon_split_rule(cfg.meridian);
  if (cfg.domain_rule == "bbox") return bbox_rule(cfg.source_box, cfg.target_box);
  return all_source_rule();
}

}  // namespace trajgan
