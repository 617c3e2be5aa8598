#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "trajgan/seqstore.hpp"

using namespace trajgan;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path log = fs::temp_directory_path() /
                 ("trajgan_cli_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++) + ".log");
  std::string cmd = std::string(TRAJGAN_BIN) + " " + args + " > " +
                    log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  CmdResult res;
  res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  res.output = buf.str();
  fs::remove(log);
  return res;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() /
               ("trajgan_t_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string data_file(const std::string& name) {
  return (fs::path(TRAJGAN_DATA_DIR) / name).string();
}

// config.ini echoes the resolved out_dir, which differs between the two run
// directories by construction; drop that line before comparing.
std::string strip_out_dir(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("out_dir = ", 0) != 0) out << line << "\n";
  return out.str();
}

// One shared preprocess run; later cases reuse its stores.
const fs::path& pre_dir() {
  static fs::path dir = [] {
    fs::path d = fresh_dir("pre");
    CmdResult r = run_cli("preprocess --config " + data_file("toy.ini") +
                          " --input " + data_file("toy_ais.csv") + " --out " +
                          d.string());
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::string store(const std::string& name) {
  return (pre_dir() / name).string();
}

// Tiny config: same shapes as toy.ini but a zero-epoch training block.
fs::path zero_epoch_config() {
  static fs::path path = [] {
    fs::path p = fresh_dir("cfg0") / "zero.ini";
    std::ofstream out(p);
    out << "[ingest]\nwindow = 16\nfeatures = lat, lon, sog, cog\n"
        << "[model]\nbase_channels = 8\nconv_layers = 2\nresidual_blocks = 1\n"
        << "disc_base_channels = 8\ndisc_conv_layers = 2\n"
        << "[train]\nepochs = 0\n"
        << "[metrics]\nembed_width = 8\n";
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("preprocess builds the expected stores from the fixture") {
  std::vector<AisSequence> source = load_sequences(store("source.tgsq"));
  std::vector<AisSequence> target = load_sequences(store("target.tgsq"));
  // 5 vessels per domain, 48 pings each, window 16 stride 8 -> 5 windows
  CHECK(source.size() == 25);
  CHECK(target.size() == 25);
  for (const auto& s : source) {
    CHECK(s.steps() == 16);
    CHECK(s.feature_names ==
          std::vector<std::string>{"lat", "lon", "sog", "cog"});
    for (double v : s.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  std::string rej = slurp(pre_dir() / "rejections.log");
  CHECK(rej.find("mmsi") != std::string::npos);
  CHECK(rej.find("bad timestamp") != std::string::npos);
  CHECK(rej.find("lat out of range") != std::string::npos);
  CHECK(fs::file_size(pre_dir() / "spearman.csv") > 0);
  std::string fr = slurp(pre_dir() / "feature_report.csv");
  CHECK(fr.find("name,rho,undefined,marker") == 0);
  CHECK(fr.find("recommendation") != std::string::npos);
}

TEST_CASE("missing input file exits 2 and names the path") {
  CmdResult r = run_cli("preprocess --input /nope/missing.csv --out " +
                        fresh_dir("m1").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("/nope/missing.csv") != std::string::npos);

  r = run_cli("train --source /nope/s.tgsq --target /nope/t.tgsq --out " +
              fresh_dir("m2").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("/nope/s.tgsq") != std::string::npos);

  r = run_cli("preprocess --config /nope/cfg.ini --input " +
              data_file("toy_ais.csv") + " --out " + fresh_dir("m3").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("/nope/cfg.ini") != std::string::npos);
}

TEST_CASE("config schema violations exit nonzero naming the key") {
  fs::path dir = fresh_dir("schema");
  fs::path bad = dir / "bad.ini";
  {
    std::ofstream out(bad);
    out << "[train]\nlerning_rate = 0.1\n";
  }
  CmdResult r = run_cli("preprocess --config " + bad.string() + " --input " +
                        data_file("toy_ais.csv") + " --out " + dir.string());
  CHECK(r.code == 1);
  CHECK(r.output.find("lerning_rate") != std::string::npos);
}

TEST_CASE("preprocess reruns are byte-identical outside the sidecar") {
  fs::path a = fresh_dir("det_a");
  fs::path b = fresh_dir("det_b");
  std::string base = "preprocess --config " + data_file("toy.ini") +
                     " --input " + data_file("toy_ais.csv") + " --out ";
  REQUIRE(run_cli(base + a.string()).code == 0);
  REQUIRE(run_cli(base + b.string()).code == 0);
  for (const char* name :
       {"source.tgsq", "target.tgsq", "scaler.json", "rejections.log",
        "spearman.csv", "feature_report.csv"}) {
    INFO(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }
  CHECK(strip_out_dir(slurp(a / "config.ini")) ==
        strip_out_dir(slurp(b / "config.ini")));
}

TEST_CASE("zero-epoch train then generate and evaluate") {
  fs::path t0 = fresh_dir("train0");
  CmdResult r = run_cli("train --config " + zero_epoch_config().string() +
                        " --source " + store("source.tgsq") + " --target " +
                        store("target.tgsq") + " --out " + t0.string());
  REQUIRE(r.code == 0);
  std::string ckpt = (t0 / "checkpoint.tgck").string();

  fs::path g = fresh_dir("gen0");
  r = run_cli("generate --config " + zero_epoch_config().string() +
              " --model " + ckpt + " --input " + store("source.tgsq") +
              " --scaler " + store("scaler.json") + " --out " + g.string());
  REQUIRE(r.code == 0);
  std::vector<AisSequence> fakes = load_sequences((g / "generated.tgsq").string());
  CHECK(fakes.size() == 25);  // one output per input sequence
  std::string csv = slurp(g / "generated.csv");
  CHECK(csv.find("mmsi,start_time,step,rel_time,lat,lon,sog,cog") == 0);
  std::string geo = slurp(g / "generated.geojson");
  CHECK(geo.find("LineString") != std::string::npos);

  // untrained generator still yields a finite fid
  fs::path e = fresh_dir("eval0");
  r = run_cli("evaluate --config " + zero_epoch_config().string() +
              " --model " + ckpt + " --source " + store("source.tgsq") +
              " --target " + store("target.tgsq") + " --out " + e.string());
  REQUIRE(r.code == 0);
  std::string metrics = slurp(e / "metrics.csv");
  CHECK(metrics.find("metric,value") == 0);
  REQUIRE(metrics.find("fid,") != std::string::npos);
  double fid_value =
      std::strtod(metrics.c_str() + metrics.find("fid,") + 4, nullptr);
  CHECK(std::isfinite(fid_value));
  CHECK(fid_value >= 0.0);
}

TEST_CASE("generate reruns with one seed are byte-identical") {
  fs::path t0 = fresh_dir("train_det");
  REQUIRE(run_cli("train --config " + zero_epoch_config().string() +
                  " --source " + store("source.tgsq") + " --target " +
                  store("target.tgsq") + " --out " + t0.string())
              .code == 0);
  std::string ckpt = (t0 / "checkpoint.tgck").string();
  fs::path a = fresh_dir("gen_a");
  fs::path b = fresh_dir("gen_b");
  std::string base = "generate --config " + zero_epoch_config().string() +
                     " --model " + ckpt + " --input " + store("source.tgsq") +
                     " --scaler " + store("scaler.json") + " --seed 7 --out ";
  REQUIRE(run_cli(base + a.string()).code == 0);
  REQUIRE(run_cli(base + b.string()).code == 0);
  for (const char* name :
       {"generated.tgsq", "generated.csv", "generated.geojson"}) {
    INFO(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }
  CHECK(strip_out_dir(slurp(a / "config.ini")) ==
        strip_out_dir(slurp(b / "config.ini")));
}

TEST_CASE("non-finite training loss exits nonzero with step diagnostics") {
  // an absurd learning rate blows the critic loss up within one step
  fs::path dir = fresh_dir("hot");
  fs::path cfg = dir / "hot.ini";
  {
    std::ofstream out(cfg);
    out << "[model]\nbase_channels = 8\nconv_layers = 2\nresidual_blocks = 1\n"
        << "disc_base_channels = 8\ndisc_conv_layers = 2\n"
        << "[train]\nepochs = 2\nlearning_rate = 1e12\n";
  }
  CmdResult r = run_cli("train --config " + cfg.string() + " --source " +
                        store("source.tgsq") + " --target " +
                        store("target.tgsq") + " --out " + dir.string());
  CHECK(r.code == 1);
  CHECK(r.output.find("non-finite") != std::string::npos);
  CHECK(r.output.find("step") != std::string::npos);
}

TEST_CASE("unnormalized training input is a named validation error") {
  std::vector<AisSequence> source = load_sequences(store("source.tgsq"));
  std::vector<AisSequence> target = load_sequences(store("target.tgsq"));
  source[0].values[3] = std::numeric_limits<double>::quiet_NaN();
  fs::path dir = fresh_dir("nan");
  save_sequences(source, (dir / "s.tgsq").string());
  save_sequences(target, (dir / "t.tgsq").string());
  CmdResult r = run_cli("train --source " + (dir / "s.tgsq").string() +
                        " --target " + (dir / "t.tgsq").string() + " --out " +
                        dir.string());
  CHECK(r.code == 1);
  CHECK(r.output.find("normalize before training") != std::string::npos);
}

TEST_CASE("store shape mismatch against a checkpoint is a named error") {
  fs::path t0 = fresh_dir("shape_t");
  REQUIRE(run_cli("train --config " + zero_epoch_config().string() +
                  " --source " + store("source.tgsq") + " --target " +
                  store("target.tgsq") + " --out " + t0.string())
              .code == 0);
  // stores with a different window do not fit the checkpoint
  std::vector<AisSequence> source = load_sequences(store("source.tgsq"));
  for (auto& s : source) {
    s.values.resize(8 * s.dims());
    s.mask.resize(8 * s.dims());
    s.rel_time.resize(8);
  }
  fs::path dir = fresh_dir("shape");
  save_sequences(source, (dir / "short.tgsq").string());
  CmdResult r = run_cli("generate --model " +
                        (t0 / "checkpoint.tgck").string() + " --input " +
                        (dir / "short.tgsq").string() + " --out " +
                        dir.string());
  CHECK(r.code == 1);
  CHECK(r.output.find("does not match checkpoint") != std::string::npos);
}

TEST_CASE("tune, bench and ablate write their tables") {
  fs::path dir = fresh_dir("tables");
  fs::path cfg = dir / "small.ini";
  {
    std::ofstream out(cfg);
    out << "[model]\nbase_channels = 8\nconv_layers = 1\nresidual_blocks = 1\n"
        << "disc_base_channels = 8\ndisc_conv_layers = 1\n"
        << "[train]\nepochs = 2\ncritic_iters = 1\ngp_directions = 1\n"
        << "[tune]\nmethod = random\nbudget = 2\n"
        << "dims = learning_rate:log:1e-4:1e-3\n"
        << "[metrics]\nembed_width = 8\n"
        << "[bench]\ntarget = sog\nseeds = 1, 2\nreg_epochs = 5\n"
        << "reg_base_channels = 4\nreg_conv_layers = 1\n"
        << "ablation_depths = 1\n";
  }
  CmdResult r = run_cli("tune --config " + cfg.string() + " --source " +
                        store("source.tgsq") + " --target " +
                        store("target.tgsq") + " --out " +
                        (dir / "tune").string());
  REQUIRE(r.code == 0);
  std::string tune_csv = slurp(dir / "tune" / "tune_table.csv");
  CHECK(tune_csv.find("technique,psnr,fid,time_seconds") == 0);
  CHECK(tune_csv.find("Random Search") != std::string::npos);
  CHECK(fs::exists(dir / "tune" / "best_config.ini"));

  r = run_cli("bench --config " + cfg.string() + " --source " +
              store("source.tgsq") + " --target " + store("target.tgsq") +
              " --out " + (dir / "bench").string());
  REQUIRE(r.code == 0);
  std::string bench_csv = slurp(dir / "bench" / "bench.csv");
  CHECK(bench_csv.find("model,mae,rmse,r2") == 0);
  CHECK(bench_csv.find("baseline,") != std::string::npos);
  CHECK(bench_csv.find("augmented,") != std::string::npos);

  r = run_cli("ablate --config " + cfg.string() + " --source " +
              store("source.tgsq") + " --target " + store("target.tgsq") +
              " --out " + (dir / "abl").string());
  REQUIRE(r.code == 0);
  std::string abl_csv = slurp(dir / "abl" / "ablation.csv");
  CHECK(abl_csv.find("configuration,cnn_layers,psnr,fid") == 0);
}
