#include "trajgan/losses_training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace trajgan {

namespace {

using nlohmann::json;

void require_batch_pair(const Tensor<float>& real, const Tensor<float>& fake,
                        const char* who) {
  if (real.shape().size() != 3)
    throw ShapeError(std::string(who) + ": expected [B,d,T] batches, got " +
                     shape_str(real.shape()));
  if (real.shape() != fake.shape())
    throw ShapeError(std::string(who) + ": real " + shape_str(real.shape()) +
                     " and fake " + shape_str(fake.shape()) + " differ");
}

Tensor<float> critic_scores(const Critic& D, const Tensor<float>& x,
                            std::int64_t B) {
  auto s = D(x);
  if (s.shape() != Shape{B, 1})
    throw ShapeError("gradient_penalty: critic returned " +
                     shape_str(s.shape()) + ", expected [" +
                     std::to_string(B) + ",1]");
  return s;
}

Tensor<float> l1_mean(const Tensor<float>& a, const Tensor<float>& b) {
  return mean_all(abs_val(sub(a, b)));
}

void check_weights(const LossWeights& w) {
  if (w.lambda_cyc < 0 || w.lambda_id < 0 || w.lambda_gp < 0)
    throw ConfigError("loss weights must be non-negative");
}

}  // namespace

Tensor<float> gradient_penalty(const Critic& D, const Tensor<float>& real,
                               const Tensor<float>& fake, double fd_eps,
                               Rng& rng, std::int64_t directions) {
  require_batch_pair(real, fake, "gradient_penalty");
  if (fd_eps <= 0.0)
    throw std::invalid_argument("gradient_penalty: fd_eps must be positive");
  if (directions < 1)
    throw std::invalid_argument(
        "gradient_penalty: need at least one probe direction");

  const std::int64_t B = real.shape()[0];
  const std::int64_t dim = real.shape()[1] * real.shape()[2];
  const std::size_t n = real.data().size();
  const std::size_t per = std::size_t(dim);

  std::vector<float> xhat(n);
  for (std::int64_t b = 0; b < B; ++b) {
    const float u = float(rng.uniform());
    for (std::size_t i = 0; i < per; ++i) {
      const std::size_t k = std::size_t(b) * per + i;
      xhat[k] = u * real.data()[k] + (1.0f - u) * fake.data()[k];
    }
  }

  const float eps = float(fd_eps);
  Tensor<float> acc = Tensor<float>::zeros({B, 1});
  std::vector<float> dir(per), plus(n), minus(n);
  for (std::int64_t j = 0; j < directions; ++j) {
    for (std::int64_t b = 0; b < B; ++b) {
      double nrm2 = 0.0;
      for (auto& v : dir) {
        v = float(rng.normal());
        nrm2 += double(v) * double(v);
      }
      if (nrm2 == 0.0) {
        dir[0] = 1.0f;
        nrm2 = 1.0;
      }
      const float inv = float(1.0 / std::sqrt(nrm2));
      for (std::size_t i = 0; i < per; ++i) {
        const std::size_t k = std::size_t(b) * per + i;
        const float step = eps * dir[i] * inv;
        plus[k] = xhat[k] + step;
        minus[k] = xhat[k] - step;
      }
    }
    auto sp = critic_scores(D, Tensor<float>::from(real.shape(), plus), B);
    auto sm = critic_scores(D, Tensor<float>::from(real.shape(), minus), B);
    auto g = mul_scalar(sub(sp, sm), 1.0f / (2.0f * eps));
    acc = add(acc, square(g));
  }

  auto norm = sqrt_shifted(
      mul_scalar(acc, float(double(dim) / double(directions))), 0.0f);
  return mean_all(square(add_scalar(norm, -1.0f)));
}

WganLosses wgan_losses(const Critic& D, const Tensor<float>& real,
                       const Tensor<float>& fake, double lambda_gp,
                       double fd_eps, Rng& rng, std::int64_t directions) {
  require_batch_pair(real, fake, "wgan_losses");
  const std::int64_t B = real.shape()[0];
  auto mean_fake = mean_all(critic_scores(D, fake, B));
  auto mean_real = mean_all(critic_scores(D, real, B));
  auto gp = gradient_penalty(D, real, fake, fd_eps, rng, directions);
  WganLosses out;
  out.critic_loss =
      add(sub(mean_fake, mean_real), mul_scalar(gp, float(lambda_gp)));
  out.generator_adv = mul_scalar(mean_fake, -1.0f);
  return out;
}

Tensor<float> cycle_loss(const Mapper& G, const Mapper& F,
                         const Tensor<float>& x, const Tensor<float>& y) {
  return add(l1_mean(F(G(x)), x), l1_mean(G(F(y)), y));
}

Tensor<float> identity_loss(const Mapper& G, const Mapper& F,
                            const Tensor<float>& x, const Tensor<float>& y) {
  return add(l1_mean(G(y), y), l1_mean(F(x), x));
}

Tensor<float> total_generator_loss(const Tensor<float>& adv,
                                   const Tensor<float>& cyc,
                                   const Tensor<float>& id,
                                   const LossWeights& weights) {
  check_weights(weights);
  return add(adv, add(mul_scalar(cyc, float(weights.lambda_cyc)),
                      mul_scalar(id, float(weights.lambda_id))));
}

AdamState init_adam(const std::vector<NamedParam>& params) {
  AdamState st;
  st.slots.reserve(params.size());
  for (const auto& p : params) {
    AdamMoments mo;
    mo.m.assign(p.tensor.data().size(), 0.0f);
    mo.v.assign(p.tensor.data().size(), 0.0f);
    st.slots.push_back(std::move(mo));
  }
  return st;
}

void adam_step(std::vector<NamedParam> params, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  if (lr <= 0.0) throw ConfigError("adam_step: learning rate must be positive");
  if (state.slots.size() != params.size())
    throw ConfigError("adam_step: " + std::to_string(state.slots.size()) +
                      " moment slots for " + std::to_string(params.size()) +
                      " parameter tensors");
  state.t += 1;
  const float bc1 = float(1.0 - std::pow(beta1, double(state.t)));
  const float bc2 = float(1.0 - std::pow(beta2, double(state.t)));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& tensor = params[i].tensor;
    auto& mo = state.slots[i];
    const std::size_t n = tensor.data().size();
    if (mo.m.size() != n || mo.v.size() != n)
      throw ConfigError("adam_step: moment shape mismatch at " +
                        params[i].name);
    const auto& g = tensor.grad();
    std::vector<float> zeros;
    const float* gp;
    if (g.size() == n) {
      gp = g.data();
    } else {
      zeros.assign(n, 0.0f);
      gp = zeros.data();
    }
    kern::adam_step(tensor.data().data(), gp, mo.m.data(), mo.v.data(), n,
                    float(lr), float(beta1), float(beta2), float(eps), bc1,
                    bc2);
  }
}

Tensor<float> pack_batch(const std::vector<AisSequence>& seqs,
                         const std::vector<std::uint64_t>& idx) {
  if (idx.empty()) throw TrainError("pack_batch: empty batch");
  const auto& first = seqs.at(std::size_t(idx[0]));
  const std::int64_t d = std::int64_t(first.dims());
  const std::int64_t T = std::int64_t(first.steps());
  std::vector<float> buf(idx.size() * std::size_t(d) * std::size_t(T));
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& s = seqs.at(std::size_t(idx[b]));
    if (std::int64_t(s.dims()) != d || std::int64_t(s.steps()) != T)
      throw TrainError("pack_batch: sequence " + std::to_string(idx[b]) +
                       " is " + std::to_string(s.steps()) + "x" +
                       std::to_string(s.dims()) + ", batch is " +
                       std::to_string(T) + "x" + std::to_string(d));
    for (std::int64_t f = 0; f < d; ++f)
      for (std::int64_t t = 0; t < T; ++t)
        buf[(std::size_t(b) * std::size_t(d) + std::size_t(f)) *
                std::size_t(T) +
            std::size_t(t)] = float(s.at(std::size_t(t), std::size_t(f)));
  }
  return Tensor<float>::from({std::int64_t(idx.size()), d, T},
                             std::move(buf));
}

std::vector<AisSequence> translate_sequences(
    GeneratorParams& generator, const std::vector<AisSequence>& inputs,
    Rng& rng, BnMode mode) {
  if (inputs.empty()) throw TrainError("translate_sequences: empty input");
  std::vector<std::uint64_t> idx(inputs.size());
  std::iota(idx.begin(), idx.end(), std::uint64_t(0));
  Tensor<float> x = pack_batch(inputs, idx);
  Tensor<float> y = generator_forward(generator, x, rng, mode).detach();
  std::vector<AisSequence> out = inputs;
  const std::size_t d = inputs[0].dims();
  const std::size_t T = inputs[0].steps();
  for (std::size_t b = 0; b < out.size(); ++b)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < d; ++f)
        out[b].values[t * d + f] =
            double(y.data()[(b * d + f) * T + t]);
  return out;
}

TrainState init_train_state(const GeneratorConfig& gen_config,
                            const DiscriminatorConfig& disc_config,
                            const TrainConfig& config) {
  if (config.learning_rate <= 0)
    throw ConfigError("learning_rate must be positive");
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.critic_iters < 1) throw ConfigError("critic_iters must be >= 1");
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (config.fd_epsilon <= 0) throw ConfigError("fd_epsilon must be positive");
  if (config.gp_directions < 1)
    throw ConfigError("gp_directions must be >= 1");
  if (config.checkpoint_interval < 0)
    throw ConfigError("checkpoint_interval must be >= 0");
  check_weights(config.weights);

  TrainState st;
  st.gen_config = gen_config;
  st.disc_config = disc_config;
  st.config = config;
  st.model.g_st = init_generator(gen_config, config.seed * 4 + 0);
  st.model.g_ts = init_generator(gen_config, config.seed * 4 + 1);
  st.model.d_s = init_discriminator(disc_config, config.seed * 4 + 2);
  st.model.d_t = init_discriminator(disc_config, config.seed * 4 + 3);
  st.opt_g_st = init_adam(st.model.g_st.named());
  st.opt_g_ts = init_adam(st.model.g_ts.named());
  st.opt_d_s = init_adam(st.model.d_s.named());
  st.opt_d_t = init_adam(st.model.d_t.named());
  st.rng = Rng(config.seed);
  return st;
}

double critic_update(DiscriminatorParams& D, AdamState& opt,
                     GeneratorParams& G, const Tensor<float>& real,
                     const Tensor<float>& src, const TrainConfig& config,
                     Rng& rng) {
  auto fake = generator_forward(G, src, rng, BnMode::train).detach();
  Critic dfn = [&D](const Tensor<float>& x) {
    return discriminator_forward(D, x);
  };
  auto losses = wgan_losses(dfn, real, fake, config.weights.lambda_gp,
                            config.fd_epsilon, rng, config.gp_directions);
  backward(losses.critic_loss);
  adam_step(D.named(), opt, config.learning_rate);
  return double(losses.critic_loss.data()[0]);
}

GeneratorLossParts generator_update(CycleGanModel& model, AdamState& opt_g_st,
                                    AdamState& opt_g_ts,
                                    const Tensor<float>& xs,
                                    const Tensor<float>& xt,
                                    const TrainConfig& config, Rng& rng) {
  auto fake_t = generator_forward(model.g_st, xs, rng, BnMode::train);
  auto fake_s = generator_forward(model.g_ts, xt, rng, BnMode::train);

  auto adv =
      add(mul_scalar(mean_all(discriminator_forward(model.d_t, fake_t)), -1.0f),
          mul_scalar(mean_all(discriminator_forward(model.d_s, fake_s)),
                     -1.0f));

  auto back_s = generator_forward(model.g_ts, fake_t, rng, BnMode::train);
  auto back_t = generator_forward(model.g_st, fake_s, rng, BnMode::train);
  auto cyc = add(l1_mean(back_s, xs), l1_mean(back_t, xt));

  auto same_t = generator_forward(model.g_st, xt, rng, BnMode::train);
  auto same_s = generator_forward(model.g_ts, xs, rng, BnMode::train);
  auto idt = add(l1_mean(same_t, xt), l1_mean(same_s, xs));

  auto total = total_generator_loss(adv, cyc, idt, config.weights);
  backward(total);
  adam_step(model.g_st.named(), opt_g_st, config.learning_rate);
  adam_step(model.g_ts.named(), opt_g_ts, config.learning_rate);

  GeneratorLossParts parts;
  parts.adv = double(adv.data()[0]);
  parts.cyc = double(cyc.data()[0]);
  parts.id = double(idt.data()[0]);
  parts.total = double(total.data()[0]);
  return parts;
}

namespace {

void validate_domain(const std::vector<AisSequence>& seqs, const char* name,
                     const GeneratorConfig& cfg) {
  if (seqs.empty())
    throw TrainError(std::string(name) + " domain is empty");
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto& s = seqs[i];
    if (std::int64_t(s.dims()) != cfg.input_features ||
        std::int64_t(s.steps()) != cfg.sequence_length)
      throw TrainError(std::string(name) + " sequence " + std::to_string(i) +
                       " is " + std::to_string(s.steps()) + "x" +
                       std::to_string(s.dims()) + ", model expects " +
                       std::to_string(cfg.sequence_length) + "x" +
                       std::to_string(cfg.input_features));
    for (double v : s.values)
      if (!(v >= -1e-6 && v <= 1.0 + 1e-6))
        throw TrainError(std::string(name) + " sequence " + std::to_string(i) +
                         " has value " + std::to_string(v) +
                         " outside [0,1]; normalize before training");
  }
}

std::vector<std::uint64_t> draw(DomainSampler& smp, std::size_t n,
                                std::size_t batch, Rng& rng) {
  std::vector<std::uint64_t> idx(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    if (smp.order.size() != n || smp.pos >= smp.order.size()) {
      smp.order.resize(n);
      std::iota(smp.order.begin(), smp.order.end(), 0);
      rng.shuffle(smp.order);
      smp.pos = 0;
    }
    idx[b] = smp.order[smp.pos++];
  }
  return idx;
}

void check_finite(double v, const char* component, std::int64_t step) {
  if (!std::isfinite(v))
    throw TrainError(std::string("non-finite ") + component + " at step " +
                     std::to_string(step));
}

}  // namespace

void run_training(TrainState& state, const DomainSplit& data) {
  const auto& cfg = state.config;
  validate_domain(data.source, "source", state.gen_config);
  validate_domain(data.target, "target", state.gen_config);

  const std::size_t B = std::size_t(cfg.batch_size);
  const std::size_t larger = std::max(data.source.size(), data.target.size());
  const std::int64_t steps_per_epoch = std::int64_t((larger + B - 1) / B);
  const std::int64_t total = cfg.epochs * steps_per_epoch;

  while (state.step < total) {
    double loss_d_s = 0.0, loss_d_t = 0.0;
    for (std::int64_t k = 0; k < cfg.critic_iters; ++k) {
      auto xs = pack_batch(
          data.source, draw(state.sampler_s, data.source.size(), B, state.rng));
      auto xt = pack_batch(
          data.target, draw(state.sampler_t, data.target.size(), B, state.rng));
      loss_d_s = critic_update(state.model.d_s, state.opt_d_s, state.model.g_ts,
                               xs, xt, cfg, state.rng);
      loss_d_t = critic_update(state.model.d_t, state.opt_d_t, state.model.g_st,
                               xt, xs, cfg, state.rng);
    }
    auto xs = pack_batch(
        data.source, draw(state.sampler_s, data.source.size(), B, state.rng));
    auto xt = pack_batch(
        data.target, draw(state.sampler_t, data.target.size(), B, state.rng));
    auto parts = generator_update(state.model, state.opt_g_st, state.opt_g_ts,
                                  xs, xt, cfg, state.rng);

    state.step += 1;
    check_finite(loss_d_s, "loss_D_S", state.step);
    check_finite(loss_d_t, "loss_D_T", state.step);
    check_finite(parts.adv, "loss_adv", state.step);
    check_finite(parts.cyc, "loss_cyc", state.step);
    check_finite(parts.id, "loss_id", state.step);
    check_finite(parts.total, "loss_total", state.step);

    HistoryRow row;
    row.step = state.step;
    row.loss_d_s = loss_d_s;
    row.loss_d_t = loss_d_t;
    row.loss_adv = parts.adv;
    row.loss_cyc = parts.cyc;
    row.loss_id = parts.id;
    row.loss_total = parts.total;
    state.history.push_back(row);

    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_interval > 0 &&
        state.step % cfg.checkpoint_interval == 0 && state.step < total) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      save_checkpoint(state, cfg.checkpoint_dir + "/ckpt_step_" +
                                 std::to_string(state.step) + ".tgck");
    }
  }

  if (!cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    save_checkpoint(state, cfg.checkpoint_dir + "/ckpt_final.tgck");
  }
}

TrainState train(const DomainSplit& data, const GeneratorConfig& gen_config,
                 const DiscriminatorConfig& disc_config,
                 const TrainConfig& config) {
  TrainState state = init_train_state(gen_config, disc_config, config);
  run_training(state, data);
  return state;
}

void export_history_csv(const std::vector<HistoryRow>& history,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw TrainError("cannot write history CSV: " + path);
  out << "step,loss_D_S,loss_D_T,loss_adv,loss_cyc,loss_id,loss_total\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf),
                  "%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<long long>(r.step), r.loss_d_s, r.loss_d_t,
                  r.loss_adv, r.loss_cyc, r.loss_id, r.loss_total);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

constexpr char kMagic[4] = {'T', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

struct SectionRef {
  std::string name;
  std::vector<NamedParam> params;
  std::vector<NamedStats> stats;
  AdamState* opt;
};

std::vector<SectionRef> sections(TrainState& st) {
  std::vector<SectionRef> out;
  out.push_back({"g_st", st.model.g_st.named(), st.model.g_st.named_stats(),
                 &st.opt_g_st});
  out.push_back({"g_ts", st.model.g_ts.named(), st.model.g_ts.named_stats(),
                 &st.opt_g_ts});
  out.push_back({"d_s", st.model.d_s.named(), {}, &st.opt_d_s});
  out.push_back({"d_t", st.model.d_t.named(), {}, &st.opt_d_t});
  return out;
}

json gen_config_json(const GeneratorConfig& c) {
  return json{{"input_features", c.input_features},
              {"sequence_length", c.sequence_length},
              {"base_channels", c.base_channels},
              {"num_conv_layers", c.num_conv_layers},
              {"num_residual_blocks", c.num_residual_blocks},
              {"noise_alpha", c.noise_alpha},
              {"seed", c.seed}};
}

GeneratorConfig gen_config_from(const json& j) {
  GeneratorConfig c;
  c.input_features = j.at("input_features").get<std::int64_t>();
  c.sequence_length = j.at("sequence_length").get<std::int64_t>();
  c.base_channels = j.at("base_channels").get<std::int64_t>();
  c.num_conv_layers = j.at("num_conv_layers").get<std::int64_t>();
  c.num_residual_blocks = j.at("num_residual_blocks").get<std::int64_t>();
  c.noise_alpha = j.at("noise_alpha").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json disc_config_json(const DiscriminatorConfig& c) {
  return json{{"input_features", c.input_features},
              {"sequence_length", c.sequence_length},
              {"base_channels", c.base_channels},
              {"num_conv_layers", c.num_conv_layers},
              {"seed", c.seed}};
}

DiscriminatorConfig disc_config_from(const json& j) {
  DiscriminatorConfig c;
  c.input_features = j.at("input_features").get<std::int64_t>();
  c.sequence_length = j.at("sequence_length").get<std::int64_t>();
  c.base_channels = j.at("base_channels").get<std::int64_t>();
  c.num_conv_layers = j.at("num_conv_layers").get<std::int64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json train_config_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"critic_iters", c.critic_iters},
              {"lambda_cyc", c.weights.lambda_cyc},
              {"lambda_id", c.weights.lambda_id},
              {"lambda_gp", c.weights.lambda_gp},
              {"fd_epsilon", c.fd_epsilon},
              {"gp_directions", c.gp_directions},
              {"seed", c.seed},
              {"checkpoint_interval", c.checkpoint_interval},
              {"checkpoint_dir", c.checkpoint_dir}};
}

TrainConfig train_config_from(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::int64_t>();
  c.epochs = j.at("epochs").get<std::int64_t>();
  c.critic_iters = j.at("critic_iters").get<std::int64_t>();
  c.weights.lambda_cyc = j.at("lambda_cyc").get<double>();
  c.weights.lambda_id = j.at("lambda_id").get<double>();
  c.weights.lambda_gp = j.at("lambda_gp").get<double>();
  c.fd_epsilon = j.at("fd_epsilon").get<double>();
  c.gp_directions = j.at("gp_directions").get<std::int64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.checkpoint_interval = j.at("checkpoint_interval").get<std::int64_t>();
  c.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
  return c;
}

void append_f32(std::string& buf, const std::vector<float>& v) {
  const std::size_t bytes = v.size() * sizeof(float);
  const std::size_t at = buf.size();
  buf.resize(at + bytes);
  std::memcpy(buf.data() + at, v.data(), bytes);
}

void read_f32(const std::string& buf, std::size_t& off, std::vector<float>& v,
              std::size_t count) {
  const std::size_t bytes = count * sizeof(float);
  if (off + bytes > buf.size())
    throw CheckpointError("truncated checkpoint: payload ends at byte " +
                          std::to_string(buf.size()) + ", needed " +
                          std::to_string(off + bytes));
  v.resize(count);
  std::memcpy(v.data(), buf.data() + off, bytes);
  off += bytes;
}

}  // namespace

void save_checkpoint(TrainState& state, const std::string& path) {
  json header;
  header["format_version"] = kVersion;
  header["step"] = state.step;
  header["rng"] = state.rng.save_state();
  header["gen_config"] = gen_config_json(state.gen_config);
  header["disc_config"] = disc_config_json(state.disc_config);
  header["train_config"] = train_config_json(state.config);
  header["sampler_s"] =
      json{{"order", state.sampler_s.order}, {"pos", state.sampler_s.pos}};
  header["sampler_t"] =
      json{{"order", state.sampler_t.order}, {"pos", state.sampler_t.pos}};

  json hist = json::array();
  for (const auto& r : state.history)
    hist.push_back(json::array({r.step, r.loss_d_s, r.loss_d_t, r.loss_adv,
                                r.loss_cyc, r.loss_id, r.loss_total}));
  header["history"] = std::move(hist);

  std::string payload;
  json secs = json::array();
  for (auto& sec : sections(state)) {
    json js;
    js["name"] = sec.name;
    js["adam_t"] = sec.opt->t;
    json tensors = json::array();
    for (auto& p : sec.params) {
      tensors.push_back(json{{"name", p.name}, {"shape", p.tensor.shape()}});
      append_f32(payload, p.tensor.data());
    }
    js["tensors"] = std::move(tensors);
    if (sec.opt->slots.size() != sec.params.size())
      throw CheckpointError("optimizer state for " + sec.name +
                            " does not match its parameters");
    for (auto& slot : sec.opt->slots) {
      append_f32(payload, slot.m);
      append_f32(payload, slot.v);
    }
    json stats = json::array();
    for (auto& sref : sec.stats) {
      stats.push_back(json{{"name", sref.name},
                           {"channels", sref.stats->mean.size()}});
      append_f32(payload, sref.stats->mean);
      append_f32(payload, sref.stats->var);
    }
    js["stats"] = std::move(stats);
    secs.push_back(std::move(js));
  }
  header["sections"] = std::move(secs);

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  const std::uint32_t ver = kVersion;
  out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  const std::uint64_t hlen = head.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(head.data(), std::streamsize(head.size()));
  out.write(payload.data(), std::streamsize(payload.size()));
  if (!out) throw CheckpointError("write failed: " + path);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string file = ss.str();

  if (file.size() < 16 || std::memcmp(file.data(), kMagic, 4) != 0)
    throw CheckpointError("not a checkpoint file (bad magic): " + path);
  std::uint32_t ver;
  std::memcpy(&ver, file.data() + 4, sizeof(ver));
  if (ver != kVersion)
    throw CheckpointError("checkpoint is format version " +
                          std::to_string(ver) + "; this build reads version " +
                          std::to_string(kVersion));
  std::uint64_t hlen;
  std::memcpy(&hlen, file.data() + 8, sizeof(hlen));
  if (16 + hlen > file.size())
    throw CheckpointError("truncated checkpoint: header claims " +
                          std::to_string(hlen) + " bytes, file has " +
                          std::to_string(file.size() - 16) + " after headers");

  json header;
  try {
    header = json::parse(file.substr(16, hlen));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") +
                          e.what());
  }

  TrainState st = init_train_state(gen_config_from(header.at("gen_config")),
                                   disc_config_from(header.at("disc_config")),
                                   train_config_from(header.at("train_config")));
  st.step = header.at("step").get<std::int64_t>();
  st.rng.load_state(header.at("rng").get<std::string>());
  st.sampler_s.order =
      header.at("sampler_s").at("order").get<std::vector<std::uint64_t>>();
  st.sampler_s.pos = header.at("sampler_s").at("pos").get<std::size_t>();
  st.sampler_t.order =
      header.at("sampler_t").at("order").get<std::vector<std::uint64_t>>();
  st.sampler_t.pos = header.at("sampler_t").at("pos").get<std::size_t>();

  st.history.clear();
  for (const auto& r : header.at("history")) {
    HistoryRow row;
    row.step = r.at(0).get<std::int64_t>();
    row.loss_d_s = r.at(1).get<double>();
    row.loss_d_t = r.at(2).get<double>();
    row.loss_adv = r.at(3).get<double>();
    row.loss_cyc = r.at(4).get<double>();
    row.loss_id = r.at(5).get<double>();
    row.loss_total = r.at(6).get<double>();
    st.history.push_back(row);
  }

  const std::string payload = file.substr(16 + hlen);
  std::size_t off = 0;
  auto secs = sections(st);
  const auto& jsecs = header.at("sections");
  if (jsecs.size() != secs.size())
    throw CheckpointError("corrupt checkpoint: expected " +
                          std::to_string(secs.size()) + " sections, found " +
                          std::to_string(jsecs.size()));
  for (std::size_t si = 0; si < secs.size(); ++si) {
    auto& sec = secs[si];
    const auto& js = jsecs.at(si);
    if (js.at("name").get<std::string>() != sec.name)
      throw CheckpointError("corrupt checkpoint: section " +
                            js.at("name").get<std::string>() + ", expected " +
                            sec.name);
    sec.opt->t = js.at("adam_t").get<std::int64_t>();
    const auto& jt = js.at("tensors");
    if (jt.size() != sec.params.size())
      throw CheckpointError("corrupt checkpoint: section " + sec.name +
                            " tensor count mismatch");
    for (std::size_t i = 0; i < sec.params.size(); ++i) {
      auto& p = sec.params[i];
      if (jt.at(i).at("name").get<std::string>() != p.name ||
          jt.at(i).at("shape").get<Shape>() != p.tensor.shape())
        throw CheckpointError("corrupt checkpoint: tensor " + sec.name + "/" +
                              p.name + " does not match this config");
      std::vector<float> vals;
      read_f32(payload, off, vals, p.tensor.data().size());
      p.tensor.data() = std::move(vals);
    }
    for (auto& slot : sec.opt->slots) {
      read_f32(payload, off, slot.m, slot.m.size());
      read_f32(payload, off, slot.v, slot.v.size());
    }
    const auto& jstats = js.at("stats");
    if (jstats.size() != sec.stats.size())
      throw CheckpointError("corrupt checkpoint: section " + sec.name +
                            " stats count mismatch");
    for (std::size_t i = 0; i < sec.stats.size(); ++i) {
      auto& sref = sec.stats[i];
      if (jstats.at(i).at("name").get<std::string>() != sref.name ||
          jstats.at(i).at("channels").get<std::size_t>() !=
              sref.stats->mean.size())
        throw CheckpointError("corrupt checkpoint: running stats " + sec.name +
                              "/" + sref.name + " do not match this config");
      read_f32(payload, off, sref.stats->mean, sref.stats->mean.size());
      read_f32(payload, off, sref.stats->var, sref.stats->var.size());
    }
  }
  if (off != payload.size())
    throw CheckpointError("corrupt checkpoint: " +
                          std::to_string(payload.size() - off) +
                          " unread payload bytes");
  return st;
}

}  // namespace trajgan
