#include "trajgan/model.hpp"

#include <cmath>
#include <stdexcept>

namespace trajgan {

namespace {

constexpr float kBnEps = 1e-5f;
constexpr float kLeakySlope = 0.2f;

Tensor<float> normal_tensor(Shape shape, double stddev, Rng& rng) {
  std::vector<float> v(std::size_t(numel(shape)));
  for (auto& x : v) x = float(rng.normal(0.0, stddev));
  return Tensor<float>::from(std::move(shape), std::move(v), true);
}

ConvBnBlock make_conv_bn(std::int64_t co, std::int64_t ci, std::int64_t k,
                         Rng& rng) {
  ConvBnBlock b;
  b.w = normal_tensor({co, ci, k}, 1.0 / std::sqrt(double(ci * k)), rng);
  b.gamma = Tensor<float>::filled({co}, 1.0f, true);
  b.beta = Tensor<float>::zeros({co}, true);
  b.rs = RunningStats<float>(co);
  return b;
}

void check_positive(std::int64_t v, const char* what) {
  if (v <= 0)
    throw ConfigError(std::string(what) + " must be positive, got " +
                      std::to_string(v));
}

Tensor<float> conv_bn_act(const Tensor<float>& h, ConvBnBlock& block,
                          BnMode mode, bool apply_relu) {
  auto z = conv1d(h, block.w, 1, 1);
  z = batch_norm(z, block.gamma, block.beta, kBnEps, mode, block.rs);
  return apply_relu ? relu(z) : z;
}

}  // namespace

std::vector<NamedParam> GeneratorParams::named() {
  std::vector<NamedParam> out;
  out.push_back({"embed.w", embed_w});
  out.push_back({"embed.b", embed_b});
  for (std::size_t i = 0; i < conv_layers.size(); ++i) {
    auto p = "conv" + std::to_string(i);
    out.push_back({p + ".w", conv_layers[i].w});
    out.push_back({p + ".bn.gamma", conv_layers[i].gamma});
    out.push_back({p + ".bn.beta", conv_layers[i].beta});
  }
  for (std::size_t i = 0; i < res_blocks.size(); ++i) {
    auto p = "res" + std::to_string(i);
    for (int j = 0; j < 2; ++j) {
      auto& c = j == 0 ? res_blocks[i].c1 : res_blocks[i].c2;
      auto q = p + ".c" + std::to_string(j + 1);
      out.push_back({q + ".w", c.w});
      out.push_back({q + ".bn.gamma", c.gamma});
      out.push_back({q + ".bn.beta", c.beta});
    }
  }
  out.push_back({"out.w", out_w});
  out.push_back({"out.b", out_b});
  return out;
}

std::vector<NamedStats> GeneratorParams::named_stats() {
  std::vector<NamedStats> out;
  for (std::size_t i = 0; i < conv_layers.size(); ++i)
    out.push_back({"conv" + std::to_string(i) + ".bn", &conv_layers[i].rs});
  for (std::size_t i = 0; i < res_blocks.size(); ++i) {
    auto p = "res" + std::to_string(i);
    out.push_back({p + ".c1.bn", &res_blocks[i].c1.rs});
    out.push_back({p + ".c2.bn", &res_blocks[i].c2.rs});
  }
  return out;
}

std::int64_t GeneratorParams::parameter_count() {
  std::int64_t n = 0;
  for (auto& p : named()) n += numel(p.tensor.shape());
  return n;
}

std::vector<NamedParam> DiscriminatorParams::named() {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    auto p = "conv" + std::to_string(i);
    out.push_back({p + ".w", convs[i].w});
    out.push_back({p + ".b", convs[i].b});
  }
  out.push_back({"fc.w", fc_w});
  out.push_back({"fc.b", fc_b});
  return out;
}

std::int64_t DiscriminatorParams::parameter_count() {
  std::int64_t n = 0;
  for (auto& p : named()) n += numel(p.tensor.shape());
  return n;
}

GeneratorParams init_generator(const GeneratorConfig& config,
                               std::uint64_t seed) {
  check_positive(config.input_features, "input_features");
  check_positive(config.sequence_length, "sequence_length");
  check_positive(config.base_channels, "base_channels");
  check_positive(config.num_conv_layers, "num_conv_layers");
  if (config.num_residual_blocks < 0)
    throw ConfigError("num_residual_blocks must be non-negative, got " +
                      std::to_string(config.num_residual_blocks));
  if (config.noise_alpha < 0.0)
    throw ConfigError("noise_alpha must be non-negative, got " +
                      std::to_string(config.noise_alpha));

  Rng rng(seed);
  GeneratorParams p;
  p.config = config;
  const auto d = config.input_features;
  const auto C = config.base_channels;

  p.embed_w = normal_tensor({C, d, 1}, 1.0 / std::sqrt(double(d)), rng);
  p.embed_b = Tensor<float>::zeros({C}, true);
  for (std::int64_t i = 0; i < config.num_conv_layers; ++i)
    p.conv_layers.push_back(make_conv_bn(C, C, 3, rng));
  for (std::int64_t i = 0; i < config.num_residual_blocks; ++i)
    p.res_blocks.push_back({make_conv_bn(C, C, 3, rng),
                            make_conv_bn(C, C, 3, rng)});
  p.out_w = normal_tensor({C, d, 3}, 1.0 / std::sqrt(double(C * 3)), rng);
  p.out_b = Tensor<float>::zeros({d}, true);
  return p;
}

DiscriminatorParams init_discriminator(const DiscriminatorConfig& config,
                                       std::uint64_t seed) {
  check_positive(config.input_features, "input_features");
  check_positive(config.sequence_length, "sequence_length");
  check_positive(config.base_channels, "base_channels");
  check_positive(config.num_conv_layers, "num_conv_layers");

  Rng rng(seed);
  DiscriminatorParams p;
  p.config = config;
  std::int64_t ci = config.input_features;
  std::int64_t co = config.base_channels;
  std::int64_t len = config.sequence_length;
  for (std::int64_t i = 0; i < config.num_conv_layers; ++i) {
    if (len + 2 < 4)
      throw ConfigError("sequence_length " +
                        std::to_string(config.sequence_length) +
                        " too short for " +
                        std::to_string(config.num_conv_layers) +
                        " stride-2 layers");
    DiscriminatorParams::ConvLayer layer;
    layer.w = normal_tensor({co, ci, 4}, 1.0 / std::sqrt(double(ci * 4)), rng);
    layer.b = Tensor<float>::zeros({co}, true);
    p.convs.push_back(std::move(layer));
    len = (len + 2 - 4) / 2 + 1;
    ci = co;
    co *= 2;
  }
  const std::int64_t flat = ci * len;
  p.fc_w = normal_tensor({flat, 1}, 1.0 / std::sqrt(double(flat)), rng);
  p.fc_b = Tensor<float>::zeros({1}, true);
  return p;
}

Tensor<float> residual_block(const Tensor<float>& h, ResBlock& block,
                             BnMode mode) {
  auto f = conv_bn_act(h, block.c1, mode, true);
  f = conv_bn_act(f, block.c2, mode, false);
  return add(h, f);
}

Tensor<float> generator_forward(GeneratorParams& params,
                                const Tensor<float>& x, Rng& rng,
                                BnMode mode) {
  const auto& cfg = params.config;
  if (x.shape().size() != 3 || x.shape()[1] != cfg.input_features ||
      x.shape()[2] != cfg.sequence_length)
    throw ShapeError("generator_forward: expected [B," +
                     std::to_string(cfg.input_features) + "," +
                     std::to_string(cfg.sequence_length) + "], got " +
                     shape_str(x.shape()));

  auto h = add_scalar(mul_scalar(x, 2.0f), -1.0f);
  h = bias_add_channel(conv1d(h, params.embed_w, 1, 0), params.embed_b);
  for (auto& layer : params.conv_layers) h = conv_bn_act(h, layer, mode, true);
  for (auto& block : params.res_blocks) h = residual_block(h, block, mode);

  if (cfg.noise_alpha > 0.0) {
    std::vector<float> eps(h.data().size());
    for (auto& e : eps) e = float(cfg.noise_alpha * rng.normal());
    h = add(h, Tensor<float>::from(h.shape(), std::move(eps)));
  }

  h = bias_add_channel(conv_transpose1d(h, params.out_w, 1, 1), params.out_b);
  return mul_scalar(add_scalar(tanh_act(h), 1.0f), 0.5f);
}

Tensor<float> discriminator_forward(DiscriminatorParams& params,
                                    const Tensor<float>& y) {
  const auto& cfg = params.config;
  if (y.shape().size() != 3 || y.shape()[1] != cfg.input_features ||
      y.shape()[2] != cfg.sequence_length)
    throw ShapeError("discriminator_forward: expected [B," +
                     std::to_string(cfg.input_features) + "," +
                     std::to_string(cfg.sequence_length) + "], got " +
                     shape_str(y.shape()));

  auto h = add_scalar(mul_scalar(y, 2.0f), -1.0f);
  for (auto& layer : params.convs) {
    h = bias_add_channel(conv1d(h, layer.w, 2, 1), layer.b);
    h = leaky_relu(h, kLeakySlope);
  }
  const std::int64_t B = h.shape()[0];
  const std::int64_t flat = h.shape()[1] * h.shape()[2];
  h = reshape(h, {B, flat});
  return dense(h, params.fc_w, params.fc_b);
}

}  // namespace trajgan
