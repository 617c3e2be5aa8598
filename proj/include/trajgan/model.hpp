#pragma once
// Generator and critic networks for 1D sequence translation.
//
// Generator: pointwise embed -> N x (conv3 + batch norm + relu) ->
// R x residual block -> additive noise -> transposed conv back to d
// channels -> tanh rescaled to [0,1]. Inputs in [0,1] are mapped to
// [-1,1] before the embed layer.
//
// Critic: N x (conv4 stride 2 + leaky relu 0.2) -> flatten -> dense to one
// unbounded score per batch element. No batch norm anywhere in the critic,
// so the gradient penalty acts on independent per-sample scores.

#include <cstdint>
#include <string>
#include <vector>

#include "trajgan/rng.hpp"
#include "trajgan/tensor.hpp"

namespace trajgan {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeneratorConfig {
  std::int64_t input_features = 2;    // d
  std::int64_t sequence_length = 64;  // T
  std::int64_t base_channels = 64;
  std::int64_t num_conv_layers = 3;   // ablation axis: 1, 2, 3, 5, 7
  std::int64_t num_residual_blocks = 3;
  double noise_alpha = 0.01;
  std::uint64_t seed = 0;
};

struct DiscriminatorConfig {
  std::int64_t input_features = 2;
  std::int64_t sequence_length = 64;
  std::int64_t base_channels = 64;
  std::int64_t num_conv_layers = 3;
  std::uint64_t seed = 0;
};

// Handle to one named parameter tensor; Tensor shares storage, so mutating
// through the handle mutates the model.
struct NamedParam {
  std::string name;
  Tensor<float> tensor;
};

struct NamedStats {
  std::string name;
  RunningStats<float>* stats;
};

struct ConvBnBlock {
  Tensor<float> w;  // [C_out, C_in, K], no bias (batch norm follows)
  Tensor<float> gamma, beta;
  RunningStats<float> rs;
};

struct ResBlock {
  ConvBnBlock c1;  // conv -> bn -> relu
  ConvBnBlock c2;  // conv -> bn
};

struct GeneratorParams {
  GeneratorConfig config;
  Tensor<float> embed_w;  // [C, d, 1]
  Tensor<float> embed_b;  // [C]
  std::vector<ConvBnBlock> conv_layers;
  std::vector<ResBlock> res_blocks;
  Tensor<float> out_w;  // [C, d, 3] transposed-conv layout
  Tensor<float> out_b;  // [d]

  // Trainable tensors in a stable order (checkpoint and optimizer order).
  std::vector<NamedParam> named();
  std::vector<NamedStats> named_stats();
  std::int64_t parameter_count();
};

struct DiscriminatorParams {
  DiscriminatorConfig config;
  struct ConvLayer {
    Tensor<float> w;  // [C_out, C_in, 4]
    Tensor<float> b;  // [C_out]
  };
  std::vector<ConvLayer> convs;
  Tensor<float> fc_w;  // [flattened, 1]
  Tensor<float> fc_b;  // [1]

  std::vector<NamedParam> named();
  std::int64_t parameter_count();
};

GeneratorParams init_generator(const GeneratorConfig& config,
                               std::uint64_t seed);
DiscriminatorParams init_discriminator(const DiscriminatorConfig& config,
                                       std::uint64_t seed);

// x: [B, d, T] in [0,1]. Output matches the input shape. In train mode the
// batch-norm running stats inside `params` advance. Noise of strength
// config.noise_alpha is drawn from `rng` once per forward.
Tensor<float> generator_forward(GeneratorParams& params,
                                const Tensor<float>& x, Rng& rng,
                                BnMode mode = BnMode::train);

Tensor<float> residual_block(const Tensor<float>& h, ResBlock& block,
                             BnMode mode = BnMode::train);

// y: [B, d, T]; returns unbounded critic scores [B, 1].
Tensor<float> discriminator_forward(DiscriminatorParams& params,
                                    const Tensor<float>& y);

}  // namespace trajgan
