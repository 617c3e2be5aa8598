#pragma once
// WGAN-GP, cycle-consistency and identity losses, the alternating CycleGAN
// training loop, Adam, and binary checkpoints.
//
// The gradient penalty estimates the input-gradient norm of the critic by
// symmetric finite differences along random unit directions. The estimate is
// an ordinary forward computation of the critic, so reverse-mode autodiff
// differentiates the penalty w.r.t. critic weights without second-order
// machinery.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajgan/ais_ingest.hpp"
#include "trajgan/model.hpp"
#include "trajgan/rng.hpp"
#include "trajgan/tensor.hpp"

namespace trajgan {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LossWeights {
  double lambda_cyc = 0.101;
  double lambda_id = 0.102;
  double lambda_gp = 10.0;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  std::int64_t batch_size = 8;
  std::int64_t epochs = 1;
  std::int64_t critic_iters = 5;
  LossWeights weights;
  double fd_epsilon = 1e-3;
  std::int64_t gp_directions = 4;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_interval = 0;  // steps between snapshots; 0 = final only
  std::string checkpoint_dir;            // empty = no snapshots written
};

using Critic = std::function<Tensor<float>(const Tensor<float>&)>;
using Mapper = std::function<Tensor<float>(const Tensor<float>&)>;

// Estimator with r = `directions` probes per sample: u ~ U(0,1) interpolates
// real/fake per sample, g_j = (D(x+eps v_j) - D(x-eps v_j)) / (2 eps) along
// unit directions v_j, norm = sqrt(dim/r * sum g_j^2), penalty =
// mean((norm - 1)^2).
Tensor<float> gradient_penalty(const Critic& D, const Tensor<float>& real,
                               const Tensor<float>& fake, double fd_eps,
                               Rng& rng, std::int64_t directions = 4);

struct WganLosses {
  Tensor<float> critic_loss;    // mean D(fake) - mean D(real) + lambda_gp * GP
  Tensor<float> generator_adv;  // -mean D(fake)
};
WganLosses wgan_losses(const Critic& D, const Tensor<float>& real,
                       const Tensor<float>& fake, double lambda_gp,
                       double fd_eps, Rng& rng, std::int64_t directions = 4);

// mean |F(G(x)) - x| + mean |G(F(y)) - y|, means over every element.
Tensor<float> cycle_loss(const Mapper& G, const Mapper& F,
                         const Tensor<float>& x, const Tensor<float>& y);

// mean |G(y) - y| + mean |F(x) - x|.
Tensor<float> identity_loss(const Mapper& G, const Mapper& F,
                            const Tensor<float>& x, const Tensor<float>& y);

// adv + lambda_cyc * cyc + lambda_id * id.
Tensor<float> total_generator_loss(const Tensor<float>& adv,
                                   const Tensor<float>& cyc,
                                   const Tensor<float>& id,
                                   const LossWeights& weights);

struct AdamMoments {
  std::vector<float> m, v;
};
struct AdamState {
  std::vector<AdamMoments> slots;  // aligned with the named parameter order
  std::int64_t t = 0;
};

AdamState init_adam(const std::vector<NamedParam>& params);

// Bias-corrected Adam over the named tensors, reading gradients accumulated
// by backward(). Advances state.t.
void adam_step(std::vector<NamedParam> params, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct CycleGanModel {
  GeneratorParams g_st;  // source -> target
  GeneratorParams g_ts;  // target -> source
  DiscriminatorParams d_s;
  DiscriminatorParams d_t;
};

struct HistoryRow {
  std::int64_t step = 0;
  double loss_d_s = 0, loss_d_t = 0;
  double loss_adv = 0, loss_cyc = 0, loss_id = 0, loss_total = 0;
};

void export_history_csv(const std::vector<HistoryRow>& history,
                        const std::string& path);

struct DomainSampler {
  std::vector<std::uint64_t> order;
  std::size_t pos = 0;
};

struct TrainState {
  GeneratorConfig gen_config;
  DiscriminatorConfig disc_config;
  TrainConfig config;
  CycleGanModel model;
  AdamState opt_g_st, opt_g_ts, opt_d_s, opt_d_t;
  std::int64_t step = 0;
  Rng rng;
  DomainSampler sampler_s, sampler_t;
  std::vector<HistoryRow> history;
};

TrainState init_train_state(const GeneratorConfig& gen_config,
                            const DiscriminatorConfig& disc_config,
                            const TrainConfig& config);

// One critic update: real batch against fakes produced from `src` by G
// (detached), WGAN-GP loss, one Adam step on the critic only. Returns the
// critic loss value.
double critic_update(DiscriminatorParams& D, AdamState& opt,
                     GeneratorParams& G, const Tensor<float>& real,
                     const Tensor<float>& src, const TrainConfig& config,
                     Rng& rng);

struct GeneratorLossParts {
  double adv = 0, cyc = 0, id = 0, total = 0;
};

// One joint update of both generators from one source and one target batch.
GeneratorLossParts generator_update(CycleGanModel& model, AdamState& opt_g_st,
                                    AdamState& opt_g_ts,
                                    const Tensor<float>& xs,
                                    const Tensor<float>& xt,
                                    const TrainConfig& config, Rng& rng);

// Packs sequences[idx...] as one [B, d, T] batch in [0,1].
Tensor<float> pack_batch(const std::vector<AisSequence>& seqs,
                         const std::vector<std::uint64_t>& idx);

// Maps every sequence through the generator in one batch, returning copies
// with translated values (times, masks and names preserved).
std::vector<AisSequence> translate_sequences(
    GeneratorParams& generator, const std::vector<AisSequence>& inputs,
    Rng& rng, BnMode mode = BnMode::eval);

// Runs (or resumes) the alternating loop until epochs * steps_per_epoch
// steps, where steps_per_epoch = ceil(max(|S|,|T|) / batch_size).
void run_training(TrainState& state, const DomainSplit& data);

// init_train_state + run_training.
TrainState train(const DomainSplit& data, const GeneratorConfig& gen_config,
                 const DiscriminatorConfig& disc_config,
                 const TrainConfig& config);

void save_checkpoint(TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace trajgan
