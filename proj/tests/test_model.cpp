#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "trajgan/model.hpp"
#include "trajgan/rng.hpp"
#include "trajgan/tensor.hpp"

using namespace trajgan;

namespace {

Tensor<float> random_input(std::int64_t B, std::int64_t d, std::int64_t T,
                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(std::size_t(B * d * T));
  for (auto& x : v) x = float(rng.uniform());
  return Tensor<float>::from({B, d, T}, std::move(v));
}

bool same_values(const Tensor<float>& a, const Tensor<float>& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

GeneratorConfig small_gen_config() {
  GeneratorConfig c;
  c.input_features = 5;
  c.sequence_length = 64;
  c.base_channels = 8;
  c.num_conv_layers = 3;
  c.num_residual_blocks = 3;
  c.noise_alpha = 0.0;
  return c;
}

}  // namespace

TEST_CASE("init_generator: same seed bitwise identical, seeds differ") {
  auto cfg = small_gen_config();
  auto a = init_generator(cfg, 17);
  auto b = init_generator(cfg, 17);
  auto c = init_generator(cfg, 18);

  auto an = a.named(), bn = b.named(), cn = c.named();
  REQUIRE(an.size() == bn.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < an.size(); ++i) {
    CHECK(an[i].name == bn[i].name);
    CHECK(same_values(an[i].tensor, bn[i].tensor));
    if (!same_values(an[i].tensor, cn[i].tensor)) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("init_generator: all parameters finite") {
  auto p = init_generator(small_gen_config(), 3);
  for (auto& np : p.named())
    for (float v : np.tensor.data()) CHECK(std::isfinite(v));
}

TEST_CASE("generator parameter count matches per-layer shape arithmetic") {
  auto cfg = small_gen_config();
  auto p = init_generator(cfg, 0);

  const std::int64_t d = cfg.input_features, C = cfg.base_channels;
  const std::int64_t embed = C * d * 1 + C;
  const std::int64_t conv_block = 3 * C * C + 2 * C;  // kernel + gamma + beta
  const std::int64_t res_block = 2 * conv_block;
  const std::int64_t out = C * d * 3 + d;
  const std::int64_t expected = embed + cfg.num_conv_layers * conv_block +
                                cfg.num_residual_blocks * res_block + out;

  CHECK(expected == 2045);
  CHECK(p.parameter_count() == expected);
}

TEST_CASE("init_generator: invalid dimensions rejected") {
  auto cfg = small_gen_config();
  cfg.base_channels = 0;
  CHECK_THROWS_AS(init_generator(cfg, 0), ConfigError);
  cfg = small_gen_config();
  cfg.noise_alpha = -0.5;
  CHECK_THROWS_AS(init_generator(cfg, 0), ConfigError);
}

TEST_CASE("generator_forward: shape preserved, deterministic with alpha=0") {
  auto cfg = small_gen_config();
  auto p = init_generator(cfg, 5);
  auto x = random_input(2, 5, 64, 99);
  Rng rng(1);

  auto y1 = generator_forward(p, x, rng, BnMode::eval);
  auto y2 = generator_forward(p, x, rng, BnMode::eval);
  CHECK(y1.shape() == Shape{2, 5, 64});
  CHECK(same_values(y1, y2));

  for (float v : y1.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("generator_forward: noise changes outputs") {
  auto cfg = small_gen_config();
  auto quiet = init_generator(cfg, 5);
  cfg.noise_alpha = 0.1;
  auto noisy = init_generator(cfg, 5);

  auto x = random_input(2, 5, 64, 99);
  Rng r1(7), r2(7);
  auto y0 = generator_forward(quiet, x, r1, BnMode::eval);
  auto y1 = generator_forward(noisy, x, r2, BnMode::eval);
  CHECK(y0.shape() == y1.shape());
  CHECK(!same_values(y0, y1));
}

TEST_CASE("generator_forward: shape mismatch rejected") {
  auto p = init_generator(small_gen_config(), 0);
  Rng rng(0);
  auto bad = random_input(2, 4, 64, 1);
  CHECK_THROWS_AS(generator_forward(p, bad, rng), ShapeError);
}

TEST_CASE("ablation grid preserves shapes, smallest point runs") {
  for (std::int64_t layers : {1, 2, 3, 5, 7}) {
    GeneratorConfig cfg;
    cfg.input_features = 3;
    cfg.sequence_length = 32;
    cfg.base_channels = 4;
    cfg.num_conv_layers = layers;
    cfg.num_residual_blocks = 2;
    cfg.noise_alpha = 0.0;
    auto p = init_generator(cfg, 11);
    Rng rng(0);
    auto x = random_input(2, 3, 32, 42);
    auto y = generator_forward(p, x, rng);
    CHECK(y.shape() == x.shape());
  }
}

TEST_CASE("residual_block: zeroed F path is the exact identity") {
  Rng rng(21);
  ResBlock block;
  auto make = [&](std::int64_t c) {
    ConvBnBlock b;
    std::vector<float> w(std::size_t(c * c * 3));
    for (auto& v : w) v = float(rng.normal(0.0, 0.3));
    b.w = Tensor<float>::from({c, c, 3}, std::move(w), true);
    b.gamma = Tensor<float>::filled({c}, 1.0f, true);
    b.beta = Tensor<float>::zeros({c}, true);
    b.rs = RunningStats<float>(c);
    return b;
  };
  block.c1 = make(4);
  block.c2 = make(4);
  for (auto& v : block.c2.w.data()) v = 0.0f;

  auto h = random_input(2, 4, 16, 77);
  for (auto mode : {BnMode::train, BnMode::eval}) {
    auto out = residual_block(h, block, mode);
    REQUIRE(out.shape() == h.shape());
    for (std::size_t i = 0; i < h.data().size(); ++i)
      CHECK(out.data()[i] == h.data()[i]);
  }
}

TEST_CASE("residual_block: gradient w.r.t. input passes finite differences") {
  Rng rng(4);
  ResBlock block;
  auto make = [&](std::int64_t c) {
    ConvBnBlock b;
    std::vector<float> w(std::size_t(c * c * 3));
    for (auto& v : w) v = float(rng.normal(0.0, 0.4));
    b.w = Tensor<float>::from({c, c, 3}, std::move(w), true);
    b.gamma = Tensor<float>::filled({c}, 1.0f, true);
    b.beta = Tensor<float>::zeros({c}, true);
    b.rs = RunningStats<float>(c);
    return b;
  };
  block.c1 = make(3);
  block.c2 = make(3);

  auto h = random_input(1, 3, 8, 13);
  std::function<Tensor<float>(const Tensor<float>&)> f =
      [&](const Tensor<float>& in) {
        return sum_all(residual_block(in, block, BnMode::eval));
      };
  CHECK(finite_difference_check(f, h, 1e-2f) < 1e-2);
}

TEST_CASE("residual_block: channel mismatch rejected") {
  ResBlock block;
  block.c1.w = Tensor<float>::zeros({4, 4, 3}, true);
  block.c1.gamma = Tensor<float>::filled({4}, 1.0f, true);
  block.c1.beta = Tensor<float>::zeros({4}, true);
  block.c1.rs = RunningStats<float>(4);
  block.c2 = block.c1;

  auto h = random_input(1, 3, 8, 0);
  CHECK_THROWS_AS(residual_block(h, block), ShapeError);
}

TEST_CASE("init_discriminator: determinism and analytic parameter count") {
  DiscriminatorConfig cfg;
  cfg.input_features = 5;
  cfg.sequence_length = 64;
  cfg.base_channels = 8;
  cfg.num_conv_layers = 3;

  auto a = init_discriminator(cfg, 9);
  auto b = init_discriminator(cfg, 9);
  auto an = a.named(), bn = b.named();
  REQUIRE(an.size() == bn.size());
  for (std::size_t i = 0; i < an.size(); ++i)
    CHECK(same_values(an[i].tensor, bn[i].tensor));

  // 5->8 then 8->16 then 16->32 channels, kernel 4 with bias; length
  // 64->32->16->8; flatten 32*8=256 -> dense to 1.
  const std::int64_t expected = (8 * 5 * 4 + 8) + (16 * 8 * 4 + 16) +
                                (32 * 16 * 4 + 32) + (256 * 1 + 1);
  CHECK(expected == 3033);
  CHECK(a.parameter_count() == expected);
}

TEST_CASE("init_discriminator: too many stride-2 layers rejected") {
  DiscriminatorConfig cfg;
  cfg.input_features = 2;
  cfg.sequence_length = 8;
  cfg.base_channels = 4;
  cfg.num_conv_layers = 5;  // 8->4->2->1, then length 1 cannot take kernel 4
  CHECK_THROWS_AS(init_discriminator(cfg, 0), ConfigError);
}

TEST_CASE("discriminator_forward: scores per batch element") {
  DiscriminatorConfig cfg;
  cfg.input_features = 3;
  cfg.sequence_length = 32;
  cfg.base_channels = 4;
  cfg.num_conv_layers = 3;
  auto p = init_discriminator(cfg, 2);

  auto y = random_input(4, 3, 32, 5);
  auto s = discriminator_forward(p, y);
  CHECK(s.shape() == Shape{4, 1});
  for (float v : s.data()) CHECK(std::isfinite(v));

  auto bad = random_input(4, 3, 16, 5);
  CHECK_THROWS_AS(discriminator_forward(p, bad), ShapeError);
}

TEST_CASE("discriminator_forward: zero input and zero head give score 0") {
  DiscriminatorConfig cfg;
  cfg.input_features = 2;
  cfg.sequence_length = 16;
  cfg.base_channels = 4;
  cfg.num_conv_layers = 2;
  auto p = init_discriminator(cfg, 1);
  for (auto& v : p.fc_w.data()) v = 0.0f;
  for (auto& v : p.fc_b.data()) v = 0.0f;

  auto zero = Tensor<float>::zeros({3, 2, 16});
  auto s = discriminator_forward(p, zero);
  for (float v : s.data()) CHECK(v == 0.0f);
}

TEST_CASE("discriminator_forward: parameter perturbation moves scores") {
  DiscriminatorConfig cfg;
  cfg.input_features = 2;
  cfg.sequence_length = 16;
  cfg.base_channels = 4;
  cfg.num_conv_layers = 2;
  auto p = init_discriminator(cfg, 1);

  auto y = random_input(2, 2, 16, 3);
  auto before = discriminator_forward(p, y);
  p.convs[0].w.data()[0] += 0.25f;
  auto after = discriminator_forward(p, y);
  CHECK(!same_values(before, after));
}

TEST_CASE("end-to-end generator gradient check at sampled coordinates") {
  GeneratorConfig cfg;
  cfg.input_features = 2;
  cfg.sequence_length = 8;
  cfg.base_channels = 4;
  cfg.num_conv_layers = 2;
  cfg.num_residual_blocks = 1;
  cfg.noise_alpha = 0.0;
  auto params = init_generator(cfg, 23);
  auto x = random_input(2, 2, 8, 31);
  Rng fwd_rng(0);

  auto loss_value = [&]() {
    auto y = generator_forward(params, x, fwd_rng, BnMode::train);
    return double(sum_all(y).data()[0]);
  };

  auto named = params.named();
  auto loss = sum_all(generator_forward(params, x, fwd_rng, BnMode::train));
  backward(loss);

  Rng pick(40);
  const float eps = 1e-2f;
  for (int trial = 0; trial < 20; ++trial) {
    auto& np = named[pick.below(named.size())];
    auto& vals = np.tensor.data();
    const std::size_t i = std::size_t(pick.below(vals.size()));
    const double analytic = double(np.tensor.grad()[i]);

    const float orig = vals[i];
    vals[i] = orig + eps;
    const double fp = loss_value();
    vals[i] = orig - eps;
    const double fm = loss_value();
    vals[i] = orig;
    const double numeric = (fp - fm) / (2.0 * double(eps));

    const double err =
        std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    INFO(np.name << "[" << i << "] analytic=" << analytic
                 << " numeric=" << numeric);
    CHECK(err < 1e-2);
  }
}

TEST_CASE("generator named order is stable and unique") {
  auto p = init_generator(small_gen_config(), 0);
  auto names = p.named();
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      CHECK(names[i].name != names[j].name);

  auto q = init_generator(small_gen_config(), 44);
  auto qn = q.named();
  REQUIRE(names.size() == qn.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    CHECK(names[i].name == qn[i].name);

  auto stats = p.named_stats();
  CHECK(stats.size() == std::size_t(small_gen_config().num_conv_layers +
                                    2 * small_gen_config().num_residual_blocks));
}
