#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "trajgan/preprocess.hpp"
#include "trajgan/rng.hpp"

using namespace trajgan;

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

FeatureMatrix from_columns(std::vector<std::string> names,
                           const std::vector<std::vector<double>>& cols) {
  FeatureMatrix m(std::move(names), cols.at(0).size());
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < cols[c].size(); ++r) m.at(r, c) = cols[c][r];
  return m;
}
}  // namespace

TEST_CASE("cubic spline imputation") {
  SUBCASE("reproduces linear data") {
    const auto out =
        cubic_spline_impute({0, 0.5, 1, 2}, {1, kNaN, 2, 3});
    CHECK(out[1] == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("identity when complete") {
    const std::vector<double> v = {3.0, 1.0, 4.0, 1.5};
    const auto out = cubic_spline_impute({0, 1, 2, 3}, v);
    CHECK(out == v);
  }
  SUBCASE("passes through all knots exactly") {
    Rng rng(41);
    std::vector<double> t, v;
    for (int i = 0; i < 12; ++i) {
      t.push_back(double(i) + rng.uniform(0.0, 0.5));
      v.push_back(rng.uniform(-3.0, 3.0));
    }
    const auto out = natural_spline_eval(t, v, t);
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK(std::abs(out[i] - v[i]) < 1e-9);
  }
  SUBCASE("reproduces affine functions at arbitrary queries") {
    std::vector<double> t = {0, 0.7, 1.9, 3.0, 4.2}, v;
    for (double x : t) v.push_back(2.5 * x - 1.25);
    const std::vector<double> q = {0.1, 0.35, 1.0, 2.2, 3.9};
    const auto out = natural_spline_eval(t, v, q);
    for (std::size_t i = 0; i < q.size(); ++i)
      CHECK(out[i] == doctest::Approx(2.5 * q[i] - 1.25).epsilon(1e-12));
  }
  SUBCASE("beats linear interpolation on held-out sin samples") {
    std::vector<double> kt, kv;
    for (int i = 0; i < 10; ++i) {
      const double t = double(i) * 0.7;
      kt.push_back(t);
      kv.push_back(std::sin(t));
    }
    const std::vector<double> held = {0.33, 1.1, 2.5, 3.9, 5.2};
    const auto spline = natural_spline_eval(kt, kv, held);
    double se_spline = 0.0, se_linear = 0.0;
    for (std::size_t i = 0; i < held.size(); ++i) {
      const double q = held[i];
      std::size_t k = 0;
      while (k + 2 < kt.size() && kt[k + 1] < q) ++k;
      const double w = (q - kt[k]) / (kt[k + 1] - kt[k]);
      const double lin = (1.0 - w) * kv[k] + w * kv[k + 1];
      se_spline += std::pow(spline[i] - std::sin(q), 2);
      se_linear += std::pow(lin - std::sin(q), 2);
    }
    CHECK(std::sqrt(se_spline / 5.0) < std::sqrt(se_linear / 5.0));
  }
  SUBCASE("constant extension outside the observed span") {
    const auto out = cubic_spline_impute({0, 1, 2, 3, 4},
                                         {kNaN, 5.0, 6.0, 7.0, kNaN});
    CHECK(out[0] == 5.0);
    CHECK(out[4] == 7.0);
  }
  SUBCASE("fewer than 2 observed points") {
    CHECK_THROWS_AS(cubic_spline_impute({0, 1, 2}, {kNaN, 1.0, kNaN}),
                    PreprocessError);
  }
  SUBCASE("duplicate times") {
    CHECK_THROWS_AS(cubic_spline_impute({0, 1, 1, 2}, {1, 2, 2, 3}),
                    PreprocessError);
  }
}

TEST_CASE("moving average") {
  SUBCASE("window 1 is identity") {
    const std::vector<double> x = {4, 2, 7, 1};
    CHECK(moving_average(x, 1) == x);
  }
  SUBCASE("constant series unchanged") {
    const std::vector<double> x(20, 3.25);
    const auto out = moving_average(x, 5);
    for (double v : out) CHECK(v == doctest::Approx(3.25).epsilon(1e-15));
  }
  SUBCASE("trailing window with prefix rule") {
    const auto out = moving_average({1, 2, 3, 4}, 2);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(1.5));
    CHECK(out[2] == doctest::Approx(2.5));
    CHECK(out[3] == doctest::Approx(3.5));
  }
  SUBCASE("non-positive window") {
    CHECK_THROWS_AS(moving_average({1, 2}, 0), PreprocessError);
    CHECK_THROWS_AS(moving_average({1, 2}, -3), PreprocessError);
  }
  SUBCASE("mean preserved on a long stationary series") {
    // periodic series over whole periods; only the n-1 prefix positions
    // deviate, which vanishes as the series grows
    const std::size_t N = 10'000'000, period = 1000;
    std::vector<double> x(N);
    for (std::size_t i = 0; i < N; ++i)
      x[i] = std::sin(2.0 * 3.14159265358979323846 * double(i % period) /
                      double(period));
    const auto out = moving_average(x, 5);
    double mi = 0.0, mo = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      mi += x[i];
      mo += out[i];
    }
    CHECK(std::abs(mi / double(N) - mo / double(N)) < 1e-6);
  }
}

TEST_CASE("min-max normalization") {
  SUBCASE("endpoints forced to 0 and 1") {
    auto m = from_columns({"a"}, {{0, 5, 10}});
    auto [norm, scaler] = minmax_fit_transform(m);
    CHECK(norm.at(0, 0) == doctest::Approx(0.0));
    CHECK(norm.at(1, 0) == doctest::Approx(0.5));
    CHECK(norm.at(2, 0) == doctest::Approx(1.0));
    CHECK(scaler.x_min[0] == 0.0);
    CHECK(scaler.x_max[0] == 10.0);
  }
  SUBCASE("constant feature maps to zero") {
    auto m = from_columns({"a"}, {{7, 7}});
    auto [norm, scaler] = minmax_fit_transform(m);
    CHECK(norm.at(0, 0) == 0.0);
    CHECK(norm.at(1, 0) == 0.0);
  }
  SUBCASE("random matrix lands in [0,1] with endpoints attained") {
    Rng rng(43);
    FeatureMatrix m({"a", "b", "c"}, 40);
    for (std::size_t r = 0; r < m.rows; ++r)
      for (std::size_t c = 0; c < m.cols; ++c)
        m.at(r, c) = rng.uniform(-20.0, 50.0);
    auto [norm, scaler] = minmax_fit_transform(m);
    for (std::size_t c = 0; c < 3; ++c) {
      double lo = 1e9, hi = -1e9;
      for (std::size_t r = 0; r < 40; ++r) {
        const double v = norm.at(r, c);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK(lo == doctest::Approx(0.0));
      CHECK(hi == doctest::Approx(1.0));
    }
  }
  SUBCASE("round trip is identity") {
    Rng rng(47);
    FeatureMatrix m({"a", "b"}, 25);
    for (auto& v : m.values) v = rng.uniform(-5.0, 5.0);
    auto [norm, scaler] = minmax_fit_transform(m);
    auto back = minmax_inverse(norm, scaler);
    for (std::size_t i = 0; i < m.values.size(); ++i)
      CHECK(std::abs(back.values[i] - m.values[i]) < 1e-6);
  }
  SUBCASE("inverse of midpoint") {
    MinMaxScaler scaler{{"a"}, {0.0}, {10.0}};
    auto norm = from_columns({"a"}, {{0.5}});
    CHECK(minmax_inverse(norm, scaler).at(0, 0) == doctest::Approx(5.0));
  }
  SUBCASE("constant feature inverse returns x_min") {
    auto m = from_columns({"a"}, {{7, 7}});
    auto [norm, scaler] = minmax_fit_transform(m);
    CHECK(minmax_inverse(norm, scaler).at(0, 0) == doctest::Approx(7.0));
  }
  SUBCASE("feature-name mismatch") {
    MinMaxScaler scaler{{"a"}, {0.0}, {1.0}};
    auto norm = from_columns({"b"}, {{0.5}});
    CHECK_THROWS_AS(minmax_inverse(norm, scaler), PreprocessError);
  }
  SUBCASE("empty matrix") {
    FeatureMatrix empty;
    CHECK_THROWS_AS(minmax_fit_transform(empty), PreprocessError);
  }
}

TEST_CASE("spearman rank correlation") {
  SUBCASE("perfect monotone") {
    auto m = from_columns({"x", "y"}, {{1, 2, 3, 4}, {2, 4, 6, 8}});
    auto s = spearman_matrix(m);
    CHECK(s.at(0, 1) == doctest::Approx(1.0));
    CHECK(s.at(0, 0) == 1.0);
    CHECK(s.at(1, 1) == 1.0);
  }
  SUBCASE("perfect inverse") {
    auto m = from_columns({"x", "y"}, {{1, 2, 3}, {5, 2, -1}});
    auto s = spearman_matrix(m);
    CHECK(s.at(0, 1) == doctest::Approx(-1.0));
  }
  SUBCASE("tie-free case via the rank-difference formula") {
    // ranks of y are [2,3,1,4,5]; d = [-1,-1,2,0,0], sum d^2 = 6,
    // rho = 1 - 6*6/(5*24) = 0.7 exactly
    auto m = from_columns({"x", "y"},
                          {{1, 2, 3, 4, 5}, {20, 30, 10, 40, 50}});
    auto s = spearman_matrix(m);
    CHECK(s.at(0, 1) == doctest::Approx(0.7).epsilon(1e-12));
  }
  SUBCASE("tied values use mid-ranks and rank Pearson") {
    // y ranks with the tie at 7: [1, 2, 3.5, 5, 3.5]; Pearson of
    // ([1..5], ranks) = 8/sqrt(10*9.5)
    auto m = from_columns({"x", "y"}, {{1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}});
    auto s = spearman_matrix(m);
    CHECK(s.at(0, 1) ==
          doctest::Approx(8.0 / std::sqrt(95.0)).epsilon(1e-12));
    CHECK(s.at(0, 1) == doctest::Approx(0.8207826816681233).epsilon(1e-12));
  }
  SUBCASE("invariant under strictly monotone transforms") {
    Rng rng(53);
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = rng.uniform(-2.0, 2.0);
      b[i] = rng.uniform(-2.0, 2.0);
    }
    auto s1 = spearman_matrix(from_columns({"a", "b"}, {a, b}));
    std::vector<double> ae(30);
    for (std::size_t i = 0; i < 30; ++i) ae[i] = std::exp(a[i]);
    auto s2 = spearman_matrix(from_columns({"a", "b"}, {ae, b}));
    CHECK(s1.at(0, 1) == doctest::Approx(s2.at(0, 1)).epsilon(1e-12));
  }
  SUBCASE("constant column flagged undefined, not thrown") {
    auto m = from_columns({"x", "c"}, {{1, 2, 3}, {4, 4, 4}});
    auto s = spearman_matrix(m);
    CHECK(s.constant_feature[1] == 1);
    CHECK(s.undefined(0, 1));
    CHECK(s.at(0, 1) == 0.0);
    CHECK(s.at(1, 1) == 1.0);
  }
  SUBCASE("too few rows") {
    auto m = from_columns({"x", "y"}, {{1, 2}, {3, 4}});
    CHECK_THROWS_AS(spearman_matrix(m), PreprocessError);
  }
  SUBCASE("midranks") {
    const auto r = midranks({10, 20, 20, 30});
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 2.5);
    CHECK(r[2] == 2.5);
    CHECK(r[3] == 4.0);
  }
}

TEST_CASE("feature report") {
  Rng rng(59);
  FeatureMatrix m({"lat", "lon", "sog", "cog", "len", "draft"}, 12);
  for (auto& v : m.values) v = rng.uniform(0.0, 1.0);
  auto s = spearman_matrix(m);

  SUBCASE("retain-all policy") {
    auto report = feature_report(s, "sog");
    REQUIRE(report.rows.size() == 5);
    for (const auto& row : report.rows) CHECK(row.marker == "retain");
    CHECK(report.recommendation == "retain all features");
  }
  SUBCASE("report values equal matrix entries exactly") {
    auto report = feature_report(s, "sog");
    for (const auto& row : report.rows) {
      std::size_t i = 0;
      while (s.feature_names[i] != row.name) ++i;
      std::size_t t = 0;
      while (s.feature_names[t] != "sog") ++t;
      CHECK(row.rho == s.at(i, t));
    }
  }
  SUBCASE("undefined column marked") {
    FeatureMatrix mc({"a", "b", "c"}, 5);
    for (std::size_t r = 0; r < 5; ++r) {
      mc.at(r, 0) = double(r);
      mc.at(r, 1) = 2.0;  // constant
      mc.at(r, 2) = double(5 - r);
    }
    auto sc = spearman_matrix(mc);
    auto report = feature_report(sc, "a");
    bool found = false;
    for (const auto& row : report.rows)
      if (row.name == "b") {
        found = true;
        CHECK(row.marker == "undefined correlation");
        CHECK(row.undefined);
      }
    CHECK(found);
    const auto text = render(report);
    CHECK(text.find("undefined correlation") != std::string::npos);
  }
  SUBCASE("unknown target") {
    CHECK_THROWS_AS(feature_report(s, "nope"), PreprocessError);
  }
}
