#include <cmath>

#include <gtest/gtest.h>

#include "collapse_lab/geometry.hpp"
#include "collapse_lab/metrics.hpp"
#include "oracle.hpp"

using namespace collapse_lab;

namespace {

EmbeddingSet random_set(Layout layout, std::size_t d, std::uint32_t seed) {
  return {layout, d, oracle::flatten(oracle::random_unit_rows(layout.rows(), d, seed))};
}

}  // namespace

TEST(WithinClassVariance, IdenticalRowsGiveZero) {
  const EmbeddingSet u({2, 2, 2}, 2, {1, 0, 1, 0, 1, 0, 1, 0, 0, 1, 0.6, 0.8, 0, 1, 0, 1});
  const auto within = within_class_variance(u);
  EXPECT_EQ(within[0], 0.0);
  EXPECT_GT(within[1], 0.0);
}

TEST(WithinClassVariance, SsemDeltaOne) {
  const auto u = build_ssem({10, 10, 2, 1.0}, 99);
  for (double v : within_class_variance(u)) EXPECT_NEAR(v, 90.0 / 99.0, 1e-10);
}

TEST(WithinClassVariance, DualFormula) {
  const auto rows = oracle::random_unit_rows(4, 3, 17);
  const EmbeddingSet u({1, 2, 2}, 3, oracle::flatten(rows));
  const double measured = within_class_variance(u)[0];
  EXPECT_NEAR(measured, oracle::variance(rows), 1e-14);
  std::vector<double> mean(3, 0.0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < 3; ++c) mean[c] += r[c] / 4.0;
  EXPECT_NEAR(measured, 1.0 - (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]), 1e-14);
}

TEST(BetweenClassVariance, Examples) {
  const EmbeddingSet same({2, 1, 2}, 2, {1, 0, 0, 1, 0, 1, 1, 0});
  EXPECT_NEAR(between_class_variance(same), 0.0, 1e-16);
  for (auto [m, n, p] : {std::array<std::size_t, 3>{2, 2, 1}, {3, 4, 2}, {5, 3, 3}})
    EXPECT_NEAR(between_class_variance(build_ssem({m, n, p, 0.0}, m * n - 1)), 1.0, 1e-12);
  EXPECT_NEAR(between_class_variance(build_ssem({10, 10, 2, 0.5}, 99)), 1.0 - 0.25 * 90.0 / 99.0, 1e-10);
}

TEST(BetweenClassVariance, MatchesDefinition) {
  const Layout layout{3, 2, 2};
  const auto rows = oracle::random_unit_rows(layout.rows(), 4, 99);
  const EmbeddingSet u(layout, 4, oracle::flatten(rows));
  oracle::Matrix means;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> mean(4, 0.0);
    for (std::size_t r = i * 4; r < (i + 1) * 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) mean[c] += rows[r][c] / 4.0;
    means.push_back(mean);
  }
  EXPECT_NEAR(between_class_variance(u), oracle::variance(means), 1e-14);
}

TEST(VarianceReport, FieldsAndJson) {
  const auto u = build_ssem({3, 4, 2, 0.7}, 11);
  const auto r = measure_variances(u);
  ASSERT_EQ(r.within_per_class.size(), 3u);
  EXPECT_NEAR(r.total_check, r.avg_within + r.between, 1e-15);
  EXPECT_NEAR(r.total_check, 1.0, 1e-10);
  EXPECT_NEAR(r.centroid_norm, 0.0, 1e-10);
  const nlohmann::json j = r;
  for (const char* key : {"within_per_class", "avg_within", "between", "total_check", "centroid_norm"})
    EXPECT_TRUE(j.contains(key)) << key;
  const auto back = j.get<VarianceReport>();
  EXPECT_EQ(back.within_per_class, r.within_per_class);
  EXPECT_EQ(back.between, r.between);
}

TEST(VarianceIdentity, SsemEquality) {
  for (double delta : {0.0, 0.5, 1.0, max_delta(4, 3)}) {
    const auto u = build_ssem({4, 3, 2, delta}, 11);
    EXPECT_TRUE(variance_identity_check(u, 1e-10));
    EXPECT_NEAR(measure_variances(u).total_check, 1.0, 1e-10);
  }
}

TEST(VarianceIdentity, RandomSetsRespectBound) {
  int strict = 0;
  for (std::uint32_t seed = 1; seed <= 100; ++seed) {
    const auto u = random_set({3, 3, 2}, 5, seed);
    EXPECT_TRUE(variance_identity_check(u, 1e-12));
    const auto r = measure_variances(u);
    // Var[U] = 1 - ||E[U]||^2 for unit rows.
    EXPECT_NEAR(total_variance(u), 1.0 - r.centroid_norm * r.centroid_norm, 1e-12);
    if (r.total_check < 1.0 - 1e-6) ++strict;
  }
  EXPECT_EQ(strict, 100);
}

TEST(VarianceIdentity, ShiftedCentroid) {
  auto rows = oracle::random_unit_rows(12, 4, 3);
  for (auto& r : rows) {
    r[0] = std::abs(r[0]) + 0.5;
    double sq = 0.0;
    for (double x : r) sq += x * x;
    for (double& x : r) x /= std::sqrt(sq);
  }
  const EmbeddingSet u({2, 3, 2}, 4, oracle::flatten(rows));
  EXPECT_TRUE(variance_identity_check(u, 1e-12));
  EXPECT_LT(measure_variances(u).total_check, 0.9);
}

TEST(VarianceIdentity, DetectsBrokenBound) {
  const EmbeddingSet u({2, 1, 1}, 1, {2.0, -2.0});  // not unit norm: total 4
  EXPECT_FALSE(variance_identity_check(u, 1e-12));
}

TEST(SimilarityMargin, Examples) {
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 4}, {10, 10}}) {
    const double md = static_cast<double>(m);
    EXPECT_NEAR(similarity_margin(build_ssem({m, n, 1, 1.0}, m * n - 1)), 0.0, 1e-10);
    EXPECT_NEAR(similarity_margin(build_ssem({m, n, 2, 0.5}, m * n - 1)), md / (md - 1.0) * 0.75, 1e-10);
    EXPECT_LT(similarity_margin(build_ssem({m, n, 1, max_delta(m, n)}, m * n - 1)), 0.0);
  }
  EXPECT_THROW(similarity_margin(random_set({1, 3, 1}, 3, 1)), DomainError);
}

TEST(SimilarityMargin, SignTracksDeltaOne) {
  for (int k = 0; k <= 50; ++k) {
    const double delta = max_delta(3, 3) * k / 50.0;
    const double margin = similarity_margin(build_ssem({3, 3, 1, delta}, 8));
    if (delta <= 1.0 + 1e-12)
      EXPECT_GE(margin, -1e-12) << delta;
    else
      EXPECT_LT(margin, 0.0) << delta;
  }
}

TEST(LemmaStatistics, MatchDefinitions) {
  const Layout layout{2, 3, 2};
  const auto rows = oracle::random_unit_rows(layout.rows(), 3, 4);
  const EmbeddingSet u(layout, 3, oracle::flatten(rows));
  double inner = 0.0, spread = 0.0;
  auto mean = [&](std::size_t g) {
    std::vector<double> m(3);
    for (std::size_t c = 0; c < 3; ++c) m[c] = 0.5 * (rows[2 * g][c] + rows[2 * g + 1][c]);
    return m;
  };
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t jj = 0; jj < 3; ++jj) {
        if (j == jj) continue;
        const auto a = mean(i * 3 + j), b = mean(i * 3 + jj);
        for (std::size_t c = 0; c < 3; ++c) {
          inner += a[c] * b[c];
          spread += (a[c] - b[c]) * (a[c] - b[c]);
        }
      }
  EXPECT_NEAR(cross_instance_inner_sum(u), inner, 1e-13);
  EXPECT_NEAR(instance_spread_sum(u), spread, 1e-13);
}
