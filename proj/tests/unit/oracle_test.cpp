#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "owaic/errors.hpp"
#include "owaic/oracle.hpp"
#include "owaic/stream.hpp"
#include "owaic/waic.hpp"
#include "reference.hpp"

using namespace owaic;

TEST(Oracle, LogOneLogThree) {
  HMatrix h(1, 2);
  h.at(0, 0) = std::log(1.0);
  h.at(0, 1) = std::log(3.0);
  const auto r = offline_waic(h).full();
  EXPECT_NEAR(r.lppd, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.p_waic, std::log(3.0) * std::log(3.0) / 2, 1e-15);
}

TEST(Oracle, ConstantMatrix) {
  const double c = -3.25;
  HMatrix h(4, 10);
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t s = 0; s < 10; ++s) h.at(m, s) = c;
  const auto r = offline_waic(h).full();
  EXPECT_NEAR(r.lppd, 4 * c, 1e-14);
  EXPECT_EQ(r.p_waic, 0.0);
  EXPECT_NEAR(r.waic, -2 * 4 * c, 1e-13);
}

TEST(Oracle, ShiftedEvaluationStaysFinite) {
  const std::vector<double> row{-1e4, -1e4 + 1};
  const double v = batch_log_mean_exp(row);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, -1e4 + std::log((1 + std::exp(1.0)) / 2), 1e-10);
  EXPECT_EQ(std::log((std::exp(row[0]) + std::exp(row[1])) / 2), -INFINITY);
}

TEST(Oracle, TwoPassVarianceMatchesReference) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> dist(-30, 4);
  std::vector<double> row(500);
  for (double& v : row) v = dist(rng);
  EXPECT_LE(ref::rel_diff(two_pass_variance(row), static_cast<double>(ref::sample_variance(row))), 1e-12);
  EXPECT_LE(ref::rel_diff(batch_log_mean_exp(row), static_cast<double>(ref::log_mean_exp(row))), 1e-13);
}

TEST(Oracle, ColumnOrderIsImmaterial) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-100, 10);
  const std::size_t M = 3, S = 64;
  HMatrix a(M, S);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t s = 0; s < S; ++s) a.at(m, s) = dist(rng);
  std::vector<std::size_t> perm(S);
  for (std::size_t s = 0; s < S; ++s) perm[s] = s;
  std::shuffle(perm.begin(), perm.end(), rng);
  HMatrix b(M, S);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t s = 0; s < S; ++s) b.at(m, s) = a.at(m, perm[s]);
  const auto ra = offline_waic(a).full(), rb = offline_waic(b).full();
  for (std::size_t m = 0; m < M; ++m) {
    EXPECT_LE(ref::rel_diff(ra.lppd_elements[m], rb.lppd_elements[m]), 1e-14);
    EXPECT_LE(ref::rel_diff(ra.p_waic_elements[m], rb.p_waic_elements[m]), 1e-12);
  }
}

TEST(Oracle, AgreesWithOnlineEngineAcrossTheEnvelope) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1e4, 1e2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t M = 1 + rng() % 20, S = 2 + rng() % 999;
    HMatrix h(M, S);
    WaicState state(M, PredictiveConfig::conditional());
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t s = 0; s < S; ++s) h.at(m, s) = dist(rng);
    for (std::size_t s = 0; s < S; ++s) state.update(h.column(s));
    const auto online = state.finalize().full(), offline = offline_waic(h).full();
    for (std::size_t m = 0; m < M; ++m) {
      ASSERT_LE(ref::rel_diff(online.lppd_elements[m], offline.lppd_elements[m]), 1e-10);
      ASSERT_LE(ref::rel_diff(online.p_waic_elements[m], offline.p_waic_elements[m]), 1e-10);
    }
  }
}

TEST(Oracle, Errors) {
  EXPECT_THROW(offline_waic(HMatrix(2, 1)), InsufficientSamplesError);
  EXPECT_THROW(batch_log_mean_exp(std::vector<double>{}), InsufficientSamplesError);
}

TEST(Oracle, ReadsStreams) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(-20, 0);
  std::stringstream io;
  StreamWriter writer(io, {3, PredictiveMode::marginal});
  WaicState state(3, PredictiveConfig::marginal(20));
  std::vector<double> h(12);
  for (int s = 0; s < 40; ++s) {
    for (double& v : h) v = dist(rng);
    writer.write(h);
    state.update(h);
  }
  const auto offline = offline_waic_stream(io);
  const auto online = state.finalize();
  ASSERT_EQ(offline.fractions.size(), 4u);
  for (std::size_t f = 0; f < 4; ++f) {
    EXPECT_EQ(offline.fractions[f].fraction, online.fractions[f].fraction);
    EXPECT_LE(ref::rel_diff(offline.fractions[f].lppd, online.fractions[f].lppd), 1e-10);
    EXPECT_LE(ref::rel_diff(offline.fractions[f].p_waic, online.fractions[f].p_waic), 1e-10);
  }
}
