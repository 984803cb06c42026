#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "owaic/datasets.hpp"
#include "owaic/diagnostics.hpp"
#include "owaic/errors.hpp"
#include "owaic/mcmc.hpp"
#include "owaic/models.hpp"
#include "owaic/stream.hpp"

using namespace owaic;

namespace {

HierDataset hier(std::uint64_t seed, std::size_t J, std::size_t n) {
  RandomStream rng(seed);
  return generate_hier(HierParams{}, J, n, rng);
}

McmcConfig short_chain(std::size_t keep, std::uint64_t seed = 11) {
  McmcConfig c;
  c.burn_in = 300;
  c.keep = keep;
  c.seed = seed;
  return c;
}

std::vector<WaicVariant> variants_for(const ModelGraph& m, std::size_t K) {
  return {{"ungrouped conditional", make_partition(m, "ungrouped"), PredictiveConfig::conditional()},
          {"grouped conditional", make_partition(m, "grouped"), PredictiveConfig::conditional()},
          {"grouped marginal", make_partition(m, "grouped"), PredictiveConfig::marginal(K)}};
}

}  // namespace

TEST(Ess, IndependentDrawsKeepTheirCount) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> dist(5, 2);
  OnlineAutocorrelation ac(100);
  for (int i = 0; i < 20000; ++i) ac.update(dist(rng));
  EXPECT_NEAR(ac.autocorrelation(0), 1.0, 1e-12);
  EXPECT_LE(std::abs(ac.autocorrelation(1)), 4.0 / std::sqrt(20000.0));
  EXPECT_GT(ac.effective_sample_size(), 0.8 * 20000);
  EXPECT_LE(ac.effective_sample_size(), 20000.0);
}

TEST(Ess, AutoregressiveSeries) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> dist(0, 1);
  const double phi = 0.9;
  constexpr int n = 50000;
  OnlineAutocorrelation ac(250);
  std::vector<double> xs;
  double x = 0;
  for (int i = 0; i < n; ++i) {
    x = phi * x + dist(rng);
    xs.push_back(x + 100.0);
    ac.update(xs.back());
  }
  double mean = 0;
  for (double v : xs) mean += v / n;
  double c0 = 0, c1 = 0;
  for (int i = 0; i < n; ++i) {
    c0 += (xs[i] - mean) * (xs[i] - mean);
    if (i) c1 += (xs[i] - mean) * (xs[i - 1] - mean);
  }
  EXPECT_NEAR(ac.autocorrelation(1), c1 / c0, 1e-9);
  const double expected = n * (1 - phi) / (1 + phi);
  EXPECT_NEAR(ac.effective_sample_size(), expected, 0.25 * expected);
}

TEST(Ess, ConstantSeries) {
  OnlineAutocorrelation ac(10);
  for (int i = 0; i < 50; ++i) ac.update(3.0);
  EXPECT_EQ(ac.autocorrelation(1), 0.0);
  EXPECT_LE(ac.effective_sample_size(), 50.0);
}

TEST(Mcmc, KeepOfOneCannotFinalize) {
  const auto d = hier(1, 4, 5);
  const auto m = make_model_s(d);
  EXPECT_THROW(run_mcmc_waic("S", d, make_partition(m, "ungrouped"), PredictiveConfig::conditional(), short_chain(1)),
               InsufficientSamplesError);
}

TEST(Mcmc, SingleMeanPosteriorMean) {
  const auto d = hier(2, 10, 20);
  const auto m = make_model_s(d);
  double sum = 0.0, ss = 0.0;
  std::size_t n = 0;
  for (const auto& g : d.y)
    for (double y : g) sum += y, ++n;
  const double ybar = sum / n;
  for (const auto& g : d.y)
    for (double y : g) ss += (y - ybar) * (y - ybar);
  // Conditional on sigma near its posterior scale, the N(0, 100) prior shrinks
  // ybar by a factor n/s^2 / (n/s^2 + 1e-4).
  const double s2 = ss / (n - 1);
  const double analytic = ybar * (n / s2) / (n / s2 + 1.0 / (kHierMuPriorSd * kHierMuPriorSd));

  McmcConfig c = short_chain(20000, 5);
  const WaicVariant v{"u", make_partition(m, "ungrouped"), PredictiveConfig::conditional()};
  const auto report = run_mcmc_waic(m, std::span(&v, 1), c);
  const auto& mu = report.parameters.at(0).name == "mu" ? report.parameters[0] : report.parameters[1];
  ASSERT_EQ(mu.name, "mu");
  const double mcse = mu.sd / std::sqrt(mu.ess);
  EXPECT_LE(std::abs(mu.mean - analytic), 4.0 * mcse) << "mean " << mu.mean << " analytic " << analytic;
  EXPECT_NEAR(mu.sd, std::sqrt(s2 / n), 0.1 * std::sqrt(s2 / n));
  EXPECT_GT(mu.acceptance, 0.2);
  EXPECT_LT(mu.acceptance, 0.7);
}

TEST(Mcmc, StoredSamplesReplayToTheSameResult) {
  const auto d = hier(3, 5, 8);
  const auto m = make_model_h(d);
  const auto variants = variants_for(m, 40);
  std::vector<std::stringstream> dumps(variants.size());
  std::vector<StreamWriter> writers;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    writers.emplace_back(dumps[v], StreamHeader{variants[v].partition.size(), variants[v].predictive.mode});
  }
  RunOptions options;
  options.observer = [&](std::size_t, const ParamAssignment&, const std::vector<std::vector<double>>& h) {
    for (std::size_t v = 0; v < h.size(); ++v) writers[v].write(h[v]);
  };
  const auto report = run_mcmc_waic(m, variants, short_chain(300), options);
  for (std::size_t v = 0; v < variants.size(); ++v) {
    StreamReader reader(dumps[v]);
    WaicState state(variants[v].partition, variants[v].predictive);
    EXPECT_EQ(feed_stream(reader, state), 300u);
    const auto replayed = state.finalize();
    ASSERT_EQ(replayed.fractions.size(), report.results[v].fractions.size());
    for (std::size_t f = 0; f < replayed.fractions.size(); ++f) {
      EXPECT_NEAR(replayed.fractions[f].waic, report.results[v].fractions[f].waic, 1e-12);
      EXPECT_NEAR(replayed.fractions[f].lppd, report.results[v].fractions[f].lppd, 1e-12);
      EXPECT_NEAR(replayed.fractions[f].p_waic, report.results[v].fractions[f].p_waic, 1e-12);
    }
  }
}

TEST(Mcmc, MarginalRunsAreReproducible) {
  const auto d = hier(4, 5, 8);
  const auto m = make_model_h(d);
  const auto variants = variants_for(m, 30);
  const auto a = run_mcmc_waic(m, variants, short_chain(200, 9));
  const auto b = run_mcmc_waic(m, variants, short_chain(200, 9));
  EXPECT_EQ(a.results, b.results);
  EXPECT_EQ(a.latent_simulations, 200u * 30u);
  const auto c = run_mcmc_waic(m, variants, short_chain(200, 10));
  EXPECT_NE(a.results[2], c.results[2]);
}

TEST(Mcmc, AddingVariantsLeavesTheChainAlone) {
  const auto d = hier(5, 5, 8);
  const auto m = make_model_h(d);
  const auto all = variants_for(m, 25);
  const auto just_one = std::vector<WaicVariant>{all[0]};
  const auto a = run_mcmc_waic(m, all, short_chain(150));
  const auto b = run_mcmc_waic(m, just_one, short_chain(150));
  EXPECT_EQ(a.results[0], b.results[0]);
}

TEST(Mcmc, SingleMeanAndFixedGroupsAreClose) {
  const auto d = hier(6, 20, 100);
  const auto ungrouped = [&](const ModelGraph& m) {
    const WaicVariant v{"u", make_partition(m, "ungrouped"), PredictiveConfig::conditional()};
    return run_mcmc_waic(m, std::span(&v, 1), short_chain(1000)).results[0].full().waic;
  };
  const double h = ungrouped(make_model_h(d));
  const double f = ungrouped(make_model_f(d));
  const double s = ungrouped(make_model_s(d));
  EXPECT_LT(std::abs(s - f), 0.1 * std::abs(h - f)) << "H " << h << " F " << f << " S " << s;
  EXPECT_LT(h, f);
}

TEST(Mcmc, MarginalNeedsLatentNodes) {
  const auto d = hier(7, 4, 5);
  for (const char* name : {"S"}) {
    const auto m = make_model(name, d);
    const std::vector<WaicVariant> v{{"m", make_partition(m, "grouped"), PredictiveConfig::marginal(5)},
                                     {"c", make_partition(m, "grouped"), PredictiveConfig::conditional()}};
    try {
      run_mcmc_waic(m, v, short_chain(10));
      FAIL();
    } catch (const DomainError& e) {
      EXPECT_NE(std::string(e.what()).find("conditional"), std::string::npos);
    }
    RunOptions allow;
    allow.allow_latent_free_marginal = true;
    const auto r = run_mcmc_waic(m, v, short_chain(50), allow);
    EXPECT_EQ(r.results[0].full().waic, r.results[1].full().waic);
    EXPECT_EQ(r.results[0].full().lppd_elements, r.results[1].full().lppd_elements);
  }
  RandomStream rng(1);
  const Dataset sv = generate_sv(SvParams{}, 40, rng);
  const auto i = make_model("I", sv);
  const WaicVariant v{"m", make_partition(i, "blocks:5"), PredictiveConfig::marginal(5)};
  EXPECT_THROW(run_mcmc_waic(i, std::span(&v, 1), short_chain(10)), DomainError);
}

TEST(Mcmc, MarginalVariantsMustShareK) {
  const auto d = hier(8, 4, 5);
  const auto m = make_model_h(d);
  const std::vector<WaicVariant> v{{"a", make_partition(m, "grouped"), PredictiveConfig::marginal(5)},
                                   {"b", make_partition(m, "ungrouped"), PredictiveConfig::marginal(6)}};
  EXPECT_THROW(run_mcmc_waic(m, v, short_chain(10)), DomainError);
}

TEST(Mcmc, PartitionDescriptors) {
  RandomStream rng(2);
  const auto sv = generate_sv(SvParams{}, 200, rng);
  const auto p = make_model_p(sv);
  EXPECT_EQ(make_partition(p, "blocks:20").size(), 10u);
  EXPECT_EQ(make_partition(p, "ungrouped").size(), 200u);
  EXPECT_THROW(make_partition(p, "grouped"), DomainError);
  EXPECT_THROW(make_partition(p, "blocks:0"), DomainError);
  EXPECT_THROW(make_partition(p, "pairs"), DomainError);
  EXPECT_EQ(make_partition(make_model_h(hier(1, 3, 4)), "grouped").size(), 3u);
}

TEST(Mcmc, ScaleParametersStayPositive) {
  RandomStream rng(3);
  const auto sv = generate_sv(SvParams{}, 60, rng);
  const auto m = make_model_p(sv);
  MetropolisWithinGibbs sampler(m, short_chain(10));
  RandomStream chain(4);
  const NodeId sigma = m.id("sigma"), phi = m.id("phi");
  for (int i = 0; i < 500; ++i) {
    sampler.sweep(chain, i < 250);
    ASSERT_GT(sampler.state().get(sigma), 0.0);
    ASSERT_LT(std::abs(sampler.state().get(phi)), 1.0);
  }
}
