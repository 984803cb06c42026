#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "owaic/datasets.hpp"
#include "owaic/model.hpp"
#include "owaic/partition.hpp"
#include "owaic/predictive.hpp"
#include "owaic/random.hpp"
#include "owaic/waic.hpp"

namespace owaic {

struct McmcConfig {
  std::size_t burn_in = 500;
  std::size_t keep = 5000;
  std::uint64_t seed = 1;
  /// Starting random-walk scale (on the sampling scale: log for
  /// half-normal parameters, raw otherwise).
  double initial_scale = 0.1;
  std::map<std::string, double> scale_overrides;
  /// Tune scales towards 44% acceptance during burn-in; frozen afterwards.
  bool adapt = true;
  std::size_t adapt_batch = 25;
  /// Parameters whose effective sample size falls below this are flagged.
  double ess_threshold = 100.0;
  std::size_t ess_max_lag = 250;
};

/// Random-walk Metropolis, one scalar node at a time, over every parameter
/// and latent node of a model. Half-normal parameters move on the log scale.
/// Each sweep ends with one joint proposal per block of the model: a common
/// translation of a shift block (scale key "shift:<anchor>") and a common
/// rescaling of a scale block's deviations together with its scale
/// parameter (scale key "rescale:<scale>").
class MetropolisWithinGibbs {
 public:
  MetropolisWithinGibbs(const ModelGraph& model, const McmcConfig& config);

  /// One pass over all sampled nodes. With `adapting`, scales are tuned at
  /// batch boundaries.
  void sweep(RandomStream& rng, bool adapting);

  const ParamAssignment& state() const noexcept { return state_; }
  void set_state(ParamAssignment state) { state_ = std::move(state); }

  const std::vector<NodeId>& sampled_nodes() const noexcept { return nodes_; }
  double scale(NodeId id) const;
  /// Acceptance rate over non-adapting sweeps.
  double acceptance_rate(NodeId id) const;

 private:
  struct Site {
    NodeId id;
    bool log_scale;
    double scale;
    std::uint64_t batch_accepts = 0;
    std::uint64_t accepts = 0;
    std::uint64_t tries = 0;
  };

  struct Block {
    bool rescale;
    NodeId anchor;  // location (shift) or scale parameter (rescale)
    NodeId center;
    std::vector<NodeId> members;
    std::vector<NodeId> affected;  // anchor, members and their children
    double scale;
    std::uint64_t batch_accepts = 0;
  };

  void add_block(bool rescale, NodeId anchor, NodeId center, const std::vector<NodeId>& members);

  double local_log_density(NodeId id) const;
  double block_log_density(const Block& block) const;
  bool step(Site& site, RandomStream& rng);
  bool shift(Block& block, RandomStream& rng);

  const ModelGraph* model_;
  McmcConfig config_;
  ParamAssignment state_;
  std::vector<NodeId> nodes_;
  std::vector<Site> sites_;
  std::vector<Block> blocks_;
  std::vector<double> saved_;
  std::size_t sweeps_in_batch_ = 0;
  std::size_t batches_ = 0;
};

/// One WAIC flavour computed along a chain.
struct WaicVariant {
  std::string label;
  PartitionSpec partition;
  PredictiveConfig predictive;
};

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  double acceptance = 0.0;
};

struct McmcReport {
  std::vector<WaicResult> results;  // one per variant, same order
  std::vector<ParameterSummary> parameters;
  std::uint64_t neg_inf_count = 0;
  std::size_t low_ess_count = 0;
  std::uint64_t latent_simulations = 0;
};

/// Called after each kept iteration with the sample and its h-vectors (one
/// per variant).
using SampleObserver = std::function<void(std::size_t iteration, const ParamAssignment& sample,
                                          const std::vector<std::vector<double>>& h)>;

struct RunOptions {
  /// Marginal variants on a model without latent nodes are rejected unless
  /// set; the marginal density then equals the conditional one.
  bool allow_latent_free_marginal = false;
  SampleObserver observer;
};

/// Burn-in without WAIC updates, then for each kept iteration: one sweep,
/// h-vectors for every variant, one WaicState update per variant. Finalizes
/// at the end. All marginal variants must share K.
///
/// The chain and the inner Monte Carlo draws use separate random streams
/// derived from config.seed, so adding or removing variants leaves the chain
/// unchanged.
McmcReport run_mcmc_waic(const ModelGraph& model, std::span<const WaicVariant> variants,
                         const McmcConfig& config, const RunOptions& options = {});

/// Single-variant convenience form by catalog name.
WaicResult run_mcmc_waic(std::string_view model_name, const Dataset& data,
                         const PartitionSpec& partition, const PredictiveConfig& predictive,
                         const McmcConfig& config);

/// "ungrouped", "grouped" (the model's natural grouping) or "blocks:<n>".
PartitionSpec make_partition(const ModelGraph& model, std::string_view descriptor);

}  // namespace owaic
