#include "owaic/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "owaic/diagnostics.hpp"
#include "owaic/errors.hpp"
#include "owaic/models.hpp"
#include "text_util.hpp"

namespace owaic {

namespace {

constexpr double kTargetAcceptance = 0.44;

}  // namespace

MetropolisWithinGibbs::MetropolisWithinGibbs(const ModelGraph& model, const McmcConfig& config)
    : model_(&model), config_(config), state_(model.initial_assignment()) {
  if (config_.adapt_batch == 0) throw DomainError("adaptation batch size must be positive");
  nodes_ = model.parameter_nodes();
  nodes_.insert(nodes_.end(), model.latent_nodes().begin(), model.latent_nodes().end());
  for (NodeId id : nodes_) {
    const Node& n = model.node(id);
    const bool log_scale = n.prior && n.prior->kind() == Prior::Kind::half_normal;
    double scale = config_.initial_scale;
    if (auto it = config_.scale_overrides.find(n.name); it != config_.scale_overrides.end()) {
      scale = it->second;
    }
    if (!(scale > 0.0)) throw DomainError("proposal scale for '" + n.name + "' must be positive");
    sites_.push_back({id, log_scale, scale});
  }
  for (const ShiftBlock& b : model.shift_blocks()) add_block(false, b.anchor, b.anchor, b.members);
  for (const ScaleBlock& b : model.scale_blocks()) add_block(true, b.scale, b.center, b.members);
}

void MetropolisWithinGibbs::add_block(bool rescale, NodeId anchor, NodeId center,
                                      const std::vector<NodeId>& members) {
  const std::string key = (rescale ? "rescale:" : "shift:") + model_->node(anchor).name;
  double scale = config_.initial_scale;
  if (auto it = config_.scale_overrides.find(key); it != config_.scale_overrides.end()) {
    scale = it->second;
  }
  if (!(scale > 0.0)) throw DomainError("proposal scale for '" + key + "' must be positive");
  std::vector<NodeId> affected{anchor};
  affected.insert(affected.end(), members.begin(), members.end());
  const std::size_t own = affected.size();
  for (std::size_t i = 0; i < own; ++i) {
    const auto& children = model_->node(affected[i]).children;
    affected.insert(affected.end(), children.begin(), children.end());
  }
  std::sort(affected.begin(), affected.end());
  affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
  blocks_.push_back({rescale, anchor, center, members, std::move(affected), scale});
}

double MetropolisWithinGibbs::local_log_density(NodeId id) const {
  double lp = model_->node_log_density(id, state_);
  if (!(lp > -std::numeric_limits<double>::infinity())) return lp;
  for (NodeId child : model_->node(id).children) lp += model_->node_log_density(child, state_);
  return lp;
}

double MetropolisWithinGibbs::block_log_density(const Block& b) const {
  double lp = 0.0;
  for (NodeId id : b.affected) lp += model_->node_log_density(id, state_);
  return lp;
}

bool MetropolisWithinGibbs::shift(Block& b, RandomStream& rng) {
  const double z = b.scale * rng.standard_normal();
  const double lp_current = block_log_density(b);
  saved_.clear();
  saved_.push_back(state_.get(b.anchor));
  for (NodeId m : b.members) saved_.push_back(state_.get(m));
  double log_jacobian = 0.0;
  if (b.rescale) {
    // log s' = log s + z; deviations from the centre scale by s'/s.
    const double c = std::exp(z);
    const double center = state_.get(b.center);
    state_.set(b.anchor, saved_[0] * c);
    for (std::size_t i = 0; i < b.members.size(); ++i) {
      state_.set(b.members[i], center + c * (saved_[i + 1] - center));
    }
    log_jacobian = static_cast<double>(b.members.size() + 1) * z;
  } else {
    state_.set(b.anchor, saved_[0] + z);
    for (std::size_t i = 0; i < b.members.size(); ++i) state_.set(b.members[i], saved_[i + 1] + z);
  }
  const double log_ratio = block_log_density(b) - lp_current + log_jacobian;
  if (!std::isnan(log_ratio) && std::log(rng.uniform()) < log_ratio) return true;
  state_.set(b.anchor, saved_[0]);
  for (std::size_t i = 0; i < b.members.size(); ++i) state_.set(b.members[i], saved_[i + 1]);
  return false;
}

bool MetropolisWithinGibbs::step(Site& site, RandomStream& rng) {
  const double current = state_.get(site.id);
  const double z = rng.standard_normal();
  double proposal;
  double log_jacobian = 0.0;
  if (site.log_scale) {
    proposal = current * std::exp(site.scale * z);
    log_jacobian = std::log(proposal) - std::log(current);
  } else {
    proposal = current + site.scale * z;
  }
  const double lp_current = local_log_density(site.id);
  state_.set(site.id, proposal);
  const double lp_proposal = local_log_density(site.id);
  const double log_ratio = lp_proposal - lp_current + log_jacobian;
  if (!std::isnan(log_ratio) && std::log(rng.uniform()) < log_ratio) return true;
  state_.set(site.id, current);
  return false;
}

void MetropolisWithinGibbs::sweep(RandomStream& rng, bool adapting) {
  for (Site& site : sites_) {
    const bool accepted = step(site, rng);
    if (adapting) {
      site.batch_accepts += accepted ? 1 : 0;
    } else {
      site.accepts += accepted ? 1 : 0;
      ++site.tries;
    }
  }
  for (Block& b : blocks_) {
    const bool accepted = shift(b, rng);
    if (adapting) b.batch_accepts += accepted ? 1 : 0;
  }
  if (!adapting) return;
  if (++sweeps_in_batch_ < config_.adapt_batch) return;
  ++batches_;
  const double gain = std::min(1.0, 3.0 / std::sqrt(static_cast<double>(batches_)));
  for (Site& site : sites_) {
    const double rate = static_cast<double>(site.batch_accepts) / static_cast<double>(sweeps_in_batch_);
    site.scale *= std::exp(gain * (rate - kTargetAcceptance));
    site.batch_accepts = 0;
  }
  for (Block& b : blocks_) {
    const double rate = static_cast<double>(b.batch_accepts) / static_cast<double>(sweeps_in_batch_);
    b.scale *= std::exp(gain * (rate - kTargetAcceptance));
    b.batch_accepts = 0;
  }
  sweeps_in_batch_ = 0;
}

double MetropolisWithinGibbs::scale(NodeId id) const {
  for (const Site& site : sites_) {
    if (site.id == id) return site.scale;
  }
  throw DomainError("node is not sampled");
}

double MetropolisWithinGibbs::acceptance_rate(NodeId id) const {
  for (const Site& site : sites_) {
    if (site.id == id) {
      return site.tries == 0 ? 0.0
                             : static_cast<double>(site.accepts) / static_cast<double>(site.tries);
    }
  }
  throw DomainError("node is not sampled");
}

McmcReport run_mcmc_waic(const ModelGraph& model, std::span<const WaicVariant> variants,
                         const McmcConfig& config, const RunOptions& options) {
  std::optional<std::size_t> inner_draws;
  std::vector<PredictiveEvaluator::Target> targets;
  std::vector<WaicState> states;
  for (const WaicVariant& v : variants) {
    if (v.predictive.mode == PredictiveMode::marginal) {
      if (model.latent_nodes().empty() && !options.allow_latent_free_marginal) {
        throw DomainError("model '" + model.name() +
                          "' declares no latent nodes, so its marginal and conditional WAIC are "
                          "identical; use the conditional mode");
      }
      if (inner_draws && *inner_draws != v.predictive.inner_draws) {
        throw DomainError("all marginal variants of one run must share K");
      }
      inner_draws = v.predictive.inner_draws;
    }
    targets.push_back({v.partition, v.predictive.mode});
    states.emplace_back(v.partition, v.predictive);
  }
  PredictiveEvaluator evaluator(model, std::move(targets), inner_draws.value_or(1));

  MetropolisWithinGibbs sampler(model, config);
  RandomStream chain_rng(derive_seed(config.seed, {0}));
  RandomStream inner_rng(derive_seed(config.seed, {1}));

  for (std::size_t it = 0; it < config.burn_in; ++it) sampler.sweep(chain_rng, config.adapt);

  const auto& params = model.parameter_nodes();
  std::vector<WelfordState> moments(params.size());
  std::vector<OnlineAutocorrelation> autocorr(params.size(), OnlineAutocorrelation(config.ess_max_lag));
  std::vector<std::vector<double>> h;

  for (std::size_t it = 0; it < config.keep; ++it) {
    sampler.sweep(chain_rng, false);
    const ParamAssignment& sample = sampler.state();
    evaluator.evaluate(sample, inner_rng, h);
    for (std::size_t v = 0; v < states.size(); ++v) states[v].update(h[v]);
    for (std::size_t p = 0; p < params.size(); ++p) {
      moments[p].update(sample.get(params[p]));
      autocorr[p].update(sample.get(params[p]));
    }
    if (options.observer) options.observer(it, sample, h);
  }

  McmcReport report;
  report.results.reserve(states.size());
  for (const WaicState& s : states) report.results.push_back(s.finalize());
  for (std::size_t p = 0; p < params.size(); ++p) {
    ParameterSummary summary;
    summary.name = model.node(params[p]).name;
    summary.mean = moments[p].mean();
    summary.sd = moments[p].count() >= 2 ? std::sqrt(moments[p].variance()) : 0.0;
    summary.ess = autocorr[p].effective_sample_size();
    summary.acceptance = sampler.acceptance_rate(params[p]);
    if (summary.ess < config.ess_threshold) ++report.low_ess_count;
    report.parameters.push_back(std::move(summary));
  }
  report.neg_inf_count = evaluator.neg_inf_count();
  report.latent_simulations = evaluator.latent_simulations();
  return report;
}

WaicResult run_mcmc_waic(std::string_view model_name, const Dataset& data,
                         const PartitionSpec& partition, const PredictiveConfig& predictive,
                         const McmcConfig& config) {
  const ModelGraph model = make_model(model_name, data);
  const WaicVariant variant{std::string(to_string(predictive.mode)), partition, predictive};
  return run_mcmc_waic(model, std::span(&variant, 1), config).results.front();
}

PartitionSpec make_partition(const ModelGraph& model, std::string_view descriptor) {
  const auto names = model.data_node_names();
  if (descriptor == "ungrouped") return build_partition(names);
  if (descriptor == "grouped") {
    if (!model.natural_grouping()) {
      throw DomainError("model '" + model.name() + "' has no natural grouping; use blocks:<n>");
    }
    return build_partition(names, *model.natural_grouping());
  }
  if (descriptor.starts_with("blocks:")) {
    const auto n = detail::parse_integer(descriptor.substr(7));
    if (!n || *n < 1) throw DomainError("bad block size in '" + std::string(descriptor) + "'");
    return consecutive_blocks(names, static_cast<std::size_t>(*n));
  }
  throw DomainError("unknown partition descriptor '" + std::string(descriptor) + "'");
}

}  // namespace owaic
