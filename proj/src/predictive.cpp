#include "owaic/predictive.hpp"

#include <cmath>
#include <string>

#include "owaic/errors.hpp"

namespace owaic {

const char* to_string(PredictiveMode mode) noexcept {
  return mode == PredictiveMode::conditional ? "conditional" : "marginal";
}

PredictiveMode parse_mode(std::string_view text) {
  if (text == "conditional") return PredictiveMode::conditional;
  if (text == "marginal") return PredictiveMode::marginal;
  throw DomainError("unknown predictive mode '" + std::string(text) + "'");
}

std::vector<double> PredictiveConfig::fractions() const {
  if (mode == PredictiveMode::conditional) return {1.0};
  return {kCheckpointFractions.begin(), kCheckpointFractions.end()};
}

std::array<std::size_t, 4> checkpoint_indices(std::size_t inner_draws) {
  std::array<std::size_t, 4> at{};
  for (std::size_t f = 0; f < kCheckpointFractions.size(); ++f) {
    const auto k = static_cast<std::size_t>(
        std::floor(kCheckpointFractions[f] * static_cast<double>(inner_draws)));
    at[f] = std::max<std::size_t>(1, k);
  }
  return at;
}

PredictiveEvaluator::PredictiveEvaluator(const ModelGraph& model, std::vector<Target> targets,
                                         std::size_t inner_draws)
    : model_(&model), targets_(std::move(targets)), inner_draws_(inner_draws) {
  const auto names = model.data_node_names();
  for (std::size_t t = 0; t < targets_.size(); ++t) {
    if (targets_[t].partition.node_names() != names) {
      throw IntegrityError("partition " + std::to_string(t) +
                           " was not built against the data nodes of model '" + model.name() + "'");
    }
    if (targets_[t].mode == PredictiveMode::conditional) {
      conditional_targets_.push_back(t);
    } else {
      marginal_targets_.push_back(t);
      inner_.emplace_back(targets_[t].partition.size());
    }
  }
  if (!marginal_targets_.empty()) {
    if (inner_draws_ < 1) throw DomainError("marginal predictive density needs K >= 1");
    snapshot_at_ = checkpoint_indices(inner_draws_);
  }
  densities_.resize(names.size());
}

void PredictiveEvaluator::evaluate(const ParamAssignment& sample, RandomStream& rng,
                                   std::vector<std::vector<double>>& out) {
  out.resize(targets_.size());
  if (!conditional_targets_.empty()) evaluate_conditional(sample, out);
  if (!marginal_targets_.empty()) evaluate_marginal(sample, rng, out);
}

namespace {

inline double element_sum(const std::vector<std::size_t>& group, const std::vector<double>& dens) {
  double s = 0.0;
  for (std::size_t pos : group) s += dens[pos];
  return s;
}

}  // namespace

void PredictiveEvaluator::evaluate_conditional(const ParamAssignment& sample,
                                               std::vector<std::vector<double>>& out) {
  model_->require_data_parents(sample);
  model_->data_log_densities(sample, densities_);
  for (std::size_t t : conditional_targets_) {
    const auto& groups = targets_[t].partition.groups();
    auto& h = out[t];
    h.resize(groups.size());
    for (std::size_t m = 0; m < groups.size(); ++m) h[m] = element_sum(groups[m], densities_);
  }
}

void PredictiveEvaluator::evaluate_marginal(const ParamAssignment& sample, RandomStream& rng,
                                            std::vector<std::vector<double>>& out) {
  const bool no_latent = model_->latent_nodes().empty();
  work_ = sample;
  for (std::size_t i = 0; i < marginal_targets_.size(); ++i) {
    for (auto& s : inner_[i]) s = LogSumExpState{};
    auto& h = out[marginal_targets_[i]];
    h.assign(kCheckpointFractions.size() * targets_[marginal_targets_[i]].partition.size(), 0.0);
  }

  if (no_latent) {
    // Every draw yields the same densities: K copies of one value.
    model_->require_data_parents(work_);
    model_->data_log_densities(work_, densities_);
    latent_simulations_ += inner_draws_;
    for (std::size_t i = 0; i < marginal_targets_.size(); ++i) {
      const auto& groups = targets_[marginal_targets_[i]].partition.groups();
      const std::size_t M = groups.size();
      auto& h = out[marginal_targets_[i]];
      for (std::size_t m = 0; m < M; ++m) {
        const double v = element_sum(groups[m], densities_);
        for (std::size_t f = 0; f < snapshot_at_.size(); ++f) {
          const std::size_t k = snapshot_at_[f];
          const auto state = LogSumExpState::restore(k, v, std::isinf(v) ? 0.0 : static_cast<double>(k));
          h[f * M + m] = state.finalize(k);
          if (std::isinf(h[f * M + m])) ++neg_inf_count_;
        }
      }
    }
    return;
  }

  for (std::size_t k = 1; k <= inner_draws_; ++k) {
    model_->simulate_latent(work_, rng);
    ++latent_simulations_;
    if (k == 1) model_->require_data_parents(work_);
    model_->data_log_densities(work_, densities_);
    for (std::size_t i = 0; i < marginal_targets_.size(); ++i) {
      const auto& groups = targets_[marginal_targets_[i]].partition.groups();
      auto& states = inner_[i];
      for (std::size_t m = 0; m < groups.size(); ++m) states[m].update(element_sum(groups[m], densities_));
    }
    for (std::size_t f = 0; f < snapshot_at_.size(); ++f) {
      if (snapshot_at_[f] != k) continue;
      for (std::size_t i = 0; i < marginal_targets_.size(); ++i) {
        const auto& states = inner_[i];
        const std::size_t M = states.size();
        auto& h = out[marginal_targets_[i]];
        for (std::size_t m = 0; m < M; ++m) {
          const double v = states[m].finalize(k);
          if (std::isinf(v)) ++neg_inf_count_;
          h[f * M + m] = v;
        }
      }
    }
  }
}

std::vector<double> conditional_h(const ModelGraph& model, const PartitionSpec& partition,
                                  const ParamAssignment& sample) {
  PredictiveEvaluator eval(model, {{partition, PredictiveMode::conditional}}, 1);
  std::vector<std::vector<double>> out;
  RandomStream unused(0);
  eval.evaluate(sample, unused, out);
  return std::move(out[0]);
}

std::vector<double> marginal_h(const ModelGraph& model, const PartitionSpec& partition,
                               const ParamAssignment& sample, const PredictiveConfig& config,
                               RandomStream& rng) {
  if (config.mode != PredictiveMode::marginal) {
    throw DomainError("marginal_h called with a conditional configuration");
  }
  if (config.inner_draws < 1) throw DomainError("marginal predictive density needs K >= 1");
  PredictiveEvaluator eval(model, {{partition, PredictiveMode::marginal}}, config.inner_draws);
  std::vector<std::vector<double>> out;
  eval.evaluate(sample, rng, out);
  return std::move(out[0]);
}

}  // namespace owaic
