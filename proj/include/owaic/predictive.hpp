#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "owaic/accumulators.hpp"
#include "owaic/model.hpp"
#include "owaic/partition.hpp"
#include "owaic/random.hpp"

namespace owaic {

enum class PredictiveMode { conditional, marginal };

const char* to_string(PredictiveMode mode) noexcept;
/// Throws DomainError for anything but "conditional" / "marginal".
PredictiveMode parse_mode(std::string_view text);

/// Inner-draw counts at which marginal runs report diagnostics.
inline constexpr std::array<double, 4> kCheckpointFractions{0.25, 0.5, 0.75, 1.0};

struct PredictiveConfig {
  PredictiveMode mode = PredictiveMode::conditional;
  std::size_t inner_draws = 1000;  // K; ignored (treated as 1) for conditional

  static PredictiveConfig conditional() { return {PredictiveMode::conditional, 1}; }
  static PredictiveConfig marginal(std::size_t k) { return {PredictiveMode::marginal, k}; }

  std::size_t effective_draws() const noexcept {
    return mode == PredictiveMode::conditional ? 1 : inner_draws;
  }
  std::size_t fraction_count() const noexcept {
    return mode == PredictiveMode::conditional ? 1 : kCheckpointFractions.size();
  }
  std::vector<double> fractions() const;

  friend bool operator==(const PredictiveConfig&, const PredictiveConfig&) = default;
};

/// Inner-draw index k (1-based) at which each checkpoint fraction is
/// snapshotted: max(1, floor(q * K)).
std::array<std::size_t, 4> checkpoint_indices(std::size_t inner_draws);

/// Computes h-vectors for one model over several (partition, mode) targets.
///
/// Conditional targets use the sample as given. Marginal targets share one
/// stream of K latent draws per call: each draw updates every element of
/// every marginal target, so a call costs exactly K latent simulations no
/// matter how many elements or targets there are.
///
/// Output for target t has fraction_count * M_t values, fraction-major.
class PredictiveEvaluator {
 public:
  struct Target {
    PartitionSpec partition;
    PredictiveMode mode;
  };

  /// Throws IntegrityError if a partition was built against a different
  /// data-node list, DomainError if a marginal target exists and K < 1.
  PredictiveEvaluator(const ModelGraph& model, std::vector<Target> targets, std::size_t inner_draws);

  const std::vector<Target>& targets() const noexcept { return targets_; }
  std::size_t inner_draws() const noexcept { return inner_draws_; }
  bool has_marginal() const noexcept { return !marginal_targets_.empty(); }

  /// Fills out[t] for every target. Marginal targets draw from `rng`;
  /// conditional targets need the full sample (parameters and latents).
  void evaluate(const ParamAssignment& sample, RandomStream& rng,
                std::vector<std::vector<double>>& out);

  /// Marginal h-values that came out as -inf (every inner term was -inf).
  std::uint64_t neg_inf_count() const noexcept { return neg_inf_count_; }
  std::uint64_t latent_simulations() const noexcept { return latent_simulations_; }

 private:
  void evaluate_conditional(const ParamAssignment& sample, std::vector<std::vector<double>>& out);
  void evaluate_marginal(const ParamAssignment& sample, RandomStream& rng,
                         std::vector<std::vector<double>>& out);

  const ModelGraph* model_;
  std::vector<Target> targets_;
  std::vector<std::size_t> conditional_targets_;
  std::vector<std::size_t> marginal_targets_;
  std::size_t inner_draws_;
  std::array<std::size_t, 4> snapshot_at_{};
  std::vector<double> densities_;
  std::vector<std::vector<LogSumExpState>> inner_;  // per marginal target, per element
  ParamAssignment work_;
  std::uint64_t neg_inf_count_ = 0;
  std::uint64_t latent_simulations_ = 0;
};

/// h_m = log p(y_m | theta) for every element m.
std::vector<double> conditional_h(const ModelGraph& model, const PartitionSpec& partition,
                                  const ParamAssignment& sample);

/// Monte Carlo marginal log predictive density for every element, as four
/// fraction-major blocks of M values (0.25K, 0.5K, 0.75K, K draws).
std::vector<double> marginal_h(const ModelGraph& model, const PartitionSpec& partition,
                               const ParamAssignment& sample, const PredictiveConfig& config,
                               RandomStream& rng);

}  // namespace owaic
