#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "owaic/accumulators.hpp"
#include "owaic/partition.hpp"
#include "owaic/predictive.hpp"

namespace owaic {

/// Finalized criterion at one checkpoint fraction.
struct FractionResult {
  double fraction = 1.0;
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
  std::vector<double> lppd_elements;
  std::vector<double> p_waic_elements;

  friend bool operator==(const FractionResult&, const FractionResult&) = default;
};

struct WaicResult {
  std::vector<FractionResult> fractions;  // one (conditional) or four (marginal)
  std::size_t elements = 0;
  std::uint64_t samples = 0;
  PredictiveMode mode = PredictiveMode::conditional;
  std::size_t inner_draws = 1;

  /// The fraction-1.0 result.
  const FractionResult& full() const { return fractions.back(); }

  friend bool operator==(const WaicResult&, const WaicResult&) = default;
};

/// Online WAIC accumulator: per element and checkpoint fraction, one
/// log-sum-exp state (lppd) and one Welford state (p_WAIC).
///
/// Holds no samples; its size depends only on M and the fraction count.
///
/// An h value of -inf (zero predictive density) is absorbed by the lppd
/// state and counted; the element's p_WAIC then finalizes to +inf.
class WaicState {
 public:
  WaicState(const PartitionSpec& partition, const PredictiveConfig& config);
  /// For streams without a partition at hand.
  WaicState(std::size_t elements, const PredictiveConfig& config, std::uint32_t partition_digest = 0);

  /// Consumes one h-vector: fraction_count() * elements() values,
  /// fraction-major. Throws IntegrityError on a length mismatch and
  /// NumericalError (naming the element) on NaN or +inf; the state is left
  /// unchanged on error.
  void update(std::span<const double> h);

  /// Throws InsufficientSamplesError when fewer than 2 samples were seen.
  WaicResult finalize() const;

  std::size_t elements() const noexcept { return elements_; }
  std::size_t fraction_count() const noexcept { return fractions_; }
  std::uint64_t sample_count() const noexcept { return samples_; }
  PredictiveMode mode() const noexcept { return mode_; }
  std::uint64_t inner_draws() const noexcept { return inner_draws_; }
  std::uint32_t partition_digest() const noexcept { return digest_; }

  /// Bytes held by the state, including vector capacity.
  std::size_t footprint_bytes() const noexcept;

  const std::vector<LogSumExpState>& lppd_states() const noexcept { return lppd_; }
  const std::vector<WelfordState>& p_waic_states() const noexcept { return p_waic_; }
  const std::vector<std::uint64_t>& neg_inf_counts() const noexcept { return neg_inf_; }

  friend bool operator==(const WaicState&, const WaicState&) = default;

 private:
  friend WaicState checkpoint_load(std::span<const std::byte> bytes);
  WaicState() = default;

  std::size_t elements_ = 0;
  std::size_t fractions_ = 1;
  std::uint64_t samples_ = 0;
  PredictiveMode mode_ = PredictiveMode::conditional;
  std::uint64_t inner_draws_ = 1;
  std::uint32_t digest_ = 0;
  std::vector<LogSumExpState> lppd_;    // fraction-major
  std::vector<WelfordState> p_waic_;    // fraction-major
  std::vector<std::uint64_t> neg_inf_;  // fraction-major
};

// Checkpoint layout, all integers and doubles little-endian:
//   "OWAICKPT" u32 version
//   u8 mode, u64 K, u32 partition digest, u64 M, u64 F, u64 S
//   F*M x { u64 n, f64 max, f64 sum, u64 n, f64 mean, f64 m2, u64 neg_inf }
//   u32 CRC-32 of all preceding bytes
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::byte> checkpoint_save(const WaicState& state);
/// Throws CorruptCheckpointError on a bad magic, version, length or CRC.
WaicState checkpoint_load(std::span<const std::byte> bytes);

void save_checkpoint_file(const std::filesystem::path& path, const WaicState& state);
WaicState load_checkpoint_file(const std::filesystem::path& path);

}  // namespace owaic
