#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace owaic {

/// Welford's single-pass sample variance.
class WelfordState {
 public:
  WelfordState() = default;

  /// Rebuilds a state from its stored fields (checkpoint restore).
  static WelfordState restore(std::uint64_t count, double mean, double m2);

  /// Throws DomainError if `x` is not finite.
  void update(double x);

  /// Sample variance m2 / (count - 1). Throws InsufficientSamplesError when
  /// count < 2.
  double variance() const;

  std::uint64_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double m2() const noexcept { return m2_; }

  friend bool operator==(const WelfordState&, const WelfordState&) = default;

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Streaming log((1/S) * sum_s exp(h_s)).
///
/// Keeps the running maximum and the running sum of exp(h - max). When a new
/// maximum arrives the sum is rescaled by exp(old_max - new_max), so every
/// exponent evaluated is <= 0. Ties with the maximum take the plain
/// accumulation branch.
///
/// -inf inputs contribute exp(-inf) = 0. If every input is -inf the state
/// stays at max = -inf, sum = 0 and finalize() returns -inf.
class LogSumExpState {
 public:
  LogSumExpState() = default;

  static LogSumExpState restore(std::uint64_t count, double current_max, double current_sum);

  /// Throws DomainError on NaN or +inf.
  void update(double h) {
    if (count_ > 0 && h <= current_max_ && current_max_ > -kInf) {
      current_sum_ += std::exp(h - current_max_);
      ++count_;
    } else {
      update_slow(h);
    }
  }

  /// current_max + log(current_sum) - log(sample_count).
  ///
  /// Throws DomainError if sample_count == 0, InsufficientSamplesError if no
  /// value was seen, and IntegrityError if sample_count differs from the
  /// number of updates.
  double finalize(std::uint64_t sample_count) const;

  /// Finalizes over however many values were seen.
  double finalize() const { return finalize(count_); }

  bool initialized() const noexcept { return count_ > 0; }
  std::uint64_t count() const noexcept { return count_; }
  double current_max() const noexcept { return current_max_; }
  double current_sum() const noexcept { return current_sum_; }

  friend bool operator==(const LogSumExpState&, const LogSumExpState&) = default;

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  void update_slow(double h);

  std::uint64_t count_ = 0;
  double current_max_ = 0.0;
  double current_sum_ = 0.0;
};

}  // namespace owaic
