#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace owaic {

/// Autocorrelations up to a fixed maximum lag, accumulated one value at a
/// time in O(max_lag) memory.
class OnlineAutocorrelation {
 public:
  explicit OnlineAutocorrelation(std::size_t max_lag = 250);

  void update(double x);

  std::uint64_t count() const noexcept { return n_; }
  std::size_t max_lag() const noexcept { return max_lag_; }

  /// Lag-l autocorrelation (biased autocovariance normalised by lag 0).
  /// Returns 0 for lags that have no pairs yet or a constant series.
  double autocorrelation(std::size_t lag) const;

  /// Effective sample size from Geyer's initial positive sequence over the
  /// available lags, capped at count().
  double effective_sample_size() const;

 private:
  std::size_t max_lag_;
  std::uint64_t n_ = 0;
  double shift_ = 0.0;               // first value, subtracted for stability
  double sum_ = 0.0;
  std::vector<double> cross_;        // sum x_t x_{t-l}, index l
  std::vector<double> first_;        // first max_lag+1 shifted values
  std::vector<double> recent_;       // ring buffer of the last max_lag+1 values
};

}  // namespace owaic
