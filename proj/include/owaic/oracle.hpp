#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "owaic/waic.hpp"

namespace owaic {

/// Dense M x S matrix of log predictive densities, row per element.
class HMatrix {
 public:
  HMatrix(std::size_t elements, std::size_t samples)
      : elements_(elements), samples_(samples), values_(elements * samples, 0.0) {}

  std::size_t elements() const noexcept { return elements_; }
  std::size_t samples() const noexcept { return samples_; }

  double& at(std::size_t m, std::size_t s) { return values_[m * samples_ + s]; }
  double at(std::size_t m, std::size_t s) const { return values_[m * samples_ + s]; }
  std::span<const double> row(std::size_t m) const {
    return std::span<const double>(values_).subspan(m * samples_, samples_);
  }

  /// Column s as an h-vector.
  std::vector<double> column(std::size_t s) const;

 private:
  std::size_t elements_;
  std::size_t samples_;
  std::vector<double> values_;
};

/// max + log(sum exp(h - max)) - log(S), over a stored row.
double batch_log_mean_exp(std::span<const double> row);

/// Two-pass sample variance over a stored row.
double two_pass_variance(std::span<const double> row);

/// WAIC from a stored matrix by batch formulas. Throws
/// InsufficientSamplesError when S < 2.
WaicResult offline_waic(const HMatrix& h);

/// Loads an entire stream into memory (one matrix per checkpoint fraction)
/// and evaluates it with offline_waic.
WaicResult offline_waic_stream(std::istream& in);

}  // namespace owaic
