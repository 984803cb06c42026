#include "owaic/waic.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "owaic/errors.hpp"

namespace owaic {

WaicState::WaicState(const PartitionSpec& partition, const PredictiveConfig& config)
    : WaicState(partition.size(), config, partition.digest()) {}

WaicState::WaicState(std::size_t elements, const PredictiveConfig& config,
                     std::uint32_t partition_digest)
    : elements_(elements),
      fractions_(config.fraction_count()),
      mode_(config.mode),
      inner_draws_(config.effective_draws()),
      digest_(partition_digest),
      lppd_(fractions_ * elements),
      p_waic_(fractions_ * elements),
      neg_inf_(fractions_ * elements, 0) {
  if (elements == 0) throw DomainError("WAIC state needs at least one partition element");
}

void WaicState::update(std::span<const double> h) {
  if (h.size() != lppd_.size()) {
    throw IntegrityError("h-vector has " + std::to_string(h.size()) + " values, expected " +
                         std::to_string(lppd_.size()) + " (" + std::to_string(fractions_) +
                         " x " + std::to_string(elements_) + ")");
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (std::isnan(h[i]) || h[i] == std::numeric_limits<double>::infinity()) {
      throw NumericalError("h value for element " + std::to_string(i % elements_) +
                           " (fraction " + std::to_string(i / elements_) + ") is not finite");
    }
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    lppd_[i].update(h[i]);
    if (std::isinf(h[i])) {
      ++neg_inf_[i];
    } else {
      p_waic_[i].update(h[i]);
    }
  }
  ++samples_;
}

WaicResult WaicState::finalize() const {
  if (samples_ < 2) {
    throw InsufficientSamplesError("WAIC needs at least 2 posterior samples, have " +
                                   std::to_string(samples_));
  }
  WaicResult result;
  result.elements = elements_;
  result.samples = samples_;
  result.mode = mode_;
  result.inner_draws = inner_draws_;
  const auto fractions = PredictiveConfig{mode_, inner_draws_}.fractions();
  for (std::size_t f = 0; f < fractions_; ++f) {
    FractionResult r;
    r.fraction = fractions[f];
    r.lppd_elements.resize(elements_);
    r.p_waic_elements.resize(elements_);
    for (std::size_t m = 0; m < elements_; ++m) {
      const std::size_t i = f * elements_ + m;
      if (p_waic_[i].count() + neg_inf_[i] != samples_) {
        throw IntegrityError("element " + std::to_string(m) + " has seen " +
                             std::to_string(p_waic_[i].count() + neg_inf_[i]) + " of " +
                             std::to_string(samples_) + " samples");
      }
      r.lppd_elements[m] = lppd_[i].finalize(samples_);
      r.p_waic_elements[m] =
          neg_inf_[i] > 0 ? std::numeric_limits<double>::infinity() : p_waic_[i].variance();
    }
    for (std::size_t m = 0; m < elements_; ++m) {
      r.lppd += r.lppd_elements[m];
      r.p_waic += r.p_waic_elements[m];
    }
    r.waic = -2.0 * (r.lppd - r.p_waic) + 0.0;  // no -0
    result.fractions.push_back(std::move(r));
  }
  return result;
}

std::size_t WaicState::footprint_bytes() const noexcept {
  return sizeof(WaicState) + lppd_.capacity() * sizeof(LogSumExpState) +
         p_waic_.capacity() * sizeof(WelfordState) + neg_inf_.capacity() * sizeof(std::uint64_t);
}

}  // namespace owaic
