#include "owaic/accumulators.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

#include "owaic/errors.hpp"
#include "owaic/tolerances.hpp"

namespace owaic {

namespace {

std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

WelfordState WelfordState::restore(std::uint64_t count, double mean, double m2) {
  WelfordState s;
  s.count_ = count;
  s.mean_ = mean;
  s.m2_ = m2;
  return s;
}

void WelfordState::update(double x) {
  if (!std::isfinite(x)) {
    throw DomainError("welford update: non-finite value " + describe(x));
  }
  ++count_;
  const double delta1 = x - mean_;
  mean_ += delta1 / static_cast<double>(count_);
  const double delta2 = x - mean_;
  m2_ += delta1 * delta2;
  assert(m2_ >= -Tolerances::welford_m2_negative * std::max(1.0, std::abs(m2_)));
}

double WelfordState::variance() const {
  if (count_ < 2) {
    throw InsufficientSamplesError("sample variance needs at least 2 values, have " +
                                   std::to_string(count_));
  }
  return m2_ / static_cast<double>(count_ - 1);
}

LogSumExpState LogSumExpState::restore(std::uint64_t count, double current_max,
                                       double current_sum) {
  LogSumExpState s;
  s.count_ = count;
  s.current_max_ = current_max;
  s.current_sum_ = current_sum;
  return s;
}

void LogSumExpState::update_slow(double h) {
  if (std::isnan(h) || h == std::numeric_limits<double>::infinity()) {
    throw DomainError("log-sum-exp update: illegal value " + describe(h));
  }
  const bool neg_inf = std::isinf(h);
  if (count_ == 0) {
    current_max_ = h;
    current_sum_ = neg_inf ? 0.0 : 1.0;
  } else if (neg_inf) {
    // exp(-inf - max) == 0
  } else if (std::isinf(current_max_)) {
    // everything so far was -inf; the sum is still 0
    current_max_ = h;
    current_sum_ = 1.0;
  } else if (h > current_max_) {
    const double new_v = h - current_max_;
    current_max_ = h;
    current_sum_ = current_sum_ * std::exp(-new_v) + 1.0;
  } else {
    current_sum_ += std::exp(h - current_max_);
  }
  ++count_;
}

double LogSumExpState::finalize(std::uint64_t sample_count) const {
  if (sample_count == 0) {
    throw DomainError("log-sum-exp finalize: sample count must be positive");
  }
  if (count_ == 0) {
    throw InsufficientSamplesError("log-sum-exp finalize: no values were seen");
  }
  if (sample_count != count_) {
    throw IntegrityError("log-sum-exp finalize: expected " + std::to_string(sample_count) +
                         " values, state has seen " + std::to_string(count_));
  }
  if (std::isinf(current_max_)) {
    return current_max_;
  }
  return current_max_ + (std::log(current_sum_) - std::log(static_cast<double>(sample_count)));
}

}  // namespace owaic
