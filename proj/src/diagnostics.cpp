#include "owaic/diagnostics.hpp"

#include <algorithm>

namespace owaic {

OnlineAutocorrelation::OnlineAutocorrelation(std::size_t max_lag)
    : max_lag_(max_lag), cross_(max_lag + 1, 0.0), recent_(max_lag + 1, 0.0) {
  first_.reserve(max_lag + 1);
}

void OnlineAutocorrelation::update(double x) {
  if (n_ == 0) shift_ = x;
  const double v = x - shift_;
  const std::size_t ring = max_lag_ + 1;
  recent_[n_ % ring] = v;
  const std::size_t lags = static_cast<std::size_t>(std::min<std::uint64_t>(n_, max_lag_));
  for (std::size_t l = 0; l <= lags; ++l) cross_[l] += v * recent_[(n_ - l) % ring];
  if (first_.size() < ring) first_.push_back(v);
  sum_ += v;
  ++n_;
}

double OnlineAutocorrelation::autocorrelation(std::size_t lag) const {
  if (lag > max_lag_ || lag >= n_) return 0.0;
  const double n = static_cast<double>(n_);
  const double mean = sum_ / n;
  const auto autocov = [&](std::size_t l) {
    // sum over t >= l of (x_t - mean)(x_{t-l} - mean)
    double head = sum_;  // sum of x_0 .. x_{n-1-l}
    double tail = sum_;  // sum of x_l .. x_{n-1}
    const std::size_t ring = max_lag_ + 1;
    for (std::size_t i = 0; i < l; ++i) {
      head -= recent_[(n_ - 1 - i) % ring];
      tail -= first_[i];
    }
    return (cross_[l] - mean * (head + tail) + static_cast<double>(n_ - l) * mean * mean) / n;
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return 0.0;
  return autocov(lag) / c0;
}

double OnlineAutocorrelation::effective_sample_size() const {
  const double n = static_cast<double>(n_);
  if (n_ < 4) return n;
  double tau = -1.0;  // -rho_0 + 2 * sum of pair sums, rho_0 = 1
  double prev_pair = 2.0;
  for (std::size_t k = 0; 2 * k + 1 <= max_lag_ && 2 * k + 1 < n_; ++k) {
    double pair = (k == 0 ? 1.0 : autocorrelation(2 * k)) + autocorrelation(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);  // initial monotone sequence
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  if (tau <= 0.0) return n;
  return std::min(n, n / tau);
}

}  // namespace owaic
