#pragma once

namespace owaic {

// Numerical tolerances shared by the library and its test suites.
struct Tolerances {
  // Welford m2 may dip below zero by this much (relative to its scale).
  static constexpr double welford_m2_negative = 1e-12;
  // Online vs. batch log-mean-exp.
  static constexpr double logsumexp_relative = 1e-12;
  static constexpr double logsumexp_shift_absolute = 1e-12;
  // Online Welford vs. two-pass variance.
  static constexpr double variance_relative = 1e-10;
  static constexpr double variance_permutation_relative = 1e-8;
  // Online engine vs. offline oracle, per element.
  static constexpr double oracle_relative = 1e-10;
  // Stream replay / stored-sample replay.
  static constexpr double replay = 1e-12;
  // Replicate exchangeability of study means.
  static constexpr double resummation_relative = 1e-9;
};

}  // namespace owaic
