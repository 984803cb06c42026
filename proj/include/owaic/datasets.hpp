#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "owaic/random.hpp"

namespace owaic {

struct HierParams {
  double mu = 2.0;
  double tau = 0.5;
  double sigma = 1.0;
};

struct SvParams {
  double phi = 0.95;
  double sigma = 0.25;
  double mu = -1.02;
};

/// Grouped observations y[j][i], j = 0..J-1, i = 0..n_j-1.
struct HierDataset {
  std::vector<std::vector<double>> y;
  HierParams truth;  // generating values, informational

  std::size_t groups() const noexcept { return y.size(); }
  std::size_t total() const noexcept;
};

/// Univariate series y[t], t = 0..T-1.
struct SvDataset {
  std::vector<double> y;
  SvParams truth;

  std::size_t length() const noexcept { return y.size(); }
};

using Dataset = std::variant<HierDataset, SvDataset>;

/// b_j ~ N(mu, tau), y_ji ~ N(b_j, sigma). Throws DomainError for tau <= 0,
/// sigma <= 0 or no groups.
HierDataset generate_hier(const HierParams& truth, std::span<const std::size_t> group_sizes,
                          RandomStream& rng);
HierDataset generate_hier(const HierParams& truth, std::size_t groups, std::size_t per_group,
                          RandomStream& rng);

/// Stationary AR(1) log-volatility h_t, then y_t ~ N(0, exp(h_t / 2)).
/// Throws DomainError for |phi| >= 1, sigma <= 0 or T < 2.
SvDataset generate_sv(const SvParams& truth, std::size_t length, RandomStream& rng);

// Dataset files are line-oriented text:
//   waic-dataset v1 family=hier J=2 mu=2 tau=0.5 sigma=1
//   <group 1 values, comma separated>
//   <group 2 values, comma separated>
// or
//   waic-dataset v1 family=sv T=200 phi=0.95 sigma=0.25 mu=-1.02
//   <T values, comma separated>
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace owaic
