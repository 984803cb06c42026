#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "owaic/datasets.hpp"
#include "owaic/model.hpp"

namespace owaic {

enum class Family { hier, sv };

struct ModelInfo {
  std::string name;
  Family family;
  std::string description;
  bool has_latent;
};

// Prior choices for the built-in models.
inline constexpr double kHierMuPriorSd = 100.0;
inline constexpr double kHierScalePriorSd = 10.0;
inline constexpr double kFixedGroupSd = 0.01;  // model F
inline constexpr double kSvMuPriorSd = 10.0;
inline constexpr double kSvSigmaPriorSd = 5.0;

/// H, F, S (hierarchical data) and P, Z, I (stochastic volatility data).
const std::vector<ModelInfo>& model_catalog();
const ModelInfo& model_info(std::string_view name);

/// Random-intercept model H:
///   mu ~ N(0, 100), sigma, tau ~ half-N(10)
///   b[j] ~ N(mu, tau), y[j,i] ~ N(b[j], sigma)
ModelGraph make_model_h(const HierDataset& data);
/// H with the group-mean sd fixed at 0.01 and no tau.
ModelGraph make_model_f(const HierDataset& data);
/// Single mean: y[j,i] ~ N(mu, sigma).
ModelGraph make_model_s(const HierDataset& data);

/// AR(1) log-volatility model P:
///   sigma ~ half-N(5), mu ~ N(0, 10), phi ~ U(-1, 1)
///   h[1] ~ N(mu, sigma / sqrt(1 - phi^2)),
///   h[t] ~ N(mu + phi (h[t-1] - mu), sigma), y[t] ~ N(0, exp(h[t] / 2))
ModelGraph make_model_p(const SvDataset& data);
/// P with phi = 0: h[t] ~ N(mu, sigma) independently.
ModelGraph make_model_z(const SvDataset& data);
/// y[t] ~ N(0, sigma), no latent structure.
ModelGraph make_model_i(const SvDataset& data);

/// Dispatch by catalog name. Throws DomainError for an unknown name or a
/// dataset of the wrong family.
ModelGraph make_model(std::string_view name, const Dataset& data);

}  // namespace owaic
