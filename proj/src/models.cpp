#include "owaic/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "owaic/errors.hpp"

namespace owaic {

namespace {

std::string hier_name(std::size_t j, std::size_t i) {
  return "y[" + std::to_string(j + 1) + "," + std::to_string(i + 1) + "]";
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct HierStart {
  double mu;
  double sigma;
  double tau;
  std::vector<double> group_means;
};

HierStart hier_start(const HierDataset& data) {
  if (data.groups() == 0) throw DomainError("hierarchical dataset has no groups");
  HierStart s;
  double total = 0.0;
  std::size_t n = 0;
  double within = 0.0;
  for (const auto& g : data.y) {
    if (g.empty()) throw DomainError("hierarchical dataset has an empty group");
    const double m = mean_of(g);
    s.group_means.push_back(m);
    for (double v : g) within += (v - m) * (v - m);
    total += std::accumulate(g.begin(), g.end(), 0.0);
    n += g.size();
  }
  s.mu = total / static_cast<double>(n);
  s.sigma = std::max(0.05, std::sqrt(within / static_cast<double>(std::max<std::size_t>(1, n - data.groups()))));
  double between = 0.0;
  for (double m : s.group_means) between += (m - s.mu) * (m - s.mu);
  s.tau = data.groups() > 1
              ? std::max(0.05, std::sqrt(between / static_cast<double>(data.groups() - 1)))
              : 0.5;
  return s;
}

Grouping hier_grouping(const HierDataset& data) {
  Grouping grouping;
  for (std::size_t j = 0; j < data.groups(); ++j) {
    auto& g = grouping.emplace_back();
    for (std::size_t i = 0; i < data.y[j].size(); ++i) g.push_back(hier_name(j, i));
  }
  return grouping;
}

ModelGraph make_hier(const HierDataset& data, char which) {
  const HierStart start = hier_start(data);
  ModelGraph model(std::string(1, which));
  const NodeId mu = model.add_parameter("mu", Prior::normal(0.0, kHierMuPriorSd), start.mu);
  const NodeId sigma = model.add_parameter("sigma", Prior::half_normal(kHierScalePriorSd), start.sigma);

  if (which == 'S') {
    for (std::size_t j = 0; j < data.groups(); ++j) {
      for (std::size_t i = 0; i < data.y[j].size(); ++i) {
        model.add_data(hier_name(j, i), {mu, sigma},
                       [mu, sigma](std::span<const double> v) { return NormalParams{v[mu], v[sigma]}; },
                       data.y[j][i]);
      }
    }
    model.set_natural_grouping(hier_grouping(data));
    return model;
  }

  std::vector<NodeId> b(data.groups());
  NodeId tau = 0;
  if (which == 'H') {
    tau = model.add_parameter("tau", Prior::half_normal(kHierScalePriorSd), start.tau);
    for (std::size_t j = 0; j < data.groups(); ++j) {
      const double n = static_cast<double>(data.y[j].size());
      const double w = start.tau * start.tau / (start.tau * start.tau + start.sigma * start.sigma / n);
      b[j] = model.add_latent("b[" + std::to_string(j + 1) + "]", {mu, tau},
                              [mu, tau](std::span<const double> v) { return NormalParams{v[mu], v[tau]}; },
                              start.mu + w * (start.group_means[j] - start.mu));
    }
  } else {
    for (std::size_t j = 0; j < data.groups(); ++j) {
      const double n = static_cast<double>(data.y[j].size());
      const double w = kFixedGroupSd * kFixedGroupSd /
                       (kFixedGroupSd * kFixedGroupSd + start.sigma * start.sigma / n);
      b[j] = model.add_latent("b[" + std::to_string(j + 1) + "]", {mu},
                              [mu](std::span<const double> v) { return NormalParams{v[mu], kFixedGroupSd}; },
                              start.mu + w * (start.group_means[j] - start.mu));
    }
  }
  model.add_shift_block(mu, b);
  if (which == 'H') model.add_scale_block(tau, mu, b);
  for (std::size_t j = 0; j < data.groups(); ++j) {
    const NodeId bj = b[j];
    for (std::size_t i = 0; i < data.y[j].size(); ++i) {
      model.add_data(hier_name(j, i), {bj, sigma},
                     [bj, sigma](std::span<const double> v) { return NormalParams{v[bj], v[sigma]}; },
                     data.y[j][i]);
    }
  }
  model.set_natural_grouping(hier_grouping(data));
  return model;
}

// Rough log-volatility path: centred log y^2 smoothed over a +-5 window.
std::vector<double> sv_start_path(const SvDataset& data) {
  constexpr double kLogChiSqMean = -1.2704;  // E[log chi^2_1]
  const std::size_t T = data.length();
  std::vector<double> raw(T);
  for (std::size_t t = 0; t < T; ++t) raw[t] = std::log(data.y[t] * data.y[t] + 1e-8) - kLogChiSqMean;
  std::vector<double> path(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t >= 5 ? t - 5 : 0;
    const std::size_t hi = std::min(T, t + 6);
    double s = 0.0;
    for (std::size_t u = lo; u < hi; ++u) s += raw[u];
    path[t] = s / static_cast<double>(hi - lo);
  }
  return path;
}

ModelGraph make_sv(const SvDataset& data, char which) {
  if (data.length() < 2) throw DomainError("stochastic volatility model needs T >= 2");
  ModelGraph model(std::string(1, which));
  const std::size_t T = data.length();

  if (which == 'I') {
    double ss = 0.0;
    for (double v : data.y) ss += v * v;
    const NodeId sigma = model.add_parameter("sigma", Prior::half_normal(kSvSigmaPriorSd),
                                             std::max(0.05, std::sqrt(ss / static_cast<double>(T))));
    for (std::size_t t = 0; t < T; ++t) {
      model.add_data("y[" + std::to_string(t + 1) + "]", {sigma},
                     [sigma](std::span<const double> v) { return NormalParams{0.0, v[sigma]}; },
                     data.y[t]);
    }
    return model;
  }

  const std::vector<double> path = sv_start_path(data);
  const double path_mean = mean_of(path);
  double path_var = 0.0;
  for (double h : path) path_var += (h - path_mean) * (h - path_mean);
  path_var /= static_cast<double>(T - 1);

  const NodeId sigma = model.add_parameter(
      "sigma", Prior::half_normal(kSvSigmaPriorSd),
      which == 'P' ? 0.3 : std::max(0.1, std::sqrt(path_var)));
  const NodeId mu = model.add_parameter("mu", Prior::normal(0.0, kSvMuPriorSd), path_mean);

  std::vector<NodeId> h(T);
  if (which == 'P') {
    const NodeId phi = model.add_parameter("phi", Prior::uniform(-1.0, 1.0), 0.8);
    h[0] = model.add_latent("h[1]", {mu, sigma, phi},
                            [mu, sigma, phi](std::span<const double> v) {
                              return NormalParams{v[mu], v[sigma] / std::sqrt(1.0 - v[phi] * v[phi])};
                            },
                            path[0]);
    for (std::size_t t = 1; t < T; ++t) {
      const NodeId prev = h[t - 1];
      h[t] = model.add_latent("h[" + std::to_string(t + 1) + "]", {prev, mu, phi, sigma},
                              [prev, mu, phi, sigma](std::span<const double> v) {
                                return NormalParams{v[mu] + v[phi] * (v[prev] - v[mu]), v[sigma]};
                              },
                              path[t]);
    }
  } else {
    for (std::size_t t = 0; t < T; ++t) {
      h[t] = model.add_latent("h[" + std::to_string(t + 1) + "]", {mu, sigma},
                              [mu, sigma](std::span<const double> v) { return NormalParams{v[mu], v[sigma]}; },
                              path[t]);
    }
  }
  model.add_shift_block(mu, h);
  model.add_scale_block(sigma, mu, h);
  for (std::size_t t = 0; t < T; ++t) {
    const NodeId ht = h[t];
    model.add_data("y[" + std::to_string(t + 1) + "]", {ht},
                   [ht](std::span<const double> v) { return NormalParams{0.0, std::exp(v[ht] / 2.0)}; },
                   data.y[t]);
  }
  return model;
}

}  // namespace

const std::vector<ModelInfo>& model_catalog() {
  static const std::vector<ModelInfo> catalog = {
      {"H", Family::hier, "random intercept: b[j] ~ N(mu, tau), y[j,i] ~ N(b[j], sigma)", true},
      {"F", Family::hier, "random intercept with group sd fixed at 0.01", true},
      {"S", Family::hier, "single mean: y[j,i] ~ N(mu, sigma)", false},
      {"P", Family::sv, "stochastic volatility with AR(1) log-variance h[t]", true},
      {"Z", Family::sv, "stochastic volatility with independent h[t] (phi = 0)", true},
      {"I", Family::sv, "independent normals: y[t] ~ N(0, sigma)", false},
  };
  return catalog;
}

const ModelInfo& model_info(std::string_view name) {
  for (const auto& info : model_catalog()) {
    if (info.name == name) return info;
  }
  throw DomainError("unknown model '" + std::string(name) + "'");
}

ModelGraph make_model_h(const HierDataset& data) { return make_hier(data, 'H'); }
ModelGraph make_model_f(const HierDataset& data) { return make_hier(data, 'F'); }
ModelGraph make_model_s(const HierDataset& data) { return make_hier(data, 'S'); }
ModelGraph make_model_p(const SvDataset& data) { return make_sv(data, 'P'); }
ModelGraph make_model_z(const SvDataset& data) { return make_sv(data, 'Z'); }
ModelGraph make_model_i(const SvDataset& data) { return make_sv(data, 'I'); }

ModelGraph make_model(std::string_view name, const Dataset& data) {
  const ModelInfo& info = model_info(name);
  if (info.family == Family::hier) {
    const auto* hier = std::get_if<HierDataset>(&data);
    if (!hier) throw DomainError("model " + info.name + " needs a hierarchical dataset");
    return make_hier(*hier, info.name[0]);
  }
  const auto* sv = std::get_if<SvDataset>(&data);
  if (!sv) throw DomainError("model " + info.name + " needs a stochastic volatility dataset");
  return make_sv(*sv, info.name[0]);
}

}  // namespace owaic
