#include "owaic/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "owaic/errors.hpp"

namespace owaic {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)

}  // namespace

double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -kHalfLog2Pi - std::log(sd) - 0.5 * z * z;
}

double Prior::log_density(double x) const {
  switch (kind_) {
    case Kind::normal:
      return normal_log_density(x, a_, b_);
    case Kind::half_normal:
      if (x < 0.0) return -std::numeric_limits<double>::infinity();
      return std::numbers::ln2 + normal_log_density(x, 0.0, b_);
    case Kind::uniform:
      if (x <= a_ || x >= b_) return -std::numeric_limits<double>::infinity();
      return -std::log(b_ - a_);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

NodeId ModelGraph::add_node(Node node) {
  if (node.name.empty()) throw DomainError("model node needs a name");
  if (index_.contains(node.name)) {
    throw DomainError("model node '" + node.name + "' already exists");
  }
  const NodeId id = nodes_.size();
  for (NodeId parent : node.parents) nodes_[parent].children.push_back(id);
  index_.emplace(node.name, id);
  nodes_.push_back(std::move(node));
  is_data_parent_.push_back(0);
  is_latent_input_.push_back(0);
  return id;
}

void ModelGraph::check_parents(const std::string& name, const std::vector<NodeId>& parents) const {
  for (NodeId parent : parents) {
    if (parent >= nodes_.size()) {
      throw DomainError("node '" + name + "' references a parent that does not exist yet");
    }
    if (nodes_[parent].role == NodeRole::data) {
      throw DomainError("node '" + name + "' has data node '" + nodes_[parent].name +
                        "' as a parent");
    }
  }
}

NodeId ModelGraph::add_parameter(std::string name, Prior prior, double initial) {
  Node node{std::move(name), NodeRole::parameter, {}, {}, {}, prior, initial};
  const NodeId id = add_node(std::move(node));
  parameters_.push_back(id);
  return id;
}

NodeId ModelGraph::add_latent(std::string name, std::vector<NodeId> parents, Kernel kernel,
                              double initial) {
  check_parents(name, parents);
  if (!kernel) throw DomainError("latent node '" + name + "' needs a kernel");
  Node node{std::move(name), NodeRole::latent, parents, {}, std::move(kernel), std::nullopt, initial};
  const NodeId id = add_node(std::move(node));
  latents_.push_back(id);
  for (NodeId parent : parents) {
    if (nodes_[parent].role == NodeRole::parameter && !is_latent_input_[parent]) {
      is_latent_input_[parent] = 1;
      latent_inputs_.push_back(parent);
    }
  }
  return id;
}

NodeId ModelGraph::add_data(std::string name, std::vector<NodeId> parents, Kernel kernel,
                            double value) {
  check_parents(name, parents);
  if (!kernel) throw DomainError("data node '" + name + "' needs a kernel");
  Node node{std::move(name), NodeRole::data, parents, {}, std::move(kernel), std::nullopt, value};
  const NodeId id = add_node(std::move(node));
  data_.push_back(id);
  for (NodeId parent : parents) {
    if (!is_data_parent_[parent]) {
      is_data_parent_[parent] = 1;
      data_parents_.push_back(parent);
    }
  }
  return id;
}

std::optional<NodeId> ModelGraph::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId ModelGraph::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw DomainError("model '" + name_ + "' has no node '" + std::string(name) + "'");
}

std::vector<std::string> ModelGraph::data_node_names() const {
  std::vector<std::string> names;
  names.reserve(data_.size());
  for (NodeId id : data_) names.push_back(nodes_[id].name);
  return names;
}

void ModelGraph::add_shift_block(NodeId anchor, std::vector<NodeId> members) {
  if (anchor >= nodes_.size() || nodes_[anchor].role != NodeRole::parameter) {
    throw DomainError("shift block anchor must be a parameter node");
  }
  for (NodeId m : members) {
    if (m >= nodes_.size() || nodes_[m].role != NodeRole::latent) {
      throw DomainError("shift block members must be latent nodes");
    }
  }
  shift_blocks_.push_back({anchor, std::move(members)});
}

void ModelGraph::add_scale_block(NodeId scale, NodeId center, std::vector<NodeId> members) {
  for (NodeId p : {scale, center}) {
    if (p >= nodes_.size() || nodes_[p].role != NodeRole::parameter) {
      throw DomainError("scale block scale and center must be parameter nodes");
    }
  }
  for (NodeId m : members) {
    if (m >= nodes_.size() || nodes_[m].role != NodeRole::latent) {
      throw DomainError("scale block members must be latent nodes");
    }
  }
  scale_blocks_.push_back({scale, center, std::move(members)});
}

ParamAssignment ModelGraph::initial_assignment() const {
  ParamAssignment params(nodes_.size());
  for (NodeId id : parameters_) params.set(id, nodes_[id].value);
  for (NodeId id : latents_) params.set(id, nodes_[id].value);
  return params;
}

double ModelGraph::node_log_density(NodeId id, const ParamAssignment& params) const {
  const Node& n = nodes_[id];
  switch (n.role) {
    case NodeRole::parameter:
      return n.prior->log_density(params.get(id));
    case NodeRole::latent: {
      const NormalParams p = n.kernel(params.values());
      return normal_log_density(params.get(id), p.mean, p.sd);
    }
    case NodeRole::data: {
      const NormalParams p = n.kernel(params.values());
      return normal_log_density(n.value, p.mean, p.sd);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void ModelGraph::require(const std::vector<NodeId>& ids, const ParamAssignment& params) const {
  if (params.size() != nodes_.size()) {
    throw IntegrityError("assignment has " + std::to_string(params.size()) +
                         " slots, model '" + name_ + "' has " + std::to_string(nodes_.size()) +
                         " nodes");
  }
  for (NodeId id : ids) {
    if (!params.has(id)) throw MissingAssignmentError(nodes_[id].name);
  }
}

void ModelGraph::require_data_parents(const ParamAssignment& params) const {
  require(data_parents_, params);
}

double ModelGraph::log_joint_density(std::span<const std::size_t> element,
                                     const ParamAssignment& params) const {
  if (params.size() != nodes_.size()) require({}, params);
  double total = 0.0;
  for (std::size_t pos : element) {
    if (pos >= data_.size()) {
      throw IntegrityError("element references data position " + std::to_string(pos) +
                           " but model has " + std::to_string(data_.size()) + " data nodes");
    }
    const Node& n = nodes_[data_[pos]];
    for (NodeId parent : n.parents) {
      if (!params.has(parent)) throw MissingAssignmentError(nodes_[parent].name);
    }
    const NormalParams p = n.kernel(params.values());
    const double ld = normal_log_density(n.value, p.mean, p.sd);
    if (std::isnan(ld)) {
      throw NumericalError("log density of data node '" + n.name + "' is NaN");
    }
    total += ld;
  }
  return total;
}

void ModelGraph::data_log_densities(const ParamAssignment& params, std::span<double> out) const {
  if (out.size() != data_.size()) {
    throw IntegrityError("output buffer has " + std::to_string(out.size()) + " slots for " +
                         std::to_string(data_.size()) + " data nodes");
  }
  const auto values = params.values();
  // Most models share one scale across many data nodes; reuse its log.
  double last_sd = std::numeric_limits<double>::quiet_NaN();
  double last_log_sd = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const Node& n = nodes_[data_[i]];
    const NormalParams p = n.kernel(values);
    if (p.sd != last_sd) {
      last_sd = p.sd;
      last_log_sd = std::log(p.sd);
    }
    const double z = (n.value - p.mean) / p.sd;
    const double ld = -kHalfLog2Pi - last_log_sd - 0.5 * z * z;
    if (std::isnan(ld)) {
      throw NumericalError("log density of data node '" + n.name + "' is NaN");
    }
    out[i] = ld;
  }
}

void ModelGraph::simulate_latent(ParamAssignment& params, RandomStream& rng) const {
  require(latent_inputs_, params);
  for (NodeId id : latents_) {
    const NormalParams p = nodes_[id].kernel(params.values());
    params.set(id, rng.normal(p.mean, p.sd));
  }
}

}  // namespace owaic
