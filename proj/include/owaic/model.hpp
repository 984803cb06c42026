#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "owaic/partition.hpp"
#include "owaic/random.hpp"

namespace owaic {

using NodeId = std::size_t;

enum class NodeRole { parameter, latent, data };

struct NormalParams {
  double mean;
  double sd;
};

/// log N(x; mean, sd), with sd a standard deviation.
double normal_log_density(double x, double mean, double sd);

/// Prior on a top-level parameter node.
class Prior {
 public:
  enum class Kind { normal, half_normal, uniform };

  static Prior normal(double mean, double sd) { return {Kind::normal, mean, sd}; }
  static Prior half_normal(double sd) { return {Kind::half_normal, 0.0, sd}; }
  static Prior uniform(double lower, double upper) { return {Kind::uniform, lower, upper}; }

  /// -inf outside the support.
  double log_density(double x) const;

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

 private:
  Prior(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
};

/// Conditional density of a latent or data node given its parents. The
/// kernel reads parent values from the full node-indexed value vector.
using Kernel = std::function<NormalParams(std::span<const double> values)>;

struct Node {
  std::string name;
  NodeRole role;
  std::vector<NodeId> parents;
  std::vector<NodeId> children;
  Kernel kernel;                    // latent and data nodes
  std::optional<Prior> prior;       // parameter nodes
  double value = 0.0;               // observed value (data) or initial value
};

/// Values for parameter and latent nodes, indexed by NodeId.
class ParamAssignment {
 public:
  ParamAssignment() = default;
  explicit ParamAssignment(std::size_t node_count)
      : values_(node_count, 0.0), assigned_(node_count, 0) {}

  void set(NodeId id, double value) {
    values_[id] = value;
    assigned_[id] = 1;
  }
  void unset(NodeId id) { assigned_[id] = 0; }
  double get(NodeId id) const { return values_[id]; }
  bool has(NodeId id) const { return id < assigned_.size() && assigned_[id] != 0; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const ParamAssignment&, const ParamAssignment&) = default;

 private:
  std::vector<double> values_;
  std::vector<std::uint8_t> assigned_;
};

/// Directed model of parameter nodes (conditioned on), latent nodes (may be
/// simulated or marginalized) and data nodes (fixed observations).
///
/// A location parameter and the latent nodes centred on it. Moving all of
/// them by a common offset keeps the latents' deviations unchanged.
struct ShiftBlock {
  NodeId anchor;
  std::vector<NodeId> members;
};

/// A positive scale parameter and the latent nodes whose deviations from a
/// centre parameter are proportional to it.
struct ScaleBlock {
  NodeId scale;
  NodeId center;
  std::vector<NodeId> members;
};

/// Nodes must be added after their parents, so insertion order is a
/// topological order. Data values never change after add_data().
class ModelGraph {
 public:
  explicit ModelGraph(std::string name = {}) : name_(std::move(name)) {}

  NodeId add_parameter(std::string name, Prior prior, double initial);
  NodeId add_latent(std::string name, std::vector<NodeId> parents, Kernel kernel, double initial);
  NodeId add_data(std::string name, std::vector<NodeId> parents, Kernel kernel, double value);

  const std::string& name() const noexcept { return name_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }

  /// Throws DomainError for an unknown name.
  NodeId id(std::string_view name) const;
  std::optional<NodeId> find(std::string_view name) const;

  const std::vector<NodeId>& parameter_nodes() const noexcept { return parameters_; }
  const std::vector<NodeId>& latent_nodes() const noexcept { return latents_; }
  const std::vector<NodeId>& data_nodes() const noexcept { return data_; }
  std::vector<std::string> data_node_names() const;

  /// Grouping suggested by the model structure (hierarchical groups), if any.
  const std::optional<Grouping>& natural_grouping() const noexcept { return natural_grouping_; }
  void set_natural_grouping(Grouping grouping) { natural_grouping_ = std::move(grouping); }

  /// Throws DomainError unless the anchor is a parameter and every member
  /// is a latent node.
  void add_shift_block(NodeId anchor, std::vector<NodeId> members);
  const std::vector<ShiftBlock>& shift_blocks() const noexcept { return shift_blocks_; }
  /// Throws DomainError unless scale and center are parameters and every
  /// member is a latent node.
  void add_scale_block(NodeId scale, NodeId center, std::vector<NodeId> members);
  const std::vector<ScaleBlock>& scale_blocks() const noexcept { return scale_blocks_; }

  /// Empty assignment sized for this model.
  ParamAssignment make_assignment() const { return ParamAssignment(nodes_.size()); }
  /// Parameter and latent nodes at their initial values.
  ParamAssignment initial_assignment() const;

  /// Log density of one node given its parents: the prior for a parameter,
  /// the kernel at the assigned value for a latent, the kernel at the
  /// observed value for a data node. Does not check assignment coverage.
  double node_log_density(NodeId id, const ParamAssignment& params) const;

  /// Sum of data-node log densities over `element`, given as positions into
  /// data_nodes(), in element order. Throws MissingAssignmentError naming the
  /// first unassigned parent, NumericalError if a density is NaN.
  double log_joint_density(std::span<const std::size_t> element, const ParamAssignment& params) const;

  /// Log density of every data node, in data_nodes() order.
  void data_log_densities(const ParamAssignment& params, std::span<double> out) const;

  /// Throws MissingAssignmentError unless every parent of a data node is
  /// assigned.
  void require_data_parents(const ParamAssignment& params) const;

  /// One ancestral draw of every latent node given the parameters already in
  /// `params`; writes only latent slots.
  void simulate_latent(ParamAssignment& params, RandomStream& rng) const;

 private:
  NodeId add_node(Node node);
  void check_parents(const std::string& name, const std::vector<NodeId>& parents) const;
  void require(const std::vector<NodeId>& ids, const ParamAssignment& params) const;

  std::string name_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<NodeId> parameters_;
  std::vector<NodeId> latents_;
  std::vector<NodeId> data_;
  std::vector<NodeId> data_parents_;       // union of data-node parents
  std::vector<NodeId> latent_inputs_;      // parameter parents of latent nodes
  std::vector<std::uint8_t> is_data_parent_;
  std::vector<std::uint8_t> is_latent_input_;
  std::optional<Grouping> natural_grouping_;
  std::vector<ShiftBlock> shift_blocks_;
  std::vector<ScaleBlock> scale_blocks_;
};

}  // namespace owaic
