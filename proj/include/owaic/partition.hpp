#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace owaic {

enum class PartitionKind { ungrouped, grouped };

using Grouping = std::vector<std::vector<std::string>>;

/// A partition of n data nodes into M nonempty, disjoint groups.
///
/// Groups hold positions into node_names(), which is the data-node order the
/// partition was built against. Immutable after construction.
class PartitionSpec {
 public:
  std::size_t size() const noexcept { return groups_.size(); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  PartitionKind kind() const noexcept { return kind_; }

  const std::vector<std::vector<std::size_t>>& groups() const noexcept { return groups_; }
  const std::vector<std::size_t>& group(std::size_t m) const { return groups_.at(m); }
  const std::vector<std::string>& node_names() const noexcept { return nodes_; }

  Grouping grouping() const;

  /// CRC-32 of the group structure by node name.
  std::uint32_t digest() const noexcept { return digest_; }

  friend bool operator==(const PartitionSpec&, const PartitionSpec&) = default;

 private:
  friend PartitionSpec build_partition(std::span<const std::string>, const std::optional<Grouping>&);

  std::vector<std::string> nodes_;
  std::vector<std::vector<std::size_t>> groups_;
  PartitionKind kind_ = PartitionKind::ungrouped;
  std::uint32_t digest_ = 0;
};

/// Singleton groups when `grouping` is absent, the given grouping otherwise.
/// Throws PartitionError on an empty node list, an empty group, a node listed
/// twice, an unknown node, or a node left out.
PartitionSpec build_partition(std::span<const std::string> data_nodes,
                              const std::optional<Grouping>& grouping = std::nullopt);

/// Consecutive blocks of `block_size` nodes in node order; the last block is
/// shorter when block_size does not divide n.
PartitionSpec consecutive_blocks(std::span<const std::string> data_nodes, std::size_t block_size);

/// Partition built from its own groups, for contexts without a model (the
/// node universe is the concatenation of the groups).
PartitionSpec partition_from_grouping(const Grouping& grouping);

// Partition files are JSON:
//   {"format": "owaic-partition", "version": 1, "kind": "grouped",
//    "groups": [["y[1,1]", "y[1,2]"], ["y[2,1]"]]}
// "kind" is informational on read and recomputed from the groups.
void write_partition(std::ostream& out, const PartitionSpec& partition);
Grouping read_partition_grouping(std::istream& in);
Grouping read_partition_grouping(const std::filesystem::path& path);

}  // namespace owaic
