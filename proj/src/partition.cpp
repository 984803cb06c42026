#include "owaic/partition.hpp"

#include <boost/crc.hpp>

#include <fstream>
#include <json.hpp>
#include <unordered_map>

#include "owaic/errors.hpp"

namespace owaic {

namespace {

std::uint32_t crc_of(const std::vector<std::string>& nodes,
                     const std::vector<std::vector<std::size_t>>& groups) {
  boost::crc_32_type crc;
  for (const auto& group : groups) {
    for (std::size_t i : group) {
      crc.process_bytes(nodes[i].data(), nodes[i].size());
      crc.process_byte(',');
    }
    crc.process_byte(';');
  }
  return crc.checksum();
}

}  // namespace

Grouping PartitionSpec::grouping() const {
  Grouping out;
  out.reserve(groups_.size());
  for (const auto& group : groups_) {
    auto& names = out.emplace_back();
    names.reserve(group.size());
    for (std::size_t i : group) names.push_back(nodes_[i]);
  }
  return out;
}

PartitionSpec build_partition(std::span<const std::string> data_nodes,
                              const std::optional<Grouping>& grouping) {
  using Reason = PartitionError::Reason;
  if (data_nodes.empty()) {
    throw PartitionError(Reason::empty, "partition needs at least one data node");
  }
  PartitionSpec spec;
  spec.nodes_.assign(data_nodes.begin(), data_nodes.end());

  std::unordered_map<std::string, std::size_t> index;
  index.reserve(data_nodes.size());
  for (std::size_t i = 0; i < data_nodes.size(); ++i) {
    if (!index.emplace(data_nodes[i], i).second) {
      throw PartitionError(Reason::duplicate_node,
                           "data node '" + data_nodes[i] + "' is listed twice");
    }
  }

  if (!grouping) {
    spec.groups_.reserve(data_nodes.size());
    for (std::size_t i = 0; i < data_nodes.size(); ++i) spec.groups_.push_back({i});
  } else {
    if (grouping->empty()) {
      throw PartitionError(Reason::empty, "grouping has no groups");
    }
    std::vector<bool> seen(data_nodes.size(), false);
    spec.groups_.reserve(grouping->size());
    for (std::size_t m = 0; m < grouping->size(); ++m) {
      const auto& names = (*grouping)[m];
      if (names.empty()) {
        throw PartitionError(Reason::empty, "group " + std::to_string(m) + " is empty");
      }
      auto& group = spec.groups_.emplace_back();
      group.reserve(names.size());
      for (const auto& name : names) {
        auto it = index.find(name);
        if (it == index.end()) {
          throw PartitionError(Reason::unknown_node, "unknown data node '" + name + "'");
        }
        if (seen[it->second]) {
          throw PartitionError(Reason::duplicate_node,
                               "data node '" + name + "' appears in more than one place");
        }
        seen[it->second] = true;
        group.push_back(it->second);
      }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) {
        throw PartitionError(Reason::incomplete,
                             "data node '" + data_nodes[i] + "' is not in any group");
      }
    }
  }

  spec.kind_ = PartitionKind::ungrouped;
  for (const auto& group : spec.groups_) {
    if (group.size() != 1) {
      spec.kind_ = PartitionKind::grouped;
      break;
    }
  }
  spec.digest_ = crc_of(spec.nodes_, spec.groups_);
  return spec;
}

PartitionSpec consecutive_blocks(std::span<const std::string> data_nodes, std::size_t block_size) {
  if (block_size < 1) {
    throw PartitionError(PartitionError::Reason::bad_block_size, "block size must be at least 1");
  }
  Grouping grouping;
  for (std::size_t start = 0; start < data_nodes.size(); start += block_size) {
    const std::size_t end = std::min(data_nodes.size(), start + block_size);
    grouping.emplace_back(data_nodes.begin() + static_cast<std::ptrdiff_t>(start),
                          data_nodes.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return build_partition(data_nodes, grouping);
}

PartitionSpec partition_from_grouping(const Grouping& grouping) {
  std::vector<std::string> nodes;
  for (const auto& group : grouping) nodes.insert(nodes.end(), group.begin(), group.end());
  return build_partition(nodes, grouping);
}

void write_partition(std::ostream& out, const PartitionSpec& partition) {
  nlohmann::json doc;
  doc["format"] = "owaic-partition";
  doc["version"] = 1;
  doc["kind"] = partition.kind() == PartitionKind::ungrouped ? "ungrouped" : "grouped";
  doc["groups"] = partition.grouping();
  out << doc.dump(2) << '\n';
}

Grouping read_partition_grouping(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("partition file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("groups") || !doc["groups"].is_array()) {
    throw FormatError("partition file needs a \"groups\" array");
  }
  if (doc.contains("version") && doc["version"] != 1) {
    throw FormatError("unsupported partition file version " + doc["version"].dump());
  }
  try {
    return doc["groups"].get<Grouping>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("partition groups must be arrays of node names: ") + e.what());
  }
}

Grouping read_partition_grouping(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open partition file " + path.string());
  return read_partition_grouping(in);
}

}  // namespace owaic
