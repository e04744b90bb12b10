#ifndef PROTOVERB_HIERARCHY_HPP
#define PROTOVERB_HIERARCHY_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace protoverb {

inline constexpr int kMaxLevel = 3;

using NodeId = int32_t;

struct SenseNode {
  NodeId id = -1;
  std::string name;
  int level = 0;            // 1..3
  NodeId parent = -1;       // -1 for level-1 nodes
  int row = -1;             // position within its level, declaration order
};

// Three-level sense taxonomy. Immutable after load; all queries are reads.
class SenseHierarchy {
 public:
  // Line format: level<TAB>name<TAB>parent-path. Parent-path is empty for
  // level-1 nodes, otherwise the dot-joined names of the ancestors.
  // '#'-prefixed lines and blank lines are ignored.
  static SenseHierarchy parse(std::string_view text);
  static SenseHierarchy load(const std::filesystem::path& path);

  size_t node_count() const { return nodes_.size(); }
  const SenseNode& node(NodeId id) const;

  // Deepest declared level (1..3).
  int depth() const { return depth_; }
  bool has_level(int level) const;
  const std::vector<NodeId>& nodes_at(int level) const;
  size_t count_at(int level) const { return nodes_at(level).size(); }

  std::optional<NodeId> parent_of(NodeId id) const;

  // "Expansion.Conjunction" -> handles from level 1 downward.
  std::vector<NodeId> resolve_path(std::string_view path) const;
  std::string render_path(NodeId id) const;

  // Row index of a node within its level's declaration order.
  int row_index(NodeId id) const { return node(id).row; }
  NodeId node_at_row(int level, int row) const;

  std::string to_text() const;

 private:
  std::vector<SenseNode> nodes_;
  std::vector<std::vector<NodeId>> levels_;  // index 0 <-> level 1
  std::map<std::pair<NodeId, std::string>, NodeId> by_parent_name_;
  int depth_ = 0;

  void check_handle(NodeId id) const;
};

}  // namespace protoverb

#endif
