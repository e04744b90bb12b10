#include "protoverb/hierarchy.hpp"

#include <sstream>
#include <stdexcept>

#include "protoverb/io_util.hpp"

namespace protoverb {

namespace {

void validate_name(const std::string& name, int lineno) {
  if (name.empty()) {
    throw std::runtime_error("hierarchy line " + std::to_string(lineno) +
                             ": empty node name");
  }
  if (name.find('.') != std::string::npos ||
      name.find('\t') != std::string::npos) {
    throw std::runtime_error("hierarchy line " + std::to_string(lineno) +
                             ": node name must not contain '.' or tab: '" +
                             name + "'");
  }
}

}  // namespace

SenseHierarchy SenseHierarchy::parse(std::string_view text) {
  SenseHierarchy h;
  h.levels_.resize(kMaxLevel);

  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;

    auto fields = split(line, '\t');
    if (fields.size() != 2 && fields.size() != 3) {
      throw std::runtime_error(
          "hierarchy line " + std::to_string(lineno) +
          ": expected level<TAB>name<TAB>parent-path, got " +
          std::to_string(fields.size()) + " fields");
    }
    int level = 0;
    try {
      level = static_cast<int>(parse_long(trim(fields[0]), "level"));
    } catch (const std::exception&) {
      throw std::runtime_error("hierarchy line " + std::to_string(lineno) +
                               ": level is not an integer: '" + fields[0] +
                               "'");
    }
    if (level < 1 || level > kMaxLevel) {
      throw std::runtime_error("hierarchy line " + std::to_string(lineno) +
                               ": level must be in 1..3, got " +
                               std::to_string(level));
    }
    std::string name = trim(fields[1]);
    validate_name(name, lineno);
    std::string parent_path = fields.size() == 3 ? trim(fields[2]) : "";

    NodeId parent = -1;
    if (level == 1) {
      if (!parent_path.empty()) {
        throw std::runtime_error("hierarchy line " + std::to_string(lineno) +
                                 ": level-1 node '" + name +
                                 "' must have an empty parent-path");
      }
    } else {
      if (parent_path.empty()) {
        throw std::runtime_error("hierarchy line " + std::to_string(lineno) +
                                 ": level-" + std::to_string(level) +
                                 " node '" + name + "' needs a parent-path");
      }
      std::vector<NodeId> chain;
      try {
        chain = h.resolve_path(parent_path);
      } catch (const std::exception& e) {
        throw std::runtime_error("hierarchy line " + std::to_string(lineno) +
                                 ": dangling parent-path '" + parent_path +
                                 "': " + e.what());
      }
      parent = chain.back();
      if (h.node(parent).level != level - 1) {
        throw std::runtime_error(
            "hierarchy line " + std::to_string(lineno) + ": parent '" +
            parent_path + "' is at level " +
            std::to_string(h.node(parent).level) + ", expected level " +
            std::to_string(level - 1));
      }
    }

    auto key = std::make_pair(parent, name);
    if (h.by_parent_name_.count(key)) {
      throw std::runtime_error("hierarchy line " + std::to_string(lineno) +
                               ": duplicate sibling name '" + name + "'");
    }
    // Names are also unique within a whole level.
    for (NodeId other : h.levels_[level - 1]) {
      if (h.nodes_[other].name == name) {
        throw std::runtime_error("hierarchy line " + std::to_string(lineno) +
                                 ": name '" + name +
                                 "' already used at level " +
                                 std::to_string(level));
      }
    }

    SenseNode n;
    n.id = static_cast<NodeId>(h.nodes_.size());
    n.name = name;
    n.level = level;
    n.parent = parent;
    n.row = static_cast<int>(h.levels_[level - 1].size());
    h.by_parent_name_.emplace(key, n.id);
    h.levels_[level - 1].push_back(n.id);
    h.nodes_.push_back(std::move(n));
    if (level > h.depth_) h.depth_ = level;
  }

  if (h.nodes_.empty()) {
    throw std::runtime_error("hierarchy: no nodes declared");
  }
  // Declared levels must be contiguous from 1: a node's parent always exists,
  // so a gap can only appear if some level has nodes but level 1 does not.
  for (int l = 1; l <= h.depth_; ++l) {
    if (h.levels_[l - 1].empty()) {
      throw std::runtime_error("hierarchy: level " + std::to_string(l) +
                               " is empty but deeper levels exist");
    }
  }
  return h;
}

SenseHierarchy SenseHierarchy::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

void SenseHierarchy::check_handle(NodeId id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) {
    throw std::out_of_range("invalid node handle: " + std::to_string(id));
  }
}

const SenseNode& SenseHierarchy::node(NodeId id) const {
  check_handle(id);
  return nodes_[static_cast<size_t>(id)];
}

bool SenseHierarchy::has_level(int level) const {
  return level >= 1 && level <= kMaxLevel && !levels_[level - 1].empty();
}

const std::vector<NodeId>& SenseHierarchy::nodes_at(int level) const {
  if (!has_level(level)) {
    throw std::out_of_range("level " + std::to_string(level) +
                            " is not declared in the hierarchy");
  }
  return levels_[level - 1];
}

std::optional<NodeId> SenseHierarchy::parent_of(NodeId id) const {
  const SenseNode& n = node(id);
  if (n.parent < 0) return std::nullopt;
  return n.parent;
}

std::vector<NodeId> SenseHierarchy::resolve_path(std::string_view path) const {
  auto components = split(path, '.');
  if (components.empty() || components.size() > kMaxLevel) {
    throw std::runtime_error("sense path must have 1.." +
                             std::to_string(kMaxLevel) + " components: '" +
                             std::string(path) + "'");
  }
  std::vector<NodeId> chain;
  NodeId parent = -1;
  for (const std::string& raw : components) {
    std::string name = trim(raw);
    auto it = by_parent_name_.find(std::make_pair(parent, name));
    if (it == by_parent_name_.end()) {
      if (parent < 0) {
        throw std::runtime_error("unknown level-1 sense '" + name + "' in '" +
                                 std::string(path) + "'");
      }
      throw std::runtime_error("'" + name + "' is not a child of '" +
                               nodes_[parent].name + "' in '" +
                               std::string(path) + "'");
    }
    parent = it->second;
    chain.push_back(parent);
  }
  return chain;
}

std::string SenseHierarchy::render_path(NodeId id) const {
  const SenseNode& n = node(id);
  if (n.parent < 0) return n.name;
  return render_path(n.parent) + "." + n.name;
}

NodeId SenseHierarchy::node_at_row(int level, int row) const {
  const auto& ids = nodes_at(level);
  if (row < 0 || static_cast<size_t>(row) >= ids.size()) {
    throw std::out_of_range("row " + std::to_string(row) +
                            " out of range at level " + std::to_string(level));
  }
  return ids[static_cast<size_t>(row)];
}

std::string SenseHierarchy::to_text() const {
  std::string out;
  for (const SenseNode& n : nodes_) {
    out += std::to_string(n.level);
    out.push_back('\t');
    out += n.name;
    out.push_back('\t');
    if (n.parent >= 0) out += render_path(n.parent);
    out.push_back('\n');
  }
  return out;
}

}  // namespace protoverb
