#ifndef PROTOVERB_TESTS_FIXTURES_HPP
#define PROTOVERB_TESTS_FIXTURES_HPP

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "protoverb/hierarchy.hpp"
#include "protoverb/linalg.hpp"
#include "protoverb/losses.hpp"
#include "protoverb/rng.hpp"

namespace protoverb::testing {

// PDTB-2 shape: 4 top-level senses, 11 second-level senses.
inline std::string pdtb2_hierarchy_text() {
  return "# PDTB-2 sense inventory, levels 1-2\n"
         "1\tComparison\t\n"
         "1\tContingency\t\n"
         "1\tExpansion\t\n"
         "1\tTemporal\t\n"
         "2\tContrast\tComparison\n"
         "2\tConcession\tComparison\n"
         "2\tCause\tContingency\n"
         "2\tPragmatic cause\tContingency\n"
         "2\tConjunction\tExpansion\n"
         "2\tInstantiation\tExpansion\n"
         "2\tRestatement\tExpansion\n"
         "2\tAlternative\tExpansion\n"
         "2\tList\tExpansion\n"
         "2\tAsynchronous\tTemporal\n"
         "2\tSynchrony\tTemporal\n";
}

inline SenseHierarchy pdtb2_hierarchy() {
  return SenseHierarchy::parse(pdtb2_hierarchy_text());
}

inline Vec random_vec(Rng& rng, size_t dim) {
  Vec v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

// Random batch labeled against a hierarchy: each instance gets a root and a
// child under it (when level 2 exists).
inline Batch random_batch(Rng& rng, const SenseHierarchy& h, size_t n,
                          size_t dim, double tau) {
  Batch b;
  b.tau = tau;
  for (size_t i = 0; i < n; ++i) {
    b.vecs.push_back(random_vec(rng, dim));
    std::vector<int> rows;
    NodeId node = h.nodes_at(1)[rng.bounded(h.count_at(1))];
    rows.push_back(h.row_index(node));
    if (h.depth() >= 2) {
      std::vector<NodeId> children;
      for (NodeId c : h.nodes_at(2)) {
        if (*h.parent_of(c) == node) children.push_back(c);
      }
      if (!children.empty()) {
        NodeId child = children[rng.bounded(children.size())];
        rows.push_back(h.row_index(child));
      }
    }
    b.paths.push_back(rows);
  }
  return b;
}

// Scoped temp directory for file-format tests.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("protoverb_" + tag + "_" + std::to_string(rd()) +
             std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace protoverb::testing

#endif
