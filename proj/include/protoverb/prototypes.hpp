#ifndef PROTOVERB_PROTOTYPES_HPP
#define PROTOVERB_PROTOTYPES_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "protoverb/hierarchy.hpp"
#include "protoverb/linalg.hpp"

namespace protoverb {

// Norms below this are treated as degenerate for cosine similarity.
inline constexpr double kNormGuard = 1e-12;

double cosine_sim(std::span<const double> u, std::span<const double> w);

// Per-level matrices of class prototype vectors. Row order follows the
// hierarchy's declaration order at each level.
class PrototypeSet {
 public:
  PrototypeSet() = default;

  static PrototypeSet init(const SenseHierarchy& h, int d_p, uint64_t seed);

  int dim() const { return d_p_; }
  int max_level() const { return static_cast<int>(levels_.size()); }
  bool has_level(int level) const;
  Matrix& at_level(int level);
  const Matrix& at_level(int level) const;

  // Every row norm must exceed kNormGuard; throws naming the offender.
  void check_rows() const;
  void check_matches(const SenseHierarchy& h) const;

  std::string to_text() const;
  static PrototypeSet parse(std::string_view text);
  static PrototypeSet load(const std::filesystem::path& path);

 private:
  int d_p_ = 0;
  std::vector<Matrix> levels_;  // index 0 <-> level 1; empty matrix = undeclared
};

// Cosine similarity of v against every prototype at `level`, in row order.
Vec similarities(std::span<const double> v, const PrototypeSet& ps, int level);

}  // namespace protoverb

#endif
