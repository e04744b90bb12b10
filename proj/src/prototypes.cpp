#include "protoverb/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "protoverb/io_util.hpp"
#include "protoverb/rng.hpp"

namespace protoverb {

double cosine_sim(std::span<const double> u, std::span<const double> w) {
  if (u.size() != w.size()) {
    throw std::invalid_argument("cosine_sim: dimension mismatch");
  }
  const double nu = norm(u);
  const double nw = norm(w);
  if (nu <= kNormGuard || nw <= kNormGuard) {
    throw std::runtime_error("cosine_sim: vector norm below guard (" +
                             format_double(std::min(nu, nw)) + ")");
  }
  return dot(u, w) / (nu * nw);
}

PrototypeSet PrototypeSet::init(const SenseHierarchy& h, int d_p,
                                uint64_t seed) {
  if (d_p < 2) {
    throw std::invalid_argument("prototype dimension must be >= 2, got " +
                                std::to_string(d_p));
  }
  PrototypeSet ps;
  ps.d_p_ = d_p;
  ps.levels_.resize(static_cast<size_t>(h.depth()));
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(d_p));
  for (int level = 1; level <= h.depth(); ++level) {
    Matrix m(h.count_at(level), static_cast<size_t>(d_p));
    for (double& x : m.data()) x = rng.normal(0.0, stddev);
    ps.levels_[static_cast<size_t>(level - 1)] = std::move(m);
  }
  ps.check_rows();
  return ps;
}

bool PrototypeSet::has_level(int level) const {
  return level >= 1 && level <= max_level() &&
         !levels_[static_cast<size_t>(level - 1)].empty();
}

Matrix& PrototypeSet::at_level(int level) {
  if (!has_level(level)) {
    throw std::out_of_range("prototype set has no level " +
                            std::to_string(level));
  }
  return levels_[static_cast<size_t>(level - 1)];
}

const Matrix& PrototypeSet::at_level(int level) const {
  if (!has_level(level)) {
    throw std::out_of_range("prototype set has no level " +
                            std::to_string(level));
  }
  return levels_[static_cast<size_t>(level - 1)];
}

void PrototypeSet::check_rows() const {
  for (size_t l = 0; l < levels_.size(); ++l) {
    const Matrix& m = levels_[l];
    for (size_t i = 0; i < m.rows(); ++i) {
      const double n = norm(m.row(i));
      if (!(n > kNormGuard)) {
        throw std::runtime_error("prototype row " + std::to_string(i) +
                                 " at level " + std::to_string(l + 1) +
                                 " has near-zero norm");
      }
    }
  }
}

void PrototypeSet::check_matches(const SenseHierarchy& h) const {
  if (max_level() != h.depth()) {
    throw std::runtime_error("prototype set declares " +
                             std::to_string(max_level()) +
                             " levels, hierarchy declares " +
                             std::to_string(h.depth()));
  }
  for (int level = 1; level <= h.depth(); ++level) {
    if (at_level(level).rows() != h.count_at(level)) {
      throw std::runtime_error(
          "prototype count at level " + std::to_string(level) + " is " +
          std::to_string(at_level(level).rows()) + ", hierarchy has " +
          std::to_string(h.count_at(level)) + " nodes");
    }
  }
}

Vec similarities(std::span<const double> v, const PrototypeSet& ps,
                 int level) {
  const Matrix& m = ps.at_level(level);
  Vec out(m.rows());
  for (size_t i = 0; i < m.rows(); ++i) {
    out[i] = cosine_sim(v, m.row(i));
  }
  return out;
}

std::string PrototypeSet::to_text() const {
  std::string out;
  out += "prototypes v1\n";
  out += "d_p " + std::to_string(d_p_) + "\n";
  out += "levels " + std::to_string(max_level()) + "\n";
  for (int level = 1; level <= max_level(); ++level) {
    const Matrix& m = levels_[static_cast<size_t>(level - 1)];
    out += "level " + std::to_string(level) + " " + std::to_string(m.rows()) +
           "\n";
    for (size_t i = 0; i < m.rows(); ++i) {
      append_row(out, m.row(i));
    }
  }
  return out;
}

PrototypeSet PrototypeSet::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next = [&](const char* what) -> std::string {
    if (!std::getline(in, line)) {
      throw std::runtime_error(std::string("prototype file: missing ") + what);
    }
    return line;
  };
  if (next("header") != "prototypes v1") {
    throw std::runtime_error("prototype file: bad header");
  }
  auto expect_kv = [&](const std::string& key) -> long {
    std::string l = next(key.c_str());
    auto fields = split(l, ' ');
    if (fields.size() != 2 || fields[0] != key) {
      throw std::runtime_error("prototype file: expected '" + key + " <n>'");
    }
    return parse_long(fields[1], key);
  };
  PrototypeSet ps;
  ps.d_p_ = static_cast<int>(expect_kv("d_p"));
  long levels = expect_kv("levels");
  if (ps.d_p_ < 2 || levels < 1 || levels > kMaxLevel) {
    throw std::runtime_error("prototype file: bad dimensions");
  }
  ps.levels_.resize(static_cast<size_t>(levels));
  for (long l = 1; l <= levels; ++l) {
    auto fields = split(next("level header"), ' ');
    if (fields.size() != 3 || fields[0] != "level" ||
        parse_long(fields[1], "level") != l) {
      throw std::runtime_error("prototype file: expected 'level " +
                               std::to_string(l) + " <rows>'");
    }
    long rows = parse_long(fields[2], "rows");
    if (rows < 1) {
      throw std::runtime_error("prototype file: level " + std::to_string(l) +
                               " must have at least one row");
    }
    Matrix m(static_cast<size_t>(rows), static_cast<size_t>(ps.d_p_));
    for (long i = 0; i < rows; ++i) {
      auto vals = parse_row(next("prototype row"), m.cols());
      std::copy(vals.begin(), vals.end(), m.row(static_cast<size_t>(i)).begin());
    }
    ps.levels_[static_cast<size_t>(l - 1)] = std::move(m);
  }
  return ps;
}

PrototypeSet PrototypeSet::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

}  // namespace protoverb
