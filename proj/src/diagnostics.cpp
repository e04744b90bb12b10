#include "protoverb/diagnostics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "protoverb/io_util.hpp"

namespace protoverb {

namespace {

// Gold rows per instance; instances whose paths stop above `level` get an
// empty list here (diagnostics tolerates them, evaluation does not).
std::vector<std::vector<int>> gold_rows_lenient(
    const std::vector<EncodedInstance>& test_set, const SenseHierarchy& h,
    int level) {
  std::vector<std::vector<int>> out(test_set.size());
  for (size_t i = 0; i < test_set.size(); ++i) {
    for (const std::string& path : test_set[i].sense_paths) {
      auto chain = h.resolve_path(path);
      if (chain.size() < static_cast<size_t>(level)) continue;
      int row = h.row_index(chain[static_cast<size_t>(level - 1)]);
      if (std::find(out[i].begin(), out[i].end(), row) == out[i].end()) {
        out[i].push_back(row);
      }
    }
  }
  return out;
}

}  // namespace

std::map<std::string, double> avg_cos_distance(
    const std::vector<EncodedInstance>& test_set, const PrototypeSet& ps,
    const SenseHierarchy& h, int level) {
  if (test_set.empty()) {
    throw std::invalid_argument("avg_cos_distance: empty test set");
  }
  const auto golds = gold_rows_lenient(test_set, h, level);
  const Matrix& protos = ps.at_level(level);

  std::vector<double> sums(protos.rows(), 0.0);
  std::vector<size_t> counts(protos.rows(), 0);
  for (size_t i = 0; i < test_set.size(); ++i) {
    for (int row : golds[i]) {
      const double s = cosine_sim(as_span(test_set[i].v),
                                  protos.row(static_cast<size_t>(row)));
      sums[static_cast<size_t>(row)] += 1.0 - s;
      counts[static_cast<size_t>(row)] += 1;
    }
  }
  std::map<std::string, double> out;
  for (size_t row = 0; row < protos.rows(); ++row) {
    if (counts[row] == 0) continue;  // absent, not zero
    const NodeId id = h.node_at_row(level, static_cast<int>(row));
    out[h.node(id).name] = sums[row] / static_cast<double>(counts[row]);
  }
  return out;
}

std::map<std::string, std::map<std::string, double>> topk_neighbors(
    const std::vector<EncodedInstance>& test_set, const PrototypeSet& ps,
    const SenseHierarchy& h, int level, int k) {
  if (k < 1) {
    throw std::invalid_argument("topk_neighbors: k must be >= 1");
  }
  if (test_set.empty()) {
    throw std::invalid_argument("topk_neighbors: empty test set");
  }
  const auto golds = gold_rows_lenient(test_set, h, level);
  const Matrix& protos = ps.at_level(level);
  const size_t take = std::min(static_cast<size_t>(k), test_set.size());

  std::map<std::string, std::map<std::string, double>> out;
  std::vector<size_t> order(test_set.size());
  std::vector<double> sims(test_set.size());
  for (size_t row = 0; row < protos.rows(); ++row) {
    for (size_t i = 0; i < test_set.size(); ++i) {
      sims[i] = cosine_sim(as_span(test_set[i].v), protos.row(row));
    }
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return sims[a] > sims[b]; });

    const NodeId proto_id = h.node_at_row(level, static_cast<int>(row));
    auto& hist = out[h.node(proto_id).name];
    for (size_t rank = 0; rank < take; ++rank) {
      const size_t i = order[rank];
      const auto& gold = golds[i];
      if (gold.empty()) continue;  // neighbor without a label at this level
      const double share = 1.0 / static_cast<double>(gold.size());
      for (int g : gold) {
        const NodeId gid = h.node_at_row(level, g);
        hist[h.node(gid).name] += share;
      }
    }
  }
  return out;
}

DiagnosticsReport run_diagnostics(const std::vector<EncodedInstance>& test_set,
                                  const PrototypeSet& ps,
                                  const SenseHierarchy& h, int level, int k) {
  DiagnosticsReport r;
  r.level = level;
  r.k = k;
  r.avg_cos_distance = avg_cos_distance(test_set, ps, h, level);
  r.neighbor_dist = topk_neighbors(test_set, ps, h, level, k);
  return r;
}

std::string avg_distance_csv(const DiagnosticsReport& r) {
  std::string out = "class,distance\n";
  for (const auto& [name, dist] : r.avg_cos_distance) {
    out += name + "," + fixed4(dist) + "\n";
  }
  return out;
}

std::string neighbors_csv(const DiagnosticsReport& r) {
  std::string out = "prototype,label,count\n";
  for (const auto& [proto, hist] : r.neighbor_dist) {
    for (const auto& [label, count] : hist) {
      out += proto + "," + label + "," + fixed4(count) + "\n";
    }
  }
  return out;
}

}  // namespace protoverb
