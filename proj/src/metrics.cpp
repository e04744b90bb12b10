#include "protoverb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "protoverb/io_util.hpp"

namespace protoverb {

Prediction predict(std::span<const double> v, const PrototypeSet& ps,
                   const SenseHierarchy& h, int level) {
  const Vec sims = similarities(v, ps, level);
  Prediction out;
  out.level = level;
  out.probs.resize(sims.size());
  double max_sim = sims[0];
  for (double s : sims) max_sim = std::max(max_sim, s);
  double denom = 0.0;
  for (size_t j = 0; j < sims.size(); ++j) {
    out.probs[j] = std::exp(sims[j] - max_sim);
    denom += out.probs[j];
  }
  for (double& p : out.probs) p /= denom;
  out.argmax = 0;
  for (size_t j = 1; j < sims.size(); ++j) {
    if (sims[j] > sims[out.argmax]) out.argmax = static_cast<int>(j);
  }
  out.node = h.node_at_row(level, out.argmax);
  return out;
}

std::vector<int> gold_rows_at_level(const std::vector<std::string>& paths,
                                    const SenseHierarchy& h, int level) {
  std::vector<int> rows;
  for (const std::string& path : paths) {
    auto chain = h.resolve_path(path);
    if (chain.size() < static_cast<size_t>(level)) continue;
    int row = h.row_index(chain[static_cast<size_t>(level - 1)]);
    if (std::find(rows.begin(), rows.end(), row) == rows.end()) {
      rows.push_back(row);
    }
  }
  if (rows.empty()) {
    throw std::runtime_error("no gold label at level " + std::to_string(level));
  }
  return rows;
}

MetricsReport evaluate(const std::vector<EncodedInstance>& instances,
                       const PrototypeSet& ps, const SenseHierarchy& h,
                       int level) {
  if (!h.has_level(level)) {
    throw std::out_of_range("level " + std::to_string(level) +
                            " is not declared in the hierarchy");
  }
  // Check the gold precondition up front so the error can list every
  // offending instance rather than the first.
  std::vector<std::vector<int>> golds(instances.size());
  std::string missing;
  for (size_t i = 0; i < instances.size(); ++i) {
    try {
      golds[i] = gold_rows_at_level(instances[i].sense_paths, h, level);
    } catch (const std::exception&) {
      if (!missing.empty()) missing += ", ";
      missing += instances[i].id;
    }
  }
  if (!missing.empty()) {
    throw std::runtime_error("instances without a level-" +
                             std::to_string(level) + " label: " + missing);
  }

  const size_t m = h.count_at(level);
  MetricsReport report;
  report.level = level;
  report.confusion = Matrix(m, m);
  report.instance_count = instances.size();

  size_t correct = 0;
  for (size_t i = 0; i < instances.size(); ++i) {
    Prediction pred = predict(as_span(instances[i].v), ps, h, level);
    const auto& gold = golds[i];
    auto hit = std::find(gold.begin(), gold.end(), pred.argmax);
    if (hit != gold.end()) {
      ++correct;
      report.confusion.at(static_cast<size_t>(*hit),
                          static_cast<size_t>(pred.argmax)) += 1.0;
    } else {
      report.confusion.at(static_cast<size_t>(gold.front()),
                          static_cast<size_t>(pred.argmax)) += 1.0;
    }
  }
  report.accuracy = instances.empty()
                        ? 0.0
                        : static_cast<double>(correct) /
                              static_cast<double>(instances.size());
  report.macro_f1 = macro_f1(report.confusion);
  const auto f1s = per_class_f1(report.confusion);
  for (size_t j = 0; j < m; ++j) {
    const NodeId id = h.node_at_row(level, static_cast<int>(j));
    report.per_class_f1[h.node(id).name] = f1s[j];
  }
  return report;
}

std::vector<double> per_class_f1(const Matrix& confusion) {
  if (confusion.rows() != confusion.cols()) {
    throw std::invalid_argument("confusion matrix must be square");
  }
  const size_t m = confusion.rows();
  std::vector<double> out(m, 0.0);
  for (size_t c = 0; c < m; ++c) {
    double tp = confusion.at(c, c);
    double fp = 0.0;
    double fn = 0.0;
    for (size_t k = 0; k < m; ++k) {
      if (k == c) continue;
      fp += confusion.at(k, c);
      fn += confusion.at(c, k);
    }
    if (confusion.at(c, c) < 0.0 || fp < 0.0 || fn < 0.0) {
      throw std::invalid_argument("confusion matrix has negative counts");
    }
    const double precision = (tp + fp) > 0.0 ? tp / (tp + fp) : 0.0;
    const double recall = (tp + fn) > 0.0 ? tp / (tp + fn) : 0.0;
    out[c] = (precision + recall) > 0.0
                 ? 2.0 * precision * recall / (precision + recall)
                 : 0.0;
  }
  return out;
}

double macro_f1(const Matrix& confusion) {
  const auto f1s = per_class_f1(confusion);
  if (f1s.empty()) return 0.0;
  double sum = 0.0;
  for (double f : f1s) sum += f;
  return sum / static_cast<double>(f1s.size());
}

std::string report_to_json(const MetricsReport& r) {
  // Hand-emitted so every real is a fixed 4-decimal literal.
  std::string out;
  out += "{\n";
  out += "  \"level\": " + std::to_string(r.level) + ",\n";
  out += "  \"instances\": " + std::to_string(r.instance_count) + ",\n";
  out += "  \"accuracy\": " + fixed4(r.accuracy) + ",\n";
  out += "  \"macro_f1\": " + fixed4(r.macro_f1) + ",\n";
  out += "  \"per_class_f1\": {\n";
  size_t i = 0;
  for (const auto& [name, f1] : r.per_class_f1) {
    out += "    \"" + name + "\": " + fixed4(f1);
    out += (++i < r.per_class_f1.size()) ? ",\n" : "\n";
  }
  out += "  },\n";
  out += "  \"confusion\": [\n";
  for (size_t row = 0; row < r.confusion.rows(); ++row) {
    out += "    [";
    for (size_t col = 0; col < r.confusion.cols(); ++col) {
      if (col > 0) out += ", ";
      out += std::to_string(static_cast<long long>(r.confusion.at(row, col)));
    }
    out += row + 1 < r.confusion.rows() ? "],\n" : "]\n";
  }
  out += "  ]\n";
  out += "}\n";
  return out;
}

}  // namespace protoverb
