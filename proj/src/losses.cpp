#include "protoverb/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace protoverb {

namespace {

// -log softmax(sims/tau)[pos]; accumulates coeff * dL/d sims into d_sims.
double softmax_ce(std::span<const double> sims, size_t pos, double tau,
                  double coeff, std::span<double> d_sims) {
  double max_sim = sims[0];
  for (double s : sims) max_sim = std::max(max_sim, s);
  const double m = max_sim / tau;
  double denom = 0.0;
  for (double s : sims) denom += std::exp(s / tau - m);
  const double log_denom = m + std::log(denom);
  const double loss = log_denom - sims[pos] / tau;
  for (size_t k = 0; k < sims.size(); ++k) {
    const double softmax_k = std::exp(sims[k] / tau - log_denom);
    double g = softmax_k / tau;
    if (k == pos) g -= 1.0 / tau;
    d_sims[k] += coeff * g;
  }
  return loss;
}

// out_u += coeff * d cos(u, w) / d u, with s = cos(u, w) and norms given.
void add_cos_grad(std::span<const double> u, double nu,
                  std::span<const double> w, double nw, double s, double coeff,
                  std::span<double> out_u) {
  axpy(coeff / (nu * nw), w, out_u);
  axpy(-coeff * s / (nu * nu), u, out_u);
}

std::vector<Vec> zero_vecs(size_t n, size_t dim) {
  return std::vector<Vec>(n, Vec(dim, 0.0));
}

void validate_batch(const Batch& b) {
  if (b.tau <= 0.0) {
    throw std::invalid_argument("batch temperature must be positive");
  }
  if (b.vecs.size() != b.paths.size()) {
    throw std::invalid_argument("batch vecs/paths size mismatch");
  }
  for (size_t i = 1; i < b.vecs.size(); ++i) {
    if (b.vecs[i].size() != b.vecs[0].size()) {
      throw std::invalid_argument("batch instance vectors differ in dimension");
    }
  }
}

void add_into(std::map<int, Matrix>& acc, const std::map<int, Matrix>& other,
              double scale_factor) {
  for (const auto& [level, m] : other) {
    auto it = acc.find(level);
    if (it == acc.end()) {
      it = acc.emplace(level, Matrix(m.rows(), m.cols())).first;
    }
    for (size_t k = 0; k < m.data().size(); ++k) {
      it->second.data()[k] += scale_factor * m.data()[k];
    }
  }
}

}  // namespace

InsInsResult loss_ins_ins(const Batch& b, int level) {
  validate_batch(b);
  const size_t n = b.size();
  if (n < 2) {
    throw std::invalid_argument("instance-instance loss needs a batch of >= 2");
  }
  std::vector<int> labels(n);
  for (size_t i = 0; i < n; ++i) {
    if (!b.covers_level(i, level)) {
      throw std::invalid_argument("instance " + std::to_string(i) +
                                  " has no label at level " +
                                  std::to_string(level));
    }
    labels[i] = b.label_at(i, level);
  }

  const size_t dim = b.vecs[0].size();
  std::vector<double> norms(n);
  for (size_t i = 0; i < n; ++i) {
    norms[i] = norm(as_span(b.vecs[i]));
    if (norms[i] <= kNormGuard) {
      throw std::runtime_error("instance vector " + std::to_string(i) +
                               " has near-zero norm");
    }
  }
  // Full pairwise cosine table.
  Matrix sims(n, n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double s =
          dot(as_span(b.vecs[i]), as_span(b.vecs[j])) / (norms[i] * norms[j]);
      sims.at(i, j) = s;
      sims.at(j, i) = s;
    }
  }

  InsInsResult res;
  res.d_vecs = zero_vecs(n, dim);

  // First pass: which anchors have positives.
  std::vector<size_t> anchors;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) {
        anchors.push_back(i);
        break;
      }
    }
  }
  if (anchors.empty()) {
    return res;  // skip rule: no positives anywhere -> loss 0
  }
  const double anchor_weight = 1.0 / static_cast<double>(anchors.size());

  std::vector<double> scores;
  std::vector<double> d_scores;
  std::vector<size_t> others;
  for (size_t i : anchors) {
    scores.clear();
    others.clear();
    size_t n_pos = 0;
    for (size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      others.push_back(k);
      scores.push_back(sims.at(k, i));
      if (labels[k] == labels[i]) ++n_pos;
    }
    d_scores.assign(scores.size(), 0.0);
    const double pos_weight = 1.0 / static_cast<double>(n_pos);
    double anchor_loss = 0.0;
    for (size_t idx = 0; idx < others.size(); ++idx) {
      if (labels[others[idx]] != labels[i]) continue;
      anchor_loss += pos_weight *
                     softmax_ce(scores, idx, b.tau,
                                anchor_weight * pos_weight, d_scores);
    }
    res.loss += anchor_weight * anchor_loss;
    // Push score gradients through the cosine pairs (k, i).
    for (size_t idx = 0; idx < others.size(); ++idx) {
      const double g = d_scores[idx];
      if (g == 0.0) continue;
      const size_t k = others[idx];
      const double s = sims.at(k, i);
      add_cos_grad(as_span(b.vecs[k]), norms[k], as_span(b.vecs[i]), norms[i],
                   s, g, res.d_vecs[k]);
      add_cos_grad(as_span(b.vecs[i]), norms[i], as_span(b.vecs[k]), norms[k],
                   s, g, res.d_vecs[i]);
    }
  }
  res.active_anchors = static_cast<int>(anchors.size());
  return res;
}

InsInsResult loss_ins_ins_multilevel(const Batch& b) {
  validate_batch(b);
  const size_t n = b.size();
  const size_t dim = n > 0 ? b.vecs[0].size() : 0;

  InsInsResult total;
  total.d_vecs = zero_vecs(n, dim);

  std::vector<InsInsResult> per_level;
  std::vector<std::vector<size_t>> member_maps;
  for (int level = 2; level <= kMaxLevel; ++level) {
    std::vector<size_t> members;
    for (size_t i = 0; i < n; ++i) {
      if (b.covers_level(i, level)) members.push_back(i);
    }
    if (members.size() < 2) continue;
    Batch sub;
    sub.tau = b.tau;
    for (size_t i : members) {
      sub.vecs.push_back(b.vecs[i]);
      sub.paths.push_back(b.paths[i]);
    }
    per_level.push_back(loss_ins_ins(sub, level));
    member_maps.push_back(std::move(members));
  }
  if (per_level.empty()) return total;

  const double level_weight = 1.0 / static_cast<double>(per_level.size());
  for (size_t l = 0; l < per_level.size(); ++l) {
    total.loss += level_weight * per_level[l].loss;
    total.active_anchors += per_level[l].active_anchors;
    const auto& members = member_maps[l];
    for (size_t sub_i = 0; sub_i < members.size(); ++sub_i) {
      axpy(level_weight, as_span(per_level[l].d_vecs[sub_i]),
           total.d_vecs[members[sub_i]]);
    }
  }
  return total;
}

InsProResult loss_ins_pro(const Batch& b, const PrototypeSet& ps) {
  validate_batch(b);
  const size_t n = b.size();
  if (n == 0) {
    throw std::invalid_argument("instance-prototype loss needs instances");
  }
  const size_t dim = b.vecs[0].size();
  if (dim != static_cast<size_t>(ps.dim())) {
    throw std::invalid_argument("instance dimension " + std::to_string(dim) +
                                " does not match prototype dimension " +
                                std::to_string(ps.dim()));
  }

  InsProResult res;
  res.d_vecs = zero_vecs(n, dim);

  const double batch_weight = 1.0 / static_cast<double>(n);
  std::vector<double> scores;
  std::vector<double> d_scores;
  for (size_t i = 0; i < n; ++i) {
    const Vec& v = b.vecs[i];
    const double nv = norm(as_span(v));
    if (nv <= kNormGuard) {
      throw std::runtime_error("instance vector " + std::to_string(i) +
                               " has near-zero norm");
    }
    const size_t depth = b.paths[i].size();
    if (depth == 0) {
      throw std::invalid_argument("instance " + std::to_string(i) +
                                  " has an empty label path");
    }
    const double level_weight = 1.0 / static_cast<double>(depth);
    for (size_t li = 0; li < depth; ++li) {
      const int level = static_cast<int>(li) + 1;
      if (!ps.has_level(level)) {
        throw std::runtime_error("label at level " + std::to_string(level) +
                                 " is missing from the prototype set");
      }
      const Matrix& protos = ps.at_level(level);
      const int row = b.paths[i][li];
      if (row < 0 || static_cast<size_t>(row) >= protos.rows()) {
        throw std::runtime_error("label row " + std::to_string(row) +
                                 " out of range at level " +
                                 std::to_string(level));
      }
      const size_t m = protos.rows();
      scores.resize(m);
      std::vector<double> proto_norms(m);
      for (size_t j = 0; j < m; ++j) {
        proto_norms[j] = norm(protos.row(j));
        if (proto_norms[j] <= kNormGuard) {
          throw std::runtime_error("prototype row " + std::to_string(j) +
                                   " at level " + std::to_string(level) +
                                   " has near-zero norm");
        }
        scores[j] = dot(as_span(v), protos.row(j)) / (nv * proto_norms[j]);
      }
      d_scores.assign(m, 0.0);
      const double coeff = batch_weight * level_weight;
      res.loss += coeff * softmax_ce(scores, static_cast<size_t>(row), b.tau,
                                     coeff, d_scores);
      auto it = res.d_protos.find(level);
      if (it == res.d_protos.end()) {
        it = res.d_protos.emplace(level, Matrix(m, dim)).first;
      }
      for (size_t j = 0; j < m; ++j) {
        const double g = d_scores[j];
        if (g == 0.0) continue;
        add_cos_grad(as_span(v), nv, protos.row(j), proto_norms[j], scores[j],
                     g, res.d_vecs[i]);
        add_cos_grad(protos.row(j), proto_norms[j], as_span(v), nv, scores[j],
                     g, it->second.row(j));
      }
    }
  }
  return res;
}

ProProResult loss_pro_pro(const PrototypeSet& ps, const SenseHierarchy& h,
                          double tau) {
  if (tau <= 0.0) {
    throw std::invalid_argument("temperature must be positive");
  }
  if (h.depth() < 2 || ps.max_level() < 2) {
    throw std::invalid_argument(
        "prototype-prototype loss needs at least two levels");
  }
  ps.check_matches(h);

  // Children: every node at levels >= 2, in level order then row order.
  size_t child_count = 0;
  for (int level = 2; level <= h.depth(); ++level) {
    child_count += h.count_at(level);
  }

  ProProResult res;
  for (int level = 1; level <= h.depth(); ++level) {
    const Matrix& m = ps.at_level(level);
    res.d_protos.emplace(level, Matrix(m.rows(), m.cols()));
  }

  const double child_weight = 1.0 / static_cast<double>(child_count);
  std::vector<double> scores;
  std::vector<double> d_scores;
  for (int level = 2; level <= h.depth(); ++level) {
    const Matrix& children = ps.at_level(level);
    const Matrix& fathers = ps.at_level(level - 1);
    const size_t m_f = fathers.rows();
    std::vector<double> father_norms(m_f);
    for (size_t j = 0; j < m_f; ++j) {
      father_norms[j] = norm(fathers.row(j));
      if (father_norms[j] <= kNormGuard) {
        throw std::runtime_error("prototype row " + std::to_string(j) +
                                 " at level " + std::to_string(level - 1) +
                                 " has near-zero norm");
      }
    }
    for (NodeId id : h.nodes_at(level)) {
      const int row = h.row_index(id);
      const int father_row = h.row_index(*h.parent_of(id));
      auto child = children.row(static_cast<size_t>(row));
      const double nc = norm(child);
      if (nc <= kNormGuard) {
        throw std::runtime_error("prototype row " + std::to_string(row) +
                                 " at level " + std::to_string(level) +
                                 " has near-zero norm");
      }
      scores.resize(m_f);
      for (size_t j = 0; j < m_f; ++j) {
        scores[j] = dot(child, fathers.row(j)) / (nc * father_norms[j]);
      }
      d_scores.assign(m_f, 0.0);
      res.loss += child_weight *
                  softmax_ce(scores, static_cast<size_t>(father_row), tau,
                             child_weight, d_scores);
      Matrix& d_children = res.d_protos.at(level);
      Matrix& d_fathers = res.d_protos.at(level - 1);
      for (size_t j = 0; j < m_f; ++j) {
        const double g = d_scores[j];
        if (g == 0.0) continue;
        add_cos_grad(child, nc, fathers.row(j), father_norms[j], scores[j], g,
                     d_children.row(static_cast<size_t>(row)));
        add_cos_grad(fathers.row(j), father_norms[j], child, nc, scores[j], g,
                     d_fathers.row(j));
      }
    }
  }
  return res;
}

LossBreakdown total_loss(const Batch& b, const PrototypeSet& ps,
                         const SenseHierarchy& h, const LossToggles& toggles) {
  validate_batch(b);
  const size_t n = b.size();
  const size_t dim = n > 0 ? b.vecs[0].size() : 0;

  LossBreakdown out;
  out.d_vecs = zero_vecs(n, dim);
  for (int level = 1; level <= ps.max_level(); ++level) {
    if (ps.has_level(level)) {
      const Matrix& m = ps.at_level(level);
      out.d_protos.emplace(level, Matrix(m.rows(), m.cols()));
    }
  }

  if (toggles.ins_ins) {
    InsInsResult r = loss_ins_ins_multilevel(b);
    out.ins_ins = r.loss;
    for (size_t i = 0; i < n; ++i) {
      axpy(1.0, as_span(r.d_vecs[i]), out.d_vecs[i]);
    }
  }
  {
    InsProResult r = loss_ins_pro(b, ps);
    out.ins_pro = r.loss;
    for (size_t i = 0; i < n; ++i) {
      axpy(1.0, as_span(r.d_vecs[i]), out.d_vecs[i]);
    }
    add_into(out.d_protos, r.d_protos, 1.0);
  }
  if (toggles.pro_pro && h.depth() >= 2) {
    ProProResult r = loss_pro_pro(ps, h, b.tau);
    out.pro_pro = r.loss;
    add_into(out.d_protos, r.d_protos, 1.0);
  }
  out.total = out.ins_ins + out.ins_pro + out.pro_pro;
  return out;
}

}  // namespace protoverb
