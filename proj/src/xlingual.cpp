#include "protoverb/xlingual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "protoverb/io_util.hpp"

namespace protoverb {

UpdateMode parse_update_mode(const std::string& text) {
  if (text == "target_only") return UpdateMode::kTargetOnly;
  if (text == "both") return UpdateMode::kBoth;
  throw std::runtime_error("unknown update mode '" + text +
                           "' (expected target_only or both)");
}

std::string update_mode_name(UpdateMode mode) {
  return mode == UpdateMode::kTargetOnly ? "target_only" : "both";
}

void AlignmentConfig::validate() const {
  if (tau_align <= 0.0) {
    throw std::runtime_error("alignment: tau_align must be positive");
  }
  if (steps < 1) throw std::runtime_error("alignment: steps must be >= 1");
  if (learning_rate < 0.0) {
    throw std::runtime_error("alignment: learning_rate must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::runtime_error("alignment: beta1/beta2 must be in [0, 1)");
  }
  if (epsilon <= 0.0) {
    throw std::runtime_error("alignment: epsilon must be positive");
  }
}

AlignmentConfig AlignmentConfig::from_config(
    const std::map<std::string, std::string>& kv) {
  AlignmentConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "tau_align") {
      cfg.tau_align = parse_double(value);
    } else if (key == "steps") {
      cfg.steps = static_cast<int>(parse_long(value, key));
    } else if (key == "learning_rate") {
      cfg.learning_rate = parse_double(value);
    } else if (key == "update_mode") {
      cfg.update_mode = parse_update_mode(value);
    } else if (key == "seed") {
      cfg.seed = static_cast<uint64_t>(parse_long(value, key));
    } else if (key == "beta1") {
      cfg.beta1 = parse_double(value);
    } else if (key == "beta2") {
      cfg.beta2 = parse_double(value);
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double(value);
    } else {
      throw std::runtime_error("alignment config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

std::string AlignmentConfig::to_text() const {
  std::string out;
  out += "tau_align = " + format_double(tau_align) + "\n";
  out += "steps = " + std::to_string(steps) + "\n";
  out += "learning_rate = " + format_double(learning_rate) + "\n";
  out += "update_mode = " + update_mode_name(update_mode) + "\n";
  out += "seed = " + std::to_string(seed) + "\n";
  out += "beta1 = " + format_double(beta1) + "\n";
  out += "beta2 = " + format_double(beta2) + "\n";
  out += "epsilon = " + format_double(epsilon) + "\n";
  return out;
}

ClassCorrespondence build_correspondence(const SenseHierarchy& src,
                                         const SenseHierarchy& tgt,
                                         int level) {
  if (!src.has_level(level) || !tgt.has_level(level)) {
    throw std::runtime_error("correspondence: level " + std::to_string(level) +
                             " missing from one of the hierarchies");
  }
  const auto& src_nodes = src.nodes_at(level);
  const auto& tgt_nodes = tgt.nodes_at(level);
  if (src_nodes.size() != tgt_nodes.size()) {
    throw std::runtime_error(
        "correspondence: class counts differ at level " +
        std::to_string(level) + " (" + std::to_string(src_nodes.size()) +
        " vs " + std::to_string(tgt_nodes.size()) + ")");
  }
  ClassCorrespondence corr;
  corr.level = level;
  corr.target_row_of.resize(src_nodes.size());
  for (size_t i = 0; i < src_nodes.size(); ++i) {
    const std::string& name = src.node(src_nodes[i]).name;
    bool found = false;
    for (size_t j = 0; j < tgt_nodes.size(); ++j) {
      if (tgt.node(tgt_nodes[j]).name == name) {
        corr.target_row_of[i] = static_cast<int>(j);
        found = true;
        break;
      }
    }
    if (!found) {
      throw std::runtime_error("correspondence: class '" + name +
                               "' has no counterpart at level " +
                               std::to_string(level));
    }
  }
  return corr;
}

namespace {

void check_correspondence(const ClassCorrespondence& corr, size_t m) {
  if (corr.target_row_of.size() != m) {
    throw std::runtime_error("correspondence does not cover every class");
  }
  std::vector<bool> seen(m, false);
  for (int t : corr.target_row_of) {
    if (t < 0 || static_cast<size_t>(t) >= m || seen[static_cast<size_t>(t)]) {
      throw std::runtime_error("correspondence is not a bijection");
    }
    seen[static_cast<size_t>(t)] = true;
  }
}

// Shared softmax-contrast helper over anchor vs. candidate rows.
double directional_term(const Matrix& anchors, const Matrix& candidates,
                        const std::vector<int>& positive_of, double tau,
                        double coeff, Matrix& d_anchors, Matrix& d_candidates) {
  const size_t m = anchors.rows();
  const size_t n_cand = candidates.rows();
  std::vector<double> anchor_norms(m), cand_norms(n_cand);
  for (size_t i = 0; i < m; ++i) anchor_norms[i] = norm(anchors.row(i));
  for (size_t j = 0; j < n_cand; ++j) cand_norms[j] = norm(candidates.row(j));
  for (double n : anchor_norms) {
    if (n <= kNormGuard) throw std::runtime_error("prototype norm below guard");
  }
  for (double n : cand_norms) {
    if (n <= kNormGuard) throw std::runtime_error("prototype norm below guard");
  }

  double total = 0.0;
  std::vector<double> sims(n_cand), d_sims(n_cand);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n_cand; ++j) {
      sims[j] = dot(anchors.row(i), candidates.row(j)) /
                (anchor_norms[i] * cand_norms[j]);
    }
    const size_t pos = static_cast<size_t>(positive_of[i]);
    double max_sim = sims[0];
    for (double s : sims) max_sim = std::max(max_sim, s);
    double denom = 0.0;
    for (double s : sims) denom += std::exp((s - max_sim) / tau);
    const double log_denom = max_sim / tau + std::log(denom);
    total += log_denom - sims[pos] / tau;

    for (size_t j = 0; j < n_cand; ++j) {
      const double softmax_j = std::exp(sims[j] / tau - log_denom);
      double g = softmax_j / tau;
      if (j == pos) g -= 1.0 / tau;
      g *= coeff;
      if (g == 0.0) continue;
      // d sim / d anchor and d sim / d candidate.
      axpy(g / (anchor_norms[i] * cand_norms[j]), candidates.row(j),
           d_anchors.row(i));
      axpy(-g * sims[j] / (anchor_norms[i] * anchor_norms[i]), anchors.row(i),
           d_anchors.row(i));
      axpy(g / (anchor_norms[i] * cand_norms[j]), anchors.row(i),
           d_candidates.row(j));
      axpy(-g * sims[j] / (cand_norms[j] * cand_norms[j]), candidates.row(j),
           d_candidates.row(j));
    }
  }
  return total;
}

}  // namespace

AlignmentLoss alignment_loss(const PrototypeSet& src, const PrototypeSet& tgt,
                             const ClassCorrespondence& corr, int level,
                             double tau_align) {
  if (tau_align <= 0.0) {
    throw std::invalid_argument("alignment temperature must be positive");
  }
  const Matrix& s = src.at_level(level);
  const Matrix& t = tgt.at_level(level);
  if (s.rows() != t.rows() || s.cols() != t.cols()) {
    throw std::invalid_argument(
        "alignment: prototype shapes differ between languages");
  }
  check_correspondence(corr, s.rows());

  const size_t m = s.rows();
  AlignmentLoss out;
  out.d_src = Matrix(s.rows(), s.cols());
  out.d_tgt = Matrix(t.rows(), t.cols());

  std::vector<int> src_row_of(m);
  for (size_t i = 0; i < m; ++i) {
    src_row_of[static_cast<size_t>(corr.target_row_of[i])] =
        static_cast<int>(i);
  }
  const double coeff = 1.0 / (2.0 * static_cast<double>(m));
  double total = 0.0;
  total += directional_term(s, t, corr.target_row_of, tau_align, coeff,
                            out.d_src, out.d_tgt);
  total += directional_term(t, s, src_row_of, tau_align, coeff, out.d_tgt,
                            out.d_src);
  out.loss = coeff * total;
  return out;
}

AlignResult align(const PrototypeSet& src, const PrototypeSet& tgt,
                  const ClassCorrespondence& corr, int level,
                  const AlignmentConfig& cfg) {
  cfg.validate();
  AlignResult result;
  result.src = src;
  result.tgt = tgt;

  Matrix& s = result.src.at_level(level);
  Matrix& t = result.tgt.at_level(level);

  Matrix m_s(s.rows(), s.cols()), v_s(s.rows(), s.cols());
  Matrix m_t(t.rows(), t.cols()), v_t(t.rows(), t.cols());

  auto adam = [&](Matrix& theta, const Matrix& grad, Matrix& m1, Matrix& m2,
                  int step) {
    const double bias1 = 1.0 - std::pow(cfg.beta1, step);
    const double bias2 = 1.0 - std::pow(cfg.beta2, step);
    for (size_t i = 0; i < theta.data().size(); ++i) {
      m1.data()[i] =
          cfg.beta1 * m1.data()[i] + (1.0 - cfg.beta1) * grad.data()[i];
      m2.data()[i] = cfg.beta2 * m2.data()[i] +
                     (1.0 - cfg.beta2) * grad.data()[i] * grad.data()[i];
      const double m_hat = m1.data()[i] / bias1;
      const double v_hat = m2.data()[i] / bias2;
      theta.data()[i] -=
          cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  };

  for (int step = 1; step <= cfg.steps; ++step) {
    AlignmentLoss l =
        alignment_loss(result.src, result.tgt, corr, level, cfg.tau_align);
    if (!std::isfinite(l.loss)) {
      throw std::runtime_error("alignment loss is non-finite at step " +
                               std::to_string(step));
    }
    result.loss_history.push_back(l.loss);
    adam(t, l.d_tgt, m_t, v_t, step);
    if (cfg.update_mode == UpdateMode::kBoth) {
      adam(s, l.d_src, m_s, v_s, step);
    }
  }
  return result;
}

const Template& select_template(const TemplateSet& templates,
                                const std::string& language) {
  return templates.for_language(language);
}

}  // namespace protoverb
