#include "protoverb/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "protoverb/io_util.hpp"
#include "protoverb/rng.hpp"

namespace protoverb {

namespace {

// FNV-1a 64-bit. std::hash is not pinned by the standard.
uint64_t fnv1a(std::string_view token) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool is_token_char(unsigned char c) {
  // Bytes >= 0x80 are kept so non-ASCII scripts still form tokens.
  return std::isalnum(c) || c >= 0x80;
}

}  // namespace

std::vector<uint32_t> tokenize(std::string_view text, uint32_t vocab_buckets) {
  if (vocab_buckets == 0) {
    throw std::invalid_argument("vocab_buckets must be positive");
  }
  std::vector<uint32_t> ids;
  std::string token;
  auto flush = [&]() {
    if (!token.empty()) {
      ids.push_back(static_cast<uint32_t>(fnv1a(token) % vocab_buckets));
      token.clear();
    }
  };
  for (unsigned char c : text) {
    if (is_token_char(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return ids;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, uint64_t seed) {
  if (cfg.d_h < 1 || cfg.d_p < 1) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
  EncoderParams p;
  p.vocab_buckets = cfg.vocab_buckets;
  p.token_table = Matrix(cfg.vocab_buckets, static_cast<size_t>(cfg.d_h));
  p.projection = Matrix(static_cast<size_t>(cfg.d_p),
                        static_cast<size_t>(cfg.d_h));
  Rng rng(seed);
  const double token_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_h));
  for (double& x : p.token_table.data()) x = rng.normal(0.0, token_std);
  for (double& x : p.projection.data()) x = rng.normal(0.0, token_std);
  return p;
}

EncodeResult encode(const EncoderParams& p, std::span<const uint32_t> tokens) {
  if (tokens.empty()) {
    throw std::invalid_argument("encode: empty token list");
  }
  EncodeResult out;
  out.h.assign(static_cast<size_t>(p.d_h()), 0.0);
  for (uint32_t t : tokens) {
    if (t >= p.token_table.rows()) {
      throw std::out_of_range("token id out of bucket range");
    }
    axpy(1.0, p.token_table.row(t), out.h);
  }
  scale(out.h, 1.0 / static_cast<double>(tokens.size()));
  out.v = project_hidden(p, out.h);
  return out;
}

Vec project_hidden(const EncoderParams& p, std::span<const double> h) {
  if (h.size() != static_cast<size_t>(p.d_h())) {
    throw std::invalid_argument("hidden state has dimension " +
                                std::to_string(h.size()) + ", expected " +
                                std::to_string(p.d_h()));
  }
  Vec v(static_cast<size_t>(p.d_p()), 0.0);
  for (size_t i = 0; i < v.size(); ++i) {
    v[i] = dot(p.projection.row(i), h);
  }
  return v;
}

EncoderGrads EncoderGrads::zeros_like(const EncoderParams& p) {
  EncoderGrads g;
  g.d_token_table = Matrix(p.token_table.rows(), p.token_table.cols());
  g.d_projection = Matrix(p.projection.rows(), p.projection.cols());
  return g;
}

void EncoderGrads::reset() {
  d_token_table.fill(0.0);
  d_projection.fill(0.0);
}

void project_hidden_backward(const EncoderParams& p, std::span<const double> h,
                             std::span<const double> grad_v,
                             EncoderGrads& grads) {
  if (grad_v.size() != static_cast<size_t>(p.d_p()) ||
      h.size() != static_cast<size_t>(p.d_h())) {
    throw std::invalid_argument("project_hidden_backward: dimension mismatch");
  }
  for (size_t i = 0; i < grad_v.size(); ++i) {
    axpy(grad_v[i], h, grads.d_projection.row(i));
  }
}

void encode_backward(const EncoderParams& p, std::span<const uint32_t> tokens,
                     std::span<const double> h, std::span<const double> grad_v,
                     EncoderGrads& grads) {
  if (tokens.empty()) {
    throw std::invalid_argument("encode_backward: empty token list");
  }
  project_hidden_backward(p, h, grad_v, grads);
  // dL/dh = W^T grad_v
  Vec grad_h(static_cast<size_t>(p.d_h()), 0.0);
  for (size_t i = 0; i < grad_v.size(); ++i) {
    axpy(grad_v[i], p.projection.row(i), grad_h);
  }
  const double inv_n = 1.0 / static_cast<double>(tokens.size());
  for (uint32_t t : tokens) {
    axpy(inv_n, grad_h, grads.d_token_table.row(t));
  }
}

std::string EncoderParams::to_text() const {
  std::string out;
  out += "encoder v1\n";
  out += "vocab " + std::to_string(vocab_buckets) + "\n";
  out += "d_h " + std::to_string(d_h()) + "\n";
  out += "d_p " + std::to_string(d_p()) + "\n";
  out += "token_table\n";
  for (size_t i = 0; i < token_table.rows(); ++i) {
    append_row(out, token_table.row(i));
  }
  out += "projection\n";
  for (size_t i = 0; i < projection.rows(); ++i) {
    append_row(out, projection.row(i));
  }
  return out;
}

EncoderParams EncoderParams::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next = [&](const char* what) -> std::string {
    if (!std::getline(in, line)) {
      throw std::runtime_error(std::string("encoder file: missing ") + what);
    }
    return line;
  };
  if (next("header") != "encoder v1") {
    throw std::runtime_error("encoder file: bad header");
  }
  auto expect_kv = [&](const std::string& key) -> long {
    std::string l = next(key.c_str());
    auto fields = split(l, ' ');
    if (fields.size() != 2 || fields[0] != key) {
      throw std::runtime_error("encoder file: expected '" + key + " <n>'");
    }
    return parse_long(fields[1], key);
  };
  long vocab = expect_kv("vocab");
  long d_h = expect_kv("d_h");
  long d_p = expect_kv("d_p");
  if (vocab < 1 || d_h < 1 || d_p < 1) {
    throw std::runtime_error("encoder file: bad dimensions");
  }
  EncoderParams p;
  p.vocab_buckets = static_cast<uint32_t>(vocab);
  p.token_table = Matrix(static_cast<size_t>(vocab), static_cast<size_t>(d_h));
  p.projection = Matrix(static_cast<size_t>(d_p), static_cast<size_t>(d_h));
  if (next("token_table marker") != "token_table") {
    throw std::runtime_error("encoder file: expected 'token_table'");
  }
  for (size_t i = 0; i < p.token_table.rows(); ++i) {
    auto vals = parse_row(next("token row"), p.token_table.cols());
    std::copy(vals.begin(), vals.end(), p.token_table.row(i).begin());
  }
  if (next("projection marker") != "projection") {
    throw std::runtime_error("encoder file: expected 'projection'");
  }
  for (size_t i = 0; i < p.projection.rows(); ++i) {
    auto vals = parse_row(next("projection row"), p.projection.cols());
    std::copy(vals.begin(), vals.end(), p.projection.row(i).begin());
  }
  return p;
}

ExternalEmbeddings ExternalEmbeddings::parse(std::string_view text, int d_h) {
  ExternalEmbeddings out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("embeddings line " + std::to_string(lineno) +
                               ": expected instance_id<TAB>values");
    }
    std::string id = line.substr(0, tab);
    if (id.empty()) {
      throw std::runtime_error("embeddings line " + std::to_string(lineno) +
                               ": empty instance id");
    }
    Vec h;
    try {
      h = parse_row(std::string_view(line).substr(tab + 1),
                    static_cast<size_t>(d_h));
    } catch (const std::exception& e) {
      throw std::runtime_error("embeddings line " + std::to_string(lineno) +
                               ": " + e.what());
    }
    if (!out.table_.emplace(std::move(id), std::move(h)).second) {
      throw std::runtime_error("embeddings line " + std::to_string(lineno) +
                               ": duplicate instance id '" +
                               line.substr(0, tab) + "'");
    }
  }
  return out;
}

ExternalEmbeddings ExternalEmbeddings::load(const std::filesystem::path& path,
                                            int d_h) {
  return parse(read_file(path), d_h);
}

bool ExternalEmbeddings::has(const std::string& instance_id) const {
  return table_.count(instance_id) > 0;
}

const Vec& ExternalEmbeddings::hidden(const std::string& instance_id) const {
  auto it = table_.find(instance_id);
  if (it == table_.end()) {
    throw std::runtime_error("no external embedding for instance '" +
                             instance_id + "'");
  }
  return it->second;
}

std::string ExternalEmbeddings::to_text() const {
  std::string out;
  for (const auto& [id, h] : table_) {
    out += id;
    out.push_back('\t');
    for (size_t i = 0; i < h.size(); ++i) {
      if (i > 0) out.push_back(' ');
      out += format_double(h[i]);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace protoverb
