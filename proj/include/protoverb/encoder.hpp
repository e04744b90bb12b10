#ifndef PROTOVERB_ENCODER_HPP
#define PROTOVERB_ENCODER_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "protoverb/linalg.hpp"

namespace protoverb {

struct EncoderConfig {
  uint32_t vocab_buckets = 1u << 15;
  int d_h = 64;   // hidden width
  int d_p = 128;  // prototype-space width
};

// Trainable reference encoder: mean-pooled hashed-token embeddings followed
// by a linear projection into prototype space.
struct EncoderParams {
  uint32_t vocab_buckets = 0;
  Matrix token_table;  // vocab_buckets x d_h
  Matrix projection;   // d_p x d_h

  int d_h() const { return static_cast<int>(token_table.cols()); }
  int d_p() const { return static_cast<int>(projection.rows()); }

  static EncoderParams init(const EncoderConfig& cfg, uint64_t seed);

  std::string to_text() const;
  static EncoderParams parse(std::string_view text);
};

// Lowercases ASCII, splits on whitespace/punctuation, hashes each token into
// a fixed bucket space. Deterministic across runs and platforms.
std::vector<uint32_t> tokenize(std::string_view text, uint32_t vocab_buckets);

struct EncodeResult {
  Vec h;  // mean of token rows
  Vec v;  // projection * h
};

EncodeResult encode(const EncoderParams& p, std::span<const uint32_t> tokens);

// Projection-only path for externally supplied hidden states.
Vec project_hidden(const EncoderParams& p, std::span<const double> h);

struct EncoderGrads {
  Matrix d_token_table;
  Matrix d_projection;

  static EncoderGrads zeros_like(const EncoderParams& p);
  void reset();
};

// dL/dW += grad_v (x) h; dL/drow(t) += (W^T grad_v) / n_tokens per occurrence.
void encode_backward(const EncoderParams& p, std::span<const uint32_t> tokens,
                     std::span<const double> h, std::span<const double> grad_v,
                     EncoderGrads& grads);

// Backward for the external-embedding path: only the projection learns.
void project_hidden_backward(const EncoderParams& p, std::span<const double> h,
                             std::span<const double> grad_v,
                             EncoderGrads& grads);

// Embedding record file: instance_id<TAB>v1 v2 ... v_{d_h}, one per line.
class ExternalEmbeddings {
 public:
  static ExternalEmbeddings parse(std::string_view text, int d_h);
  static ExternalEmbeddings load(const std::filesystem::path& path, int d_h);

  bool has(const std::string& instance_id) const;
  const Vec& hidden(const std::string& instance_id) const;
  size_t size() const { return table_.size(); }

  std::string to_text() const;

 private:
  std::map<std::string, Vec> table_;
};

}  // namespace protoverb

#endif
