#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "lf/core/ops.hpp"
#include "lf/core/param_store.hpp"
#include "lf/core/tape.hpp"

namespace lf::core {

using Rng = std::mt19937_64;

inline constexpr double kLayerNormEps = 1e-5;

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor normal_init(Shape shape, double stddev, Rng& rng);

// Parameter registration and tape-level layers. Parameters live under
// "<prefix>.<part>" in the store.

void add_dense(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng);
Var dense(Tape& tape, const ParamStore& store, const std::string& prefix, Var x);

void add_layer_norm(ParamStore& store, const std::string& prefix, std::size_t width);
Var layer_norm(Tape& tape, const ParamStore& store, const std::string& prefix, Var x);

// Query/value/output projections carry biases; the key projection does not
// (a key bias cancels inside the softmax).
void add_attention(ParamStore& store, const std::string& prefix, std::size_t width, Rng& rng);
Var multi_head_attention(Tape& tape, const ParamStore& store, const std::string& prefix, Var tokens,
                         std::size_t seq_len, std::size_t heads, bool causal);

struct BlockConfig {
  std::size_t width = 32;
  std::size_t heads = 4;
  std::size_t ffn_hidden = 64;
  bool causal = false;
};

// Pre-norm block: x + attn(ln1(x)), then x + ffn(ln2(x)) with a GELU ffn.
void add_transformer_block(ParamStore& store, const std::string& prefix, const BlockConfig& cfg, Rng& rng);
Var transformer_block(Tape& tape, const ParamStore& store, const std::string& prefix, Var x,
                      std::size_t seq_len, const BlockConfig& cfg);

// Tensor-in, tensor-out entry points for one-off evaluation.
Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
Tensor multi_head_attention_forward(const Tensor& tokens, std::size_t heads, bool causal,
                                    const ParamStore& params, const std::string& prefix);

struct CrossEntropy {
  double loss = 0.0;
  Tensor grad;  // softmax(logits) - onehot(label)
};
CrossEntropy softmax_cross_entropy(const Tensor& logits, std::size_t label);

}  // namespace lf::core
