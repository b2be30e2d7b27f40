#include "lf/core/nn.hpp"

#include <cmath>

#include "lf/core/errors.hpp"

namespace lf::core {

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({fan_in, fan_out});
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

Tensor normal_init(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

void add_dense(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  store.add(prefix + ".w", xavier_uniform(in, out, rng));
  store.add(prefix + ".b", Tensor({out}));
}

Var dense(Tape& tape, const ParamStore& store, const std::string& prefix, Var x) {
  return add_bias(matmul(x, tape.param(store, prefix + ".w")), tape.param(store, prefix + ".b"));
}

void add_layer_norm(ParamStore& store, const std::string& prefix, std::size_t width) {
  store.add(prefix + ".gain", Tensor({width}, 1.0));
  store.add(prefix + ".bias", Tensor({width}));
}

Var layer_norm(Tape& tape, const ParamStore& store, const std::string& prefix, Var x) {
  return layer_norm(x, tape.param(store, prefix + ".gain"), tape.param(store, prefix + ".bias"), kLayerNormEps);
}

void add_attention(ParamStore& store, const std::string& prefix, std::size_t width, Rng& rng) {
  store.add(prefix + ".wq", xavier_uniform(width, width, rng));
  store.add(prefix + ".bq", Tensor({width}));
  store.add(prefix + ".wk", xavier_uniform(width, width, rng));
  store.add(prefix + ".wv", xavier_uniform(width, width, rng));
  store.add(prefix + ".bv", Tensor({width}));
  store.add(prefix + ".wo", xavier_uniform(width, width, rng));
  store.add(prefix + ".bo", Tensor({width}));
}

Var multi_head_attention(Tape& tape, const ParamStore& store, const std::string& prefix, Var tokens,
                         std::size_t seq_len, std::size_t heads, bool causal) {
  const std::size_t width = tokens.value().cols();
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("multi_head_attention: width " + std::to_string(width) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  Var q = add_bias(matmul(tokens, tape.param(store, prefix + ".wq")), tape.param(store, prefix + ".bq"));
  Var k = matmul(tokens, tape.param(store, prefix + ".wk"));
  Var v = add_bias(matmul(tokens, tape.param(store, prefix + ".wv")), tape.param(store, prefix + ".bv"));
  const std::size_t groups = tokens.value().rows() / seq_len;
  Var mixed = attention(q, k, v, groups, seq_len, heads, causal);
  return add_bias(matmul(mixed, tape.param(store, prefix + ".wo")), tape.param(store, prefix + ".bo"));
}

void add_transformer_block(ParamStore& store, const std::string& prefix, const BlockConfig& cfg, Rng& rng) {
  add_layer_norm(store, prefix + ".ln1", cfg.width);
  add_attention(store, prefix + ".attn", cfg.width, rng);
  add_layer_norm(store, prefix + ".ln2", cfg.width);
  add_dense(store, prefix + ".ffn1", cfg.width, cfg.ffn_hidden, rng);
  add_dense(store, prefix + ".ffn2", cfg.ffn_hidden, cfg.width, rng);
}

Var transformer_block(Tape& tape, const ParamStore& store, const std::string& prefix, Var x, std::size_t seq_len,
                      const BlockConfig& cfg) {
  Var h = layer_norm(tape, store, prefix + ".ln1", x);
  x = add(x, multi_head_attention(tape, store, prefix + ".attn", h, seq_len, cfg.heads, cfg.causal));
  h = layer_norm(tape, store, prefix + ".ln2", x);
  h = dense(tape, store, prefix + ".ffn2", gelu(dense(tape, store, prefix + ".ffn1", h)));
  return add(x, h);
}

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) throw DimensionError("dense_forward: weight must be a matrix, got " + shape_string(weight.shape()));
  if (x.cols() != weight.rows()) {
    throw DimensionError("dense_forward: input x " + shape_string(x.shape()) + " does not conform with weight W " +
                         shape_string(weight.shape()));
  }
  if (bias.size() != weight.cols()) {
    throw DimensionError("dense_forward: bias b " + shape_string(bias.shape()) + " does not match weight W " +
                         shape_string(weight.shape()));
  }
  Tape tape;
  return add_bias(matmul(tape.constant(x), tape.constant(weight)), tape.constant(bias)).value();
}

Tensor layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.empty() || x.cols() == 0) throw DimensionError("layer_norm: empty last axis");
  Tape tape;
  return layer_norm(tape.constant(x), tape.constant(gain), tape.constant(bias), eps).value();
}

Tensor multi_head_attention_forward(const Tensor& tokens, std::size_t heads, bool causal, const ParamStore& params,
                                    const std::string& prefix) {
  Tape tape;
  return multi_head_attention(tape, params, prefix, tape.constant(tokens), tokens.rows(), heads, causal).value();
}

CrossEntropy softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.size() < 2) throw DimensionError("softmax_cross_entropy: need at least 2 logits");
  Tape tape;
  Var z = tape.variable(logits.reshaped({1, logits.size()}));
  const std::size_t labels[] = {label};
  Var loss = softmax_cross_entropy(z, labels);
  tape.backward(loss);
  return {loss.value()[0], tape.grad(z).reshaped(logits.shape())};
}

}  // namespace lf::core
