#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lf/core/tape.hpp"

namespace lf::core {

// All ops treat their operands as matrices (rows() x cols()).

Var matmul(Var a, Var b);
Var add_bias(Var x, Var bias);
Var add(Var a, Var b);
Var relu(Var x);
Var gelu(Var x);
Var layer_norm(Var x, Var gain, Var bias, double eps);

// Scaled dot-product attention over `groups` independent sequences of
// `seq_len` rows each, stacked in q/k/v. Width is split across `heads`.
// With `causal` set, row t of a sequence sees rows <= t only.
Var attention(Var q, Var k, Var v, std::size_t groups, std::size_t seq_len, std::size_t heads,
              bool causal);

Var concat_cols(std::span<const Var> parts);
Var gather_rows(Var table, std::span<const std::size_t> indices);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var reshape(Var x, Shape shape);
// y[r, c] = x[r, c] * scale[r] + shift[r]; scale/shift are treated as constants.
Var rows_affine(Var x, std::span<const double> scale, std::span<const double> shift);

// Scalar losses.
Var mse_loss(Var pred, const Tensor& target);
// Mean over rows of -log softmax(logits[r])[labels[r]].
Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels);
// Sum over columns (tasks), mean over rows, of binary cross-entropy on
// sigmoid(logits) with probabilities clamped to [clamp, 1 - clamp].
Var sigmoid_bce(Var logits, const Tensor& labels, double clamp = 1e-7);

Tensor sigmoid(const Tensor& x);
Tensor softmax_rows(const Tensor& logits);

}  // namespace lf::core
