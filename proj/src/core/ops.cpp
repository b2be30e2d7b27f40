#include "lf/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "lf/core/errors.hpp"

namespace lf::core {

namespace {

bool any_grad(std::initializer_list<Var> vars) {
  for (const auto& v : vars) {
    if (v.tape->requires_grad(v.id)) return true;
  }
  return false;
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw StateError("operands recorded on different tapes");
}

// y[R x C] += a[R x K] * b[K x C]
// Four rows share each load of b; per-element summation order is unchanged.
void gemm_acc(const double* a, const double* b, double* y, std::size_t rows, std::size_t inner, std::size_t cols) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    double* __restrict y0 = y + r * cols;
    double* __restrict y1 = y0 + cols;
    double* __restrict y2 = y1 + cols;
    double* __restrict y3 = y2 + cols;
    const double* a0 = a + r * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double s0 = a0[k], s1 = a0[inner + k], s2 = a0[2 * inner + k], s3 = a0[3 * inner + k];
      if (s0 == 0.0 && s1 == 0.0 && s2 == 0.0 && s3 == 0.0) continue;
      const double* __restrict bk = b + k * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        const double v = bk[c];
        y0[c] += s0 * v;
        y1[c] += s1 * v;
        y2[c] += s2 * v;
        y3[c] += s3 * v;
      }
    }
  }
  for (; r < rows; ++r) {
    double* yr = y + r * cols;
    const double* ar = a + r * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double s = ar[k];
      if (s == 0.0) continue;
      const double* bk = b + k * cols;
      for (std::size_t c = 0; c < cols; ++c) yr[c] += s * bk[c];
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (bv.rank() != 2) throw DimensionError("matmul: right operand must be a matrix, got " + shape_string(bv.shape()));
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: left operand " + shape_string(av.shape()) + " does not conform with right operand " +
                         shape_string(bv.shape()));
  }
  const std::size_t rows = av.rows(), inner = av.cols(), cols = bv.cols();
  Tensor out({rows, cols});
  gemm_acc(av.data(), bv.data(), out.data(), rows, inner, cols);
  return a.tape->record(std::move(out), any_grad({a, b}), [a = a.id, b = b.id, rows, inner, cols](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (t.requires_grad(a)) {
      // da += dy * b^T, with b transposed so the inner loop is contiguous.
      std::vector<double> bt(inner * cols);
      for (std::size_t k = 0; k < inner; ++k)
        for (std::size_t c = 0; c < cols; ++c) bt[c * inner + k] = bv.data()[k * cols + c];
      gemm_acc(dy.data(), bt.data(), t.grad_ref(a).data(), rows, cols, inner);
    }
    if (t.requires_grad(b)) {
      // db += a^T * dy
      std::vector<double> at(rows * inner);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < inner; ++k) at[k * rows + r] = av.data()[r * inner + k];
      gemm_acc(at.data(), dy.data(), t.grad_ref(b).data(), inner, rows, cols);
    }
  });
}

Var add_bias(Var x, Var bias) {
  same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) + " does not match input " +
                         shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t rows = xv.rows(), cols = xv.cols();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  return x.tape->record(std::move(out), any_grad({x, bias}), [x = x.id, b = bias.id, rows, cols](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    if (t.requires_grad(x)) {
      Tensor& dx = t.grad_ref(x);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    }
    if (t.requires_grad(b)) {
      Tensor& db = t.grad_ref(b);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) db[c] += dy[r * cols + c];
    }
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size()) {
    throw DimensionError("add: operands " + shape_string(av.shape()) + " and " + shape_string(bv.shape()) + " differ");
  }
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record(std::move(out), any_grad({a, b}), [a = a.id, b = b.id](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    for (std::size_t in : {a, b}) {
      if (!t.requires_grad(in)) continue;
      Tensor& d = t.grad_ref(in);
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i];
    }
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return x.tape->record(std::move(out), any_grad({x}), [x = x.id](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    const Tensor& xv = t.value(x);
    Tensor& dx = t.grad_ref(x);
    for (std::size_t i = 0; i < dy.size(); ++i)
      if (xv[i] > 0.0) dx[i] += dy[i];
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double z = xv[i];
    out[i] = 0.5 * z * (1.0 + std::tanh(kGeluC * (z + kGeluA * z * z * z)));
  }
  return x.tape->record(std::move(out), any_grad({x}), [x = x.id](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    const Tensor& xv = t.value(x);
    Tensor& dx = t.grad_ref(x);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const double z = xv[i];
      const double th = std::tanh(kGeluC * (z + kGeluA * z * z * z));
      const double d = 0.5 * (1.0 + th) + 0.5 * z * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * z * z);
      dx[i] += dy[i] * d;
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), width = xv.cols();
  if (gain.value().size() != width || bias.value().size() != width) {
    throw DimensionError("layer_norm: gain/bias width does not match input " + shape_string(xv.shape()));
  }
  if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
  const Tensor& g = gain.value();
  const Tensor& b = bias.value();
  Tensor out(xv.shape());
  auto xhat = std::make_shared<Tensor>(xv.shape());
  auto inv = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * width;
    double mean = 0.0;
    for (std::size_t c = 0; c < width; ++c) mean += xr[c];
    mean /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t c = 0; c < width; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<double>(width);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv)[r] = is;
    for (std::size_t c = 0; c < width; ++c) {
      const double h = (xr[c] - mean) * is;
      (*xhat)[r * width + c] = h;
      out[r * width + c] = h * g[c] + b[c];
    }
  }
  return x.tape->record(std::move(out), any_grad({x, gain, bias}),
                        [x = x.id, gid = gain.id, bid = bias.id, rows, width, xhat, inv](Tape& t, std::size_t o) {
                          const Tensor& dy = t.grad_ref(o);
                          const Tensor& g = t.value(gid);
                          if (t.requires_grad(gid)) {
                            Tensor& dg = t.grad_ref(gid);
                            for (std::size_t i = 0; i < dy.size(); ++i) dg[i % width] += dy[i] * (*xhat)[i];
                          }
                          if (t.requires_grad(bid)) {
                            Tensor& db = t.grad_ref(bid);
                            for (std::size_t i = 0; i < dy.size(); ++i) db[i % width] += dy[i];
                          }
                          if (!t.requires_grad(x)) return;
                          Tensor& dx = t.grad_ref(x);
                          const double n = static_cast<double>(width);
                          for (std::size_t r = 0; r < rows; ++r) {
                            double sum = 0.0, dot = 0.0;
                            for (std::size_t c = 0; c < width; ++c) {
                              const double dh = dy[r * width + c] * g[c];
                              sum += dh;
                              dot += dh * (*xhat)[r * width + c];
                            }
                            for (std::size_t c = 0; c < width; ++c) {
                              const double dh = dy[r * width + c] * g[c];
                              dx[r * width + c] += (*inv)[r] / n * (n * dh - sum - (*xhat)[r * width + c] * dot);
                            }
                          }
                        });
}

Var attention(Var q, Var k, Var v, std::size_t groups, std::size_t seq_len, std::size_t heads, bool causal) {
  same_tape(q, k);
  same_tape(q, v);
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  const std::size_t width = qv.cols();
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("attention: width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  if (seq_len == 0 || qv.rows() != groups * seq_len) {
    throw DimensionError("attention: " + std::to_string(qv.rows()) + " rows is not " + std::to_string(groups) + " x " +
                         std::to_string(seq_len));
  }
  if (kv.shape() != qv.shape() || vv.shape() != qv.shape()) {
    throw DimensionError("attention: q/k/v shapes differ");
  }
  const std::size_t dh = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t L = seq_len;
  auto probs = std::make_shared<std::vector<double>>(groups * heads * L * L, 0.0);
  Tensor out({qv.rows(), width});
  std::vector<double> scores(L);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t h = 0; h < heads; ++h) {
      double* P = probs->data() + (g * heads + h) * L * L;
      for (std::size_t i = 0; i < L; ++i) {
        const double* qi = qv.data() + (g * L + i) * width + h * dh;
        const std::size_t last = causal ? i + 1 : L;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < last; ++j) {
          const double* kj = kv.data() + (g * L + j) * width + h * dh;
          double s = 0.0;
          for (std::size_t d = 0; d < dh; ++d) s += qi[d] * kj[d];
          s *= scale;
          scores[j] = s;
          mx = std::max(mx, s);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < last; ++j) {
          scores[j] = std::exp(scores[j] - mx);
          z += scores[j];
        }
        double* oi = out.data() + (g * L + i) * width + h * dh;
        for (std::size_t j = 0; j < last; ++j) {
          const double p = scores[j] / z;
          P[i * L + j] = p;
          const double* vj = vv.data() + (g * L + j) * width + h * dh;
          for (std::size_t d = 0; d < dh; ++d) oi[d] += p * vj[d];
        }
      }
    }
  }
  return q.tape->record(
      std::move(out), any_grad({q, k, v}),
      [q = q.id, k = k.id, v = v.id, groups, L, heads, dh, width, scale, causal, probs](Tape& t, std::size_t o) {
        const Tensor& dy = t.grad_ref(o);
        const Tensor& qv = t.value(q);
        const Tensor& kv = t.value(k);
        const Tensor& vv = t.value(v);
        const bool need_q = t.requires_grad(q), need_k = t.requires_grad(k), need_v = t.requires_grad(v);
        Tensor* dq = need_q ? &t.grad_ref(q) : nullptr;
        Tensor* dk = need_k ? &t.grad_ref(k) : nullptr;
        Tensor* dv = need_v ? &t.grad_ref(v) : nullptr;
        std::vector<double> dp(L), ds(L);
        for (std::size_t g = 0; g < groups; ++g) {
          for (std::size_t h = 0; h < heads; ++h) {
            const double* P = probs->data() + (g * heads + h) * L * L;
            for (std::size_t i = 0; i < L; ++i) {
              const std::size_t last = causal ? i + 1 : L;
              const double* doi = dy.data() + (g * L + i) * width + h * dh;
              double acc = 0.0;
              for (std::size_t j = 0; j < last; ++j) {
                const double* vj = vv.data() + (g * L + j) * width + h * dh;
                double s = 0.0;
                for (std::size_t d = 0; d < dh; ++d) s += doi[d] * vj[d];
                dp[j] = s;
                acc += P[i * L + j] * s;
                if (need_v) {
                  double* dvj = dv->data() + (g * L + j) * width + h * dh;
                  const double p = P[i * L + j];
                  for (std::size_t d = 0; d < dh; ++d) dvj[d] += p * doi[d];
                }
              }
              for (std::size_t j = 0; j < last; ++j) ds[j] = P[i * L + j] * (dp[j] - acc) * scale;
              const double* qi = qv.data() + (g * L + i) * width + h * dh;
              for (std::size_t j = 0; j < last; ++j) {
                const double* kj = kv.data() + (g * L + j) * width + h * dh;
                if (need_q) {
                  double* dqi = dq->data() + (g * L + i) * width + h * dh;
                  for (std::size_t d = 0; d < dh; ++d) dqi[d] += ds[j] * kj[d];
                }
                if (need_k) {
                  double* dkj = dk->data() + (g * L + j) * width + h * dh;
                  for (std::size_t d = 0; d < dh; ++d) dkj[d] += ds[j] * qi[d];
                }
              }
            }
          }
        }
      });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  Tape* tape = parts[0].tape;
  const std::size_t rows = parts[0].value().rows();
  std::vector<std::size_t> ids, widths;
  std::size_t total = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.tape != tape) throw StateError("operands recorded on different tapes");
    if (p.value().rows() != rows) {
      throw DimensionError("concat_cols: operand " + shape_string(p.value().shape()) + " has " +
                           std::to_string(p.value().rows()) + " rows, expected " + std::to_string(rows));
    }
    ids.push_back(p.id);
    widths.push_back(p.value().cols());
    total += p.value().cols();
    needs = needs || tape->requires_grad(p.id);
  }
  Tensor out({rows, total});
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& v = parts[i].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data() + r * widths[i], widths[i], out.data() + r * total + offset);
    offset += widths[i];
  }
  return tape->record(std::move(out), needs, [ids, widths, rows, total](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.requires_grad(ids[i])) {
        Tensor& d = t.grad_ref(ids[i]);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < widths[i]; ++c) d[r * widths[i] + c] += dy[r * total + offset + c];
      }
      offset += widths[i];
    }
  });
}

Var gather_rows(Var table, std::span<const std::size_t> indices) {
  const Tensor& tv = table.value();
  const std::size_t width = tv.cols(), vocab = tv.rows();
  if (indices.empty()) throw DimensionError("gather_rows: no indices");
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Tensor out({idx.size(), width});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= vocab) {
      throw IndexError("gather_rows: index " + std::to_string(idx[i]) + " outside table of " + std::to_string(vocab) +
                       " rows");
    }
    std::copy_n(tv.data() + idx[i] * width, width, out.data() + i * width);
  }
  return table.tape->record(std::move(out), any_grad({table}), [tid = table.id, idx, width](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    Tensor& dt = t.grad_ref(tid);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < width; ++c) dt[idx[i] * width + c] += dy[i * width + c];
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  const std::size_t width = xv.cols();
  if (count == 0 || begin + count > xv.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + std::to_string(xv.rows()) + " rows");
  }
  Tensor out({count, width});
  std::copy_n(xv.data() + begin * width, count * width, out.data());
  return x.tape->record(std::move(out), any_grad({x}), [x = x.id, begin, width](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    Tensor& dx = t.grad_ref(x);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[begin * width + i] += dy[i];
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape->record(std::move(out), any_grad({x}), [x = x.id](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    Tensor& dx = t.grad_ref(x);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
  });
}

Var rows_affine(Var x, std::span<const double> scale, std::span<const double> shift) {
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (scale.size() != rows || shift.size() != rows) {
    throw DimensionError("rows_affine: " + std::to_string(scale.size()) + " scales for " + std::to_string(rows) +
                         " rows");
  }
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = xv[r * cols + c] * scale[r] + shift[r];
  std::vector<double> s(scale.begin(), scale.end());
  return x.tape->record(std::move(out), any_grad({x}), [x = x.id, s, cols](Tape& t, std::size_t o) {
    const Tensor& dy = t.grad_ref(o);
    Tensor& dx = t.grad_ref(x);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * s[i / cols];
  });
}

Var mse_loss(Var pred, const Tensor& target) {
  const Tensor& pv = pred.value();
  if (pv.size() != target.size()) {
    throw DimensionError("mse_loss: prediction " + shape_string(pv.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) sum += (pv[i] - target[i]) * (pv[i] - target[i]);
  const double n = static_cast<double>(pv.size());
  return pred.tape->record(Tensor({1}, sum / n), any_grad({pred}), [p = pred.id, target, n](Tape& t, std::size_t o) {
    const double up = t.grad_ref(o)[0];
    const Tensor& pv = t.value(p);
    Tensor& dp = t.grad_ref(p);
    for (std::size_t i = 0; i < pv.size(); ++i) dp[i] += up * 2.0 * (pv[i] - target[i]) / n;
  });
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.shape());
  const std::size_t rows = logits.rows(), cols = logits.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* z = logits.data() + r * cols;
    double mx = -INFINITY;
    for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, z[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = std::exp(z[c] - mx);
      sum += out[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= sum;
  }
  return out;
}

Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels) {
  const Tensor& lv = logits.value();
  const std::size_t rows = lv.rows(), cols = lv.cols();
  if (cols < 2) throw DimensionError("softmax_cross_entropy: need at least 2 classes");
  if (labels.size() != rows) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows) + " rows");
  }
  auto probs = std::make_shared<Tensor>(softmax_rows(lv));
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (lab[r] >= cols) {
      throw IndexError("softmax_cross_entropy: label " + std::to_string(lab[r]) + " outside [0, " +
                       std::to_string(cols) + ")");
    }
    const double* z = lv.data() + r * cols;
    double mx = -INFINITY;
    for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, z[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sum += std::exp(z[c] - mx);
    loss += -(z[lab[r]] - mx - std::log(sum));
  }
  const double n = static_cast<double>(rows);
  return logits.tape->record(Tensor({1}, loss / n), any_grad({logits}),
                             [l = logits.id, probs, lab, cols, n](Tape& t, std::size_t o) {
                               const double up = t.grad_ref(o)[0];
                               Tensor& dl = t.grad_ref(l);
                               for (std::size_t i = 0; i < probs->size(); ++i) dl[i] += up * (*probs)[i] / n;
                               for (std::size_t r = 0; r < lab.size(); ++r) dl[r * cols + lab[r]] -= up / n;
                             });
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = x[i];
    if (z >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-z));
    } else {
      const double e = std::exp(z);
      out[i] = e / (1.0 + e);
    }
  }
  return out;
}

Var sigmoid_bce(Var logits, const Tensor& labels, double clamp) {
  const Tensor& lv = logits.value();
  if (labels.size() != lv.size()) {
    throw DimensionError("sigmoid_bce: labels " + shape_string(labels.shape()) + " vs logits " +
                         shape_string(lv.shape()));
  }
  auto p = std::make_shared<Tensor>(sigmoid(lv));
  double loss = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    const double y = labels[i];
    if (y != 0.0 && y != 1.0) throw LabelError("sigmoid_bce: label " + std::to_string(y) + " is not 0 or 1");
    const double pc = std::clamp((*p)[i], clamp, 1.0 - clamp);
    loss -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
  }
  const double batch = static_cast<double>(lv.rows());
  return logits.tape->record(Tensor({1}, loss / batch), any_grad({logits}),
                             [l = logits.id, p, labels, clamp, batch](Tape& t, std::size_t o) {
                               const double up = t.grad_ref(o)[0];
                               Tensor& dl = t.grad_ref(l);
                               for (std::size_t i = 0; i < p->size(); ++i) {
                                 const double pi = (*p)[i];
                                 if (pi < clamp || pi > 1.0 - clamp) continue;
                                 dl[i] += up * (pi - labels[i]) / batch;
                               }
                             });
}

}  // namespace lf::core
