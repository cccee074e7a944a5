#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "peps/errors.hpp"
#include "peps/tensor.hpp"

namespace peps {

/// Handle to a node on a Tape. Valid only for the tape that produced it.
struct Val {
  std::size_t idx = 0;
};

/// Dynamic reverse-mode tape over 2-D (rows x cols) nodes. Rows are the
/// batch axis; vectors are 1 x m, scalars 1 x 1. The tape is rebuilt for
/// every batch and discarded afterwards.
class Tape {
 public:
  struct Node {
    const char* op;
    std::size_t rows, cols;
    std::vector<double> val;
    std::vector<double> grad;
    bool needs_grad;
    std::function<void(Tape&, Node&)> backward;
  };

  Node& node(Val v) { return nodes_[v.idx]; }
  const Node& node(Val v) const { return nodes_[v.idx]; }
  std::size_t size() const { return nodes_.size(); }

  Val emplace(const char* op, std::size_t rows, std::size_t cols,
              bool needs_grad) {
    Node n;
    n.op = op;
    n.rows = rows;
    n.cols = cols;
    n.val.assign(rows * cols, 0.0);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Val{nodes_.size() - 1};
  }

  /// Runs the reverse pass from a scalar output. Populates .grad of every
  /// requires_grad ParamTensor reachable from it (accumulating).
  void backward(Val output) {
    Node& out = node(output);
    if (out.rows * out.cols != 1)
      throw std::invalid_argument(
          "tape_backward: output must be scalar, got " +
          std::to_string(out.rows) + "x" + std::to_string(out.cols));
    for (auto& n : nodes_)
      if (n.needs_grad) n.grad.assign(n.val.size(), 0.0);
    out.grad.assign(1, 1.0);
    for (std::size_t i = output.idx + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || !n.backward) continue;
      for (double g : n.grad)
        if (std::isnan(g))
          throw numeric_error(std::string("NaN gradient flowing into op '") +
                              n.op + "' during reverse pass");
      n.backward(*this, n);
    }
  }

 private:
  std::vector<Node> nodes_;
};

namespace ad {

inline Val constant(Tape& t, std::size_t rows, std::size_t cols,
                    std::span<const double> data) {
  Val v = t.emplace("constant", rows, cols, false);
  std::copy(data.begin(), data.end(), t.node(v).val.begin());
  return v;
}

inline Val scalar(Tape& t, double x) {
  return constant(t, 1, 1, std::span<const double>(&x, 1));
}

/// Leaf over a parameter tensor. 1-D parameters become row vectors, higher
/// ranks use (shape[0], rest) so weight matrices matmul directly.
inline Val leaf(Tape& t, ParamTensor& p) {
  std::size_t rows = 1, cols = p.size();
  if (p.shape.size() >= 2) {
    rows = p.shape[0];
    cols = p.size() / p.shape[0];
  }
  Val v = t.emplace("leaf", rows, cols, p.requires_grad);
  Tape::Node& n = t.node(v);
  std::copy(p.value.begin(), p.value.end(), n.val.begin());
  if (p.requires_grad) {
    ParamTensor* pp = &p;
    n.backward = [pp](Tape&, Tape::Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pp->grad[i] += self.grad[i];
    };
  }
  return v;
}

inline void check_same_shape(const Tape::Node& a, const Tape::Node& b,
                             const char* op) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw config_error(std::string(op) + ": shape mismatch " +
                       std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                       " vs " + std::to_string(b.rows) + "x" +
                       std::to_string(b.cols));
}

inline Val add(Tape& t, Val a, Val b) {
  check_same_shape(t.node(a), t.node(b), "add");
  const auto& na = t.node(a);
  Val v = t.emplace("add", na.rows, na.cols,
                    na.needs_grad || t.node(b).needs_grad);
  Tape::Node& n = t.node(v);
  const double* pa = t.node(a).val.data();
  const double* pb = t.node(b).val.data();
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = pa[i] + pb[i];
  if (n.needs_grad)
    n.backward = [a, b](Tape& t, Tape::Node& self) {
      for (Val in : {a, b}) {
        Tape::Node& ni = t.node(in);
        if (!ni.needs_grad) continue;
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          ni.grad[i] += self.grad[i];
      }
    };
  return v;
}

inline Val sub(Tape& t, Val a, Val b) {
  check_same_shape(t.node(a), t.node(b), "sub");
  const auto& na = t.node(a);
  Val v = t.emplace("sub", na.rows, na.cols,
                    na.needs_grad || t.node(b).needs_grad);
  Tape::Node& n = t.node(v);
  const double* pa = t.node(a).val.data();
  const double* pb = t.node(b).val.data();
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = pa[i] - pb[i];
  if (n.needs_grad)
    n.backward = [a, b](Tape& t, Tape::Node& self) {
      Tape::Node& na = t.node(a);
      Tape::Node& nb = t.node(b);
      if (na.needs_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          na.grad[i] += self.grad[i];
      if (nb.needs_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          nb.grad[i] -= self.grad[i];
    };
  return v;
}

/// Broadcast-add a 1 x m row vector (bias) onto every row of a.
inline Val add_rowvec(Tape& t, Val a, Val b) {
  const auto& na = t.node(a);
  const auto& nb = t.node(b);
  if (nb.rows != 1 || nb.cols != na.cols)
    throw config_error("add_rowvec: bias shape mismatch");
  Val v = t.emplace("add_rowvec", na.rows, na.cols,
                    na.needs_grad || nb.needs_grad);
  Tape::Node& n = t.node(v);
  const double* pa = t.node(a).val.data();
  const double* pb = t.node(b).val.data();
  for (std::size_t r = 0; r < n.rows; ++r)
    for (std::size_t c = 0; c < n.cols; ++c)
      n.val[r * n.cols + c] = pa[r * n.cols + c] + pb[c];
  if (n.needs_grad)
    n.backward = [a, b](Tape& t, Tape::Node& self) {
      Tape::Node& na = t.node(a);
      Tape::Node& nb = t.node(b);
      if (na.needs_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          na.grad[i] += self.grad[i];
      if (nb.needs_grad)
        for (std::size_t r = 0; r < self.rows; ++r)
          for (std::size_t c = 0; c < self.cols; ++c)
            nb.grad[c] += self.grad[r * self.cols + c];
    };
  return v;
}

inline Val hadamard(Tape& t, Val a, Val b) {
  check_same_shape(t.node(a), t.node(b), "hadamard");
  const auto& na = t.node(a);
  Val v = t.emplace("hadamard", na.rows, na.cols,
                    na.needs_grad || t.node(b).needs_grad);
  Tape::Node& n = t.node(v);
  const double* pa = t.node(a).val.data();
  const double* pb = t.node(b).val.data();
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = pa[i] * pb[i];
  if (n.needs_grad)
    n.backward = [a, b](Tape& t, Tape::Node& self) {
      Tape::Node& na = t.node(a);
      Tape::Node& nb = t.node(b);
      if (na.needs_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          na.grad[i] += self.grad[i] * nb.val[i];
      if (nb.needs_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          nb.grad[i] += self.grad[i] * na.val[i];
    };
  return v;
}

inline Val scale(Tape& t, Val a, double s) {
  const auto& na = t.node(a);
  Val v = t.emplace("scale", na.rows, na.cols, na.needs_grad);
  Tape::Node& n = t.node(v);
  const double* pa = t.node(a).val.data();
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = pa[i] * s;
  if (n.needs_grad)
    n.backward = [a, s](Tape& t, Tape::Node& self) {
      Tape::Node& na = t.node(a);
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        na.grad[i] += self.grad[i] * s;
    };
  return v;
}

/// C[n,m] = A[n,k] * B[k,m]. Inner loops run over contiguous memory.
inline Val matmul(Tape& t, Val a, Val b) {
  const auto& na = t.node(a);
  const auto& nb = t.node(b);
  if (na.cols != nb.rows)
    throw config_error("matmul: inner dimension mismatch " +
                       std::to_string(na.cols) + " vs " +
                       std::to_string(nb.rows));
  const std::size_t n = na.rows, k = na.cols, m = nb.cols;
  Val v = t.emplace("matmul", n, m, na.needs_grad || nb.needs_grad);
  Tape::Node& out = t.node(v);
  {
    const double* A = t.node(a).val.data();
    const double* B = t.node(b).val.data();
    double* C = out.val.data();
    for (std::size_t i = 0; i < n; ++i) {
      double* Ci = C + i * m;
      const double* Ai = A + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = Ai[p];
        const double* Bp = B + p * m;
        for (std::size_t j = 0; j < m; ++j) Ci[j] += aip * Bp[j];
      }
    }
  }
  if (out.needs_grad)
    out.backward = [a, b, n, k, m](Tape& t, Tape::Node& self) {
      Tape::Node& na = t.node(a);
      Tape::Node& nb = t.node(b);
      const double* G = self.grad.data();
      if (na.needs_grad) {
        // dA = G * B^T
        double* dA = na.grad.data();
        const double* B = nb.val.data();
        for (std::size_t i = 0; i < n; ++i) {
          const double* Gi = G + i * m;
          double* dAi = dA + i * k;
          for (std::size_t p = 0; p < k; ++p) {
            const double* Bp = B + p * m;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += Gi[j] * Bp[j];
            dAi[p] += acc;
          }
        }
      }
      if (nb.needs_grad) {
        // dB = A^T * G
        double* dB = nb.grad.data();
        const double* A = na.val.data();
        for (std::size_t i = 0; i < n; ++i) {
          const double* Ai = A + i * k;
          const double* Gi = G + i * m;
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = Ai[p];
            double* dBp = dB + p * m;
            for (std::size_t j = 0; j < m; ++j) dBp[j] += aip * Gi[j];
          }
        }
      }
    };
  return v;
}

namespace detail {

template <class F, class DF>
Val unary_op(Tape& t, Val a, const char* name, F f, DF df) {
  const auto& na = t.node(a);
  Val v = t.emplace(name, na.rows, na.cols, na.needs_grad);
  Tape::Node& n = t.node(v);
  const double* pa = t.node(a).val.data();
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = f(pa[i]);
  if (n.needs_grad)
    n.backward = [a, df](Tape& t, Tape::Node& self) {
      Tape::Node& na = t.node(a);
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        na.grad[i] += self.grad[i] * df(na.val[i], self.val[i]);
    };
  return v;
}

}  // namespace detail

inline Val sin(Tape& t, Val a) {
  return detail::unary_op(
      t, a, "sin", [](double x) { return std::sin(x); },
      [](double x, double) { return std::cos(x); });
}

inline Val cos(Tape& t, Val a) {
  return detail::unary_op(
      t, a, "cos", [](double x) { return std::cos(x); },
      [](double x, double) { return -std::sin(x); });
}

inline Val abs(Tape& t, Val a) {
  // Subgradient 0 at the kink.
  return detail::unary_op(
      t, a, "abs", [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

inline Val square(Tape& t, Val a) {
  return detail::unary_op(
      t, a, "square", [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

inline Val leaky_relu(Tape& t, Val a, double slope) {
  return detail::unary_op(
      t, a, "leaky_relu", [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

inline Val gelu(Tape& t, Val a) {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  constexpr double inv_sqrt2pi = 0.3989422804014326779;
  return detail::unary_op(
      t, a, "gelu",
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        return cdf + x * inv_sqrt2pi * std::exp(-0.5 * x * x);
      });
}

inline Val silu(Tape& t, Val a) {
  return detail::unary_op(
      t, a, "silu",
      [](double x) { return x / (1.0 + std::exp(-x)); },
      [](double x, double) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 + x * (1.0 - s));
      });
}

inline Val reduce_sum(Tape& t, Val a) {
  const auto& na = t.node(a);
  Val v = t.emplace("reduce_sum", 1, 1, na.needs_grad);
  Tape::Node& n = t.node(v);
  double acc = 0.0;
  for (double x : t.node(a).val) acc += x;
  n.val[0] = acc;
  if (n.needs_grad)
    n.backward = [a](Tape& t, Tape::Node& self) {
      Tape::Node& na = t.node(a);
      const double g = self.grad[0];
      for (double& gi : na.grad) gi += g;
    };
  return v;
}

inline Val reduce_mean(Tape& t, Val a) {
  const auto& na = t.node(a);
  const double inv = 1.0 / static_cast<double>(na.val.size());
  return scale(t, reduce_sum(t, a), inv);
}

inline Val concat_cols(Tape& t, std::span<const Val> parts) {
  if (parts.empty()) throw config_error("concat_cols: empty input");
  const std::size_t rows = t.node(parts[0]).rows;
  std::size_t total = 0;
  bool ng = false;
  for (Val p : parts) {
    const auto& np = t.node(p);
    if (np.rows != rows) throw config_error("concat_cols: row mismatch");
    total += np.cols;
    ng = ng || np.needs_grad;
  }
  Val v = t.emplace("concat_cols", rows, total, ng);
  Tape::Node& n = t.node(v);
  std::size_t off = 0;
  for (Val p : parts) {
    const auto& np = t.node(p);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(np.val.begin() + r * np.cols,
                np.val.begin() + (r + 1) * np.cols,
                n.val.begin() + r * total + off);
    off += np.cols;
  }
  if (ng) {
    std::vector<Val> srcs(parts.begin(), parts.end());
    n.backward = [srcs, rows, total](Tape& t, Tape::Node& self) {
      std::size_t off = 0;
      for (Val p : srcs) {
        Tape::Node& np = t.node(p);
        if (np.needs_grad)
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < np.cols; ++c)
              np.grad[r * np.cols + c] += self.grad[r * total + off + c];
        off += np.cols;
      }
    };
  }
  return v;
}

/// Circular column slice: columns (start + t) mod cols for t in [0, len).
/// start may be negative; len may exceed cols (wraps repeatedly).
inline Val circular_slice_cols(Tape& t, Val a, long start, std::size_t len) {
  const std::size_t in_cols = t.node(a).cols;
  const std::size_t rows = t.node(a).rows;
  const long d = static_cast<long>(in_cols);
  Val v = t.emplace("circular_slice_cols", rows, len, t.node(a).needs_grad);
  Tape::Node& n = t.node(v);
  std::vector<std::size_t> src(len);
  for (std::size_t i = 0; i < len; ++i) {
    long k = (start + static_cast<long>(i)) % d;
    if (k < 0) k += d;
    src[i] = static_cast<std::size_t>(k);
  }
  const double* pa = t.node(a).val.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < len; ++i)
      n.val[r * len + i] = pa[r * in_cols + src[i]];
  if (n.needs_grad)
    n.backward = [a, src, len](Tape& t, Tape::Node& self) {
      Tape::Node& na = t.node(a);
      for (std::size_t r = 0; r < self.rows; ++r)
        for (std::size_t i = 0; i < len; ++i)
          na.grad[r * na.cols + src[i]] += self.grad[r * len + i];
    };
  return v;
}

inline Val slice_cols(Tape& t, Val a, std::size_t start, std::size_t len) {
  const auto& na = t.node(a);
  if (start + len > na.cols) throw config_error("slice_cols: out of range");
  return circular_slice_cols(t, a, static_cast<long>(start), len);
}

}  // namespace ad

/// Spec-level entry point: reverse pass from a scalar loss node.
inline void tape_backward(Tape& t, Val output) { t.backward(output); }

}  // namespace peps
