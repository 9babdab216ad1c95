#pragma once

// Dense containers and kernels: row-major matrix, GEMM with transpose flags,
// row-broadcast bias, activations with saved masks, column sums. All kernels
// use a fixed accumulation order per output element, so results are identical
// for any thread count.

#include <cmath>
#include <vector>

#include "sgnn/common.hpp"
#include "sgnn/counters.hpp"
#include "sgnn/memtrack.hpp"
#include "sgnn/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sgnn {

template <class S>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(index_t rows, index_t cols)
      : rows_(rows), cols_(cols), a_(Array<S>::allocate(size())) {}

  static DenseMatrix zeros(index_t rows, index_t cols) {
    DenseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.a_ = Array<S>::zeros(m.size());
    return m;
  }

  static DenseMatrix identity(index_t n) {
    DenseMatrix m = zeros(n, n);
    S* d = m.mutable_data();
    for (index_t i = 0; i < n; ++i) d[static_cast<std::size_t>(i) * n + i] = S(1);
    return m;
  }

  // Draws are made in double and narrowed, so f32/f64 runs see the same values.
  static DenseMatrix random_uniform(index_t rows, index_t cols, std::uint64_t seed,
                                    double lo = -1.0, double hi = 1.0) {
    DenseMatrix m(rows, cols);
    Rng rng(seed);
    S* d = m.mutable_data();
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<S>(rng.next_double(lo, hi));
    return m;
  }

  index_t rows() const { return rows_; }
  index_t cols() const { return cols_; }
  std::size_t size() const {
    return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
  }
  std::size_t bytes() const { return a_.bytes(); }
  bool empty() const { return size() == 0; }

  const S* data() const { return a_.data(); }
  S* mutable_data() { return a_.mutable_data(); }
  const S* row(index_t i) const { return data() + static_cast<std::size_t>(i) * cols_; }
  S* mutable_row(index_t i) { return mutable_data() + static_cast<std::size_t>(i) * cols_; }
  S operator()(index_t i, index_t j) const {
    return data()[static_cast<std::size_t>(i) * cols_ + j];
  }

  void reclassify(MemClass c) { a_.reclassify(c); }
  bool aliases(const DenseMatrix& o) const { return a_.aliases(o.a_); }

  DenseMatrix clone() const {
    DenseMatrix m(rows_, cols_);
    S* d = m.mutable_data();
    const S* s = data();
    for (std::size_t i = 0; i < size(); ++i) d[i] = s[i];
    return m;
  }

 private:
  index_t rows_ = 0, cols_ = 0;
  Array<S> a_;
};

namespace detail {

inline int clamp_threads(index_t work) {
  int t = num_threads();
  if (static_cast<count_t>(work) < 64) t = 1;
  return t;
}

}  // namespace detail

// C = op(A) * op(B). Row-blocked; each output row is accumulated in a fixed
// order independent of the thread count.
template <class S>
DenseMatrix<S> gemm(const DenseMatrix<S>& A, const DenseMatrix<S>& B,
                    bool trans_a = false, bool trans_b = false) {
  const index_t m = trans_a ? A.cols() : A.rows();
  const index_t kk = trans_a ? A.rows() : A.cols();
  const index_t kb = trans_b ? B.cols() : B.rows();
  const index_t n = trans_b ? B.rows() : B.cols();
  require(kk == kb, "gemm: inner dimensions do not match");

  counters().gemm_flops += 2 * static_cast<count_t>(m) * n * kk;
  counters().model_bytes +=
      static_cast<count_t>(sizeof(S)) *
      (static_cast<count_t>(m) * kk + static_cast<count_t>(kk) * n + static_cast<count_t>(m) * n);

  DenseMatrix<S> C = DenseMatrix<S>::zeros(m, n);
  S* cd = C.mutable_data();
  const S* ad = A.data();
  const S* bd = B.data();
  const index_t lda = A.cols();
  const index_t ldb = B.cols();

  const int nt = detail::clamp_threads(m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < m; ++i) {
    S* crow = cd + static_cast<std::size_t>(i) * n;
    if (!trans_a && !trans_b) {
      const S* arow = ad + static_cast<std::size_t>(i) * lda;
      for (index_t l = 0; l < kk; ++l) {
        const S a = arow[l];
        const S* brow = bd + static_cast<std::size_t>(l) * ldb;
        for (index_t j = 0; j < n; ++j) crow[j] += a * brow[j];
      }
    } else if (trans_a && !trans_b) {
      for (index_t l = 0; l < kk; ++l) {
        const S a = ad[static_cast<std::size_t>(l) * lda + i];
        const S* brow = bd + static_cast<std::size_t>(l) * ldb;
        for (index_t j = 0; j < n; ++j) crow[j] += a * brow[j];
      }
    } else if (!trans_a && trans_b) {
      const S* arow = ad + static_cast<std::size_t>(i) * lda;
      for (index_t j = 0; j < n; ++j) {
        const S* brow = bd + static_cast<std::size_t>(j) * ldb;
        S acc = S(0);
        for (index_t l = 0; l < kk; ++l) acc += arow[l] * brow[l];
        crow[j] += acc;
      }
    } else {
      for (index_t j = 0; j < n; ++j) {
        const S* brow = bd + static_cast<std::size_t>(j) * ldb;
        S acc = S(0);
        for (index_t l = 0; l < kk; ++l) acc += ad[static_cast<std::size_t>(l) * lda + i] * brow[l];
        crow[j] += acc;
      }
    }
  }
  return C;
}

template <class S>
void bias_add_rows_inplace(DenseMatrix<S>& X, const std::vector<S>& b) {
  require(static_cast<std::size_t>(X.cols()) == b.size(),
          "bias_add_rows: bias length does not match columns");
  counters().elementwise_flops += static_cast<count_t>(X.rows()) * X.cols();
  S* d = X.mutable_data();
  const index_t n = X.rows(), k = X.cols();
  for (index_t i = 0; i < n; ++i) {
    S* row = d + static_cast<std::size_t>(i) * k;
    for (index_t j = 0; j < k; ++j) row[j] += b[j];
  }
}

template <class S>
DenseMatrix<S> bias_add_rows(const DenseMatrix<S>& X, const std::vector<S>& b) {
  DenseMatrix<S> out = X.clone();
  bias_add_rows_inplace(out, b);
  return out;
}

enum class Activation { relu, leaky_relu, elu };

// Boolean per entry, true where the pre-activation is strictly positive.
struct ActivationMask {
  index_t rows = 0, cols = 0;
  Array<std::uint8_t> bits;
  bool at(index_t i, index_t j) const {
    return bits[static_cast<std::size_t>(i) * cols + j] != 0;
  }
};

template <class S>
struct ActivationResult {
  DenseMatrix<S> out;
  ActivationMask mask;
};

template <class S>
ActivationResult<S> activation(const DenseMatrix<S>& X, Activation kind, double param = 0.0) {
  if (kind == Activation::leaky_relu) require(param > 0, "leaky_relu: slope must be positive");
  ActivationResult<S> r;
  r.out = DenseMatrix<S>(X.rows(), X.cols());
  r.mask.rows = X.rows();
  r.mask.cols = X.cols();
  r.mask.bits = Array<std::uint8_t>::allocate(X.size());
  counters().elementwise_flops += static_cast<count_t>(X.size());

  const S* xd = X.data();
  S* od = r.out.mutable_data();
  std::uint8_t* md = r.mask.bits.mutable_data();
  const std::size_t n = X.size();
  const S slope = static_cast<S>(param);
  const S alpha = kind == Activation::elu ? (param > 0 ? static_cast<S>(param) : S(1)) : S(0);
  for (std::size_t i = 0; i < n; ++i) {
    const S x = xd[i];
    const bool pos = x > S(0);
    md[i] = pos ? 1 : 0;
    switch (kind) {
      case Activation::relu:
        od[i] = pos ? x : S(0);
        break;
      case Activation::leaky_relu:
        od[i] = pos ? x : slope * x;
        break;
      case Activation::elu:
        od[i] = pos ? x : alpha * (std::exp(x) - S(1));
        break;
    }
  }
  return r;
}

// saved = forward output, required for elu (f'(x<=0) = elu(x) + alpha).
template <class S>
DenseMatrix<S> activation_backward(const DenseMatrix<S>& grad_out, const ActivationMask& mask,
                                   Activation kind, double param = 0.0,
                                   const DenseMatrix<S>* saved = nullptr) {
  require(grad_out.rows() == mask.rows && grad_out.cols() == mask.cols,
          "activation_backward: shape mismatch");
  if (kind == Activation::elu)
    require(saved != nullptr && saved->rows() == grad_out.rows() &&
                saved->cols() == grad_out.cols(),
            "activation_backward: elu requires the saved forward output");
  counters().elementwise_flops += static_cast<count_t>(grad_out.size());

  DenseMatrix<S> gin(grad_out.rows(), grad_out.cols());
  const S* gd = grad_out.data();
  S* od = gin.mutable_data();
  const std::uint8_t* md = mask.bits.data();
  const S slope = static_cast<S>(param);
  const S alpha = kind == Activation::elu ? (param > 0 ? static_cast<S>(param) : S(1)) : S(0);
  const S* sd = saved ? saved->data() : nullptr;
  const std::size_t n = grad_out.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (md[i]) {
      od[i] = gd[i];
    } else {
      switch (kind) {
        case Activation::relu:
          od[i] = S(0);
          break;
        case Activation::leaky_relu:
          od[i] = slope * gd[i];
          break;
        case Activation::elu:
          od[i] = (sd[i] + alpha) * gd[i];
          break;
      }
    }
  }
  return gin;
}

template <class S>
std::vector<S> column_sums(const DenseMatrix<S>& X) {
  counters().elementwise_flops += static_cast<count_t>(X.size());
  std::vector<S> out(static_cast<std::size_t>(X.cols()), S(0));
  const S* d = X.data();
  for (index_t i = 0; i < X.rows(); ++i) {
    const S* row = d + static_cast<std::size_t>(i) * X.cols();
    for (index_t j = 0; j < X.cols(); ++j) out[static_cast<std::size_t>(j)] += row[j];
  }
  return out;
}

// out += s * M, fixed order.
template <class S>
void axpy_inplace(DenseMatrix<S>& out, S s, const DenseMatrix<S>& M) {
  require(out.rows() == M.rows() && out.cols() == M.cols(), "axpy: shape mismatch");
  counters().elementwise_flops += 2 * static_cast<count_t>(out.size());
  S* od = out.mutable_data();
  const S* md = M.data();
  for (std::size_t i = 0; i < out.size(); ++i) od[i] += s * md[i];
}

template <class S>
double max_abs_diff(const DenseMatrix<S>& A, const DenseMatrix<S>& B) {
  require(A.rows() == B.rows() && A.cols() == B.cols(), "max_abs_diff: shape mismatch");
  double m = 0;
  for (std::size_t i = 0; i < A.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(A.data()[i]) - static_cast<double>(B.data()[i])));
  return m;
}

// |a-b| relative to max(1, |a|, |b|); the "1" keeps near-zero entries from
// blowing up the ratio.
template <class S>
double max_rel_diff(const DenseMatrix<S>& A, const DenseMatrix<S>& B) {
  require(A.rows() == B.rows() && A.cols() == B.cols(), "max_rel_diff: shape mismatch");
  double m = 0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double a = static_cast<double>(A.data()[i]);
    const double b = static_cast<double>(B.data()[i]);
    const double denom = std::max({1.0, std::abs(a), std::abs(b)});
    m = std::max(m, std::abs(a - b) / denom);
  }
  return m;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace sgnn
