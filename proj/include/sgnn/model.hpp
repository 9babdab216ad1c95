#pragma once

// The two evaluation networks (GCN-GCN with ReLU, GAT-GAT with ELU), loss
// functions, SGD/Adam, and the central finite-difference gradient checker.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgnn/gat.hpp"
#include "sgnn/gcn.hpp"

namespace sgnn {

enum class ModelKind { gcn2, gat2 };

struct ModelConfig {
  ModelKind kind = ModelKind::gcn2;
  index_t in_features = 0;
  index_t hidden = 0;
  index_t out_features = 0;
  index_t heads = 1;  // gat2
  SchemePolicy scheme = SchemePolicy::adaptive;
  bool caching = false;                          // gcn2: retain A'X
  GatCacheLevel gat_level = GatCacheLevel::none; // gat2
  double leaky_slope = 0.2;                      // gat attention slope
  bool input_grad = false;                       // compute d(input features)
};

// Flat mutable view over one parameter tensor.
template <class S>
struct TensorRef {
  std::string name;
  S* data = nullptr;
  std::size_t size = 0;
};

// ---------------------------------------------------------------------------
// GCN-GCN
// ---------------------------------------------------------------------------

template <class S>
class Gcn2Model {
 public:
  Gcn2Model(const ModelConfig& cfg, std::uint64_t seed)
      : cfg_(cfg),
        l1_(GcnParams<S>::init(cfg.in_features, cfg.hidden, seed)),
        l2_(GcnParams<S>::init(cfg.hidden, cfg.out_features, seed + 101)) {}

  struct Caches {
    GcnCache<S> l1, l2;
    ActivationMask act;
  };
  struct Grads {
    GcnGradients<S> l1, l2;
  };

  DenseMatrix<S> forward(const DenseMatrix<S>& X, const AdjacencyOp<S>& A, Caches& caches) const {
    auto s1 = resolve_scheme(cfg_.scheme, cfg_.in_features, cfg_.hidden, cfg_.input_grad,
                             cfg_.caching);
    // the hidden layer always needs its input gradient to continue the chain
    auto s2 = resolve_scheme(cfg_.scheme, cfg_.hidden, cfg_.out_features, true, cfg_.caching);

    auto r1 = gcn_forward(X, A, l1_, s1);
    DenseMatrix<S> h;
    {
      ScopedMemClass t(MemClass::transient);
      auto act = activation(r1.output, Activation::relu);
      h = act.out;
      caches.act = act.mask;
    }
    auto r2 = gcn_forward(h, A, l2_, s2);
    caches.l1 = std::move(r1.cache);
    caches.l2 = std::move(r2.cache);
    return std::move(r2.output);
  }

  Grads backward(const DenseMatrix<S>& d_out, const AdjacencyOp<S>& A, Caches& caches) const {
    Grads g;
    g.l2 = gcn_backward(d_out, A, l2_, caches.l2, /*needs_feature_grad=*/true);
    DenseMatrix<S> dh;
    {
      ScopedMemClass t(MemClass::transient);
      dh = activation_backward(*g.l2.d_input, caches.act, Activation::relu);
    }
    g.l1 = gcn_backward(dh, A, l1_, caches.l1, cfg_.input_grad);
    return g;
  }

  const ModelConfig& config() const { return cfg_; }
  GcnParams<S>& layer1() { return l1_; }
  GcnParams<S>& layer2() { return l2_; }
  const GcnParams<S>& layer1() const { return l1_; }
  const GcnParams<S>& layer2() const { return l2_; }

  std::vector<TensorRef<S>> param_tensors() {
    return {
        {"l1.theta", l1_.theta.mutable_data(), l1_.theta.size()},
        {"l1.bias", l1_.bias.data(), l1_.bias.size()},
        {"l2.theta", l2_.theta.mutable_data(), l2_.theta.size()},
        {"l2.bias", l2_.bias.data(), l2_.bias.size()},
    };
  }

  static std::vector<std::vector<double>> grad_vectors(const Grads& g) {
    auto flat = [](const DenseMatrix<S>& m) {
      return std::vector<double>(m.data(), m.data() + m.size());
    };
    return {flat(g.l1.d_theta), std::vector<double>(g.l1.d_bias.begin(), g.l1.d_bias.end()),
            flat(g.l2.d_theta), std::vector<double>(g.l2.d_bias.begin(), g.l2.d_bias.end())};
  }

 private:
  ModelConfig cfg_;
  GcnParams<S> l1_, l2_;
};

// ---------------------------------------------------------------------------
// GAT-GAT
// ---------------------------------------------------------------------------

template <class S>
class Gat2Model {
 public:
  Gat2Model(const ModelConfig& cfg, std::uint64_t seed)
      : cfg_(cfg),
        l1_(GatParams<S>::init(cfg.in_features, cfg.heads, cfg.hidden, seed)),
        l2_(GatParams<S>::init(cfg.heads * cfg.hidden, cfg.heads, cfg.out_features,
                               seed + 201)) {}

  struct Caches {
    GatCache<S> l1, l2;
    ActivationMask act;
    DenseMatrix<S> act_out;  // elu backward needs the forward output
  };
  struct Grads {
    GatGradients<S> l1, l2;
  };

  DenseMatrix<S> forward(const DenseMatrix<S>& X, const PatternPtr& pattern,
                         Caches& caches) const {
    auto r1 = gat_forward(X, pattern, l1_, cfg_.leaky_slope, cfg_.gat_level);
    DenseMatrix<S> h;
    {
      ScopedMemClass t(MemClass::transient);
      auto act = activation(r1.output, Activation::elu, 1.0);
      h = act.out;
      caches.act = act.mask;
      caches.act_out = act.out;
    }
    auto r2 = gat_forward(h, pattern, l2_, cfg_.leaky_slope, cfg_.gat_level);
    caches.l1 = std::move(r1.cache);
    caches.l2 = std::move(r2.cache);
    return std::move(r2.output);
  }

  Grads backward(const DenseMatrix<S>& d_out, const PatternPtr& pattern, Caches& caches) const {
    Grads g;
    g.l2 = gat_backward(d_out, pattern, l2_, caches.l2, cfg_.leaky_slope, true);
    DenseMatrix<S> dh;
    {
      ScopedMemClass t(MemClass::transient);
      dh = activation_backward(*g.l2.d_input, caches.act, Activation::elu, 1.0,
                               &caches.act_out);
    }
    g.l1 = gat_backward(dh, pattern, l1_, caches.l1, cfg_.leaky_slope, cfg_.input_grad);
    return g;
  }

  const ModelConfig& config() const { return cfg_; }
  GatParams<S>& layer1() { return l1_; }
  GatParams<S>& layer2() { return l2_; }

  std::vector<TensorRef<S>> param_tensors() {
    return {
        {"l1.theta", l1_.theta.mutable_data(), l1_.theta.size()},
        {"l1.a_src", l1_.a_src.mutable_data(), l1_.a_src.size()},
        {"l1.a_dst", l1_.a_dst.mutable_data(), l1_.a_dst.size()},
        {"l1.bias", l1_.bias.data(), l1_.bias.size()},
        {"l2.theta", l2_.theta.mutable_data(), l2_.theta.size()},
        {"l2.a_src", l2_.a_src.mutable_data(), l2_.a_src.size()},
        {"l2.a_dst", l2_.a_dst.mutable_data(), l2_.a_dst.size()},
        {"l2.bias", l2_.bias.data(), l2_.bias.size()},
    };
  }

  static std::vector<std::vector<double>> grad_vectors(const Grads& g) {
    auto flat = [](const DenseMatrix<S>& m) {
      return std::vector<double>(m.data(), m.data() + m.size());
    };
    return {flat(g.l1.d_theta), flat(g.l1.d_a_src), flat(g.l1.d_a_dst),
            std::vector<double>(g.l1.d_bias.begin(), g.l1.d_bias.end()),
            flat(g.l2.d_theta), flat(g.l2.d_a_src), flat(g.l2.d_a_dst),
            std::vector<double>(g.l2.d_bias.begin(), g.l2.d_bias.end())};
  }

 private:
  ModelConfig cfg_;
  GatParams<S> l1_, l2_;
};

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

enum class LossKind { sum, mse };

template <class S>
struct LossResult {
  double value = 0;
  DenseMatrix<S> grad;
};

template <class S>
LossResult<S> loss_sum(const DenseMatrix<S>& out) {
  LossResult<S> r;
  double acc = 0;
  for (std::size_t i = 0; i < out.size(); ++i) acc += static_cast<double>(out.data()[i]);
  r.value = acc;
  r.grad = DenseMatrix<S>(out.rows(), out.cols());
  S* g = r.grad.mutable_data();
  for (std::size_t i = 0; i < out.size(); ++i) g[i] = S(1);
  counters().elementwise_flops += static_cast<count_t>(out.size());
  return r;
}

template <class S>
LossResult<S> loss_mse(const DenseMatrix<S>& out, const DenseMatrix<S>& target) {
  require(out.rows() == target.rows() && out.cols() == target.cols(),
          "loss_mse: target shape mismatch");
  LossResult<S> r;
  r.grad = DenseMatrix<S>(out.rows(), out.cols());
  S* g = r.grad.mutable_data();
  const double inv = 1.0 / static_cast<double>(out.size());
  double acc = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = static_cast<double>(out.data()[i]) - static_cast<double>(target.data()[i]);
    acc += d * d;
    g[i] = static_cast<S>(2.0 * d * inv);
  }
  r.value = acc * inv;
  counters().elementwise_flops += 3 * static_cast<count_t>(out.size());
  return r;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

enum class OptimizerKind { sgd, adam };

// Holds the optimizer moments and step count; parameters live in the model.
template <class S>
class Optimizer {
 public:
  static Optimizer sgd(double lr) {
    Optimizer o;
    o.kind_ = OptimizerKind::sgd;
    o.lr_ = lr;
    return o;
  }
  static Optimizer adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                        double eps = 1e-8) {
    Optimizer o;
    o.kind_ = OptimizerKind::adam;
    o.lr_ = lr;
    o.beta1_ = beta1;
    o.beta2_ = beta2;
    o.eps_ = eps;
    return o;
  }

  void step(std::vector<TensorRef<S>> params, const std::vector<std::vector<double>>& grads) {
    require(params.size() == grads.size(), "optimizer: parameter/gradient count mismatch");
    for (std::size_t t = 0; t < params.size(); ++t)
      require(params[t].size == grads[t].size(), "optimizer: tensor shape mismatch");
    ++step_;
    if (kind_ == OptimizerKind::sgd) {
      for (std::size_t t = 0; t < params.size(); ++t)
        for (std::size_t i = 0; i < params[t].size; ++i)
          params[t].data[i] -= static_cast<S>(lr_ * grads[t][i]);
      return;
    }
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.size, 0.0);
        v_.emplace_back(p.size, 0.0);
      }
    }
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t t = 0; t < params.size(); ++t)
      for (std::size_t i = 0; i < params[t].size; ++i) {
        const double g = grads[t][i];
        m_[t][i] = beta1_ * m_[t][i] + (1.0 - beta1_) * g;
        v_[t][i] = beta2_ * v_[t][i] + (1.0 - beta2_) * g * g;
        const double mhat = m_[t][i] / bc1;
        const double vhat = v_[t][i] / bc2;
        params[t].data[i] -= static_cast<S>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
  }

  std::int64_t step_count() const { return step_; }

 private:
  OptimizerKind kind_ = OptimizerKind::sgd;
  double lr_ = 0.01, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// ---------------------------------------------------------------------------
// Gradient checker
// ---------------------------------------------------------------------------

struct GradCheckReport {
  double max_rel_err = 0;
  std::string worst_tensor;
  std::size_t coords_checked = 0;
};

// Central differences (f(p+eps) - f(p-eps)) / 2eps against analytic grads,
// sub-sampled to at most max_coords coordinates per tensor (seeded). loss_fn
// re-evaluates the loss with the (temporarily perturbed) parameters.
template <class S>
GradCheckReport gradient_check(const std::function<double()>& loss_fn,
                               std::vector<TensorRef<S>> params,
                               const std::vector<std::vector<double>>& analytic, double eps,
                               std::uint64_t seed, std::size_t max_coords = 200) {
  require(params.size() == analytic.size(), "gradient_check: tensor count mismatch");
  GradCheckReport rep;
  Rng rng(seed);
  for (std::size_t t = 0; t < params.size(); ++t) {
    require(params[t].size == analytic[t].size(), "gradient_check: tensor size mismatch");
    std::vector<std::size_t> coords;
    if (params[t].size <= max_coords) {
      coords.resize(params[t].size);
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < max_coords; ++i)
        coords.push_back(static_cast<std::size_t>(rng.next_below(params[t].size)));
    }
    for (std::size_t i : coords) {
      const S saved = params[t].data[i];
      params[t].data[i] = saved + static_cast<S>(eps);
      const double up = loss_fn();
      params[t].data[i] = saved - static_cast<S>(eps);
      const double down = loss_fn();
      params[t].data[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::runtime_error("gradient_check: non-finite loss");
      const double fd = (up - down) / (2.0 * eps);
      const double err = rel_err(analytic[t][i], fd);
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_tensor = params[t].name;
      }
      ++rep.coords_checked;
    }
  }
  return rep;
}

}  // namespace sgnn
