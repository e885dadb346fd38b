/* Copyright 2026 The ATD Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ATD_MODEL_LAYERS_HPP_
#define ATD_MODEL_LAYERS_HPP_

// Building blocks of the character transformer, each with a hand-written
// backward pass. Activations are [positions x features]; backward functions
// accumulate parameter gradients into the matching Parameters store.

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "atd/model/parameters.hpp"

namespace atd::model {

template <typename Scalar>
using ColumnVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kNormEpsilon = 1e-5;

struct LinearRef {
  std::size_t weight = 0;
  std::size_t bias = 0;

  template <typename Scalar>
  static LinearRef Resolve(const Parameters<Scalar>& p, const std::string& prefix) {
    return {p.IndexOf(prefix + ".weight"), p.IndexOf(prefix + ".bias")};
  }
};

struct NormRef {
  std::size_t gain = 0;
  std::size_t bias = 0;

  template <typename Scalar>
  static NormRef Resolve(const Parameters<Scalar>& p, const std::string& prefix) {
    return {p.IndexOf(prefix + ".gain"), p.IndexOf(prefix + ".bias")};
  }
};

struct AttentionRef {
  LinearRef query, key, value, output;

  template <typename Scalar>
  static AttentionRef Resolve(const Parameters<Scalar>& p, const std::string& prefix) {
    return {LinearRef::Resolve(p, prefix + ".query"), LinearRef::Resolve(p, prefix + ".key"),
            LinearRef::Resolve(p, prefix + ".value"), LinearRef::Resolve(p, prefix + ".output")};
  }
};

struct FfnRef {
  LinearRef up, down;

  template <typename Scalar>
  static FfnRef Resolve(const Parameters<Scalar>& p, const std::string& prefix) {
    return {LinearRef::Resolve(p, prefix + ".up"), LinearRef::Resolve(p, prefix + ".down")};
  }
};

// y = x W + b
template <typename Scalar>
Matrix<Scalar> LinearForward(const Parameters<Scalar>& p, const LinearRef& ref,
                             const Matrix<Scalar>& x) {
  Matrix<Scalar> y = x * p[ref.weight];
  y.rowwise() += p[ref.bias].row(0);
  return y;
}

template <typename Scalar>
Matrix<Scalar> LinearBackward(const Parameters<Scalar>& p, Parameters<Scalar>& grads,
                              const LinearRef& ref, const Matrix<Scalar>& x,
                              const Matrix<Scalar>& dy) {
  grads[ref.weight].noalias() += x.transpose() * dy;
  grads[ref.bias].row(0) += dy.colwise().sum();
  return dy * p[ref.weight].transpose();
}

template <typename Scalar>
struct NormCache {
  Matrix<Scalar> normalized;          // (x - mean) / std
  ColumnVector<Scalar> inv_std;
};

template <typename Scalar>
Matrix<Scalar> LayerNormForward(const Parameters<Scalar>& p, const NormRef& ref,
                                const Matrix<Scalar>& x, NormCache<Scalar>* cache) {
  const ColumnVector<Scalar> mean = x.rowwise().mean();
  Matrix<Scalar> centered = x.colwise() - mean;
  const ColumnVector<Scalar> var = centered.array().square().rowwise().mean();
  ColumnVector<Scalar> inv_std = (var.array() + static_cast<Scalar>(kNormEpsilon)).rsqrt();
  centered = centered.array().colwise() * inv_std.array();
  Matrix<Scalar> y = centered.array().rowwise() * p[ref.gain].row(0).array();
  y.rowwise() += p[ref.bias].row(0);
  if (cache) {
    cache->normalized = std::move(centered);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename Scalar>
Matrix<Scalar> LayerNormBackward(const Parameters<Scalar>& p, Parameters<Scalar>& grads,
                                 const NormRef& ref, const NormCache<Scalar>& cache,
                                 const Matrix<Scalar>& dy) {
  const auto& xhat = cache.normalized;
  grads[ref.gain].row(0) += (dy.array() * xhat.array()).matrix().colwise().sum();
  grads[ref.bias].row(0) += dy.colwise().sum();
  Matrix<Scalar> dxhat = dy.array().rowwise() * p[ref.gain].row(0).array();
  const ColumnVector<Scalar> mean_d = dxhat.rowwise().mean();
  const ColumnVector<Scalar> mean_dx = (dxhat.array() * xhat.array()).rowwise().mean();
  Matrix<Scalar> dx = dxhat.colwise() - mean_d;
  dx.array() -= xhat.array().colwise() * mean_dx.array();
  dx = dx.array().colwise() * cache.inv_std.array();
  return dx;
}

// Exact GELU, x * Phi(x).
template <typename Scalar>
Scalar Gelu(Scalar x) {
  return static_cast<Scalar>(0.5) * x * (static_cast<Scalar>(1) + std::erf(x * static_cast<Scalar>(M_SQRT1_2)));
}

template <typename Scalar>
Scalar GeluDerivative(Scalar x) {
  const Scalar cdf = static_cast<Scalar>(0.5) * (static_cast<Scalar>(1) + std::erf(x * static_cast<Scalar>(M_SQRT1_2)));
  const Scalar pdf = std::exp(static_cast<Scalar>(-0.5) * x * x) * static_cast<Scalar>(0.5 * M_2_SQRTPI * M_SQRT1_2);
  return cdf + x * pdf;
}

template <typename Scalar>
struct FfnCache {
  Matrix<Scalar> input;
  Matrix<Scalar> pre_activation;
  Matrix<Scalar> activation;
};

template <typename Scalar>
Matrix<Scalar> FfnForward(const Parameters<Scalar>& p, const FfnRef& ref, const Matrix<Scalar>& x,
                          FfnCache<Scalar>* cache) {
  Matrix<Scalar> pre = LinearForward(p, ref.up, x);
  Matrix<Scalar> act = pre.unaryExpr([](Scalar v) { return Gelu(v); });
  Matrix<Scalar> y = LinearForward(p, ref.down, act);
  if (cache) {
    cache->input = x;
    cache->pre_activation = std::move(pre);
    cache->activation = std::move(act);
  }
  return y;
}

template <typename Scalar>
Matrix<Scalar> FfnBackward(const Parameters<Scalar>& p, Parameters<Scalar>& grads, const FfnRef& ref,
                           const FfnCache<Scalar>& cache, const Matrix<Scalar>& dy) {
  Matrix<Scalar> dact = LinearBackward(p, grads, ref.down, cache.activation, dy);
  dact.array() *= cache.pre_activation.unaryExpr([](Scalar v) { return GeluDerivative(v); }).array();
  return LinearBackward(p, grads, ref.up, cache.input, dact);
}

template <typename Scalar>
struct AttentionCache {
  Matrix<Scalar> query_input;
  Matrix<Scalar> kv_input;
  Matrix<Scalar> q, k, v;
  std::vector<Matrix<Scalar>> probs;  // one [n_q x n_kv] matrix per head
  Matrix<Scalar> context;
};

// Row-wise softmax; -inf entries become exact zeros.
template <typename Scalar>
void SoftmaxRows(Matrix<Scalar>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Scalar max = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - max).exp();
    m.row(r) /= m.row(r).sum();
  }
}

// Multi-head scaled dot-product attention. With `causal`, query i only sees
// keys 0..i.
template <typename Scalar>
Matrix<Scalar> AttentionForward(const Parameters<Scalar>& p, const AttentionRef& ref, int n_heads,
                                bool causal, const Matrix<Scalar>& query_input,
                                const Matrix<Scalar>& kv_input, AttentionCache<Scalar>* cache) {
  const Eigen::Index d = query_input.cols();
  const Eigen::Index head_dim = d / n_heads;
  const Scalar scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(head_dim)));
  Matrix<Scalar> q = LinearForward(p, ref.query, query_input);
  Matrix<Scalar> k = LinearForward(p, ref.key, kv_input);
  Matrix<Scalar> v = LinearForward(p, ref.value, kv_input);
  Matrix<Scalar> context(query_input.rows(), d);
  std::vector<Matrix<Scalar>> probs;
  if (cache) probs.reserve(static_cast<std::size_t>(n_heads));
  for (int h = 0; h < n_heads; ++h) {
    const Eigen::Index off = h * head_dim;
    Matrix<Scalar> scores = (q.middleCols(off, head_dim) * k.middleCols(off, head_dim).transpose()) * scale;
    if (causal) {
      for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < scores.cols(); ++j) {
          scores(i, j) = -std::numeric_limits<Scalar>::infinity();
        }
      }
    }
    SoftmaxRows(scores);
    context.middleCols(off, head_dim).noalias() = scores * v.middleCols(off, head_dim);
    if (cache) probs.push_back(std::move(scores));
  }
  Matrix<Scalar> out = LinearForward(p, ref.output, context);
  if (cache) {
    cache->query_input = query_input;
    cache->kv_input = kv_input;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->context = std::move(context);
  }
  return out;
}

template <typename Scalar>
void AttentionBackward(const Parameters<Scalar>& p, Parameters<Scalar>& grads,
                       const AttentionRef& ref, int n_heads, const AttentionCache<Scalar>& cache,
                       const Matrix<Scalar>& dy, Matrix<Scalar>* d_query_input,
                       Matrix<Scalar>* d_kv_input) {
  const Eigen::Index d = cache.q.cols();
  const Eigen::Index head_dim = d / n_heads;
  const Scalar scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(head_dim)));
  const Matrix<Scalar> dcontext = LinearBackward(p, grads, ref.output, cache.context, dy);
  Matrix<Scalar> dq(cache.q.rows(), d);
  Matrix<Scalar> dk(cache.k.rows(), d);
  Matrix<Scalar> dv(cache.v.rows(), d);
  for (int h = 0; h < n_heads; ++h) {
    const Eigen::Index off = h * head_dim;
    const auto& probs = cache.probs[static_cast<std::size_t>(h)];
    const auto dctx_h = dcontext.middleCols(off, head_dim);
    const Matrix<Scalar> dprobs = dctx_h * cache.v.middleCols(off, head_dim).transpose();
    dv.middleCols(off, head_dim).noalias() = probs.transpose() * dctx_h;
    const ColumnVector<Scalar> row_dot = (dprobs.array() * probs.array()).rowwise().sum();
    Matrix<Scalar> dscores = probs.array() * (dprobs.colwise() - row_dot).array();
    dscores *= scale;
    dq.middleCols(off, head_dim).noalias() = dscores * cache.k.middleCols(off, head_dim);
    dk.middleCols(off, head_dim).noalias() = dscores.transpose() * cache.q.middleCols(off, head_dim);
  }
  Matrix<Scalar> dxq = LinearBackward(p, grads, ref.query, cache.query_input, dq);
  Matrix<Scalar> dxkv = LinearBackward(p, grads, ref.key, cache.kv_input, dk);
  dxkv += LinearBackward(p, grads, ref.value, cache.kv_input, dv);
  *d_query_input = std::move(dxq);
  *d_kv_input = std::move(dxkv);
}

// Inverted dropout mask: entries are 0 or 1 / (1 - rate). Empty when the
// rate is zero or dropout is off.
template <typename Scalar>
Matrix<Scalar> DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate,
                           std::mt19937_64* rng) {
  if (rng == nullptr || rate <= 0.0) return {};
  Matrix<Scalar> mask(rows, cols);
  const Scalar keep = static_cast<Scalar>(1.0 / (1.0 - rate));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      mask(r, c) = uniform(*rng) < rate ? Scalar(0) : keep;
    }
  }
  return mask;
}

template <typename Scalar>
void ApplyMask(Matrix<Scalar>& x, const Matrix<Scalar>& mask) {
  if (mask.size() != 0) x.array() *= mask.array();
}

}  // namespace atd::model

#endif  // ATD_MODEL_LAYERS_HPP_
