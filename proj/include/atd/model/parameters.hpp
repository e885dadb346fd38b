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

#ifndef ATD_MODEL_PARAMETERS_HPP_
#define ATD_MODEL_PARAMETERS_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "atd/error.hpp"
#include "atd/model/config.hpp"

namespace atd::model {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Ordered store of named 2-D arrays. Row vectors (biases, norm gains) are
// 1 x n matrices. Gradients and optimizer moments reuse the same layout.
template <typename Scalar>
class Parameters {
 public:
  using MatrixType = Matrix<Scalar>;

  std::size_t Add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    if (index_.count(name)) throw Error(ErrorKind::kShapeMismatch, "duplicate array " + name);
    index_.emplace(name, values_.size());
    names_.push_back(std::move(name));
    values_.push_back(MatrixType::Zero(rows, cols));
    return values_.size() - 1;
  }

  std::size_t IndexOf(std::string_view name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) {
      throw Error(ErrorKind::kShapeMismatch, "no parameter array named " + std::string(name));
    }
    return it->second;
  }
  bool Contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  MatrixType& operator[](std::size_t i) { return values_[i]; }
  const MatrixType& operator[](std::size_t i) const { return values_[i]; }
  MatrixType& at(std::string_view name) { return values_[IndexOf(name)]; }
  const MatrixType& at(std::string_view name) const { return values_[IndexOf(name)]; }

  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return values_.size(); }

  Eigen::Index ElementCount() const {
    Eigen::Index n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
  }

  Parameters ZerosLike() const {
    Parameters out = *this;
    out.SetZero();
    return out;
  }

  void SetZero() {
    for (auto& v : values_) v.setZero();
  }

  bool SameLayout(const Parameters& other) const {
    if (names_ != other.names_) return false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i].rows() != other.values_[i].rows() ||
          values_[i].cols() != other.values_[i].cols()) {
        return false;
      }
    }
    return true;
  }

  Parameters& operator+=(const Parameters& other) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }

  template <typename Other>
  Parameters<Other> Cast() const {
    Parameters<Other> out;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      out.Add(names_[i], values_[i].rows(), values_[i].cols());
      out[i] = values_[i].template cast<Other>();
    }
    return out;
  }

  friend bool operator==(const Parameters& a, const Parameters& b) {
    return a.names_ == b.names_ && a.values_.size() == b.values_.size() &&
           [&] {
             for (std::size_t i = 0; i < a.values_.size(); ++i) {
               if (a.values_[i].rows() != b.values_[i].rows() ||
                   a.values_[i].cols() != b.values_[i].cols() ||
                   a.values_[i] != b.values_[i]) {
                 return false;
               }
             }
             return true;
           }();
  }

 private:
  std::vector<std::string> names_;
  std::vector<MatrixType> values_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

enum class InitKind { kNormal, kZeros, kOnes };

struct ParamSpec {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  InitKind init;
};

// Every array the architecture owns, in a fixed order.
std::vector<ParamSpec> ParameterLayout(const ModelConfig& config);

template <typename Scalar>
Parameters<Scalar> ZeroParameters(const ModelConfig& config) {
  Parameters<Scalar> p;
  for (const auto& spec : ParameterLayout(config)) p.Add(spec.name, spec.rows, spec.cols);
  return p;
}

// Projections and embeddings ~ N(0, 1/d_model); norm gains 1; biases 0.
// Values are drawn in double so float and double stores agree up to rounding.
template <typename Scalar>
Parameters<Scalar> InitParameters(const ModelConfig& config, std::uint64_t seed) {
  config.Validate();
  Parameters<Scalar> p;
  std::mt19937_64 rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  for (const auto& spec : ParameterLayout(config)) {
    auto& m = p[p.Add(spec.name, spec.rows, spec.cols)];
    switch (spec.init) {
      case InitKind::kZeros:
        break;
      case InitKind::kOnes:
        m.setOnes();
        break;
      case InitKind::kNormal: {
        std::normal_distribution<double> normal(0.0, stddev);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<Scalar>(normal(rng));
        }
        break;
      }
    }
  }
  return p;
}

}  // namespace atd::model

#endif  // ATD_MODEL_PARAMETERS_HPP_
