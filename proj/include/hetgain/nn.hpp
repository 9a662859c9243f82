#pragma once

// Small tanh MLP over a flat parameter vector, and Adam.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include "hetgain/simplex.hpp"

namespace hetgain {

/// in -> hidden -> hidden -> out, tanh on both hidden layers, linear output.
/// Columns of the input matrix are samples.
class Mlp {
  using CMap = Eigen::Map<const Eigen::MatrixXd>;
  using CVec = Eigen::Map<const Eigen::VectorXd>;
  using MMap = Eigen::Map<Eigen::MatrixXd>;
  using MVec = Eigen::Map<Eigen::VectorXd>;

  template <class M, class V, class P>
  auto split(P* p) const {
    const auto r = static_cast<Eigen::Index>(hidden_), i = static_cast<Eigen::Index>(in_),
               o = static_cast<Eigen::Index>(out_);
    M w1(p, r, i);
    p += r * i;
    V b1(p, r);
    p += r;
    M w2(p, r, r);
    p += r * r;
    V b2(p, r);
    p += r;
    M w3(p, o, r);
    p += o * r;
    V b3(p, o);
    return std::tuple<M, V, M, V, M, V>(w1, b1, w2, b2, w3, b3);
  }
  auto views(std::span<const double> p) const { return split<CMap, CVec>(p.data()); }
  auto mutable_views(std::span<double> p) const { return split<MMap, MVec>(p.data()); }

 public:
  using Matrix = Eigen::MatrixXd;

  Mlp() = default;
  Mlp(std::size_t in, std::size_t hidden, std::size_t out) : in_(in), hidden_(hidden), out_(out) {}

  std::size_t inputs() const { return in_; }
  std::size_t outputs() const { return out_; }
  std::size_t parameter_count() const { return hidden_ * (in_ + 1) + hidden_ * (hidden_ + 1) + out_ * (hidden_ + 1); }

  /// Gaussian weights with 1/sqrt(fan_in) scale, output layer further scaled by output_scale; zero biases.
  std::vector<double> initial_parameters(Rng& rng, double output_scale) const {
    std::vector<double> p(parameter_count(), 0.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::size_t k = 0;
    auto fill = [&](std::size_t rows, std::size_t cols, double scale) {
      for (std::size_t n = 0; n < rows * cols; ++n) p[k++] = g(rng) * scale / std::sqrt(static_cast<double>(cols));
      k += rows;  // biases stay zero
    };
    fill(hidden_, in_, 1.0);
    fill(hidden_, hidden_, 1.0);
    fill(out_, hidden_, output_scale);
    return p;
  }

  struct Cache {
    Matrix x, h1, h2, y;
  };

  void forward(std::span<const double> params, const Matrix& x, Cache& c) const {
    const auto [w1, b1, w2, b2, w3, b3] = views(params);
    c.x = x;
    c.h1 = ((w1 * x).colwise() + b1).array().tanh();
    c.h2 = ((w2 * c.h1).colwise() + b2).array().tanh();
    c.y = (w3 * c.h2).colwise() + b3;
  }

  Matrix forward(std::span<const double> params, const Matrix& x) const {
    Cache c;
    forward(params, x, c);
    return c.y;
  }

  /// Accumulates sum over columns of dL/dparams into grad, given dL/dy per column.
  void backward(std::span<const double> params, const Cache& c, const Matrix& dy, std::span<double> grad) const {
    const auto [w1, b1, w2, b2, w3, b3] = views(params);
    auto [g1, gb1, g2, gb2, g3, gb3] = mutable_views(grad);
    g3 += dy * c.h2.transpose();
    gb3 += dy.rowwise().sum();
    Matrix d2 = (w3.transpose() * dy).array() * (1.0 - c.h2.array().square());
    g2 += d2 * c.h1.transpose();
    gb2 += d2.rowwise().sum();
    Matrix d1 = (w2.transpose() * d2).array() * (1.0 - c.h1.array().square());
    g1 += d1 * c.x.transpose();
    gb1 += d1.rowwise().sum();
  }

 private:
  std::size_t in_ = 0, hidden_ = 0, out_ = 0;
};

/// Adam ascent on a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t n, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
      : m_(n, 0.0), v_(n, 0.0), b1_(b1), b2_(b2), eps_(eps) {}

  void ascend(std::span<double> params, std::span<const double> grad, double lr) {
    ++steps_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(steps_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k] = b1_ * m_[k] + (1 - b1_) * grad[k];
      v_[k] = b2_ * v_[k] + (1 - b2_) * grad[k] * grad[k];
      params[k] += lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
    }
  }

  std::size_t steps() const { return steps_; }

 private:
  std::vector<double> m_, v_;
  double b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  std::size_t steps_ = 0;
};

}  // namespace hetgain
