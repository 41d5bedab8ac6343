#pragma once

// Independent reference computations used only by tests. None of these call
// into the library's numerical code paths they are checked against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Plain-loop network loss: omega0 is L x J, omega1 is J x P.
inline double naive_sample_loss(const Mat& w0, const Mat& w1, const Vec& z, const Vec& y) {
  const auto J = w1.rows();
  const auto L = w0.rows();
  std::vector<double> act(static_cast<std::size_t>(J));
  for (Eigen::Index j = 0; j < J; ++j) {
    double pre = 0.0;
    for (Eigen::Index p = 0; p < w1.cols(); ++p) pre += w1(j, p) * z[p];
    act[static_cast<std::size_t>(j)] = pre / (1.0 + std::exp(-pre));
  }
  std::vector<double> logit(static_cast<std::size_t>(L));
  for (Eigen::Index l = 0; l < L; ++l) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) s += w0(l, j) * act[static_cast<std::size_t>(j)];
    logit[static_cast<std::size_t>(l)] = s;
  }
  double denom = 0.0;
  for (double v : logit) denom += std::exp(v);
  double out = 0.0;
  for (Eigen::Index l = 0; l < L; ++l) {
    out -= y[l] * std::log(std::exp(logit[static_cast<std::size_t>(l)]) / denom);
  }
  return out;
}

// Flat layout: omega0 row-major then omega1 row-major.
inline void unflatten(const Vec& w, Eigen::Index L, Eigen::Index J, Eigen::Index P, Mat& w0, Mat& w1) {
  w0.resize(L, J);
  w1.resize(J, P);
  Eigen::Index k = 0;
  for (Eigen::Index l = 0; l < L; ++l)
    for (Eigen::Index j = 0; j < J; ++j) w0(l, j) = w[k++];
  for (Eigen::Index j = 0; j < J; ++j)
    for (Eigen::Index p = 0; p < P; ++p) w1(j, p) = w[k++];
}

// Fixed-step gradient descent on constant + <lin, w> + tau ||w||^2.
inline Vec gd_quadratic_minimizer(const Vec& lin, double tau, int iters = 20000) {
  Vec w = Vec::Zero(lin.size());
  const double step = 1.0 / (4.0 * tau);  // 1/L with L = 2 tau, halved
  for (int k = 0; k < iters; ++k) {
    const Vec g = lin + 2.0 * tau * w;
    if (g.cwiseAbs().maxCoeff() < 1e-15) break;
    w -= step * g;
  }
  return w;
}

// Golden-section maximization of the concave dual of
//   min ||w||^2 + c s  s.t.  <a, w> + tau ||w||^2 + C - U <= s, s >= 0,
// evaluating the Lagrangian minimum directly instead of its closed form.
inline double dual_value(const Vec& a, double tau, double gap, double nu) {
  // inf_w ||w||^2 + nu(<a,w> + tau||w||^2 + gap), minimizer w = -nu a / (2 (1 + nu tau))
  const Vec w = (-nu / (2.0 * (1.0 + nu * tau))) * a;
  return w.squaredNorm() + nu * (a.dot(w) + tau * w.squaredNorm() + gap);
}

inline double golden_section_nu(const Vec& a, double tau, double C, double U, double c) {
  const double gap = C - U;
  double lo = 0.0;
  double hi = c;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo);
  double x2 = lo + r * (hi - lo);
  double f1 = dual_value(a, tau, gap, x1);
  double f2 = dual_value(a, tau, gap, x2);
  for (int it = 0; it < 300 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = dual_value(a, tau, gap, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = dual_value(a, tau, gap, x1);
    }
  }
  const double mid = 0.5 * (lo + hi);
  // Endpoints can be optimal; compare explicitly.
  double best = mid;
  for (double cand : {0.0, c}) {
    if (dual_value(a, tau, gap, cand) > dual_value(a, tau, gap, best)) best = cand;
  }
  return best;
}

inline void put_be32(std::vector<unsigned char>& b, std::uint32_t v) {
  b.push_back(static_cast<unsigned char>(v >> 24));
  b.push_back(static_cast<unsigned char>(v >> 16));
  b.push_back(static_cast<unsigned char>(v >> 8));
  b.push_back(static_cast<unsigned char>(v));
}

inline void write_bytes(const std::string& path, const std::vector<unsigned char>& b) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// IDX image file built byte by byte from the published layout.
inline std::vector<unsigned char> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                             const std::vector<unsigned char>& pixels) {
  std::vector<unsigned char> b;
  put_be32(b, 0x00000803);
  put_be32(b, count);
  put_be32(b, rows);
  put_be32(b, cols);
  b.insert(b.end(), pixels.begin(), pixels.end());
  return b;
}

inline std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels) {
  std::vector<unsigned char> b;
  put_be32(b, 0x00000801);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

// Full-batch gradient descent on multinomial logistic regression (with a
// bias column), written with plain loops. Returns training accuracy.
inline double softmax_regression_accuracy(const Mat& X, const Mat& Y, int steps, double lr) {
  const Eigen::Index N = X.rows();
  const Eigen::Index P = X.cols() + 1;
  const Eigen::Index L = Y.cols();
  Mat W = Mat::Zero(L, P);
  std::vector<double> logit(static_cast<std::size_t>(L));
  auto scores = [&](Eigen::Index n) {
    double peak = -1e300;
    for (Eigen::Index l = 0; l < L; ++l) {
      double s = W(l, P - 1);
      for (Eigen::Index p = 0; p + 1 < P; ++p) s += W(l, p) * X(n, p);
      logit[static_cast<std::size_t>(l)] = s;
      peak = std::max(peak, s);
    }
    double total = 0.0;
    for (auto& v : logit) total += (v = std::exp(v - peak));
    for (auto& v : logit) v /= total;
  };
  for (int it = 0; it < steps; ++it) {
    Mat G = Mat::Zero(L, P);
    for (Eigen::Index n = 0; n < N; ++n) {
      scores(n);
      for (Eigen::Index l = 0; l < L; ++l) {
        const double r = logit[static_cast<std::size_t>(l)] - Y(n, l);
        for (Eigen::Index p = 0; p + 1 < P; ++p) G(l, p) += r * X(n, p);
        G(l, P - 1) += r;
      }
    }
    W -= (lr / static_cast<double>(N)) * G;
  }
  Eigen::Index hits = 0;
  for (Eigen::Index n = 0; n < N; ++n) {
    scores(n);
    const auto best = std::max_element(logit.begin(), logit.end()) - logit.begin();
    Eigen::Index truth = 0;
    Y.row(n).maxCoeff(&truth);
    hits += best == truth;
  }
  return static_cast<double>(hits) / static_cast<double>(N);
}

}  // namespace oracle
