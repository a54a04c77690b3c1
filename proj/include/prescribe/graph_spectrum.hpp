#pragma once

// Forward and inverse spectral theory of the combinatorial Laplacian on the
// star graph with N interior vertices v0..v_{N-1} and one boundary vertex u0.
// The hub v0 is joined to u0 (weight theta) and to every leaf v_i (weight
// theta_i); functions vanish at u0 and the inner product is weighted by mu.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prescribe/error.hpp"

namespace prescribe::graph {

/// Edge weights and vertex measure of the boundary-star graph.
struct StarWeights {
  double theta = 0.0;               ///< hub to boundary vertex
  std::vector<double> theta_i;      ///< hub to leaf i, i = 1..N-1
  std::vector<double> mu;           ///< measure of v0..v_{N-1}

  std::size_t size() const { return mu.size(); }
};

/// Strictly increasing positive eigenvalue targets a_1 < ... < a_N.
struct TargetSpectrum {
  std::vector<double> a;
  std::size_t size() const { return a.size(); }
};

/// Poles b_1..b_{N-1} of the secular function, interlacing the targets.
struct PoleSequence {
  std::vector<double> b;
};

inline void validate(const StarWeights& w) {
  if (w.mu.empty()) throw ValidationError("star weights: mu must hold at least one entry");
  if (w.theta_i.size() + 1 != w.mu.size())
    throw ValidationError("star weights: theta_i must have exactly size(mu) - 1 entries");
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (!positive(w.theta)) throw ValidationError("star weights: theta must be positive");
  for (double t : w.theta_i)
    if (!positive(t)) throw ValidationError("star weights: every theta_i must be positive");
  for (double m : w.mu)
    if (!positive(m)) throw ValidationError("star weights: every mu must be positive");
}

inline void validate(const TargetSpectrum& t) {
  if (t.a.empty()) throw ValidationError("targets: need at least one value");
  if (!(std::isfinite(t.a.front()) && t.a.front() > 0.0))
    throw ValidationError("targets: values must be positive");
  for (std::size_t k = 1; k < t.a.size(); ++k)
    if (!(std::isfinite(t.a[k]) && t.a[k] > t.a[k - 1]))
      throw ValidationError("targets: values must be strictly increasing");
}

inline void validate(const TargetSpectrum& t, const PoleSequence& p) {
  validate(t);
  if (p.b.size() + 1 != t.a.size())
    throw ValidationError("poles: need exactly N-1 poles for N targets");
  for (std::size_t k = 0; k < p.b.size(); ++k)
    if (!(t.a[k] < p.b[k] && p.b[k] < t.a[k + 1]))
      throw ValidationError("poles: interlacing a_k < b_k < a_{k+1} violated at k = " +
                            std::to_string(k + 1));
}

/// Stiffness/mass pair whose generalized eigenvalues are the graph spectrum.
struct LaplacianPair {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd M;
};

inline LaplacianPair laplacian_pair(const StarWeights& w) {
  validate(w);
  const auto n = static_cast<Eigen::Index>(w.size());
  LaplacianPair out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  out.Q(0, 0) = w.theta;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double t = w.theta_i[static_cast<std::size_t>(i - 1)];
    out.Q(0, 0) += t;
    out.Q(0, i) = out.Q(i, 0) = -t;
    out.Q(i, i) = t;
  }
  for (Eigen::Index i = 0; i < n; ++i) out.M(i, i) = w.mu[static_cast<std::size_t>(i)];
  return out;
}

/// Poles b_i = theta_i / mu_i, in leaf order (not sorted).
inline std::vector<double> poles(const StarWeights& w) {
  std::vector<double> b(w.theta_i.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = w.theta_i[i] / w.mu[i + 1];
  return b;
}

/// theta/lambda + sum theta_i/(lambda - b_i), divided by mu_0.
/// Equals 1 exactly at the eigenvalues.
inline double secular_function(const StarWeights& w, double lambda) {
  double s = w.theta / lambda;
  for (std::size_t i = 0; i < w.theta_i.size(); ++i)
    s += w.theta_i[i] / (lambda - w.theta_i[i] / w.mu[i + 1]);
  return s / w.mu[0];
}

namespace detail {

struct Secular {
  double theta;
  double mu0;
  std::vector<double> t;  // theta_i
  std::vector<double> b;  // poles

  // g(x) = theta/x + sum t_i/(x - b_i) - mu0, strictly decreasing between poles.
  std::pair<double, double> eval(double x) const {
    double g = theta / x - mu0;
    double dg = -theta / (x * x);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double d = x - b[i];
      g += t[i] / d;
      dg -= t[i] / (d * d);
    }
    return {g, dg};
  }
};

// Root of g on the open interval (lo, hi); hi may be +inf.
// g -> +inf at lo+, and g < 0 near hi- (or at infinity).
inline double secular_root(const Secular& s, double lo, double hi) {
  constexpr double kRelTol = 1e-13;
  if (!std::isfinite(hi)) {
    double probe = std::max(2.0 * lo, lo + 1.0);
    while (s.eval(probe).first >= 0.0) probe *= 2.0;
    hi = probe;
  }
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 400; ++iter) {
    const auto [g, dg] = s.eval(x);
    if (g == 0.0) return x;
    if (g > 0.0) lo = x; else hi = x;
    double next = x - g / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= kRelTol * std::abs(x) * 1e-2 || (hi - lo) <= kRelTol * std::abs(x) * 1e-2)
      return x;
  }
  return x;
}

inline std::vector<double> dense_pencil_spectrum(const StarWeights& w) {
  const auto pair = laplacian_pair(w);
  const Eigen::VectorXd inv_sqrt = pair.M.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = inv_sqrt.asDiagonal() * pair.Q * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  std::vector<double> out(static_cast<std::size_t>(S.rows()));
  for (Eigen::Index k = 0; k < S.rows(); ++k) out[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
  return out;
}

inline bool poles_distinct(std::vector<double> b) {
  std::sort(b.begin(), b.end());
  const double scale = b.empty() ? 1.0 : b.back();
  for (std::size_t k = 1; k < b.size(); ++k)
    if (b[k] - b[k - 1] <= 1e-12 * scale) return false;
  return true;
}

}  // namespace detail

/// The N eigenvalues of (Q, M), ascending.
inline std::vector<double> forward_spectrum(const StarWeights& w) {
  validate(w);
  const std::size_t n = w.size();
  if (n == 1) return {w.theta / w.mu[0]};

  auto b = poles(w);
  if (!detail::poles_distinct(b)) return detail::dense_pencil_spectrum(w);

  std::vector<std::size_t> order(b.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return b[i] < b[j]; });
  detail::Secular s{w.theta, w.mu[0], {}, {}};
  for (auto i : order) {
    s.t.push_back(w.theta_i[i]);
    s.b.push_back(b[i]);
  }

  std::vector<double> out;
  out.reserve(n);
  double lo = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double hi = k + 1 < n ? s.b[k] : std::numeric_limits<double>::infinity();
    out.push_back(detail::secular_root(s, lo, hi));
    if (k + 1 < n) lo = s.b[k];
  }
  return out;
}

/// Geometric-mean poles b_k = sqrt(a_k a_{k+1}).
inline PoleSequence default_poles(const TargetSpectrum& t) {
  validate(t);
  PoleSequence p;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) p.b.push_back(std::sqrt(t.a[k] * t.a[k + 1]));
  return p;
}

/// Weights (mu_0 = 1) whose spectrum is exactly the targets, built from the
/// residues of R(x) = prod(x - a_i) / (x prod(x - b_i)).
inline StarWeights prescribe_weights(const TargetSpectrum& t,
                                     const std::optional<PoleSequence>& p = std::nullopt) {
  const PoleSequence poles_used = p ? *p : default_poles(t);
  validate(t, poles_used);
  const std::size_t n = t.size();
  const auto& a = t.a;
  const auto& b = poles_used.b;

  StarWeights w;
  w.mu.assign(n, 1.0);
  w.theta_i.resize(n - 1);

  // -Res_{x=0} R = prod a / prod b, accumulated as paired ratios.
  double theta = a[n - 1];
  for (std::size_t i = 0; i + 1 < n; ++i) theta *= a[i] / b[i];
  w.theta = theta;

  for (std::size_t j = 0; j + 1 < n; ++j) {
    // -Res_{x=b_j} R = -(b_j - a_j)(b_j - a_N)/b_j * prod_{i != j} (b_j - a_i)/(b_j - b_i)
    double r = -(b[j] - a[j]) * (b[j] - a[n - 1]) / b[j];
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (i != j) r *= (b[j] - a[i]) / (b[j] - b[i]);
    w.theta_i[j] = r;
    w.mu[j + 1] = r / b[j];
  }

  if (!(w.theta > 0.0) || std::any_of(w.theta_i.begin(), w.theta_i.end(), [](double x) { return !(x > 0.0); }))
    throw NumericalError("prescribe_weights: non-positive residue despite interlacing");
  return w;
}

inline StarWeights scale_weights(const StarWeights& w, double t) {
  if (!(std::isfinite(t) && t > 0.0)) throw ValidationError("scale_weights: factor must be positive");
  StarWeights out = w;
  out.theta *= t;
  for (double& x : out.theta_i) x *= t;
  for (double& x : out.mu) x *= t;
  return out;
}

/// Smallest factor t >= 1 giving mu_0 >= N+1 and mu_i >= 2.
inline double construction_scale(const StarWeights& w) {
  validate(w);
  double t = std::max(1.0, static_cast<double>(w.size() + 1) / w.mu[0]);
  for (std::size_t i = 1; i < w.size(); ++i) t = std::max(t, 2.0 / w.mu[i]);
  return t;
}

inline StarWeights normalize_for_construction(const StarWeights& w) {
  return scale_weights(w, construction_scale(w));
}

// ---------------------------------------------------------------------------
// Derivative of the map (theta, theta_i, mu_j) -> (lambda_1..lambda_N).

/// Parameters flattened as (theta, theta_1..theta_{N-1}, mu_0..mu_{N-1}).
inline Eigen::VectorXd parameter_vector(const StarWeights& w) {
  const auto n = static_cast<Eigen::Index>(w.size());
  Eigen::VectorXd p(2 * n);
  p(0) = w.theta;
  for (Eigen::Index i = 1; i < n; ++i) p(i) = w.theta_i[static_cast<std::size_t>(i - 1)];
  for (Eigen::Index j = 0; j < n; ++j) p(n + j) = w.mu[static_cast<std::size_t>(j)];
  return p;
}

inline StarWeights from_parameter_vector(const Eigen::VectorXd& p) {
  if (p.size() < 2 || p.size() % 2 != 0) throw ValidationError("parameter vector must have even length >= 2");
  const Eigen::Index n = p.size() / 2;
  StarWeights w;
  w.theta = p(0);
  for (Eigen::Index i = 1; i < n; ++i) w.theta_i.push_back(p(i));
  for (Eigen::Index j = 0; j < n; ++j) w.mu.push_back(p(n + j));
  return w;
}

struct PhiJacobian {
  Eigen::MatrixXd analytic;           ///< N x 2N
  Eigen::MatrixXd finite_difference;  ///< central differences, relative step 1e-6
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double max_discrepancy = 0.0;       ///< max |J - J_fd| / max |J|
  bool submersion = false;
};

inline constexpr double kSimpleSpectrumTol = 1e-8;
inline constexpr double kRankTol = 1e-8;

inline void require_simple(std::span<const double> lambda) {
  const double scale = std::abs(lambda.back());
  for (std::size_t k = 1; k < lambda.size(); ++k)
    if (lambda[k] - lambda[k - 1] <= kSimpleSpectrumTol * scale)
      throw DegenerateSpectrum("spectrum is not simple: gap below 1e-8 * max|lambda| at index " +
                               std::to_string(k));
}

/// M-normalized eigenvectors of the pencil, one column per eigenvalue.
inline Eigen::MatrixXd pencil_eigenvectors(const StarWeights& w, std::span<const double> lambda) {
  const auto n = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd F(n, n);
  const auto b = poles(w);
  if (detail::poles_distinct(b)) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double l = lambda[static_cast<std::size_t>(k)];
      F(0, k) = 1.0;
      for (Eigen::Index i = 1; i < n; ++i) F(i, k) = b[static_cast<std::size_t>(i - 1)] / (b[static_cast<std::size_t>(i - 1)] - l);
    }
  } else {
    const auto pair = laplacian_pair(w);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(pair.Q, pair.M);
    F = es.eigenvectors();
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    double norm2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) norm2 += w.mu[static_cast<std::size_t>(i)] * F(i, k) * F(i, k);
    F.col(k) /= std::sqrt(norm2);
  }
  return F;
}

inline PhiJacobian jacobian_phi(const StarWeights& w) {
  const auto lambda = forward_spectrum(w);
  require_simple(lambda);
  const auto n = static_cast<Eigen::Index>(w.size());
  const Eigen::MatrixXd F = pencil_eigenvectors(w, lambda);

  PhiJacobian out;
  out.analytic.resize(n, 2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto f = F.col(k);
    const double l = lambda[static_cast<std::size_t>(k)];
    out.analytic(k, 0) = f(0) * f(0);
    for (Eigen::Index i = 1; i < n; ++i) out.analytic(k, i) = (f(0) - f(i)) * (f(0) - f(i));
    for (Eigen::Index j = 0; j < n; ++j) out.analytic(k, n + j) = -l * f(j) * f(j);
  }

  const Eigen::VectorXd p0 = parameter_vector(w);
  out.finite_difference.resize(n, 2 * n);
  for (Eigen::Index c = 0; c < 2 * n; ++c) {
    const double h = 1e-6 * p0(c);
    Eigen::VectorXd plus = p0, minus = p0;
    plus(c) += h;
    minus(c) -= h;
    const auto lp = forward_spectrum(from_parameter_vector(plus));
    const auto lm = forward_spectrum(from_parameter_vector(minus));
    for (Eigen::Index k = 0; k < n; ++k)
      out.finite_difference(k, c) = (lp[static_cast<std::size_t>(k)] - lm[static_cast<std::size_t>(k)]) / (2.0 * h);
  }
  out.max_discrepancy = (out.analytic - out.finite_difference).cwiseAbs().maxCoeff() /
                        out.analytic.cwiseAbs().maxCoeff();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.analytic);
  out.sigma_max = svd.singularValues()(0);
  out.sigma_min = svd.singularValues()(n - 1);
  out.submersion = out.sigma_min > kRankTol * out.sigma_max;
  return out;
}

}  // namespace prescribe::graph
