#include "prefrank/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <tuple>

#include "prefrank/errors.hpp"
#include "prefrank/random.hpp"

namespace prefrank::bo {

KernelParams KernelParams::isotropic(std::size_t dim, double lengthscale, double signal_variance,
                                     double noise_variance) {
  return KernelParams{std::vector<double>(dim, lengthscale), signal_variance, noise_variance};
}

namespace {

Eigen::MatrixXd scaled(const Eigen::MatrixXd& a, const KernelParams& k) {
  if (static_cast<std::size_t>(a.cols()) != k.lengthscales.size())
    throw InvalidInput("kernel has " + std::to_string(k.lengthscales.size()) +
                       " lengthscales for " + std::to_string(a.cols()) + "-d inputs");
  Eigen::VectorXd inv(a.cols());
  for (Eigen::Index d = 0; d < a.cols(); ++d) inv(d) = 1.0 / k.lengthscales[static_cast<std::size_t>(d)];
  return a * inv.asDiagonal();
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const KernelParams& k) {
  const Eigen::MatrixXd as = scaled(a, k);
  const Eigen::MatrixXd bs = scaled(b, k);
  const Eigen::VectorXd an = as.rowwise().squaredNorm();
  const Eigen::VectorXd bn = bs.rowwise().squaredNorm();
  Eigen::MatrixXd sq = -2.0 * as * bs.transpose();
  sq.colwise() += an;
  sq.rowwise() += bn.transpose();
  return k.signal_variance * (-0.5 * sq.array().max(0.0)).exp().matrix();
}

GPState GPState::fit(Eigen::MatrixXd x, Eigen::VectorXd y, KernelParams kernel, double prior_mean) {
  if (x.rows() != y.size()) throw InvalidInput("GP inputs and targets differ in length");
  if (x.rows() == 0) throw InvalidInput("GP needs at least one observation");
  GPState g;
  g.x_ = std::move(x);
  g.y_ = std::move(y);
  g.kernel_ = std::move(kernel);
  g.prior_mean_ = prior_mean;

  Eigen::MatrixXd k = kernel_matrix(g.x_, g.x_, g.kernel_);
  k.diagonal().array() += g.kernel_.noise_variance;
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 6; ++attempt) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    g.chol_.compute(kj);
    if (g.chol_.info() == Eigen::Success && (g.chol_.matrixLLT().diagonal().array() > 0.0).all()) {
      g.jitter_ = jitter;
      g.alpha_ = g.chol_.solve((g.y_.array() - prior_mean).matrix());
      return g;
    }
    jitter = jitter == 0.0 ? kJitter : jitter * 10.0;
  }
  throw IllConditioned("kernel matrix is not positive definite even with jitter");
}

void GPState::posterior(const Eigen::MatrixXd& points, Eigen::VectorXd& mean,
                        Eigen::VectorXd& var) const {
  const Eigen::MatrixXd ks = kernel_matrix(x_, points, kernel_);  // n x m
  mean = (ks.transpose() * alpha_).array() + prior_mean_;
  const Eigen::MatrixXd v = chol_.matrixL().solve(ks);
  var = (kernel_.signal_variance - v.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
}

std::pair<double, double> GPState::posterior(std::span<const double> x) const {
  if (x.size() != dim()) throw InvalidInput("query point has wrong dimension");
  Eigen::MatrixXd p(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t d = 0; d < x.size(); ++d) p(0, static_cast<Eigen::Index>(d)) = x[d];
  Eigen::VectorXd m, v;
  posterior(p, m, v);
  return {m(0), v(0)};
}

double GPState::log_marginal_likelihood() const {
  const Eigen::VectorXd r = (y_.array() - prior_mean_).matrix();
  const double logdet = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
  return -0.5 * r.dot(alpha_) - 0.5 * logdet -
         0.5 * static_cast<double>(y_.size()) * std::log(2.0 * std::numbers::pi);
}

std::pair<double, Eigen::VectorXd> log_marginal_likelihood_gradient(const Eigen::MatrixXd& x,
                                                                    const Eigen::VectorXd& y,
                                                                    const KernelParams& k,
                                                                    double prior_mean) {
  const auto n = x.rows();
  const auto dims = x.cols();
  const Eigen::MatrixXd kf = kernel_matrix(x, x, k);
  Eigen::MatrixXd kn = kf;
  kn.diagonal().array() += k.noise_variance;
  Eigen::LLT<Eigen::MatrixXd> llt(kn);
  if (llt.info() != Eigen::Success) throw IllConditioned("K + noise is not positive definite");
  const Eigen::VectorXd r = (y.array() - prior_mean).matrix();
  const Eigen::VectorXd alpha = llt.solve(r);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  if (!std::isfinite(logdet)) throw IllConditioned("singular kernel matrix");
  const double lml = -0.5 * r.dot(alpha) - 0.5 * logdet -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // d lml / d theta = 0.5 tr(W dK/dtheta), W = alpha alpha^T - K^-1
  Eigen::MatrixXd w = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd m = w.cwiseProduct(kf);
  Eigen::VectorXd grad(dims + 2);
  const Eigen::VectorXd row_sums = m.rowwise().sum();
  const Eigen::MatrixXd mx = m * x;
  for (Eigen::Index d = 0; d < dims; ++d) {
    const double l = k.lengthscales[static_cast<std::size_t>(d)];
    // sum_ij M_ij (x_id - x_jd)^2 = 2 sum_i x_id^2 r_i - 2 x_d^T M x_d
    const double s = 2.0 * (x.col(d).array().square() * row_sums.array()).sum() -
                     2.0 * x.col(d).dot(mx.col(d));
    grad(d) = 0.5 * s / (l * l);
  }
  grad(dims) = 0.5 * m.sum();
  grad(dims + 1) = 0.5 * k.noise_variance * w.trace();
  return {lml, grad};
}

namespace {

Eigen::VectorXd to_log(const KernelParams& k) {
  const auto d = static_cast<Eigen::Index>(k.lengthscales.size());
  Eigen::VectorXd t(d + 2);
  for (Eigen::Index i = 0; i < d; ++i) t(i) = std::log(k.lengthscales[static_cast<std::size_t>(i)]);
  t(d) = std::log(k.signal_variance);
  t(d + 1) = std::log(k.noise_variance);
  return t;
}

KernelParams from_log(const Eigen::VectorXd& t) {
  KernelParams k;
  const auto d = t.size() - 2;
  for (Eigen::Index i = 0; i < d; ++i) k.lengthscales.push_back(std::exp(t(i)));
  k.signal_variance = std::exp(t(d));
  k.noise_variance = std::exp(t(d + 1));
  return k;
}

void clamp_log(Eigen::VectorXd& t, const HyperBounds& b) {
  const auto d = t.size() - 2;
  for (Eigen::Index i = 0; i < d; ++i)
    t(i) = std::clamp(t(i), std::log(b.lengthscale_min), std::log(b.lengthscale_max));
  t(d) = std::clamp(t(d), std::log(b.signal_min), std::log(b.signal_max));
  t(d + 1) = std::clamp(t(d + 1), std::log(b.noise_min), std::log(b.noise_max));
}

}  // namespace

KernelParams fit_hyperparameters(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const KernelParams& initial, std::uint64_t seed,
                                 const HyperFitOptions& options, double prior_mean) {
  const auto& b = options.bounds;
  const auto dims = x.cols();
  Rng rng(seed);

  Eigen::VectorXd best_theta = to_log(initial);
  clamp_log(best_theta, b);
  double best_lml = -std::numeric_limits<double>::infinity();

  auto log_uniform = [&](double lo, double hi) {
    return std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo));
  };

  for (int start = 0; start < std::max(1, options.starts); ++start) {
    Eigen::VectorXd theta(dims + 2);
    if (start == 0) {
      theta = to_log(initial);
    } else {
      for (Eigen::Index i = 0; i < dims; ++i)
        theta(i) = log_uniform(std::max(b.lengthscale_min, 0.1), std::min(b.lengthscale_max, 3.0));
      theta(dims) = log_uniform(std::max(b.signal_min, 0.1), std::min(b.signal_max, 3.0));
      theta(dims + 1) = log_uniform(b.noise_min, b.noise_max);
    }
    clamp_log(theta, b);

    // iRprop-: step sizes adapt to gradient sign agreement.
    Eigen::VectorXd step = Eigen::VectorXd::Constant(theta.size(), 0.1);
    Eigen::VectorXd prev_grad = Eigen::VectorXd::Zero(theta.size());
    for (int it = 0; it <= options.iterations; ++it) {
      double lml;
      Eigen::VectorXd grad;
      try {
        std::tie(lml, grad) = log_marginal_likelihood_gradient(x, y, from_log(theta), prior_mean);
      } catch (const IllConditioned&) {
        break;
      }
      if (!std::isfinite(lml)) break;
      if (lml > best_lml) {
        best_lml = lml;
        best_theta = theta;
      }
      if (it == options.iterations) break;
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double agree = grad(i) * prev_grad(i);
        if (agree > 0) {
          step(i) = std::min(step(i) * 1.2, 1.0);
        } else if (agree < 0) {
          step(i) = std::max(step(i) * 0.5, 1e-4);
          grad(i) = 0.0;
        }
        if (grad(i) > 0)
          theta(i) += step(i);
        else if (grad(i) < 0)
          theta(i) -= step(i);
      }
      clamp_log(theta, b);
      prev_grad = grad;
    }
  }
  // exp(log(bound)) can land one ulp outside the box.
  KernelParams k = from_log(best_theta);
  for (double& l : k.lengthscales) l = std::clamp(l, b.lengthscale_min, b.lengthscale_max);
  k.signal_variance = std::clamp(k.signal_variance, b.signal_min, b.signal_max);
  k.noise_variance = std::clamp(k.noise_variance, b.noise_min, b.noise_max);
  return k;
}

}  // namespace prefrank::bo
