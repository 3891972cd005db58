#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace prefrank::bo {

// ARD squared-exponential kernel:
//   k(x, x') = signal_variance * exp(-0.5 * sum_d ((x_d - x'_d) / l_d)^2)
struct KernelParams {
  std::vector<double> lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;

  static KernelParams isotropic(std::size_t dim, double lengthscale, double signal_variance = 1.0,
                                double noise_variance = 1e-6);
};

struct HyperBounds {
  double lengthscale_min = 0.05, lengthscale_max = 10.0;
  double signal_min = 1e-3, signal_max = 10.0;
  double noise_min = 1e-8, noise_max = 0.1;
};

inline constexpr double kJitter = 1e-6;

// Exact GP regression state. Immutable once fitted.
class GPState {
 public:
  // Factorizes K + noise * I. When that is not numerically positive
  // definite, jitter starting at 1e-6 is added and escalated x10 up to five
  // times; after that IllConditioned is thrown.
  static GPState fit(Eigen::MatrixXd x, Eigen::VectorXd y, KernelParams kernel,
                     double prior_mean = 0.0);

  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }
  const Eigen::MatrixXd& inputs() const { return x_; }
  const Eigen::VectorXd& targets() const { return y_; }
  const KernelParams& kernel() const { return kernel_; }
  double prior_mean() const { return prior_mean_; }
  double jitter() const { return jitter_; }

  // Posterior mean and latent variance (clamped at 0).
  std::pair<double, double> posterior(std::span<const double> x) const;
  // Row-wise batch version; `points` is m x dim.
  void posterior(const Eigen::MatrixXd& points, Eigen::VectorXd& mean, Eigen::VectorXd& var) const;

  double log_marginal_likelihood() const;

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  KernelParams kernel_;
  double prior_mean_ = 0.0;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const KernelParams& k);

// Log marginal likelihood and its gradient with respect to
// (log l_1..log l_D, log signal_variance, log noise_variance).
// Throws IllConditioned if K + noise * I is not positive definite.
std::pair<double, Eigen::VectorXd> log_marginal_likelihood_gradient(const Eigen::MatrixXd& x,
                                                                    const Eigen::VectorXd& y,
                                                                    const KernelParams& k,
                                                                    double prior_mean = 0.0);

struct HyperFitOptions {
  int starts = 2;  // the initial guess plus starts-1 seeded random restarts
  int iterations = 30;
  HyperBounds bounds;
};

// Multi-start Rprop ascent of the log marginal likelihood in log-parameter
// space, clamped to the bounds. Returns the best parameters found.
KernelParams fit_hyperparameters(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const KernelParams& initial, std::uint64_t seed,
                                 const HyperFitOptions& options = {}, double prior_mean = 0.0);

}  // namespace prefrank::bo
