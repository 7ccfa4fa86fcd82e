#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "gridtune/errors.hpp"

namespace gridtune {

enum class MaternNu { half, three_halves, five_halves };

inline const char* to_string(MaternNu nu) {
  switch (nu) {
    case MaternNu::half: return "1/2";
    case MaternNu::three_halves: return "3/2";
    case MaternNu::five_halves: return "5/2";
  }
  return "?";
}

/// Matern covariance with half-integer smoothness, fixed lengthscale.
///   nu = 1/2:  s^2 * exp(-r/l)
///   nu = 3/2:  s^2 * (1 + sqrt(3) r/l) * exp(-sqrt(3) r/l)
///   nu = 5/2:  s^2 * (1 + sqrt(5) r/l + 5 r^2/(3 l^2)) * exp(-sqrt(5) r/l)
struct MaternKernel {
  MaternNu nu = MaternNu::three_halves;
  double lengthscale = 2.0;
  double output_variance = 1.0;

  MaternKernel() = default;
  MaternKernel(MaternNu n, double l, double s2 = 1.0)
      : nu(n), lengthscale(l), output_variance(s2) {
    if (!(lengthscale > 0.0)) throw Error("kernel lengthscale must be positive");
    if (!(output_variance > 0.0)) throw Error("kernel output variance must be positive");
  }

  /// Covariance at distance r >= 0.
  double operator()(double r) const {
    const double s = r / lengthscale;
    switch (nu) {
      case MaternNu::half:
        return output_variance * std::exp(-s);
      case MaternNu::three_halves: {
        const double a = 1.7320508075688772 * s;  // sqrt(3) r / l
        return output_variance * (1.0 + a) * std::exp(-a);
      }
      case MaternNu::five_halves: {
        const double a = 2.2360679774997896 * s;  // sqrt(5) r / l
        return output_variance * (1.0 + a + a * a / 3.0) * std::exp(-a);
      }
    }
    return 0.0;
  }
};

inline double kernel_eval(const MaternKernel& k, double r) { return k(r); }

/// Posterior over a batch of candidate points, in the model's standardized
/// observation scale, plus the constants needed to de-standardize.
struct GpPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  double y_mean = 0.0;
  double y_std = 1.0;

  double raw_mean(Eigen::Index i) const { return y_mean + y_std * mean(i); }
};

/// Exact GP regression with standardized observations and a zero mean
/// function. Fitting is from scratch on every call; fitted models are
/// immutable and safe for concurrent prediction.
class GpModel {
 public:
  /// X: n x d training inputs in normalized coordinates; y_raw: n raw
  /// observations. Observations are standardized to zero mean / unit variance
  /// (std forced to 1 when n <= 1 or the variance is 0). The Gram matrix is
  /// regularized by (noise + jitter) I; on factorization failure the jitter
  /// doubles, at most six times, before a ModelConditioningError is thrown.
  static GpModel fit(const MaternKernel& kernel, const Eigen::MatrixXd& X,
                     const Eigen::VectorXd& y_raw, double noise = 1e-10,
                     double jitter = 1e-6) {
    if (X.rows() != y_raw.size()) {
      throw Error("GP fit: observation count does not match input count");
    }
    if (!(noise >= 0.0)) throw Error("GP fit: noise must be non-negative");
    if (!(jitter > 0.0)) throw Error("GP fit: jitter must be positive");
    if (!y_raw.allFinite()) throw Error("GP fit: observations must be finite");

    GpModel m;
    m.kernel_ = kernel;
    m.train_x_ = X;
    m.noise_ = noise;

    const Eigen::Index n = X.rows();
    if (n > 0) {
      m.y_mean_ = y_raw.mean();
      if (n > 1) {
        const double var = (y_raw.array() - m.y_mean_).square().sum() / static_cast<double>(n);
        m.y_std_ = var > 0.0 ? std::sqrt(var) : 1.0;
      }
      Eigen::VectorXd y_standardized = (y_raw.array() - m.y_mean_) / m.y_std_;

      // Gram matrix, each pair computed once so symmetry is exact.
      Eigen::MatrixXd gram(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        gram(i, i) = kernel(0.0);
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const double k = kernel((X.row(i) - X.row(j)).norm());
          gram(i, j) = k;
          gram(j, i) = k;
        }
      }

      m.jitter_ = jitter;
      int attempts = 0;
      while (true) {
        Eigen::MatrixXd regularized = gram;
        regularized.diagonal().array() += noise + m.jitter_;
        m.llt_.compute(regularized);
        if (m.llt_.info() == Eigen::Success) break;
        if (++attempts > 6) {
          throw ModelConditioningError(
              "Gram matrix factorization failed after jitter escalation to " +
              std::to_string(m.jitter_));
        }
        m.jitter_ *= 2.0;
      }
      m.alpha_ = m.llt_.solve(y_standardized);
    } else {
      m.jitter_ = jitter;
    }
    return m;
  }

  const MaternKernel& kernel() const { return kernel_; }
  Eigen::Index train_size() const { return train_x_.rows(); }
  double y_mean() const { return y_mean_; }
  double y_std() const { return y_std_; }
  double noise() const { return noise_; }
  double jitter() const { return jitter_; }

  /// Standardized value of a raw observation under this model's scaling.
  double standardize(double y_raw) const { return (y_raw - y_mean_) / y_std_; }

  /// Posterior mean and variance at each row of Xstar. With no training data
  /// this is the prior: mean 0, variance = output variance. Variances are
  /// clamped at zero.
  GpPrediction predict(const Eigen::MatrixXd& Xstar) const {
    GpPrediction out;
    out.y_mean = y_mean_;
    out.y_std = y_std_;
    const Eigen::Index m = Xstar.rows();
    if (train_x_.rows() == 0) {
      out.mean = Eigen::VectorXd::Zero(m);
      out.variance = Eigen::VectorXd::Constant(m, kernel_.output_variance);
      return out;
    }

    const Eigen::MatrixXd kstar = cross_covariance(train_x_, Xstar);  // n x m
    out.mean = kstar.transpose() * alpha_;
    const Eigen::MatrixXd v =
        llt_.matrixL().solve(kstar);  // n x m triangular solve, blocked
    const Eigen::ArrayXd reduction = v.array().square().colwise().sum().transpose();
    out.variance = (kernel_.output_variance - reduction).max(0.0).matrix();
    return out;
  }

 private:
  GpModel() = default;

  /// Kernel matrix between two point sets, vectorized: pairwise distances via
  /// one matrix product, then the closed form applied elementwise.
  Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd d2 = -2.0 * (a * b.transpose());
    d2.colwise() += a.rowwise().squaredNorm();
    d2.rowwise() += b.rowwise().squaredNorm().transpose();
    Eigen::ArrayXXd s = d2.array().max(0.0).sqrt() / kernel_.lengthscale;
    switch (kernel_.nu) {
      case MaternNu::half:
        return (kernel_.output_variance * (-s).exp()).matrix();
      case MaternNu::three_halves: {
        Eigen::ArrayXXd a3 = 1.7320508075688772 * s;
        return (kernel_.output_variance * (1.0 + a3) * (-a3).exp()).matrix();
      }
      case MaternNu::five_halves: {
        Eigen::ArrayXXd a5 = 2.2360679774997896 * s;
        return (kernel_.output_variance * (1.0 + a5 + a5.square() / 3.0) * (-a5).exp()).matrix();
      }
    }
    return Eigen::MatrixXd();
  }

  MaternKernel kernel_;
  Eigen::MatrixXd train_x_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
  double noise_ = 0.0;
  double jitter_ = 1e-6;
};

/// Mean of the posterior variances over a candidate prediction batch; the
/// candidates are expected to be the non-evaluated valid configurations.
inline double mean_posterior_variance(const GpPrediction& prediction) {
  if (prediction.variance.size() == 0) {
    throw Error("mean_posterior_variance: empty candidate set");
  }
  return prediction.variance.mean();
}

}  // namespace gridtune
