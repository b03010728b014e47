#include "magt/density.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "magt/rng.hpp"

namespace magt {

double chart_log_density(double prior_log_density, const Matrix& jacobian) {
  require_dims(jacobian.rows() >= jacobian.cols(), "chart density: Jacobian must be D x d with d <= D");
  const Eigen::MatrixXd gram = jacobian.transpose() * jacobian;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() >= kMinGramEigenvalue))
    throw NumericalError("transport Jacobian is rank deficient at this latent (smallest eigenvalue of "
                         "J^T J is " + std::to_string(lambda.minCoeff()) +
                         "); the chart formula needs rank d");
  return prior_log_density - 0.5 * lambda.array().log().sum();
}

double intrinsic_log_density(const TransportNet& net, const LatentPrior& prior,
                             const Eigen::Ref<const Vector>& latent) {
  require_dims(prior.dim() == net.input_dim(), "density: prior and network latent dimensions differ");
  return chart_log_density(prior.log_density(latent), net.input_jacobian(latent).value);
}

double smoothed_ambient_log_density(const NoiseLevel& level, const AnchorBank& bank,
                                    const Eigen::Ref<const Vector>& y) {
  if (bank.proposal == ProposalKind::MapLaplace)
    throw ConfigError("smoothed density needs a prior-drawn bank; MAP banks are query-specific");
  const Vector log_w = log_weights(level, bank, y);
  Vector w;
  const double lse = normalize_log_weights(log_w, w);
  const double dim = static_cast<double>(bank.ambient_dim());
  return lse - std::log(static_cast<double>(bank.size())) -
         0.5 * dim * std::log(2.0 * std::numbers::pi * level.sigma * level.sigma);
}

PreimageResult find_preimage(const TransportNet& net, const LatentPrior& prior,
                             const Eigen::Ref<const Vector>& y, const PreimageOptions& opts) {
  require_dims(y.size() == net.output_dim(), "preimage: point dimension mismatch");
  if (opts.restarts < 1) throw ConfigError("preimage search needs at least one start");
  Rng rng(opts.seed, Stream::Laplace, 7);
  const Matrix starts = prior.sample(rng, opts.restarts);
  const Matrix images = net.forward(starts);
  Eigen::Index best = 0;
  (images.rowwise() - y.transpose()).rowwise().squaredNorm().minCoeff(&best);

  PreimageResult res;
  res.latent = starts.row(best).transpose();
  Vector r = net.forward(Matrix(res.latent.transpose())).row(0).transpose() - y;
  double f = r.squaredNorm();
  double damping = 1e-3;
  const int d = net.input_dim();
  for (; res.iterations < opts.max_iters && f > opts.tol; ++res.iterations) {
    const Matrix jac = net.input_jacobian(res.latent).value;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Vector jtr = jac.transpose() * r;
    bool moved = false;
    for (int attempt = 0; attempt < 30 && !moved; ++attempt) {
      const Eigen::MatrixXd lhs = jtj + damping * Eigen::MatrixXd::Identity(d, d);
      const Vector step = lhs.ldlt().solve(jtr);
      const Vector cand = res.latent - step;
      const Vector r_new = net.forward(Matrix(cand.transpose())).row(0).transpose() - y;
      const double f_new = r_new.squaredNorm();
      if (f_new < f) {
        res.latent = cand;
        r = r_new;
        f = f_new;
        damping = std::max(damping * 0.3, 1e-12);
        moved = true;
      } else {
        damping *= 10.0;
      }
    }
    if (!moved) break;
  }
  res.residual = std::sqrt(f);
  return res;
}

}  // namespace magt
