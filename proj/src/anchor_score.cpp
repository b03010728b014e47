#include "magt/anchor_score.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "magt/kernels.hpp"
#include "magt/qmc.hpp"
#include "magt/rng.hpp"

namespace magt {
namespace {

const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

TransportFn wrap(const TransportNet& net) {
  return [&net](const Matrix& latents) { return net.forward(latents); };
}

}  // namespace

std::string_view proposal_name(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::PriorMc:
      return "mc";
    case ProposalKind::PriorQmc:
      return "qmc";
    case ProposalKind::MapLaplace:
      return "map";
  }
  return "unknown";
}

ProposalKind parse_proposal(std::string_view text) {
  for (ProposalKind kind : {ProposalKind::PriorMc, ProposalKind::PriorQmc, ProposalKind::MapLaplace})
    if (proposal_name(kind) == text) return kind;
  throw ConfigError("unknown proposal kind: " + std::string(text) + " (expected mc, qmc or map)");
}

AnchorBank make_bank(Matrix latents, Matrix outputs, ProposalKind proposal, Vector prior_log_density,
                     std::optional<Vector> proposal_log_density,
                     std::optional<std::uint64_t> net_version) {
  const Eigen::Index count = latents.rows();
  if (count < 1) throw ConfigError("an anchor bank needs at least one anchor");
  require_dims(outputs.rows() == count, "bank: latents and outputs row counts differ");
  require_dims(prior_log_density.size() == count, "bank: prior log density size mismatch");
  if (proposal == ProposalKind::MapLaplace && !proposal_log_density)
    throw ConfigError("MAP banks require proposal log densities");
  if (proposal_log_density)
    require_dims(proposal_log_density->size() == count, "bank: proposal log density size mismatch");
  AnchorBank bank;
  bank.outputs_by_dim = outputs.transpose();
  bank.latents = std::move(latents);
  bank.outputs = std::move(outputs);
  bank.proposal = proposal;
  bank.prior_log_density = std::move(prior_log_density);
  bank.proposal_log_density = std::move(proposal_log_density);
  bank.net_version = net_version;
  return bank;
}

Vector log_weights(const NoiseLevel& level, const AnchorBank& bank, const Eigen::Ref<const Vector>& y) {
  require_dims(y.size() == bank.ambient_dim(), "log_weights: observation dimension mismatch");
  const Eigen::Index count = bank.size();
  Vector out(count);
  const Vector y_copy = y;
  kernels::active().sq_dist(y_copy.data(), bank.outputs_by_dim.data(), count, bank.ambient_dim(),
                            count, level.alpha, out.data());
  out *= -0.5 / (level.sigma * level.sigma);
  if (bank.proposal == ProposalKind::MapLaplace)
    out += bank.prior_log_density - *bank.proposal_log_density;
  return out;
}

double normalize_log_weights(const Vector& log_w, Vector& weights) {
  const double top = log_w.maxCoeff();
  if (!std::isfinite(top)) throw NumericalError("all importance weights vanish or are non-finite");
  weights = (log_w.array() - top).unaryExpr([](double v) { return v < kLogWeightFloor ? 0.0 : std::exp(v); }).matrix();
  const double total = weights.sum();
  weights /= total;
  return top + std::log(total);
}

ScoreEstimate estimate_score(const NoiseLevel& level, const AnchorBank& bank,
                             const Eigen::Ref<const Vector>& y) {
  const Vector log_w = log_weights(level, bank, y);
  Vector w;
  const double lse = normalize_log_weights(log_w, w);
  const auto& kern = kernels::active();
  const Eigen::Index count = bank.size();
  ScoreEstimate est;
  est.posterior_mean.resize(bank.ambient_dim());
  for (int r = 0; r < bank.ambient_dim(); ++r)
    est.posterior_mean[r] = kern.dot(w.data(), bank.outputs_by_dim.data() + r * count, count);
  est.score = (level.alpha * est.posterior_mean - y) / (level.sigma * level.sigma);
  est.log_normalizer = lse - std::log(static_cast<double>(count));
  est.effective_sample_size = 1.0 / w.squaredNorm();
  return est;
}

Matrix estimate_scores(const NoiseLevel& level, const AnchorBank& bank, const Matrix& ys) {
  require_dims(ys.cols() == bank.ambient_dim(), "estimate_scores: observation dimension mismatch");
  Matrix out(ys.rows(), ys.cols());
  for (Eigen::Index i = 0; i < ys.rows(); ++i)
    out.row(i) = estimate_score(level, bank, ys.row(i).transpose()).score.transpose();
  return out;
}

AnchorBank build_bank_mc(const TransportFn& transport, const LatentPrior& prior,
                         Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("anchor count must be at least 1");
  Rng rng(seed, Stream::Anchors);
  Matrix latents = prior.sample(rng, count);
  Matrix outputs = transport(latents);
  Vector log_prior = prior.log_density_rows(latents);
  return make_bank(std::move(latents), std::move(outputs), ProposalKind::PriorMc, std::move(log_prior));
}

AnchorBank build_bank_mc(const TransportNet& net, const LatentPrior& prior, Eigen::Index count,
                         std::uint64_t seed) {
  require_dims(prior.dim() == net.input_dim(), "prior and network latent dimensions differ");
  AnchorBank bank = build_bank_mc(wrap(net), prior, count, seed);
  bank.net_version = net.version();
  return bank;
}

AnchorBank build_bank_qmc(const TransportFn& transport, const LatentPrior& prior,
                          Eigen::Index count, std::optional<std::uint64_t> scramble_seed) {
  if (count < 1) throw ConfigError("anchor count must be at least 1");
  Matrix latents = prior.from_unit_cube(sobol_points(static_cast<std::size_t>(count), prior.dim(), scramble_seed));
  Matrix outputs = transport(latents);
  Vector log_prior = prior.log_density_rows(latents);
  return make_bank(std::move(latents), std::move(outputs), ProposalKind::PriorQmc, std::move(log_prior));
}

AnchorBank build_bank_qmc(const TransportNet& net, const LatentPrior& prior, Eigen::Index count,
                          std::optional<std::uint64_t> scramble_seed) {
  require_dims(prior.dim() == net.input_dim(), "prior and network latent dimensions differ");
  AnchorBank bank = build_bank_qmc(wrap(net), prior, count, scramble_seed);
  bank.net_version = net.version();
  return bank;
}

// --- MAP / Laplace ---------------------------------------------------------

double LaplaceProposal::log_density(const Eigen::Ref<const Vector>& u) const {
  require_dims(u.size() == map_point.size(), "proposal: latent dimension mismatch");
  const Vector diff = u - map_point;
  const Vector z = precision_cholesky.transpose() * diff;  // |L^T diff|^2 = diff^T P diff
  const double log_det_half = precision_cholesky.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(u.size()) * kLogTwoPi + z.squaredNorm()) + log_det_half;
}

double negative_log_posterior(const TransportNet& net, const LatentPrior& prior,
                              const NoiseLevel& level, const Eigen::Ref<const Vector>& y,
                              const Eigen::Ref<const Vector>& u) {
  const Matrix out = net.forward(Matrix(u.transpose()));
  const Vector resid = y - level.alpha * out.row(0).transpose();
  return resid.squaredNorm() / (2.0 * level.sigma * level.sigma) - prior.log_density(u);
}

LaplaceProposal make_gaussian_proposal(Vector center, Matrix precision) {
  require_dims(precision.rows() == center.size() && precision.cols() == center.size(),
               "proposal precision shape mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw NumericalError("proposal precision is not positive definite (Cholesky failed)");
  LaplaceProposal proposal;
  proposal.map_point = std::move(center);
  proposal.precision = std::move(precision);
  proposal.precision_cholesky = llt.matrixL();
  return proposal;
}

LaplaceProposal fit_laplace_proposal(const TransportNet& net, const LatentPrior& prior,
                                     const NoiseLevel& level, const Eigen::Ref<const Vector>& y,
                                     const LaplaceOptions& opts) {
  require_dims(y.size() == net.output_dim(), "laplace: observation dimension mismatch");
  require_dims(prior.dim() == net.input_dim(), "laplace: prior dimension mismatch");
  if (opts.zeta < 0.0 || opts.tau2 < 0.0) throw ConfigError("zeta and tau^2 must be nonnegative");
  const int d = net.input_dim();
  const double inv_var = 1.0 / (level.sigma * level.sigma);

  std::ostringstream trace;
  auto fail = [&](const std::string& why) {
    throw NumericalError("Laplace fit: " + why + "\ntrace:\n" + trace.str());
  };

  // Initialization: best of the prior draws.
  Rng rng(opts.seed, Stream::Laplace);
  const Matrix draws = prior.sample(rng, std::max(opts.init_draws, 1));
  const Matrix draw_out = net.forward(draws);
  Vector u = draws.row(0).transpose();
  double phi = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    const double value = 0.5 * inv_var * (y - level.alpha * draw_out.row(i).transpose()).squaredNorm() -
                         prior.log_density(draws.row(i).transpose());
    if (value < phi) {
      phi = value;
      u = draws.row(i).transpose();
    }
  }
  if (!std::isfinite(phi)) fail("no finite objective among initial draws");

  auto gradient = [&](const Vector& at) {
    const auto jac = net.input_jacobian(at);
    const Vector h = net.forward(Matrix(at.transpose())).row(0).transpose();
    return Vector(-level.alpha * inv_var * jac.value.transpose() * (y - level.alpha * h) -
                  prior.grad_log_density(at));
  };

  LaplaceProposal result;
  Vector grad = gradient(u);
  double step = 1.0;
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const double gnorm2 = grad.squaredNorm();
    trace << "iter " << iter << " phi " << phi << " |grad| " << std::sqrt(gnorm2) << '\n';
    if (!std::isfinite(gnorm2)) fail("non-finite gradient");
    if (std::sqrt(gnorm2) < opts.grad_tol) break;
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      const Vector trial = u - step * grad;
      const double trial_phi = negative_log_posterior(net, prior, level, y, trial);
      if (std::isnan(trial_phi)) fail("objective is NaN at a trial point");
      if (trial_phi <= phi - opts.armijo_c * step * gnorm2) {
        u = trial;
        phi = trial_phi;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no representable decrease left
    grad = gradient(u);
    step = std::min(step * 2.0, 1e3);
  }
  if (!std::isfinite(phi)) fail("non-finite objective at the MAP estimate");

  const auto jac = net.input_jacobian(u);
  const Matrix gauss_newton =
      Matrix::Identity(d, d) + level.alpha * level.alpha * inv_var * (jac.value.transpose() * jac.value);
  Matrix precision = opts.zeta * gauss_newton + opts.tau2 * Matrix::Identity(d, d);
  result = make_gaussian_proposal(u, std::move(precision));
  result.zeta = opts.zeta;
  result.tau2 = opts.tau2;
  result.iterations = iter;
  result.final_grad_norm = grad.norm();
  return result;
}

AnchorBank build_bank_map(const TransportFn& transport, const LatentPrior& prior,
                          const LaplaceProposal& proposal, Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("anchor count must be at least 1");
  const Eigen::Index d = proposal.map_point.size();
  require_dims(prior.dim() == d, "MAP bank: prior dimension mismatch");
  Rng rng(seed, Stream::Anchors, 1);
  const Matrix z = rng.normal_matrix(count, d);
  const double log_det_half = proposal.precision_cholesky.diagonal().array().log().sum();
  Matrix latents(count, d);
  Vector log_q(count);
  // u = map + L^{-T} z has covariance (L L^T)^{-1}.
  const auto upper = proposal.precision_cholesky.transpose().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < count; ++k) {
    const Vector zk = z.row(k).transpose();
    latents.row(k) = (proposal.map_point + upper.solve(zk)).transpose();
    log_q[k] = -0.5 * (static_cast<double>(d) * kLogTwoPi + zk.squaredNorm()) + log_det_half;
  }
  Matrix outputs = transport(latents);
  Vector log_prior = prior.log_density_rows(latents);
  return make_bank(std::move(latents), std::move(outputs), ProposalKind::MapLaplace,
                   std::move(log_prior), std::move(log_q));
}

AnchorBank build_bank_map(const TransportNet& net, const LatentPrior& prior,
                          const LaplaceProposal& proposal, Eigen::Index count, std::uint64_t seed) {
  AnchorBank bank = build_bank_map(wrap(net), prior, proposal, count, seed);
  bank.net_version = net.version();
  return bank;
}

AnchorBank build_bank_map(const TransportNet& net, const LatentPrior& prior,
                          const NoiseLevel& level, const Eigen::Ref<const Vector>& y,
                          Eigen::Index count, std::uint64_t seed, const LaplaceOptions& opts) {
  const LaplaceProposal proposal = fit_laplace_proposal(net, prior, level, y, opts);
  return build_bank_map(net, prior, proposal, count, seed);
}

}  // namespace magt
