// Acceptance runner: prints one PASS/FAIL line per criterion (1-10).
//   --suite properties    criteria 7-10 (minutes, no training)
//   --suite quantitative  criteria 1-6 (trains at full scale within the budget)

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "magt/anchor_score.hpp"
#include "magt/density.hpp"
#include "magt/experiment.hpp"
#include "magt/io.hpp"
#include "magt/manifolds.hpp"
#include "magt/metrics.hpp"
#include "magt/samplers.hpp"
#include "magt/trainer.hpp"
#include "oracles.hpp"

using namespace magt;

namespace {

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

std::map<int, std::string> g_lines;

bool report(int id, bool pass, const std::string& detail) {
  g_lines[id] = fmt("criterion %2d: %s  %s", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::printf("%s\n", g_lines[id].c_str());
  std::fflush(stdout);
  return pass;
}

void progress(const std::string& text) {
  std::fprintf(stderr, "# %s\n", text.c_str());
  std::fflush(stderr);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

AnchorBank atom_bank(const Matrix& atoms) {
  return make_bank(Matrix::Zero(atoms.rows(), 1), atoms, ProposalKind::PriorMc, Vector::Zero(atoms.rows()));
}

double oracle_sum_loss(const NoiseLevel& level, const Matrix& atoms, const Matrix& y0, const Matrix& z) {
  double total = 0.0;
  for (Eigen::Index b = 0; b < y0.rows(); ++b) {
    const Vector yt = level.alpha * y0.row(b).transpose() + level.sigma * z.row(b).transpose();
    const Vector s = oracle::mixture_score(atoms, level.alpha, level.sigma, yt);
    total += 0.5 * (s + z.row(b).transpose() / level.sigma).squaredNorm();
  }
  return total;
}

// --- criterion 7 -------------------------------------------------------------

double center_gradient_error(int anchors, int dim, double t, std::uint64_t seed) {
  const NoiseLevel level = vp_level(t);
  Rng rng(seed, Stream::Experiment);
  Matrix atoms = rng.normal_matrix(anchors, dim);
  const Matrix y0 = atoms.topRows(3) + 0.3 * rng.normal_matrix(3, dim);
  const Matrix z = rng.normal_matrix(3, dim);
  const Matrix g = center_gradients(level, atom_bank(atoms), y0, z);
  double worst = 0.0;
  for (int k = 0; k < anchors; ++k)
    for (int r = 0; r < dim; ++r) {
      const double base = atoms(k, r);
      const double fd = oracle::central_difference(
          [&](double v) {
            atoms(k, r) = v;
            const double f = oracle_sum_loss(level, atoms, y0, z);
            atoms(k, r) = base;
            return f;
          },
          base, 1e-6);
      worst = std::max(worst, std::abs(g(k, r) - fd) / std::max(1.0, std::abs(fd)));
    }
  return worst;
}

double two_phase_error(const std::vector<int>& dims, double t, std::uint64_t seed) {
  TransportNet net = TransportNet::init(dims, seed);
  for (std::size_t l = 0; l < net.layer_count(); ++l) net.mutable_bias(l).setConstant(0.05);
  const int d = dims.front();
  const int dim = dims.back();
  const LatentPrior prior = LatentPrior::standard_normal(d);
  const NoiseLevel level = vp_level(t);
  Rng rng(seed, Stream::Experiment);
  const Matrix latents = prior.sample(rng, 6);
  const Matrix y0 = net.forward(latents.topRows(3)) + 0.2 * rng.normal_matrix(3, dim);
  const Matrix z = rng.normal_matrix(3, dim);
  const UpdateResult res = two_phase_gradient(net, level, latents, ProposalKind::PriorMc, prior, y0, z, 6);
  auto loss_at = [&](const TransportNet& n) {
    const AnchorBank bank =
        make_bank(latents, n.forward(latents), ProposalKind::PriorMc, prior.log_density_rows(latents));
    return batch_loss(level, bank, y0, z).loss;
  };
  const std::vector<double> base(net.parameters().begin(), net.parameters().end());
  double worst = 0.0;
  for (std::size_t p = 0; p < base.size(); ++p) {
    const double fd = oracle::central_difference(
        [&](double v) {
          net.mutable_parameters()[p] = v;
          const double f = loss_at(net);
          net.mutable_parameters()[p] = base[p];
          return f;
        },
        base[p], 1e-6);
    worst = std::max(worst, std::abs(fd - res.gradient.values[p]) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

double chunk_invariance_error() {
  const TransportNet net = TransportNet::init({2, 16, 16, 3}, 4);
  const LatentPrior prior = LatentPrior::standard_normal(2);
  const NoiseLevel level = vp_level(0.2);
  Rng rng(7, Stream::Experiment);
  const Matrix latents = prior.sample(rng, 10);
  const Matrix y0 = rng.normal_matrix(4, 3);
  const Matrix z = rng.normal_matrix(4, 3);
  const UpdateResult full = two_phase_gradient(net, level, latents, ProposalKind::PriorMc, prior, y0, z, 10);
  double worst = 0.0;
  for (Eigen::Index chunk : {1, 3, 7}) {
    const UpdateResult part = two_phase_gradient(net, level, latents, ProposalKind::PriorMc, prior, y0, z, chunk);
    for (std::size_t p = 0; p < full.gradient.values.size(); ++p)
      worst = std::max(worst, std::abs(part.gradient.values[p] - full.gradient.values[p]) /
                                  std::max(1.0, std::abs(full.gradient.values[p])));
  }
  return worst;
}

// An SGD step through two_phase_update moves the parameters by -lr * gradient.
double update_step_error() {
  TransportNet net = TransportNet::init({2, 8, 8, 2}, 9);
  TrainConfig cfg;
  cfg.latent_dim = 2;
  cfg.anchor_count = 16;
  cfg.chunk_size = 5;
  cfg.optimizer = OptimizerKind::Sgd;
  cfg.learning_rate = 1e-2;
  const LatentPrior prior = cfg.make_prior();
  const NoiseLevel level = vp_level(0.4);
  Rng rng(8, Stream::Experiment);
  const Matrix y0 = rng.normal_matrix(4, 2);
  const Matrix z = rng.normal_matrix(4, 2);
  const std::uint64_t anchor_seed = 77;
  const Matrix latents = draw_anchor_latents(prior, cfg.proposal, cfg.anchor_count, anchor_seed);
  const UpdateResult expected =
      two_phase_gradient(net, level, latents, cfg.proposal, prior, y0, z, cfg.chunk_size);
  const std::vector<double> before(net.parameters().begin(), net.parameters().end());
  Optimizer opt(cfg.optimizer, cfg.learning_rate, net.parameter_count());
  two_phase_update(net, level, cfg, prior, y0, z, opt, anchor_seed);
  double worst = 0.0;
  for (std::size_t p = 0; p < before.size(); ++p)
    worst = std::max(worst, std::abs(net.parameters()[p] - (before[p] - cfg.learning_rate * expected.gradient.values[p])));
  return worst;
}

bool criterion7() {
  const double cg = std::max(center_gradient_error(5, 3, 0.35, 5), center_gradient_error(8, 2, 0.7, 6));
  const double tp = std::max(two_phase_error({2, 8, 8, 2}, 0.3, 3), two_phase_error({1, 6, 6, 3}, 0.6, 11));
  const double ch = chunk_invariance_error();
  const double up = update_step_error();
  return report(7, cg < 1e-4 && tp < 1e-4 && ch <= 1e-12 && up <= 1e-12,
                fmt("center_gradients FD rel err %.2e (<1e-4); two-phase FD rel err %.2e (<1e-4); "
                    "chunk invariance %.2e (<=1e-12); update step %.2e",
                    cg, tp, ch, up));
}

// --- criterion 8 -------------------------------------------------------------

Matrix toy_transport(const Matrix& u) {
  Matrix out(u.rows(), 2);
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    out(i, 0) = std::tanh(u(i, 0)) + 0.5 * std::sin(u(i, 1));
    out(i, 1) = 0.8 * std::tanh(u(i, 1)) + 0.3 * std::cos(2.0 * u(i, 0));
  }
  return out;
}

Matrix toy_observations(const NoiseLevel& level, const LatentPrior& prior, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed, Stream::Experiment);
  const Matrix u = prior.sample(rng, n);
  return level.alpha * toy_transport(u) + level.sigma * rng.normal_matrix(n, 2);
}

double score_mse(const NoiseLevel& level, const AnchorBank& bank, const Matrix& ys, const Matrix& reference) {
  return (estimate_scores(level, bank, ys) - reference).rowwise().squaredNorm().mean();
}

double finite_prior_error() {
  double worst = 0.0;
  Rng rng(21, Stream::Experiment);
  const Matrix atoms = rng.normal_matrix(7, 3);
  const AnchorBank bank = atom_bank(atoms);
  for (double t : {0.1, 0.5, 0.9}) {
    const NoiseLevel level = vp_level(t);
    for (int i = 0; i < 50; ++i) {
      const Vector y = 2.0 * rng.normal_matrix(1, 3).row(0).transpose();
      const Vector exact = oracle::mixture_score(atoms, level.alpha, level.sigma, y);
      const Vector est = estimate_score(level, bank, y).score;
      worst = std::max(worst, (est - exact).cwiseAbs().maxCoeff() / std::max(1.0, exact.cwiseAbs().maxCoeff()));
    }
  }
  return worst;
}

struct SlopeResult {
  double slope = 0.0;
  std::vector<double> mse;
};

SlopeResult mc_slope(const NoiseLevel& level, const LatentPrior& prior, const Matrix& ys, const Matrix& reference) {
  SlopeResult out;
  std::vector<double> xs;
  for (int p = 6; p <= 13; ++p) {
    const Eigen::Index k = Eigen::Index{1} << p;
    double sum = 0.0;
    const int repeats = 20;
    for (int r = 0; r < repeats; ++r)
      sum += score_mse(level, build_bank_mc(toy_transport, prior, k, 1000 * p + r), ys, reference);
    out.mse.push_back(sum / repeats);
    xs.push_back(std::log(static_cast<double>(k)));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += std::log(out.mse[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (std::log(out.mse[i]) - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  out.slope = sxy / sxx;
  return out;
}

int qmc_wins(const NoiseLevel& level, const LatentPrior& prior, const Matrix& ys, const Matrix& reference) {
  int wins = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const double mc = score_mse(level, build_bank_mc(toy_transport, prior, 1024, 5000 + s), ys, reference);
    const double qmc = score_mse(level, build_bank_qmc(toy_transport, prior, 1024, 5000 + s), ys, reference);
    if (qmc < mc) ++wins;
  }
  return wins;
}

// Linear-Gaussian model h(u) = A u + b, u ~ N(0, I): the posterior of u given
// y is Gaussian, so the score and the second moment of p/q are closed form.
struct SnisResult {
  double worst_ratio = 0.0;  // max over (y, K) of MSE / bound
  double d2_closed = 0.0;
  double d2_mc = 0.0;
};

double log_gauss(const Vector& u, const Vector& mean, const Matrix& cov) {
  const Eigen::LLT<Matrix> llt(cov);
  const Vector r = llt.matrixL().solve(u - mean);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (r.squaredNorm() + logdet + static_cast<double>(u.size()) * std::log(2.0 * std::numbers::pi));
}

SnisResult snis_check() {
  Matrix a(3, 2);
  a << 1.0, 0.3, -0.4, 0.8, 0.5, -0.6;
  const Vector b{{0.2, -0.1, 0.3}};
  const TransportFn h = [&](const Matrix& u) -> Matrix {
    return (u * a.transpose()).rowwise() + b.transpose();
  };
  const LatentPrior prior = LatentPrior::standard_normal(2);
  const NoiseLevel level = vp_level(0.5);
  const double s2 = level.sigma * level.sigma;
  const Matrix marginal_cov = level.alpha * level.alpha * a * a.transpose() + s2 * Matrix::Identity(3, 3);
  const Matrix post_prec = Matrix::Identity(2, 2) + level.alpha * level.alpha / s2 * a.transpose() * a;
  const Matrix post_cov = post_prec.inverse();

  SnisResult res;
  Rng rng(31, Stream::Experiment);
  for (int yi = 0; yi < 3; ++yi) {
    const Vector u0 = prior.sample(rng, 1).row(0).transpose();
    const Vector y = level.alpha * (a * u0 + b) + level.sigma * rng.normal_matrix(1, 3).row(0).transpose();
    const Vector exact = -marginal_cov.ldlt().solve(y - level.alpha * b);
    const Vector mu_p = post_cov * (level.alpha / s2 * a.transpose() * (y - level.alpha * b));
    // Mismatched proposal: shifted mean, inflated covariance.
    const Vector mu_q = mu_p + Vector{{0.4, -0.3}};
    const Matrix cov_q = 1.5 * post_cov;
    const Matrix prec_q = cov_q.inverse();
    const Matrix m = 2.0 * post_prec - prec_q;
    const Vector v = 2.0 * post_prec * mu_p - prec_q * mu_q;
    const double d2 = std::sqrt(cov_q.determinant()) / post_cov.determinant() / std::sqrt(m.determinant()) *
                      std::exp(0.5 * v.dot(m.ldlt().solve(v)) - mu_p.dot(post_prec * mu_p) +
                               0.5 * mu_q.dot(prec_q * mu_q));
    const LaplaceProposal q = make_gaussian_proposal(mu_q, prec_q);
    if (yi == 0) {
      res.d2_closed = d2;
      Rng qr(32, Stream::Experiment);
      const Eigen::LLT<Matrix> chol(cov_q);
      double acc = 0.0;
      const int n = 1000000;
      for (int i = 0; i < n; ++i) {
        const Vector u = mu_q + chol.matrixL() * qr.normal_matrix(1, 2).row(0).transpose();
        acc += std::exp(2.0 * (log_gauss(u, mu_p, post_cov) - log_gauss(u, mu_q, cov_q)));
      }
      res.d2_mc = acc / n;
    }
    for (Eigen::Index k : {64, 256, 1024, 4096}) {
      const int repeats = 200;
      double sum = 0.0;
      double bound_b = 0.0;
      for (int r = 0; r < repeats; ++r) {
        const AnchorBank bank = build_bank_map(h, prior, q, k, 100000 * yi + 1000 * k + r);
        bound_b = std::max(bound_b, bank.outputs.rowwise().norm().maxCoeff());
        sum += (estimate_score(level, bank, y).score - exact).squaredNorm();
      }
      const double bound = 32.0 * level.alpha * level.alpha * bound_b * bound_b * d2 /
                           (static_cast<double>(k) * s2 * s2);
      res.worst_ratio = std::max(res.worst_ratio, sum / repeats / bound);
    }
  }
  return res;
}

bool criterion8() {
  const double exact_err = finite_prior_error();

  const LatentPrior prior = LatentPrior::standard_normal(2);
  const NoiseLevel level = vp_level(0.5);
  const Matrix ys = toy_observations(level, prior, 200, 41);
  const Matrix reference = estimate_scores(level, build_bank_mc(toy_transport, prior, 1 << 20, 42), ys);
  const SlopeResult slope = mc_slope(level, prior, ys, reference);
  const int wins = qmc_wins(level, prior, ys, reference);
  const SnisResult snis = snis_check();
  const bool d2_consistent = std::abs(snis.d2_mc / snis.d2_closed - 1.0) < 0.05;

  return report(8, exact_err <= 1e-10 && std::abs(slope.slope + 1.0) <= 0.15 && snis.worst_ratio <= 1.0 &&
                       d2_consistent && wins >= 18,
                fmt("finite-prior score err %.2e (<=1e-10); MC MSE slope %.3f (-1+-0.15, MSE %.2e..%.2e); "
                    "SNIS MSE/bound max %.3f (<=1, D2 %.4f, MC check %.4f); QMC wins %d/20 (>=18)",
                    exact_err, slope.slope, slope.mse.front(), slope.mse.back(), snis.worst_ratio,
                    snis.d2_closed, snis.d2_mc, wins));
}

// --- criterion 9 -------------------------------------------------------------

bool criterion9() {
  const TransportNet net = TransportNet::init({2, 16, 16, 2}, 51);
  const LatentPrior prior = LatentPrior::standard_normal(2);
  const AnchorBank bank = build_bank_mc(net, prior, 256, 52);
  double grad_err = 0.0;
  Rng rng(53, Stream::Experiment);
  for (double t : {0.2, 0.5}) {
    const NoiseLevel level = vp_level(t);
    for (int i = 0; i < 20; ++i) {
      const Vector y = rng.normal_matrix(1, 2).row(0).transpose();
      const Vector score = estimate_score(level, bank, y).score;
      for (int r = 0; r < 2; ++r) {
        const double fd = oracle::central_difference(
            [&](double v) {
              Vector yy = y;
              yy[r] = v;
              return smoothed_ambient_log_density(level, bank, yy);
            },
            y[r], 1e-5);
        grad_err = std::max(grad_err, std::abs(fd - score[r]) / std::max(1.0, std::abs(score[r])));
      }
    }
  }

  // u ~ U[0, 1) mapped to R (cos 2 pi u, sin 2 pi u): density 1 / (2 pi R) on the circle.
  const double radius = 1.7;
  const LatentPrior circle_prior = LatentPrior::uniform(1);
  double chart_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double u = (i + 0.5) / 20.0;
    const double w = 2.0 * std::numbers::pi;
    Matrix jac(2, 1);
    const double h = 1e-6;
    jac(0, 0) = radius * (std::cos(w * (u + h)) - std::cos(w * (u - h))) / (2 * h);
    jac(1, 0) = radius * (std::sin(w * (u + h)) - std::sin(w * (u - h))) / (2 * h);
    const double logp = chart_log_density(circle_prior.log_density(Vector::Constant(1, u)), jac);
    chart_err = std::max(chart_err, std::abs(std::exp(logp) - 1.0 / (w * radius)));
  }
  return report(9, grad_err <= 1e-6 && chart_err <= 1e-8,
                fmt("grad log p_t vs score rel err %.2e (<=1e-6); circle chart density err %.2e (<=1e-8)",
                    grad_err, chart_err));
}

// --- criterion 10 ------------------------------------------------------------

bool criterion10() {
  Rng rng(61, Stream::Experiment);
  double brute_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Matrix a = rng.normal_matrix(8, 2);
    const Matrix b = rng.normal_matrix(8, 2) + Matrix::Constant(8, 2, 0.3);
    brute_err = std::max(brute_err, std::abs(w2_exact(a, b) - oracle::w2_brute_force(a, b)));
  }
  const double shift = 2.0;
  const Matrix a = rng.normal_matrix(10000, 2);
  Matrix b = rng.normal_matrix(10000, 2);
  b.col(0).array() += shift;
  const W2Estimate est = w2_subsampled(a, b, 2000, 5, 62);
  const double rel = std::abs(est.mean - shift) / shift;
  return report(10, brute_err <= 1e-12 && rel <= 0.15,
                fmt("w2_exact vs permutation search max diff %.2e; Gaussian shift W2 %.4f vs %.1f (rel %.3f <= 0.15)",
                    brute_err, est.mean, shift, rel));
}

// --- criteria 1-6 ------------------------------------------------------------

struct QuantOptions {
  double budget_minutes = 45.0;
  std::uint64_t seed = 0;
  Eigen::Index val_points = 5000;
  std::filesystem::path out_dir = "acceptance_out";
};

TrainConfig full_config(const ManifoldSpec& spec, std::uint64_t seed) {
  TrainConfig c;
  c.latent_dim = spec.intrinsic_dim;
  c.seed = seed;
  c.max_epochs = 1000000;
  return c;
}

// Seconds per parameter update for this architecture and anchor count.
double probe_update_seconds(const Matrix& train, const TrainConfig& config) {
  TransportNet net = TransportNet::init(config.layer_dims(static_cast<int>(train.cols())), 1);
  const LatentPrior prior = config.make_prior();
  Optimizer opt(config.optimizer, config.learning_rate, net.parameter_count());
  const NoiseLevel level = vp_level(0.5);
  Rng rng(2, Stream::Experiment);
  const Matrix y0 = train.topRows(config.batch_size);
  const int reps = 4;
  two_phase_update(net, level, config, prior, y0, rng.normal_matrix(config.batch_size, train.cols()), opt, 0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 1; i <= reps; ++i)
    two_phase_update(net, level, config, prior, y0, rng.normal_matrix(config.batch_size, train.cols()), opt, i);
  return seconds_since(start) / reps;
}

double probe_w2_seconds(Eigen::Index n) {
  Rng rng(3, Stream::Experiment);
  const Matrix a = rng.normal_matrix(n, 2);
  const Matrix b = rng.normal_matrix(n, 2);
  const auto start = std::chrono::steady_clock::now();
  w2_exact(a, b);
  return seconds_since(start);
}

struct DatasetOutcome {
  std::string name;
  double w2 = 0.0;
  double off = 0.0;
  double t = 0.0;
  long updates = 0;
  double seconds = 0.0;
  bool within_budget = false;
  TransportNet net;
  LatentPrior prior = LatentPrior::standard_normal(1);
  Matrix test;
};

DatasetOutcome run_dataset(ManifoldName name, const QuantOptions& opts, CsvAppender& eval_out) {
  const auto start = std::chrono::steady_clock::now();
  const double budget = opts.budget_minutes * 60.0;
  const ManifoldSpec spec = ManifoldSpec::preset(name);
  const DataSplits data = make_splits(spec, 10000, 5000, 10000, opts.seed);
  TrainConfig config = full_config(spec, opts.seed);
  config.val_points = opts.val_points;

  const double per_update = probe_update_seconds(data.train, config);
  double validation = probe_w2_seconds(config.val_points);
  const double evaluation = 2.0 * 5.0 * probe_w2_seconds(2000);
  progress(fmt("%s: %.3f s/update, %.1f s per validation (probe)", std::string(manifold_name(name)).c_str(),
               per_update, validation));

  // Candidates are trained one at a time so the update count for each t can
  // follow the time actually left and the validation cost actually observed.
  SelectionResult sel;
  const std::size_t levels = config.t_candidates.size();
  for (std::size_t i = 0; i < levels; ++i) {
    const auto left = static_cast<double>(levels - i);
    // 5% slack for sampling, splits and timing noise.
    const double available = 0.95 * budget - seconds_since(start) - evaluation - left * validation;
    TrainConfig cfg = config;
    cfg.max_updates = std::max(1L, static_cast<long>(available / (left * per_update)));
    const double t = config.t_candidates[i];
    sel.candidates.push_back(train_single_level(data.train, data.val, t, cfg, {}, &sel.log));
    const TrainedCandidate& c = sel.candidates.back();
    validation = std::max(validation, c.seconds - static_cast<double>(c.updates) * per_update);
    progress(fmt("  t=%.1f: %ld updates, loss %.4f, val W2 %.4f, %.0f s", t, c.updates, c.final_loss, c.val_w2,
                 c.seconds));
  }
  sel.selected = select_candidate(sel.candidates);
  const TrainedCandidate& best = sel.best();
  const LatentPrior prior = config.make_prior();
  const std::uint64_t sample_seed = Rng(opts.seed, Stream::Sampler, 1).next_u64();
  const SampleResult samples = sample_one_shot(best.net, prior, 10000, sample_seed);
  const SampleQuality q = evaluate_samples(spec, samples.samples, data.test, opts.seed);

  DatasetOutcome out{std::string(manifold_name(name)), q.w2.mean, q.off_manifold, best.t, best.updates,
                     seconds_since(start), false, best.net, prior, data.test};
  out.within_budget = out.seconds <= budget;
  EvalRow row{out.name, "magt", best.t, config.anchor_count, q.w2.mean, q.w2.sd, q.off_manifold,
              seconds_since(start), samples.nfe, opts.seed};
  eval_out.append(row.fields());
  progress(fmt("%s: selected t=%.1f, W2 %.4f +- %.4f, off %.4f, %.0f s", out.name.c_str(), out.t, out.w2,
               q.w2.sd, out.off, out.seconds));
  return out;
}

std::string dataset_detail(const DatasetOutcome& o, double w2_max, double off_max) {
  std::string s = fmt("%s W2 %.4f (<=%.2f)", o.name.c_str(), o.w2, w2_max);
  if (off_max > 0.0) s += fmt(", off-manifold %.4f (<=%.2f)", o.off, off_max);
  s += fmt(", t=%.1f, %ld updates/t, %.0f s%s", o.t, o.updates, o.seconds, o.within_budget ? "" : " OVER BUDGET");
  return s;
}

bool criterion5(const DatasetOutcome& rings) {
  const SamplerConfig ddim;  // 205 steps, eta 1, K = 1024
  const Timing one = timing_harness(
      [&](Eigen::Index n) { return sample_one_shot(rings.net, rings.prior, n, 71).nfe; }, 10000);
  const Timing many = timing_harness(
      [&](Eigen::Index n) { return sample_m_ddim(rings.net, rings.prior, ddim, n, 72).nfe; }, 10000);
  const double ratio = one.seconds / many.seconds;
  return report(5, one.nfe == 1 && many.nfe == 205 && ratio < 0.1,
                fmt("one-shot NFE %ld (=1), M-DDIM NFE %ld (=205); 10k samples %.4f s vs %.3f s (ratio %.2e < 0.1)",
                    one.nfe, many.nfe, one.seconds, many.seconds, ratio));
}

bool criterion6(const QuantOptions& opts, CsvAppender& eval_out) {
  const auto start = std::chrono::steady_clock::now();
  const double budget = opts.budget_minutes * 60.0;
  const ManifoldSpec spec = ManifoldSpec::preset(ManifoldName::Rings2d);
  const DataSplits data = make_splits(spec, 10000, 5000, 10000, opts.seed);
  struct Cell {
    Eigen::Index k;
    double t;
  };
  const std::vector<Cell> cells{{64, 0.5}, {4096, 0.5}, {1024, 0.1}, {1024, 0.5}, {1024, 0.9}};
  const int seeds = 3;

  double per_round = 0.0;  // one update in every cell, for all seeds
  for (const Cell& c : cells) {
    TrainConfig cfg = full_config(spec, opts.seed);
    cfg.anchor_count = c.k;
    cfg.chunk_size = std::min<Eigen::Index>(cfg.chunk_size, c.k);
    per_round += seeds * probe_update_seconds(data.train, cfg);
  }
  const Eigen::Index val_points = std::min<Eigen::Index>(opts.val_points, 1000);
  const double eval_cost = static_cast<double>(cells.size()) * seeds * (5.0 * probe_w2_seconds(2000) +
                                                                        probe_w2_seconds(val_points));
  const double available = 0.95 * budget - seconds_since(start) - eval_cost;
  const long updates = std::max(1L, static_cast<long>(available / per_round));
  progress(fmt("sensitivity: %.2f s per round of %zu cells x %d seeds, %ld updates per run", per_round,
               cells.size(), seeds, updates));

  std::vector<std::vector<double>> w2(cells.size());
  for (int s = 0; s < seeds; ++s)
    for (std::size_t i = 0; i < cells.size(); ++i) {
      TrainConfig cfg = full_config(spec, opts.seed + 1 + static_cast<std::uint64_t>(s));
      cfg.anchor_count = cells[i].k;
      cfg.chunk_size = std::min<Eigen::Index>(cfg.chunk_size, cells[i].k);
      cfg.t_candidates = {cells[i].t};
      cfg.max_updates = updates;
      cfg.val_points = val_points;
      const TrainedCandidate cand = train_single_level(data.train, data.val, cells[i].t, cfg);
      const SampleResult smp = sample_one_shot(cand.net, cfg.make_prior(), 10000,
                                               Rng(cfg.seed, Stream::Sampler, 1).next_u64());
      const SampleQuality q = evaluate_samples(spec, smp.samples, data.test, cfg.seed);
      w2[i].push_back(q.w2.mean);
      EvalRow row{"rings2d", "magt", cells[i].t, static_cast<long>(cells[i].k), q.w2.mean, q.w2.sd,
                  q.off_manifold, cand.seconds, smp.nfe, cfg.seed};
      eval_out.append(row.fields());
      progress(fmt("  seed %llu K=%ld t=%.1f: W2 %.4f", static_cast<unsigned long long>(cfg.seed),
                   static_cast<long>(cells[i].k), cells[i].t, q.w2.mean));
    }
  const double k64 = median3(w2[0]), k4096 = median3(w2[1]);
  const double t1 = median3(w2[2]), t5 = median3(w2[3]), t9 = median3(w2[4]);
  const double elapsed = seconds_since(start);
  return report(6, k4096 <= k64 && t5 <= t1 && t5 <= t9,
                fmt("median W2: K=4096 %.4f <= K=64 %.4f; t=0.5 %.4f <= t=0.1 %.4f and t=0.9 %.4f "
                    "(%ld updates/run, %.0f s)",
                    k4096, k64, t5, t1, t9, updates, elapsed));
}

bool run_quantitative(const QuantOptions& opts) {
  std::filesystem::create_directories(opts.out_dir);
  CsvAppender eval_out(opts.out_dir / "acceptance_eval.csv", EvalRow::columns());
  std::map<ManifoldName, DatasetOutcome> res;
  for (ManifoldName name : {ManifoldName::Rings2d, ManifoldName::Torus3d, ManifoldName::Helix3d,
                            ManifoldName::Moons2d, ManifoldName::Checker2d})
    res.emplace(name, run_dataset(name, opts, eval_out));

  auto ok = [](const DatasetOutcome& o, double w2_max, double off_max) {
    return o.within_budget && o.w2 <= w2_max && (off_max <= 0.0 || o.off <= off_max);
  };
  const auto& rings = res.at(ManifoldName::Rings2d);
  const auto& torus = res.at(ManifoldName::Torus3d);
  const auto& helix = res.at(ManifoldName::Helix3d);
  const auto& moons = res.at(ManifoldName::Moons2d);
  const auto& checker = res.at(ManifoldName::Checker2d);
  bool all = true;
  all &= report(1, ok(rings, 0.09, 0.25), dataset_detail(rings, 0.09, 0.25));
  all &= report(2, ok(torus, 0.11, 0.10), dataset_detail(torus, 0.11, 0.10));
  all &= report(3, ok(helix, 0.07, 0.20), dataset_detail(helix, 0.07, 0.20));
  all &= report(4, ok(moons, 0.06, 0.0) && ok(checker, 0.09, 0.0),
                dataset_detail(moons, 0.06, 0.0) + "; " + dataset_detail(checker, 0.09, 0.0));
  all &= criterion5(rings);
  all &= criterion6(opts, eval_out);
  return all;
}

bool run_properties() {
  bool all = true;
  all &= criterion7();
  all &= criterion8();
  all &= criterion9();
  all &= criterion10();
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAGT acceptance runner"};
  std::string suite = "all";
  QuantOptions opts;
  std::string out_dir = opts.out_dir.string();
  app.add_option("--suite", suite, "properties|quantitative|all")
      ->check(CLI::IsMember({"properties", "quantitative", "all"}));
  app.add_option("--budget-minutes", opts.budget_minutes, "CPU budget per dataset (and for the sensitivity study)")
      ->check(CLI::PositiveNumber);
  app.add_option("--val-points", opts.val_points, "Validation rows scored when selecting t")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", opts.seed, "Master seed (MAGT_SEED overrides)");
  app.add_option("--out-dir", out_dir, "Directory for the evaluation CSV");
  CLI11_PARSE(app, argc, argv);
  opts.out_dir = out_dir;

  try {
    if (auto env = seed_from_env()) opts.seed = *env;
    const auto start = std::chrono::steady_clock::now();
    bool all = true;
    if (suite != "quantitative") all &= run_properties();
    if (suite != "properties") all &= run_quantitative(opts);
    std::printf("\nsummary (%.0f s)\n", seconds_since(start));
    for (const auto& [id, line] : g_lines) std::printf("%s\n", line.c_str());
    return all ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
