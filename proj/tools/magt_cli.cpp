// magt: command-line front end for data generation, training, sampling,
// evaluation, density queries, sensitivity sweeps and timing.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "magt/anchor_score.hpp"
#include "magt/density.hpp"
#include "magt/experiment.hpp"
#include "magt/io.hpp"
#include "magt/kernels.hpp"
#include "magt/manifolds.hpp"
#include "magt/metrics.hpp"
#include "magt/rng.hpp"
#include "magt/samplers.hpp"
#include "magt/trainer.hpp"

namespace fs = std::filesystem;
using namespace magt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::uint64_t seed = 0;
  std::string out_dir = "runs";
  std::string config;
};

struct TrainOpts {
  std::vector<double> t_candidates{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int latent_dim = 0;  // 0: intrinsic dimension of the dataset
  std::string prior = "normal";
  std::vector<int> hidden{512, 512, 512, 512, 512};
  long anchors = 1024;
  long batch = 256;
  long chunk = 0;  // 0: one chunk of K
  double lr = 1e-4;
  double output_init_scale = 0.1;
  std::string optimizer = "adam";
  std::string lr_schedule = "constant";
  int epochs = 200;
  long max_updates = 0;
  std::string proposal = "mc";
  long val_points = 5000;
  int validate_every = 0;
};

struct DataOpts {
  std::string dataset;
  double jitter = 0.02;
  long n_train = 10000;
  long n_val = 5000;
  long n_test = 10000;
  std::uint64_t data_seed = 0;
};

struct SamplerOpts {
  std::string sampler = "one_shot";
  double t_high = 0.90;
  double t_low = 0.05;
  int steps = 205;
  double eta = 1.0;
  long anchors = 1024;
};

LatentPrior::Kind parse_prior(const std::string& text) {
  if (text == "normal") return LatentPrior::Kind::StandardNormal;
  if (text == "uniform") return LatentPrior::Kind::Uniform;
  throw ConfigError("unknown prior: " + text + " (expected normal or uniform)");
}

LatentPrior make_prior(const std::string& text, int dim) {
  return parse_prior(text) == LatentPrior::Kind::StandardNormal ? LatentPrior::standard_normal(dim)
                                                                : LatentPrior::uniform(dim);
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key=value settings file (command-line flags take precedence)");
  sub->add_option("--seed", c.seed, "Master seed (MAGT_SEED overrides)");
  sub->add_option("--out-dir", c.out_dir, "Directory for run outputs");
}

CLI::Option* add_data(CLI::App* sub, DataOpts& d, bool required) {
  auto* opt = sub->add_option("--dataset", d.dataset, "rings2d|spiral2d|moons2d|checker2d|helix3d|torus3d");
  if (required) opt->required();
  sub->add_option("--jitter", d.jitter, "Gaussian jitter of the dataset");
  sub->add_option("--n-train", d.n_train, "Training set size");
  sub->add_option("--n-val", d.n_val, "Validation set size");
  sub->add_option("--n-test", d.n_test, "Test set size");
  return sub->add_option("--data-seed", d.data_seed, "Seed of the data splits (default: --seed)");
}

void add_train(CLI::App* sub, TrainOpts& t) {
  sub->add_option("--t", t.t_candidates, "Candidate smoothing levels")->delimiter(',');
  sub->add_option("--latent-dim", t.latent_dim, "Latent dimension (0: intrinsic dimension)");
  sub->add_option("--prior", t.prior, "Latent prior: normal|uniform");
  sub->add_option("--hidden", t.hidden, "Hidden widths")->delimiter(',');
  sub->add_option("--K", t.anchors, "Anchors per update");
  sub->add_option("--batch", t.batch, "Batch size B");
  sub->add_option("--chunk", t.chunk, "Phase-2 chunk size K_c (0: K)");
  sub->add_option("--lr", t.lr, "Learning rate");
  sub->add_option("--optimizer", t.optimizer, "adam|sgd");
  sub->add_option("--output-init-scale", t.output_init_scale, "Multiplier on the initial output-layer weights");
  sub->add_option("--lr-schedule", t.lr_schedule, "constant|cosine");
  sub->add_option("--epochs", t.epochs, "Maximum epochs per candidate t");
  sub->add_option("--max-updates", t.max_updates, "Update cap per candidate t (0: none)");
  sub->add_option("--proposal", t.proposal, "Anchor scheme: mc|qmc");
  sub->add_option("--val-points", t.val_points, "Validation rows used for W2 (0: all)");
  sub->add_option("--validate-every", t.validate_every, "Validate every N epochs (0: last only)");
}

void add_sampler(CLI::App* sub, SamplerOpts& s) {
  sub->add_option("--sampler", s.sampler, "one_shot|m_ddim");
  sub->add_option("--t-high", s.t_high, "M-DDIM start level");
  sub->add_option("--t-low", s.t_low, "M-DDIM final level");
  sub->add_option("--steps", s.steps, "M-DDIM steps");
  sub->add_option("--eta", s.eta, "M-DDIM eta");
  sub->add_option("--bank-K", s.anchors, "M-DDIM cached bank size");
}

SamplerConfig sampler_config(const SamplerOpts& s) {
  SamplerConfig c;
  c.kind = parse_sampler(s.sampler);
  c.t_high = s.t_high;
  c.t_low = s.t_low;
  c.steps = s.steps;
  c.eta = s.eta;
  c.bank_size = s.anchors;
  c.validate();
  return c;
}

TrainConfig train_config(const TrainOpts& o, int intrinsic_dim, std::uint64_t seed) {
  TrainConfig c;
  c.t_candidates = o.t_candidates;
  c.latent_dim = o.latent_dim > 0 ? o.latent_dim : intrinsic_dim;
  c.prior = parse_prior(o.prior);
  c.hidden = o.hidden;
  c.anchor_count = o.anchors;
  c.batch_size = o.batch;
  c.chunk_size = o.chunk > 0 ? o.chunk : o.anchors;
  c.learning_rate = o.lr;
  c.optimizer = parse_optimizer(o.optimizer);
  c.output_init_scale = o.output_init_scale;
  c.lr_schedule = parse_lr_schedule(o.lr_schedule);
  c.max_epochs = o.epochs;
  c.max_updates = o.max_updates;
  c.seed = seed;
  c.proposal = parse_proposal(o.proposal);
  c.val_points = o.val_points;
  c.validate_every = o.validate_every;
  c.validate();
  return c;
}

ManifoldSpec dataset_spec(const DataOpts& d) {
  ManifoldSpec spec = ManifoldSpec::preset(parse_manifold_name(d.dataset), d.jitter);
  spec.validate();
  return spec;
}

DataSplits dataset_splits(const DataOpts& d) {
  if (d.n_train < 1 || d.n_val < 0 || d.n_test < 0) throw ConfigError("split sizes must be positive");
  return make_splits(dataset_spec(d), static_cast<std::size_t>(d.n_train), static_cast<std::size_t>(d.n_val),
                     static_cast<std::size_t>(d.n_test), d.data_seed);
}

/// Effective settings of a subcommand, for the run id.
std::map<std::string, std::string> settings_of(const CLI::App* sub, std::uint64_t seed) {
  std::map<std::string, std::string> out;
  out["command"] = sub->get_name();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty() || name == "--help" || name == "--config" || name == "--out-dir") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    out[name] = value;
  }
  out["--seed"] = std::to_string(seed);
  return out;
}

fs::path run_dir(const Common& c, const CLI::App* sub) {
  const auto settings = settings_of(sub, c.seed);
  const fs::path dir = fs::path(c.out_dir) / run_id(settings);
  fs::create_directories(dir);
  std::ofstream cfg(dir / "config.txt", std::ios::trunc);
  for (const auto& [k, v] : settings) cfg << (k.rfind("--", 0) == 0 ? k.substr(2) : k) << '=' << v << '\n';
  return dir;
}

std::string t_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", t);
  return buf;
}

/// Rewrites `--config FILE` into one --key=value flag per line of FILE, placed
/// before the user's own flags and skipped for keys the command line sets.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string file;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
  }
  if (file.empty()) return args;
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file);
  auto given = [&](const std::string& key) {
    for (const auto& a : args)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  auto trim = [](std::string v) {
    const auto b = v.find_first_not_of(" \t\r");
    const auto e = v.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
  };
  std::vector<std::string> injected;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(file + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || key == "config") throw ConfigError(file + ":" + std::to_string(lineno) + ": bad key");
    if (!given(key)) injected.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  // argv[0], the subcommand, then the file's settings, then the user's flags.
  std::vector<std::string> out(args.begin(), args.begin() + std::min<std::size_t>(2, args.size()));
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + std::min<std::size_t>(2, args.size()), args.end());
  return out;
}

// --- subcommands -------------------------------------------------------------

int cmd_gen_data(const DataOpts& d, const std::string& out) {
  const ManifoldSpec spec = dataset_spec(d);
  const DataSplits s = dataset_splits(d);
  const fs::path dir(out);
  write_points_csv(dir / "train.csv", s.train);
  write_points_csv(dir / "val.csv", s.val);
  write_points_csv(dir / "test.csv", s.test);
  std::cout << "wrote " << manifold_name(spec.name) << " splits " << s.train.rows() << '/' << s.val.rows() << '/'
            << s.test.rows() << " to " << dir.string() << '\n';
  return 0;
}

int cmd_train(const Common& c, const CLI::App* sub, const DataOpts& d, const TrainOpts& o,
              const std::string& train_file, const std::string& val_file) {
  Matrix train;
  Matrix val;
  int intrinsic = 0;
  if (!d.dataset.empty()) {
    DataOpts no_test = d;
    no_test.n_test = 0;
    DataSplits s = dataset_splits(no_test);
    train = std::move(s.train);
    val = std::move(s.val);
    intrinsic = dataset_spec(d).intrinsic_dim;
  } else {
    if (train_file.empty() || val_file.empty())
      throw ConfigError("train needs --dataset or both --train and --val");
    train = read_points_csv(train_file);
    val = read_points_csv(val_file);
  }
  if (o.latent_dim <= 0 && intrinsic == 0) throw ConfigError("--latent-dim is required with CSV inputs");
  const TrainConfig cfg = train_config(o, intrinsic, c.seed);
  const fs::path dir = run_dir(c, sub);
  std::cout << "run " << dir.filename().string() << '\n';

  CsvAppender log(dir / "train_log.csv", {"epoch", "t", "loss", "grad_norm", "mean_ess", "val_metric"});
  const auto on_epoch = [&log](const EpochLogRow& r) {
    log.append({std::to_string(r.epoch), format_double(r.t), format_double(r.loss), format_double(r.grad_norm),
                format_double(r.mean_ess), std::isnan(r.val_metric) ? "" : format_double(r.val_metric)});
  };
  CsvAppender sel(dir / "selection.csv",
                  {"t", "val_W2", "final_loss", "updates", "seconds", "checkpoint", "selected"});
  std::vector<TrainedCandidate> cands;
  for (double t : cfg.t_candidates) {
    TrainedCandidate cand = train_single_level(train, val, t, cfg, on_epoch);
    const fs::path ckpt = dir / ("net_t" + t_tag(t) + ".bin");
    cand.net.save(ckpt);
    std::cout << "t=" << t_tag(t) << " val_W2=" << format_double(cand.val_w2) << " updates=" << cand.updates
              << " seconds=" << format_double(cand.seconds) << '\n';
    cands.push_back(std::move(cand));
  }
  const std::size_t best = select_candidate(cands);
  for (std::size_t i = 0; i < cands.size(); ++i)
    sel.append({format_double(cands[i].t), format_double(cands[i].val_w2), format_double(cands[i].final_loss),
                std::to_string(cands[i].updates), format_double(cands[i].seconds),
                "net_t" + t_tag(cands[i].t) + ".bin", i == best ? "1" : "0"});
  cands[best].net.save(dir / "best.bin");
  std::ofstream(dir / "selected_t.txt", std::ios::trunc) << format_double(cands[best].t) << '\n';
  std::cout << "selected t=" << t_tag(cands[best].t) << " checkpoint=" << (dir / "best.bin").string() << '\n';
  return 0;
}

SampleResult draw(const TransportNet& net, const LatentPrior& prior, const SamplerConfig& sc, long n,
                  std::uint64_t seed) {
  if (n < 1) throw ConfigError("--n must be positive");
  return sc.kind == SamplerConfig::Kind::OneShot ? sample_one_shot(net, prior, n, seed)
                                                 : sample_m_ddim(net, prior, sc, n, seed);
}

int cmd_sample(const Common& c, const std::string& ckpt, const std::string& prior_name, const SamplerOpts& s,
               long n, const std::string& out) {
  const TransportNet net = TransportNet::load(ckpt);
  const LatentPrior prior = make_prior(prior_name, net.input_dim());
  const SampleResult r = draw(net, prior, sampler_config(s), n, c.seed);
  write_points_csv(out, r.samples);
  std::cout << "wrote " << n << " samples to " << out << " (NFE " << r.nfe << ")\n";
  return 0;
}

int cmd_eval(const Common& c, const CLI::App* sub, const DataOpts& d, const std::string& ckpt,
             const std::string& prior_name, const SamplerOpts& s, long n, double t, const std::string& test_file,
             const std::string& samples_file, long anchors_for_row) {
  const ManifoldSpec spec = dataset_spec(d);
  if (ckpt.empty() == samples_file.empty()) throw ConfigError("eval needs exactly one of --checkpoint and --samples");
  Matrix test = test_file.empty() ? dataset_splits(d).test : read_points_csv(test_file);
  require_dims(test.cols() == spec.ambient_dim, "test set dimension differs from the dataset");
  Matrix samples;
  Timing timing;
  std::string method = "file";
  if (!samples_file.empty()) {
    samples = read_points_csv(samples_file);
  } else {
    const TransportNet net = TransportNet::load(ckpt);
    require_dims(net.output_dim() == spec.ambient_dim, "checkpoint output dimension differs from the dataset");
    const LatentPrior prior = make_prior(prior_name, net.input_dim());
    const SamplerConfig sc = sampler_config(s);
    method = sc.kind == SamplerConfig::Kind::OneShot ? "magt" : "m_ddim";
    timing = timing_harness(
        [&](Eigen::Index count) {
          SampleResult r = draw(net, prior, sc, static_cast<long>(count), c.seed);
          samples = std::move(r.samples);
          return r.nfe;
        },
        n);
  }
  const SampleQuality q = evaluate_samples(spec, samples, test, c.seed);
  EvalRow row{std::string(manifold_name(spec.name)),
              method,
              t,
              anchors_for_row,
              q.w2.mean,
              q.w2.sd,
              q.off_manifold,
              timing.seconds,
              timing.nfe,
              c.seed};
  const fs::path dir = run_dir(c, sub);
  CsvAppender(dir / "eval.csv", EvalRow::columns()).append(row.fields());
  std::cout << join_csv(EvalRow::columns()) << '\n' << join_csv(row.fields()) << '\n';
  return 0;
}

int cmd_density(const Common& c, const std::string& ckpt, const std::string& prior_name,
                const std::string& latents_file, long n, double t, long anchors, const std::string& out) {
  const TransportNet net = TransportNet::load(ckpt);
  const LatentPrior prior = make_prior(prior_name, net.input_dim());
  Matrix latents;
  if (!latents_file.empty()) {
    latents = read_points_csv(latents_file);
    require_dims(latents.cols() == net.input_dim(), "latent file width differs from the network input");
  } else {
    if (n < 1) throw ConfigError("--n must be positive");
    Rng rng(c.seed, Stream::Sampler, 17);
    latents = prior.sample(rng, n);
  }
  if (anchors < 1) throw ConfigError("--K must be positive");
  const NoiseLevel level = vp_level(t);
  const AnchorBank bank = build_bank_mc(net, prior, anchors, c.seed);
  const Matrix ys = net.forward(latents);

  std::vector<std::string> cols;
  for (int j = 0; j < net.input_dim(); ++j) cols.push_back("u" + std::to_string(j));
  for (int j = 0; j < net.output_dim(); ++j) cols.push_back("y" + std::to_string(j));
  cols.push_back("intrinsic_logp");
  cols.push_back("smoothed_logp_t");
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  std::ofstream file(out, std::ios::trunc);
  if (!file) throw ConfigError("cannot write " + out);
  file << join_csv(cols) << '\n';
  long singular = 0;
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    std::vector<std::string> fields;
    for (int j = 0; j < net.input_dim(); ++j) fields.push_back(format_double(latents(i, j)));
    for (int j = 0; j < net.output_dim(); ++j) fields.push_back(format_double(ys(i, j)));
    double intrinsic = std::numeric_limits<double>::quiet_NaN();
    try {
      intrinsic = intrinsic_log_density(net, prior, latents.row(i).transpose());
    } catch (const NumericalError&) {
      ++singular;
    }
    fields.push_back(format_double(intrinsic));
    fields.push_back(format_double(smoothed_ambient_log_density(level, bank, ys.row(i).transpose())));
    file << join_csv(fields) << '\n';
  }
  std::cout << "wrote " << latents.rows() << " rows to " << out << '\n';
  if (singular > 0)
    std::cerr << singular << " latent(s) had a rank-deficient Jacobian; intrinsic_logp is nan there\n";
  return 0;
}

int cmd_sweep(const Common& c, const CLI::App* sub, const DataOpts& d, const TrainOpts& o,
              const std::string& param, const std::vector<double>& values, int seeds, double fixed_t) {
  if (values.empty()) throw ConfigError("--values is empty");
  if (seeds < 1) throw ConfigError("--seeds must be positive");
  if (param != "K" && param != "t" && param != "n") throw ConfigError("--param must be K, t or n");
  const ManifoldSpec spec = dataset_spec(d);
  const fs::path dir = run_dir(c, sub);
  std::vector<std::string> cols{"param", "value"};
  for (const auto& col : EvalRow::columns()) cols.push_back(col);
  CsvAppender table(dir / "sweep.csv", cols);
  std::cout << "run " << dir.filename().string() << '\n';
  for (double value : values) {
    for (int rep = 0; rep < seeds; ++rep) {
      const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(rep);
      TrainOpts opts = o;
      DataOpts data = d;
      data.data_seed = d.data_seed + static_cast<std::uint64_t>(rep);
      double t = fixed_t;
      if (param == "K") opts.anchors = static_cast<long>(value);
      if (param == "n") data.n_train = static_cast<long>(value);
      if (param == "t") t = value;
      opts.t_candidates = {t};
      if (opts.chunk > opts.anchors) opts.chunk = 0;
      const TrainConfig cfg = train_config(opts, spec.intrinsic_dim, seed);
      const DataSplits s = dataset_splits(data);
      const TrainedCandidate cand = train_single_level(s.train, s.val, t, cfg);
      const Matrix samples = sample_one_shot(cand.net, cfg.make_prior(), s.test.rows(), seed).samples;
      const SampleQuality q = evaluate_samples(spec, samples, s.test, seed);
      EvalRow row{std::string(manifold_name(spec.name)), "magt", t, cfg.anchor_count, q.w2.mean, q.w2.sd,
                  q.off_manifold, cand.seconds, 1, seed};
      std::vector<std::string> fields{param, format_double(value)};
      for (const auto& f : row.fields()) fields.push_back(f);
      table.append(fields);
      std::cout << join_csv(fields) << '\n';
    }
  }
  return 0;
}

int cmd_bench(const Common& c, const CLI::App* sub, const std::string& ckpt, const DataOpts& d,
              const TrainOpts& o, const SamplerOpts& s, long n) {
  TransportNet net = [&] {
    if (!ckpt.empty()) return TransportNet::load(ckpt);
    const ManifoldSpec spec = dataset_spec(d);
    return TransportNet::init(train_config(o, spec.intrinsic_dim, c.seed).layer_dims(spec.ambient_dim), c.seed);
  }();
  const LatentPrior prior = make_prior(o.prior, net.input_dim());
  const fs::path dir = run_dir(c, sub);
  CsvAppender table(dir / "bench.csv", {"what", "isa", "seconds", "gflops", "NFE"});

  for (kernels::Isa isa : kernels::available_isas()) {
    const auto& k = kernels::table_for(isa);
    const int m = 1024;
    const int dim = 512;
    Rng rng(c.seed, Stream::Experiment, 99);
    const Matrix a = rng.normal_matrix(m, dim);
    const Matrix b = rng.normal_matrix(dim, dim);
    Matrix out(m, dim);
    const int reps = isa == kernels::Isa::Scalar ? 1 : 10;
    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
      k.gemm(kernels::Trans::No, kernels::Trans::Yes, m, dim, dim, 1.0, a.data(), dim, b.data(), dim, 0.0,
             out.data(), dim);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / reps;
    const double gflops = 2.0 * m * dim * dim / secs * 1e-9;
    table.append({"gemm_1024x512x512", std::string(kernels::isa_name(isa)), format_double(secs),
                  format_double(gflops), "0"});
    std::cout << "gemm " << kernels::isa_name(isa) << ": " << gflops << " GFLOP/s\n";
  }

  SamplerOpts mddim = s;
  mddim.sampler = "m_ddim";
  const SamplerConfig one{};
  const SamplerConfig iter = sampler_config(mddim);
  const Timing t_one = timing_harness(
      [&](Eigen::Index count) { return draw(net, prior, one, static_cast<long>(count), c.seed).nfe; }, n);
  const Timing t_iter = timing_harness(
      [&](Eigen::Index count) { return draw(net, prior, iter, static_cast<long>(count), c.seed).nfe; }, n);
  const std::string isa(kernels::isa_name(kernels::active().isa));
  table.append({"one_shot", isa, format_double(t_one.seconds), "", std::to_string(t_one.nfe)});
  table.append({"m_ddim", isa, format_double(t_iter.seconds), "", std::to_string(t_iter.nfe)});
  std::cout << "one_shot: " << t_one.seconds << " s (NFE " << t_one.nfe << ")\n"
            << "m_ddim:   " << t_iter.seconds << " s (NFE " << t_iter.nfe << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifold-aligned generative transport"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common common;
  DataOpts data;
  TrainOpts train;
  SamplerOpts sampler;
  long n = 10000;
  std::string out;
  std::string checkpoint;
  std::string prior = "normal";
  std::string train_file;
  std::string val_file;
  std::string test_file;
  std::string latents_file;
  double t = 0.5;
  long anchors = 1024;
  std::string param = "K";
  std::vector<double> values;
  int seeds = 3;
  std::string samples_file;
  std::vector<std::pair<CLI::App*, CLI::Option*>> data_seed_opts;

  auto* gen = app.add_subcommand("gen-data", "Write train/val/test CSVs of a synthetic dataset");
  add_common(gen, common);
  data_seed_opts.emplace_back(gen, add_data(gen, data, true));
  gen->add_option("--out", out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Train one network per candidate t and select by validation W2");
  add_common(tr, common);
  data_seed_opts.emplace_back(tr, add_data(tr, data, false));
  add_train(tr, train);
  tr->add_option("--train", train_file, "Training CSV (instead of --dataset)");
  tr->add_option("--val", val_file, "Validation CSV (instead of --dataset)");

  auto* smp = app.add_subcommand("sample", "Draw samples from a checkpoint");
  add_common(smp, common);
  add_sampler(smp, sampler);
  smp->add_option("--checkpoint", checkpoint, "Network checkpoint")->required();
  smp->add_option("--prior", prior, "Latent prior: normal|uniform");
  smp->add_option("--n", n, "Number of samples");
  smp->add_option("--out", out, "Output CSV")->required();

  auto* ev = app.add_subcommand("eval", "Time a sampler and score it against a test set");
  add_common(ev, common);
  data_seed_opts.emplace_back(ev, add_data(ev, data, true));
  add_sampler(ev, sampler);
  ev->add_option("--checkpoint", checkpoint, "Network checkpoint");
  ev->add_option("--samples", samples_file, "Score a samples CSV instead of a checkpoint");
  ev->add_option("--prior", prior, "Latent prior: normal|uniform");
  ev->add_option("--n", n, "Number of samples");
  ev->add_option("--t", t, "Smoothing level the checkpoint was trained at (recorded in the row)");
  ev->add_option("--K", anchors, "Training anchor count (recorded in the row)");
  ev->add_option("--test", test_file, "Test CSV (default: generated split)");

  auto* den = app.add_subcommand("density", "Intrinsic and smoothed log-densities at transported latents");
  add_common(den, common);
  den->add_option("--checkpoint", checkpoint, "Network checkpoint")->required();
  den->add_option("--prior", prior, "Latent prior: normal|uniform");
  den->add_option("--latents", latents_file, "CSV of latents (default: prior draws)");
  den->add_option("--n", n, "Number of prior draws when --latents is absent");
  den->add_option("--t", t, "Smoothing level of the ambient density");
  den->add_option("--K", anchors, "Anchor bank size");
  den->add_option("--out", out, "Output CSV")->required();

  auto* sw = app.add_subcommand("sweep", "Sensitivity of one-shot W2 to K, t or n");
  add_common(sw, common);
  data_seed_opts.emplace_back(sw, add_data(sw, data, true));
  add_train(sw, train);
  sw->add_option("--param", param, "Swept parameter: K|t|n");
  sw->add_option("--values", values, "Values of the swept parameter")->delimiter(',')->required();
  sw->add_option("--seeds", seeds, "Repetitions per value");
  sw->add_option("--fixed-t", t, "Smoothing level when sweeping K or n");

  auto* be = app.add_subcommand("bench", "Kernel throughput and one-shot vs M-DDIM wall clock");
  add_common(be, common);
  data_seed_opts.emplace_back(be, add_data(be, data, false));
  add_train(be, train);
  add_sampler(be, sampler);
  be->add_option("--checkpoint", checkpoint, "Network checkpoint (default: freshly initialized)");
  be->add_option("--n", n, "Samples per timing run");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  std::vector<char*> arg_ptrs;
  for (auto& a : args) arg_ptrs.push_back(a.data());
  try {
    app.parse(static_cast<int>(arg_ptrs.size()), arg_ptrs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (const auto env = seed_from_env()) common.seed = *env;
    for (const auto& [sub, opt] : data_seed_opts)
      if (sub->parsed() && opt->count() == 0) data.data_seed = common.seed;
    if (*gen) return cmd_gen_data(data, out);
    if (*tr) return cmd_train(common, tr, data, train, train_file, val_file);
    if (*smp) return cmd_sample(common, checkpoint, prior, sampler, n, out);
    if (*ev) return cmd_eval(common, ev, data, checkpoint, prior, sampler, n, t, test_file, samples_file, anchors);
    if (*den) return cmd_density(common, checkpoint, prior, latents_file, n, t, anchors, out);
    if (*sw) return cmd_sweep(common, sw, data, train, param, values, seeds, t);
    if (*be) {
      if (checkpoint.empty() && data.dataset.empty()) throw ConfigError("bench needs --checkpoint or --dataset");
      return cmd_bench(common, be, checkpoint, data, train, sampler, n);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
