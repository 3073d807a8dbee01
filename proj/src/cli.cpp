#include "tempervi/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "tempervi/checkpoint.hpp"
#include "tempervi/corpus.hpp"
#include "tempervi/engine.hpp"
#include "tempervi/errors.hpp"
#include "tempervi/evaluation.hpp"
#include "tempervi/fmm.hpp"
#include "tempervi/lda.hpp"
#include "tempervi/metrics.hpp"
#include "tempervi/partition.hpp"

namespace tempervi {

void save_vector(const std::string& path, const Eigen::VectorXd& v) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  char buf[40];
  out << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    out << buf << '\n';
  }
}

Eigen::VectorXd load_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  long long n = -1;
  if (!(in >> n) || n < 0) throw ParseError(1, "vector file must start with its length");
  Eigen::VectorXd v(n);
  for (long long i = 0; i < n; ++i) {
    if (!(in >> v[i])) throw ParseError(static_cast<std::size_t>(i + 2), "vector file truncated");
  }
  return v;
}

namespace {

struct LdaOptions {
  std::size_t topics = 25;
  double alpha = 0.0;  // 0 means 1/K
  double eta = 0.0;    // 0 means 1/K
  double init_scale = 1.0;

  lda::LdaConfig config(std::size_t vocab) const {
    lda::LdaConfig c;
    c.topics = topics;
    c.vocab = vocab;
    c.alpha = alpha > 0.0 ? alpha : 1.0 / static_cast<double>(topics);
    c.eta = eta > 0.0 ? eta : 1.0 / static_cast<double>(topics);
    c.validate();
    return c;
  }
};

struct FmmOptions {
  std::size_t components = 8;
  std::size_t dim = 16;
  double pi = 0.3;
  double sigma_n = 0.1;
  double sigma_mu = 0.35;
  std::string convention = "stddev";
  double init_precision = 0.0;

  fmm::FmmConfig config() const {
    fmm::FmmConfig c;
    c.components = components;
    c.dim = dim;
    c.pi = pi;
    c.sigma_n = sigma_n;
    c.sigma_mu = sigma_mu;
    c.convention = fmm::variance_convention_from_string(convention);
    c.validate();
    return c;
  }
};

struct GridOptions {
  std::string spacing = "exponential";
  std::size_t size = 100;
  double t_max = 10.0;

  GridConfig config() const {
    GridConfig g;
    g.spacing = grid_spacing_from_string(spacing);
    g.size = size;
    g.t_max = t_max;
    return g;
  }
};

void add_lda_options(CLI::App* app, LdaOptions& o) {
  app->add_option("--topics", o.topics, "number of topics K")->check(CLI::PositiveNumber);
  app->add_option("--alpha", o.alpha, "document-topic Dirichlet parameter (default 1/K)");
  app->add_option("--eta", o.eta, "topic-word Dirichlet parameter (default 1/K)");
  app->add_option("--init-scale", o.init_scale, "scale of the Gamma noise in the initial lambda");
}

void add_fmm_options(CLI::App* app, FmmOptions& o) {
  app->add_option("--components", o.components, "number of features K")->check(CLI::PositiveNumber);
  app->add_option("--dim", o.dim, "data dimension D")->check(CLI::PositiveNumber);
  app->add_option("--pi", o.pi, "feature activation probability");
  app->add_option("--sigma-n", o.sigma_n, "noise scale");
  app->add_option("--sigma-mu", o.sigma_mu, "feature prior scale");
  app->add_option("--variance-convention", o.convention, "how scales are read: stddev or variance")
      ->check(CLI::IsMember({"stddev", "variance"}));
  app->add_option("--init-precision", o.init_precision, "extra precision of the initial q(mu)");
}

void add_grid_options(CLI::App* app, GridOptions& o) {
  app->add_option("--grid-spacing", o.spacing, "exponential, linear or inverse_linear");
  app->add_option("--grid-size", o.size, "number of temperatures")->check(CLI::PositiveNumber);
  app->add_option("--t-max", o.t_max, "largest temperature");
}

std::size_t resolve_threads(std::optional<std::size_t> requested, bool reproducible) {
  if (requested) {
    if (*requested < 1) throw ConfigError("--threads must be >= 1");
    return *requested;
  }
  return reproducible ? 1 : default_thread_count();
}

// ---------------------------------------------------------------- partition

struct PartitionArgs {
  std::string model;
  std::string method;
  std::string out;
  std::string corpus;
  std::string data;
  std::size_t n_data = 0;
  std::size_t vocab = 0;
  double words_per_doc = 0.0;
  std::size_t samples = 1000;
  std::size_t inner_samples = 100;
  std::uint64_t seed = 0;
  LdaOptions lda;
  FmmOptions fmm;
  GridOptions grid;
};

void run_partition(const PartitionArgs& a, std::ostream& out) {
  const TemperatureGrid grid = a.grid.config().build();
  PartitionTable table{grid, {}, {}, {}};
  if (a.model == "fmm") {
    FmmOptions opts = a.fmm;
    std::size_t n = a.n_data;
    if (!a.data.empty()) {
      const auto x = fmm::load_matrix_csv(a.data);
      n = static_cast<std::size_t>(x.rows());
      opts.dim = static_cast<std::size_t>(x.cols());
    }
    if (n == 0) throw ConfigError("fmm partition needs --data or --n-data");
    const auto cfg = opts.config();
    const std::string method = a.method.empty() ? "analytic" : a.method;
    if (method == "analytic") {
      table = fmm::fmm_log_partition(cfg, n, grid);
    } else if (method == "mc") {
      table = mc_log_partition(fmm::FmmPartitionModel(cfg), n, grid, a.samples, a.seed);
    } else if (method == "map") {
      const fmm::FmmPartitionModel pm(cfg);
      table = map_log_partition(pm, n, grid, pm.prior_mode());
    } else {
      throw ConfigError("fmm supports the analytic, mc and map methods");
    }
  } else if (a.model == "lda") {
    std::size_t docs = a.n_data;
    std::size_t vocab = a.vocab;
    double words = a.words_per_doc;
    if (!a.corpus.empty()) {
      const Corpus c = load_corpus(a.corpus);
      docs = c.num_docs();
      vocab = c.vocab_size;
      words = c.mean_words_per_doc();
    }
    if (docs == 0 || vocab == 0 || !(words >= 1.0)) {
      throw ConfigError("lda partition needs --corpus, or --n-data, --vocab and --words-per-doc");
    }
    if (!a.method.empty() && a.method != "lda-nested") {
      throw ConfigError("lda supports only the lda-nested method");
    }
    table = lda_log_partition(a.lda.config(vocab).priors(), words, docs, grid, a.samples,
                              a.inner_samples, a.seed);
  } else {
    throw ConfigError("--model must be lda or fmm");
  }
  save_partition_table(a.out, table);
  out << "wrote " << grid.size() << " temperatures to " << a.out << '\n';
}

// -------------------------------------------------------------------- train

struct TrainArgs {
  std::string model;
  std::string mode = "svi";
  std::string corpus;
  std::string test_corpus;
  std::string data;
  std::string truth;
  std::string partition_table;
  std::string metrics;
  std::string checkpoint;
  std::string resume;
  std::size_t checkpoint_every = 0;
  std::string lambda_out;
  std::size_t batch_size = 100;
  bool batch = false;
  double tau = 1024.0;
  double kappa = 0.7;
  std::optional<double> t0;
  double anneal_passes = 1.0;
  std::size_t anneal_every = 1000;
  std::size_t temp_update_every = 1000;
  double vt_ema = 0.0;
  bool vt_untempered_statistic = false;
  std::string temperature_statistic = "assignment";
  std::string lvt_weighting = "unscaled";
  int lvt_rounds = 2;
  double passes = 1.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::uint64_t heldout_seed = 0;
  std::size_t eval_every = 0;
  bool track_elbo = false;
  std::optional<std::size_t> threads;
  bool reproducible = false;
  bool wallclock = false;
  double tolerance = 1e-6;
  int max_inner = 100;
  LdaOptions lda;
  FmmOptions fmm;
  GridOptions grid;
  bool grid_spacing_given = false;
};

TrainConfig build_train_config(const TrainArgs& a) {
  TrainConfig c;
  c.mode = mode_from_string(a.mode);
  c.batch_size = a.batch_size;
  c.batch_mode = a.batch;
  c.tau = a.tau;
  c.kappa = a.kappa;
  c.grid = a.grid.config();
  if (c.mode == Mode::lvt && !a.grid_spacing_given) c.grid.spacing = GridSpacing::inverse_linear;
  if (c.mode == Mode::avi) {
    AnnealSchedule s;
    s.initial_temperature = a.t0 ? *a.t0 : mean_temperature(c.grid.build());
    s.passes = a.anneal_passes;
    s.update_every = a.anneal_every;
    c.schedule = s;
  }
  c.temp_update_every = a.temp_update_every;
  c.vt_ema = a.vt_ema;
  c.vt_untempered_statistic = a.vt_untempered_statistic;
  c.lvt_weighting = local_weighting_from_string(a.lvt_weighting);
  c.lvt_rounds = a.lvt_rounds;
  c.max_passes = a.passes;
  c.max_iterations = a.iterations;
  c.seed = a.seed;
  c.eval_every = a.eval_every;
  c.track_elbo = a.track_elbo;
  c.threads = resolve_threads(a.threads, a.reproducible);
  c.wallclock = a.wallclock;
  c.validate();
  return c;
}

template <class M>
void finish_training(const TrainArgs& a, const M& model, const typename M::Dataset& data,
                     const TrainConfig& config, const TrainHooks& hooks, std::ostream& out,
                     const std::function<void(const TrainResult<M>&)>& report) {
  std::optional<PartitionTable> table;
  if (config.mode == Mode::vt) {
    table = load_partition_table(a.partition_table);
    check_partition_table(*table, model.partition_meta(data), run_grid(config));
  }
  const auto result = train(model, data, config, table ? &*table : nullptr, hooks);
  if (!a.metrics.empty()) save_metrics_csv(a.metrics, result.metrics);
  if (!a.lambda_out.empty()) save_vector(a.lambda_out, result.global.lambda);
  out << "iterations " << result.global.iteration << '\n';
  out << "nonconverged_locals " << result.nonconverged_locals << '\n';
  report(result);
}

void run_train(const TrainArgs& a, std::ostream& out) {
  const TrainConfig config = build_train_config(a);
  if (config.mode == Mode::vt && a.partition_table.empty()) {
    throw ConfigError("--mode vt requires --partition-table (see precompute-partition)");
  }
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = load_checkpoint(a.resume);
  TrainHooks hooks;
  hooks.resume = resume ? &*resume : nullptr;
  if (!a.checkpoint.empty()) {
    hooks.on_abort = [path = a.checkpoint](const Checkpoint& c) { save_checkpoint(path, c); };
    hooks.on_checkpoint = hooks.on_abort;
    hooks.checkpoint_every = a.checkpoint_every;
  }
  const LocalSolverOptions solver{a.tolerance, a.max_inner};
  char buf[64];

  if (a.model == "lda") {
    if (a.corpus.empty()) throw ConfigError("lda training needs --corpus");
    const Corpus corpus = load_corpus(a.corpus);
    const lda::LdaModel model(a.lda.config(corpus.vocab_size), solver, a.lda.init_scale,
                             lda::temperature_statistic_from_string(a.temperature_statistic));
    std::optional<HeldoutSet> heldout;
    if (!a.test_corpus.empty()) {
      const Corpus test = load_corpus(a.test_corpus);
      if (test.vocab_size != corpus.vocab_size) throw ConfigError("test corpus vocabulary size differs");
      heldout = make_heldout_set(test, a.heldout_seed);
      hooks.heldout = [&model, &heldout, &config](const Eigen::VectorXd& lambda) {
        return predictive_loglik(model, lambda, *heldout, config.threads);
      };
    }
    finish_training<lda::LdaModel>(a, model, corpus, config, hooks, out, [&](const auto& result) {
      if (heldout) {
        std::snprintf(buf, sizeof buf, "%.10g",
                      predictive_loglik(model, result.global.lambda, *heldout, config.threads));
        out << "heldout_per_word " << buf << '\n';
      }
    });
  } else if (a.model == "fmm") {
    if (a.data.empty()) throw ConfigError("fmm training needs --data");
    const fmm::Dataset x = fmm::load_matrix_csv(a.data);
    FmmOptions opts = a.fmm;
    opts.dim = static_cast<std::size_t>(x.cols());
    const fmm::FmmModel model(opts.config(), solver, a.fmm.init_precision);
    finish_training<fmm::FmmModel>(a, model, x, config, hooks, out, [&](const auto& result) {
      const auto global = model.prepare(result.global.lambda);
      if (!a.truth.empty()) {
        std::snprintf(buf, sizeof buf, "%.10g",
                      fmm::best_permutation_rmse(global.m, fmm::load_matrix_csv(a.truth)));
        out << "feature_rmse " << buf << '\n';
      }
      if (!result.metrics.empty() && result.metrics.back().elbo_t1) {
        std::snprintf(buf, sizeof buf, "%.10g", *result.metrics.back().elbo_t1);
        out << "elbo_T1 " << buf << '\n';
      }
    });
  } else {
    throw ConfigError("--model must be lda or fmm");
  }
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string model;
  std::string lambda;
  std::string corpus;
  std::string data;
  std::string truth;
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
  bool reproducible = false;
  LdaOptions lda;
  FmmOptions fmm;
};

void run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const Eigen::VectorXd lambda = load_vector(a.lambda);
  const std::size_t threads = resolve_threads(a.threads, a.reproducible);
  char buf[64];
  if (a.model == "lda") {
    if (a.corpus.empty()) throw ConfigError("lda evaluation needs --corpus");
    const Corpus test = load_corpus(a.corpus);
    const lda::LdaModel model(a.lda.config(test.vocab_size));
    if (!model.in_domain(lambda)) throw ConfigError("lambda does not match K x V of the corpus");
    std::snprintf(buf, sizeof buf, "%.10g", predictive_loglik(model, lambda, test, a.seed, threads));
    out << "heldout_per_word " << buf << '\n';
  } else if (a.model == "fmm") {
    if (a.data.empty()) throw ConfigError("fmm evaluation needs --data");
    const fmm::Dataset x = fmm::load_matrix_csv(a.data);
    FmmOptions opts = a.fmm;
    opts.dim = static_cast<std::size_t>(x.cols());
    const fmm::FmmModel model(opts.config());
    if (!model.in_domain(lambda)) throw ConfigError("lambda does not match the FMM dimensions");
    const auto cache = model.prepare(lambda);
    std::vector<fmm::FmmLocal> locals(static_cast<std::size_t>(x.rows()));
    parallel_for(locals.size(), threads,
                 [&](std::size_t i) { locals[i] = model.local_step(x, i, cache, 1.0, nullptr); });
    std::snprintf(buf, sizeof buf, "%.10g",
                  elbo(model, x, lambda, std::span<const fmm::FmmLocal>(locals), threads));
    out << "elbo_T1 " << buf << '\n';
    if (!a.truth.empty()) {
      std::snprintf(buf, sizeof buf, "%.10g",
                    fmm::best_permutation_rmse(cache.m, fmm::load_matrix_csv(a.truth)));
      out << "feature_rmse " << buf << '\n';
    }
  } else {
    throw ConfigError("--model must be lda or fmm");
  }
}

// ------------------------------------------------------------- generate-fmm

struct GenerateArgs {
  std::string out;
  std::string features_out;
  std::string masks;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::uint64_t feature_seed = 0;
  FmmOptions fmm;
};

void run_generate(const GenerateArgs& a, std::ostream& out) {
  Eigen::MatrixXd features;
  if (a.masks.empty()) {
    features = fmm::toy_features(a.feature_seed);
  } else {
    std::ifstream in(a.masks);
    if (!in) throw Error("cannot open mask file '" + a.masks + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    features = fmm::parse_masks(text);
    std::mt19937_64 rng(a.feature_seed);
    std::uniform_real_distribution<double> weight(0.5, 1.0);
    for (Eigen::Index k = 0; k < features.rows(); ++k) features.row(k) *= weight(rng);
  }
  FmmOptions opts = a.fmm;
  opts.components = static_cast<std::size_t>(features.rows());
  opts.dim = static_cast<std::size_t>(features.cols());
  const auto x = fmm::fmm_generate(opts.config(), features, a.n, a.seed);
  fmm::save_matrix_csv(a.out, x);
  if (!a.features_out.empty()) fmm::save_matrix_csv(a.features_out, features);
  out << "wrote " << x.rows() << " x " << x.cols() << " to " << a.out << '\n';
}

// ----------------------------------------------------------- export-metrics

struct ExportArgs {
  std::vector<std::string> inputs;
  std::string format = "long";
  std::string out;
};

void run_export(const ExportArgs& a, std::ostream& out) {
  std::ofstream file;
  std::ostream* sink = &out;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw Error("cannot write '" + a.out + "'");
    sink = &file;
  }
  if (a.format == "long") {
    bool first = true;
    for (const auto& path : a.inputs) {
      std::ostringstream block;
      write_metrics_long(block, path, load_metrics_csv(path));
      std::string text = block.str();
      if (!first) text.erase(0, text.find('\n') + 1);
      *sink << text;
      first = false;
    }
  } else {
    *sink << "[";
    for (std::size_t i = 0; i < a.inputs.size(); ++i) {
      *sink << (i ? ",\n" : "\n") << metrics_to_json(a.inputs[i], load_metrics_csv(a.inputs[i]));
    }
    *sink << "\n]\n";
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Annealed and tempered stochastic variational inference"};
  app.require_subcommand(1);

  PartitionArgs pa;
  auto* part = app.add_subcommand("precompute-partition", "tabulate log C(T) over a temperature grid");
  part->set_config("--config");
  part->add_option("--model", pa.model, "lda or fmm")->required()->check(CLI::IsMember({"lda", "fmm"}));
  part->add_option("--method", pa.method, "analytic, mc, map or lda-nested");
  part->add_option("--out", pa.out, "output table path")->required();
  part->add_option("--corpus", pa.corpus, "LDA corpus (sets D, V and words per document)");
  part->add_option("--data", pa.data, "FMM data CSV (sets N and D)");
  part->add_option("--n-data", pa.n_data, "number of data points or documents");
  part->add_option("--vocab", pa.vocab, "LDA vocabulary size");
  part->add_option("--words-per-doc", pa.words_per_doc, "LDA words per document");
  part->add_option("--samples", pa.samples, "prior samples (outer level for LDA)");
  part->add_option("--inner-samples", pa.inner_samples, "LDA inner samples per outer sample");
  part->add_option("--seed", pa.seed, "random seed");
  add_lda_options(part, pa.lda);
  add_fmm_options(part, pa.fmm);
  add_grid_options(part, pa.grid);

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "fit a model with svi, avi, vt or lvt");
  tr->set_config("--config");
  tr->add_option("--model", ta.model, "lda or fmm")->required()->check(CLI::IsMember({"lda", "fmm"}));
  tr->add_option("--mode", ta.mode, "svi, avi, vt or lvt")->check(CLI::IsMember({"svi", "avi", "vt", "lvt"}));
  tr->add_option("--corpus", ta.corpus, "LDA training corpus");
  tr->add_option("--test-corpus", ta.test_corpus, "LDA corpus for held-out scoring");
  tr->add_option("--data", ta.data, "FMM data CSV");
  tr->add_option("--truth", ta.truth, "FMM true features CSV, for the recovery error");
  tr->add_option("--partition-table", ta.partition_table, "log C(T) table (vt mode)");
  tr->add_option("--metrics", ta.metrics, "metrics CSV output");
  tr->add_option("--checkpoint", ta.checkpoint, "checkpoint path, written if training aborts");
  tr->add_option("--checkpoint-every", ta.checkpoint_every, "also write the checkpoint every N iterations");
  tr->add_option("--resume", ta.resume, "resume from a checkpoint");
  tr->add_option("--lambda-out", ta.lambda_out, "final global parameters");
  tr->add_option("--batch-size", ta.batch_size, "minibatch size B")->check(CLI::PositiveNumber);
  tr->add_flag("--batch", ta.batch, "use the whole dataset each iteration with rate 1");
  tr->add_option("--tau", ta.tau, "learning-rate delay");
  tr->add_option("--kappa", ta.kappa, "learning-rate exponent in (0.5, 1]");
  tr->add_option("--t0", ta.t0, "avi start temperature (default: grid mean)");
  tr->add_option("--anneal-passes", ta.anneal_passes, "avi schedule length in passes");
  tr->add_option("--anneal-every", ta.anneal_every, "iterations between avi temperature refreshes");
  tr->add_option("--temp-update-every", ta.temp_update_every, "iterations between vt refreshes");
  tr->add_option("--vt-ema", ta.vt_ema, "smoothing weight of the vt statistic (0 disables)");
  tr->add_flag("--vt-untempered-statistic", ta.vt_untempered_statistic,
              "evaluate the vt statistic with locals refitted at T=1");
  tr->add_option("--temperature-statistic", ta.temperature_statistic,
                 "LDA vt statistic: assignment or integrated")
      ->check(CLI::IsMember({"assignment", "integrated"}));
  tr->add_option("--lvt-weighting", ta.lvt_weighting, "scaled, prior-outside or unscaled")
      ->check(CLI::IsMember({"scaled", "prior-outside", "unscaled"}));
  tr->add_option("--lvt-rounds", ta.lvt_rounds, "local fit / q(y) alternations per datum");
  tr->add_option("--passes", ta.passes, "effective passes over the data");
  tr->add_option("--iterations", ta.iterations, "iterations (overrides --passes)");
  tr->add_option("--seed", ta.seed, "random seed");
  tr->add_option("--heldout-seed", ta.heldout_seed, "seed of the held-out token split");
  tr->add_option("--eval-every", ta.eval_every, "iterations between metrics rows");
  tr->add_flag("--track-elbo", ta.track_elbo, "record the T=1 ELBO (batch mode)");
  tr->add_option("--threads", ta.threads, "worker threads");
  tr->add_flag("--reproducible", ta.reproducible, "fix the worker count");
  tr->add_flag("--wallclock", ta.wallclock, "record elapsed seconds in the metrics");
  tr->add_option("--tolerance", ta.tolerance, "local fixed-point tolerance");
  tr->add_option("--max-inner", ta.max_inner, "local fixed-point iteration cap");
  add_lda_options(tr, ta.lda);
  add_fmm_options(tr, ta.fmm);
  add_grid_options(tr, ta.grid);

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "score saved global parameters");
  ev->set_config("--config");
  ev->add_option("--model", ea.model, "lda or fmm")->required()->check(CLI::IsMember({"lda", "fmm"}));
  ev->add_option("--lambda", ea.lambda, "global parameters from train --lambda-out")->required();
  ev->add_option("--corpus", ea.corpus, "LDA test corpus");
  ev->add_option("--data", ea.data, "FMM data CSV");
  ev->add_option("--truth", ea.truth, "FMM true features CSV");
  ev->add_option("--seed", ea.seed, "seed of the held-out token split");
  ev->add_option("--threads", ea.threads, "worker threads");
  ev->add_flag("--reproducible", ea.reproducible, "fix the worker count");
  add_lda_options(ev, ea.lda);
  add_fmm_options(ev, ea.fmm);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate-fmm", "sample a factorial mixture dataset");
  gen->set_config("--config");
  gen->add_option("--out", ga.out, "data CSV output")->required();
  gen->add_option("--features-out", ga.features_out, "true features CSV output");
  gen->add_option("--masks", ga.masks, "mask file (rows of 0/1 digits); default: built-in 4x4 masks");
  gen->add_option("--n", ga.n, "number of data points");
  gen->add_option("--seed", ga.seed, "seed for the data");
  gen->add_option("--feature-seed", ga.feature_seed, "seed for the feature weights");
  gen->add_option("--pi", ga.fmm.pi, "feature activation probability");
  gen->add_option("--sigma-n", ga.fmm.sigma_n, "noise scale");
  gen->add_option("--variance-convention", ga.fmm.convention, "stddev or variance")
      ->check(CLI::IsMember({"stddev", "variance"}));

  ExportArgs xa;
  auto* ex = app.add_subcommand("export-metrics", "reshape metrics CSV files for plotting");
  ex->add_option("inputs", xa.inputs, "metrics CSV files")->required();
  ex->add_option("--format", xa.format, "long or json")->check(CLI::IsMember({"long", "json"}));
  ex->add_option("--out", xa.out, "output path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return 2;
  }

  try {
    if (part->parsed()) run_partition(pa, out);
    if (tr->parsed()) {
      ta.grid_spacing_given = tr->count("--grid-spacing") > 0;
      run_train(ta, out);
    }
    if (ev->parsed()) run_evaluate(ea, out);
    if (gen->parsed()) run_generate(ga, out);
    if (ex->parsed()) run_export(xa, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace tempervi
