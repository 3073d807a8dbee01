#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tempervi/cli.hpp"
#include "tempervi/corpus.hpp"
#include "tempervi/engine.hpp"
#include "tempervi/errors.hpp"
#include "tempervi/evaluation.hpp"
#include "tempervi/fmm.hpp"
#include "tempervi/lda.hpp"
#include "tempervi/numeric.hpp"
#include "tempervi/partition.hpp"
#include "tempervi/tempering.hpp"

namespace py = pybind11;
using namespace tempervi;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

template <class M>
py::dict result_dict(const TrainResult<M>& r) {
  py::dict d;
  d["lambda"] = r.global.lambda;
  d["iterations"] = r.global.iteration;
  d["temperature"] = r.temperature;
  d["expected_temperature"] = r.posterior ? r.posterior->expected_temperature() : r.temperature;
  d["posterior"] = r.posterior ? py::cast(to_vector(r.posterior->weights())) : py::none();
  d["metrics"] = r.metrics;
  d["nonconverged_locals"] = r.nonconverged_locals;
  return d;
}

}  // namespace

PYBIND11_MODULE(_tempervi, m) {
  m.doc() = "Annealed and tempered stochastic variational inference";

  auto base_error = py::register_exception<Error>(m, "Error");
  py::register_exception<ArgumentError>(m, "ArgumentError", base_error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());
  py::register_exception<InvalidStateError>(m, "InvalidStateError", base_error.ptr());
  py::register_exception<NumericError>(m, "NumericError", base_error.ptr());
  py::register_exception<EstimationError>(m, "EstimationError", base_error.ptr());
  py::register_exception<EvaluationError>(m, "EvaluationError", base_error.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base_error.ptr());
  py::register_exception<ParseError>(m, "ParseError", base_error.ptr());

  // ---- numerics and tempering
  m.def("log_sum_exp", [](const std::vector<double>& x) { return log_sum_exp(x); });
  m.def("softmax", [](const std::vector<double>& x) { return softmax(x); });
  m.def("robbins_monro_rate", &robbins_monro_rate, py::arg("tau"), py::arg("kappa"), py::arg("t"));

  py::enum_<GridSpacing>(m, "GridSpacing")
      .value("exponential", GridSpacing::exponential)
      .value("linear", GridSpacing::linear)
      .value("inverse_linear", GridSpacing::inverse_linear);

  py::class_<TemperatureGrid>(m, "TemperatureGrid")
      .def(py::init([](std::vector<double> temps, GridSpacing spacing) {
             return TemperatureGrid(std::move(temps), spacing);
           }),
           py::arg("temps"), py::arg("spacing") = GridSpacing::linear)
      .def_property_readonly("temps", [](const TemperatureGrid& g) { return to_vector(g.temps()); })
      .def_property_readonly("spacing", &TemperatureGrid::spacing)
      .def("inverse_temps", &TemperatureGrid::inverse_temps)
      .def("__len__", &TemperatureGrid::size)
      .def("__getitem__", [](const TemperatureGrid& g, std::size_t i) {
        if (i >= g.size()) throw py::index_error();
        return g[i];
      })
      .def(py::self == py::self);

  m.def("make_exponential_grid", &make_exponential_grid, py::arg("count"), py::arg("t_min") = 1.0,
        py::arg("t_max") = 10.0);
  m.def("make_linear_grid", &make_linear_grid, py::arg("count"), py::arg("t_max"));
  m.def("make_inverse_temp_grid", &make_inverse_temp_grid, py::arg("count"));
  m.def("mean_temperature", &mean_temperature);

  py::class_<AnnealSchedule>(m, "AnnealSchedule")
      .def(py::init([](double t0, double passes, std::size_t every) { return AnnealSchedule{t0, passes, every}; }),
           py::arg("initial_temperature") = 1.0, py::arg("passes") = 1.0, py::arg("update_every") = 1)
      .def_readwrite("initial_temperature", &AnnealSchedule::initial_temperature)
      .def_readwrite("passes", &AnnealSchedule::passes)
      .def_readwrite("update_every", &AnnealSchedule::update_every);
  m.def("schedule_temperature", &schedule_temperature, py::arg("schedule"), py::arg("iteration"),
        py::arg("iters_per_pass"));

  m.def(
      "update_global_temperature",
      [](double stat, const TemperatureGrid& grid, const std::vector<double>& prior,
         const std::vector<double>& log_c) {
        return to_vector(update_global_temperature(stat, grid, prior, log_c).weights());
      },
      py::arg("statistic"), py::arg("grid"), py::arg("prior"), py::arg("log_partition"),
      "Posterior weights over the grid for the full-data statistic S.");

  py::enum_<LocalTemperatureWeighting>(m, "LocalTemperatureWeighting")
      .value("scaled", LocalTemperatureWeighting::scaled)
      .value("prior_outside", LocalTemperatureWeighting::prior_outside)
      .value("unscaled", LocalTemperatureWeighting::unscaled);
  m.def(
      "update_local_temperature",
      [](const std::vector<double>& tempered, const TemperatureGrid& grid, const std::vector<double>& prior,
         LocalTemperatureWeighting w) { return to_vector(update_local_temperature(tempered, grid, prior, w).weights()); },
      py::arg("tempered_loglik"), py::arg("grid"), py::arg("prior"),
      py::arg("weighting") = LocalTemperatureWeighting::scaled);

  // ---- partition functions
  py::class_<PartitionTable>(m, "PartitionTable")
      .def_readonly("grid", &PartitionTable::grid)
      .def_readonly("log_c", &PartitionTable::log_c)
      .def_readonly("std_err", &PartitionTable::std_err)
      .def_property_readonly("meta", [](const PartitionTable& t) { return t.meta.entries; })
      .def("save", [](const PartitionTable& t, const std::string& path) { save_partition_table(path, t); })
      .def("to_text", [](const PartitionTable& t) {
        std::ostringstream out;
        write_partition_table(out, t);
        return out.str();
      });
  m.def("load_partition_table", &load_partition_table);

  py::class_<LdaPriors>(m, "LdaPriors")
      .def(py::init([](std::size_t k, std::size_t v, double a, double e) { return LdaPriors{k, v, a, e}; }),
           py::arg("topics"), py::arg("vocab"), py::arg("alpha"), py::arg("eta"));
  m.def("lda_log_partition",
        py::overload_cast<const LdaPriors&, double, std::size_t, const TemperatureGrid&, std::size_t, std::size_t,
                          std::uint64_t>(&lda_log_partition),
        py::arg("priors"), py::arg("words_per_doc"), py::arg("docs"), py::arg("grid"), py::arg("n_beta"),
        py::arg("n_theta"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "lda_jensen_bounds",
      [](const LdaPriors& p, double words, std::size_t docs, const TemperatureGrid& grid, std::size_t n,
         std::uint64_t seed) {
        const auto b = lda_jensen_bounds(p, words, docs, grid, n, seed);
        return py::make_tuple(b.lower, b.upper);
      },
      py::arg("priors"), py::arg("words_per_doc"), py::arg("docs"), py::arg("grid"), py::arg("n_samples"),
      py::arg("seed"));

  // ---- corpora
  py::class_<Document>(m, "Document")
      .def(py::init([](const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
             return Document::from_pairs(pairs);
           }),
           py::arg("pairs"))
      .def_readonly("words", &Document::words)
      .def_readonly("counts", &Document::counts)
      .def("num_tokens", &Document::num_tokens);
  py::class_<Corpus>(m, "Corpus")
      .def(py::init([](std::size_t vocab, std::vector<Document> docs) {
             Corpus c;
             c.vocab_size = vocab;
             c.docs = std::move(docs);
             c.validate();
             return c;
           }),
           py::arg("vocab_size"), py::arg("docs"))
      .def_readonly("vocab_size", &Corpus::vocab_size)
      .def_readonly("docs", &Corpus::docs)
      .def("num_docs", &Corpus::num_docs)
      .def("total_words", &Corpus::total_words)
      .def("save", [](const Corpus& c, const std::string& path) { save_corpus(path, c); })
      .def(py::self == py::self);
  m.def("load_corpus", &load_corpus);
  m.def("heldout_split", &heldout_split, py::arg("doc"), py::arg("seed"));

  // ---- training
  py::enum_<Mode>(m, "Mode")
      .value("svi", Mode::svi)
      .value("avi", Mode::avi)
      .value("vt", Mode::vt)
      .value("lvt", Mode::lvt);

  py::class_<GridConfig>(m, "GridConfig")
      .def(py::init([](GridSpacing s, std::size_t n, double t_max) { return GridConfig{s, n, t_max}; }),
           py::arg("spacing") = GridSpacing::exponential, py::arg("size") = 100, py::arg("t_max") = 10.0)
      .def_readwrite("spacing", &GridConfig::spacing)
      .def_readwrite("size", &GridConfig::size)
      .def_readwrite("t_max", &GridConfig::t_max)
      .def("build", &GridConfig::build);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("mode", &TrainConfig::mode)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("batch_mode", &TrainConfig::batch_mode)
      .def_readwrite("tau", &TrainConfig::tau)
      .def_readwrite("kappa", &TrainConfig::kappa)
      .def_readwrite("grid", &TrainConfig::grid)
      .def_readwrite("schedule", &TrainConfig::schedule)
      .def_readwrite("temp_update_every", &TrainConfig::temp_update_every)
      .def_readwrite("vt_ema", &TrainConfig::vt_ema)
      .def_readwrite("vt_untempered_statistic", &TrainConfig::vt_untempered_statistic)
      .def_readwrite("lvt_weighting", &TrainConfig::lvt_weighting)
      .def_readwrite("lvt_rounds", &TrainConfig::lvt_rounds)
      .def_readwrite("max_passes", &TrainConfig::max_passes)
      .def_readwrite("max_iterations", &TrainConfig::max_iterations)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("eval_every", &TrainConfig::eval_every)
      .def_readwrite("track_elbo", &TrainConfig::track_elbo)
      .def_readwrite("threads", &TrainConfig::threads)
      .def("validate", &TrainConfig::validate)
      .def("hash", &TrainConfig::hash)
      .def("canonical", &TrainConfig::canonical)
      .def("run_grid", [](const TrainConfig& c) { return run_grid(c); });

  py::class_<MetricsRow>(m, "MetricsRow")
      .def_readonly("iteration", &MetricsRow::iteration)
      .def_readonly("effective_passes", &MetricsRow::effective_passes)
      .def_readonly("elbo_t1", &MetricsRow::elbo_t1)
      .def_readonly("heldout", &MetricsRow::heldout)
      .def_readonly("expected_t", &MetricsRow::expected_t)
      .def_readonly("rate", &MetricsRow::rate)
      .def_readonly("wallclock_s", &MetricsRow::wallclock_s);

  // ---- LDA
  py::module_ lda_m = m.def_submodule("lda", "latent Dirichlet allocation");
  py::class_<lda::LdaConfig>(lda_m, "LdaConfig")
      .def(py::init([](std::size_t k, std::size_t v, double a, double e) {
             lda::LdaConfig c{k, v, a, e};
             c.validate();
             return c;
           }),
           py::arg("topics"), py::arg("vocab"), py::arg("alpha"), py::arg("eta"))
      .def_readonly("topics", &lda::LdaConfig::topics)
      .def_readonly("vocab", &lda::LdaConfig::vocab)
      .def_readonly("alpha", &lda::LdaConfig::alpha)
      .def_readonly("eta", &lda::LdaConfig::eta)
      .def("priors", &lda::LdaConfig::priors);
  py::class_<lda::LdaModel>(lda_m, "LdaModel")
      .def(py::init([](const lda::LdaConfig& c, const std::string& statistic) {
             return lda::LdaModel(c, {}, 1.0, lda::temperature_statistic_from_string(statistic));
           }),
           py::arg("config"), py::arg("temperature_statistic") = "assignment")
      .def_property_readonly("config", &lda::LdaModel::config)
      .def("partition_meta", [](const lda::LdaModel& model, const Corpus& c) { return model.partition_meta(c).entries; });
  lda_m.def("dirichlet_expected_log", &lda::dirichlet_expected_log);
  lda_m.def(
      "generate_corpus",
      [](std::size_t docs, std::size_t vocab, std::size_t topics, double mean_len, double alpha, double eta,
         std::uint64_t seed) {
        const auto s = lda::generate_corpus({docs, vocab, topics, mean_len, alpha, eta}, seed);
        return py::make_tuple(s.corpus, s.topics);
      },
      py::arg("docs") = 2000, py::arg("vocab") = 2000, py::arg("topics") = 25, py::arg("mean_doc_length") = 100.0,
      py::arg("alpha") = 0.1, py::arg("eta") = 0.05, py::arg("seed") = 0,
      "Returns (corpus, true K x V topic matrix).");
  lda_m.def("generate_documents", &lda::generate_documents, py::arg("topics"), py::arg("docs"),
            py::arg("mean_doc_length"), py::arg("alpha"), py::arg("seed"));
  lda_m.def(
      "train",
      [](const lda::LdaModel& model, const Corpus& corpus, const TrainConfig& config,
         const PartitionTable* table, const Corpus* test, std::uint64_t heldout_seed) {
        std::optional<HeldoutSet> held;
        TrainHooks hooks;
        if (test != nullptr) {
          held = make_heldout_set(*test, heldout_seed);
          hooks.heldout = [&](const Eigen::VectorXd& lambda) {
            return predictive_loglik(model, lambda, *held, config.threads);
          };
        }
        TrainResult<lda::LdaModel> r;
        {
          py::gil_scoped_release release;
          r = train(model, corpus, config, table, hooks);
        }
        return result_dict(r);
      },
      py::arg("model"), py::arg("corpus"), py::arg("config"), py::arg("table") = nullptr,
      py::arg("test_corpus") = nullptr, py::arg("heldout_seed") = 0);
  lda_m.def(
      "predictive_loglik",
      [](const lda::LdaModel& model, const Eigen::VectorXd& lambda, const Corpus& test, std::uint64_t seed) {
        return predictive_loglik(model, lambda, test, seed);
      },
      py::arg("model"), py::arg("lambda_"), py::arg("test_corpus"), py::arg("seed") = 0);

  // ---- factorial mixture
  py::module_ fmm_m = m.def_submodule("fmm", "factorial mixture model");
  py::class_<fmm::FmmConfig>(fmm_m, "FmmConfig")
      .def(py::init([](std::size_t k, std::size_t d, double pi, double sn, double smu) {
             fmm::FmmConfig c;
             c.components = k;
             c.dim = d;
             c.pi = pi;
             c.sigma_n = sn;
             c.sigma_mu = smu;
             c.validate();
             return c;
           }),
           py::arg("components") = 8, py::arg("dim") = 16, py::arg("pi") = 0.3, py::arg("sigma_n") = 0.1,
           py::arg("sigma_mu") = 0.35)
      .def_readonly("components", &fmm::FmmConfig::components)
      .def_readonly("dim", &fmm::FmmConfig::dim)
      .def_readonly("pi", &fmm::FmmConfig::pi)
      .def_readonly("sigma_n", &fmm::FmmConfig::sigma_n)
      .def_readonly("sigma_mu", &fmm::FmmConfig::sigma_mu)
      .def("noise_variance", &fmm::FmmConfig::noise_variance);
  py::class_<fmm::FmmModel>(fmm_m, "FmmModel")
      .def(py::init([](const fmm::FmmConfig& c) { return fmm::FmmModel(c); }), py::arg("config"))
      .def(
          "means",
          [](const fmm::FmmModel& model, const Eigen::VectorXd& lambda) { return model.prepare(lambda).m; },
          py::arg("lambda_"));
  fmm_m.def("toy_features", &fmm::toy_features, py::arg("seed"));
  fmm_m.def("generate", &fmm::fmm_generate, py::arg("config"), py::arg("features"), py::arg("n"), py::arg("seed"));
  fmm_m.def("log_partition_value", &fmm::fmm_log_partition_value, py::arg("config"), py::arg("n_data"),
            py::arg("temperature"));
  fmm_m.def("log_partition", &fmm::fmm_log_partition, py::arg("config"), py::arg("n_data"), py::arg("grid"));
  fmm_m.def("best_permutation_rmse", &fmm::best_permutation_rmse, py::arg("learned"), py::arg("truth"));
  fmm_m.def(
      "train",
      [](const fmm::FmmModel& model, const Eigen::MatrixXd& x, const TrainConfig& config,
         const PartitionTable* table) {
        TrainResult<fmm::FmmModel> r;
        py::dict d;
        {
          py::gil_scoped_release release;
          r = train(model, x, config, table);
        }
        d = result_dict(r);
        if (config.batch_mode) {
          const auto cache = model.prepare(r.global.lambda);
          std::vector<fmm::FmmLocal> at_one(r.locals.size());
          for (std::size_t i = 0; i < at_one.size(); ++i) at_one[i] = model.local_step(x, i, cache, 1.0, &r.locals[i]);
          d["elbo_t1"] = elbo(model, x, r.global.lambda, std::span<const fmm::FmmLocal>(at_one));
        }
        return d;
      },
      py::arg("model"), py::arg("data"), py::arg("config"), py::arg("table") = nullptr);

  // ---- command line
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a subcommand in-process; returns (exit_code, stdout, stderr).");
}
