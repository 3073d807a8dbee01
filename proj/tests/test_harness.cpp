#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "tempervi/checkpoint.hpp"
#include "tempervi/cli.hpp"
#include "tempervi/corpus.hpp"
#include "tempervi/errors.hpp"
#include "tempervi/evaluation.hpp"
#include "tempervi/fmm.hpp"
#include "tempervi/lda.hpp"
#include "tempervi/metrics.hpp"
#include "tempervi/partition.hpp"

using namespace tempervi;
namespace fs = std::filesystem;

namespace {

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return read_corpus(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("tempervi-test-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

Corpus random_corpus(std::uint64_t seed, std::size_t docs, std::size_t vocab) {
  std::mt19937_64 rng(seed);
  Corpus c;
  c.vocab_size = vocab;
  for (std::size_t d = 0; d < docs; ++d) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) pairs.emplace_back(static_cast<std::uint32_t>(rng() % vocab), 1 + rng() % 3);
    c.docs.push_back(Document::from_pairs(pairs));
  }
  return c;
}

}  // namespace

TEST_CASE("corpus parsing") {
  const Corpus c = parse("2\n3\n3\n1 1 2\n1 3 1\n2 2 5\n");
  CHECK(c.num_docs() == 2);
  CHECK(c.vocab_size == 3);
  CHECK(c.docs[0] == Document{{0, 2}, {2, 1}});
  CHECK(c.docs[1] == Document{{1}, {5}});

  const Corpus gap = parse("3\n4\n2\n1 2 1\n3 4 2\n");
  REQUIRE(gap.num_docs() == 3);
  CHECK(gap.docs[1].empty());
  CHECK(gap.docs[1].num_tokens() == 0);

  const Corpus dup = parse("1\n3\n3\n1 2 1\n1 2 4\n1 1 1\n");
  CHECK(dup.docs[0] == Document{{0, 1}, {1, 5}});

  try {
    parse("1\n3\n2\n1 1 1\n1 x 2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
  }
  CHECK_THROWS_AS(parse("1\n3\n1\n1 4 1\n"), ValidationError);
  CHECK_THROWS_AS(parse("1\n3\n"), ParseError);
}

TEST_CASE("corpus round-trip") {
  const Corpus c = random_corpus(3, 25, 17);
  std::ostringstream out;
  write_corpus(out, c);
  std::istringstream in(out.str());
  const Corpus back = read_corpus(in);
  CHECK(back == c);
  TempDir dir;
  save_corpus(dir / "c.txt", c);
  CHECK(load_corpus(dir / "c.txt") == c);
  std::ostringstream again;
  write_corpus(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("held-out token split") {
  const Document one{{3}, {1}};
  const auto [o1, h1] = heldout_split(one, 5);
  CHECK(o1 == one);
  CHECK(h1.empty());

  const Document four{{7}, {4}};
  const auto [o4, h4] = heldout_split(four, 5);
  CHECK(o4 == Document{{7}, {2}});
  CHECK(h4 == Document{{7}, {2}});

  const Document ab{{0, 1}, {2, 2}};
  const auto first = heldout_split(ab, 42);
  const auto second = heldout_split(ab, 42);
  CHECK(first == second);
  CHECK(first.first.num_tokens() == 2);
  CHECK(first.second.num_tokens() == 2);

  const Document odd{{0, 2, 5}, {3, 1, 3}};
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto [o, h] = heldout_split(odd, s);
    CHECK(o.num_tokens() == 4);
    CHECK(h.num_tokens() == 3);
    // Observed and held add back to the original counts.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> merged;
    for (std::size_t j = 0; j < o.words.size(); ++j) merged.emplace_back(o.words[j], o.counts[j]);
    for (std::size_t j = 0; j < h.words.size(); ++j) merged.emplace_back(h.words[j], h.counts[j]);
    CHECK(Document::from_pairs(merged) == odd);
  }
}

TEST_CASE("predictive log-likelihood") {
  // K = 1: the score is the mean log of the topic's Dirichlet mean.
  Corpus test;
  test.vocab_size = 3;
  test.docs = {Document{{0, 1}, {2, 2}}, Document{{2}, {2}}};
  const lda::LdaModel single({1, 3, 0.5, 0.5});
  Eigen::VectorXd lambda(3);
  lambda << 1.0, 2.0, 5.0;
  const HeldoutSet set = make_heldout_set(test, 9);
  double expect = 0.0;
  for (const auto& held : set.held) {
    for (std::size_t j = 0; j < held.words.size(); ++j) expect += held.counts[j] * std::log(lambda[held.words[j]] / 8.0);
  }
  CHECK(predictive_loglik(single, lambda, set) == doctest::Approx(expect / set.held_words).epsilon(1e-13));

  // Uniform topics score log(1/V) whatever q(theta) is.
  const lda::LdaModel three({3, 4, 0.1, 0.1});
  Corpus flat;
  flat.vocab_size = 4;
  flat.docs = {Document{{0, 1, 3}, {3, 1, 2}}, Document{{2}, {5}}};
  CHECK(predictive_loglik(three, Eigen::VectorXd::Constant(12, 2.0), flat, 1) ==
        doctest::Approx(std::log(0.25)).epsilon(1e-13));

  // Hand-set two-topic mixture over two documents.
  Eigen::MatrixXd topics(2, 3);
  topics << 1.0, 1.0, 2.0, 3.0, 1.0, 0.0001;
  const Eigen::VectorXd g1 = (Eigen::VectorXd(2) << 1.0, 3.0).finished();
  const Eigen::VectorXd g2 = (Eigen::VectorXd(2) << 2.0, 2.0).finished();
  const Document h1{{0, 2}, {1, 2}}, h2{{1}, {3}};
  const double p1w0 = 0.25 * 0.25 + 0.75 * (3.0 / 4.0001);
  const double p1w2 = 0.25 * 0.5 + 0.75 * (0.0001 / 4.0001);
  const double p2w1 = 0.5 * 0.25 + 0.5 * (1.0 / 4.0001);
  CHECK(heldout_log_prob(topics, g1, h1) == doctest::Approx(std::log(p1w0) + 2 * std::log(p1w2)).epsilon(1e-13));
  CHECK(heldout_log_prob(topics, g2, h2) == doctest::Approx(3 * std::log(p2w1)).epsilon(1e-13));

  Corpus singletons;
  singletons.vocab_size = 3;
  singletons.docs = {Document{{0}, {1}}, Document{{1}, {1}}};
  CHECK_THROWS_AS(predictive_loglik(single, lambda, singletons, 0), EvaluationError);
}

TEST_CASE("metrics CSV and exports") {
  std::vector<MetricsRow> rows(3);
  rows[0] = {10, 0.5, std::nullopt, -7.25, 4.5, 0.01, std::nullopt};
  rows[1] = {20, 1.0, -1234.5678901234567, -7.125, 3.0, 0.005, 1.5};
  rows[2] = {30, 1.5, std::nullopt, std::nullopt, 1.0, 1.0 / 3.0, std::nullopt};
  std::ostringstream out;
  write_metrics_csv(out, rows);
  const std::string text = out.str();
  CHECK(text.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  CHECK(text.find("10,0.5,,-7.25,4.5,0.01,\n") != std::string::npos);
  std::istringstream in(text);
  CHECK(read_metrics_csv(in) == rows);

  std::istringstream wrong_header("iteration,foo\n1,2\n");
  CHECK_THROWS_AS(read_metrics_csv(wrong_header), ParseError);
  std::istringstream backwards(std::string(kMetricsHeader) + "\n5,1,,,1,0.1,\n4,1,,,1,0.1,\n");
  CHECK_THROWS_AS(read_metrics_csv(backwards), ParseError);

  std::ostringstream long_form;
  write_metrics_long(long_form, "run-a", rows);
  std::istringstream lines(long_form.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "run,iteration,metric,value");
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 4 + 6 + 3);

  const auto j = nlohmann::json::parse(metrics_to_json("run-a", rows));
  CHECK(j["run"] == "run-a");
  CHECK(j["rows"].size() == 3);
  CHECK(j["rows"][0]["elbo_T1"].is_null());
  CHECK(j["rows"][1]["elbo_T1"].get<double>() == rows[1].elbo_t1.value());
}

TEST_CASE("checkpoint round-trip") {
  Checkpoint c;
  c.mode = "vt";
  c.iteration = 1234;
  c.lambda = Eigen::VectorXd::Random(17);
  c.lambda[3] = 1.0 / 3.0;
  c.temperature = 2.75;
  c.posterior = {0.1, 0.2, 0.7};
  c.statistic_ema = -98765.4321;
  c.statistic_ema_ready = true;
  std::mt19937_64 rng(5);
  rng.discard(10);
  std::ostringstream state;
  state << rng;
  c.rng_state = state.str();
  c.config_hash = 0xfedcba9876543210ULL;

  std::ostringstream out;
  write_checkpoint(out, c);
  std::istringstream in(out.str());
  const Checkpoint back = read_checkpoint(in);
  CHECK(back.mode == c.mode);
  CHECK(back.iteration == c.iteration);
  CHECK(back.lambda == c.lambda);
  CHECK(back.temperature == c.temperature);
  CHECK(back.posterior == c.posterior);
  CHECK(back.statistic_ema == c.statistic_ema);
  CHECK(back.statistic_ema_ready);
  CHECK(back.rng_state == c.rng_state);
  CHECK(back.config_hash == c.config_hash);

  std::istringstream junk("not a checkpoint\n");
  CHECK_THROWS_AS(read_checkpoint(junk), ParseError);
}

TEST_CASE("command line: exit codes") {
  TempDir dir;
  save_corpus(dir / "c.txt", random_corpus(1, 30, 10));
  const auto vt = cli({"train", "--model", "lda", "--corpus", dir / "c.txt", "--mode", "vt"});
  CHECK(vt.code == 2);
  CHECK(vt.err.find("--partition-table") != std::string::npos);

  CHECK(cli({"train", "--model", "lda", "--no-such-flag"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"train", "--model", "lda", "--corpus", dir / "missing.txt"}).code == 1);
  CHECK(cli({"train", "--model", "lda", "--corpus", dir / "c.txt", "--kappa", "0.4"}).code == 2);
  CHECK(cli({"--help"}).code == 0);

  // The installed binary reports the same codes.
  const std::string bin = TEMPERVI_CLI_PATH;
  CHECK(WEXITSTATUS(std::system((bin + " train --model lda --bogus >/dev/null 2>&1").c_str())) == 2);
  CHECK(WEXITSTATUS(std::system((bin + " train --model lda --corpus " + (dir / "c.txt") +
                                 " --iterations 2 --topics 2 >/dev/null 2>&1").c_str())) == 0);
}

TEST_CASE("command line: partition tables round-trip") {
  TempDir dir;
  const auto r = cli({"precompute-partition", "--model", "fmm", "--n-data", "50", "--components", "3",
                      "--dim", "4", "--grid-size", "7", "--t-max", "5", "--out", dir / "p.txt"});
  REQUIRE(r.code == 0);
  const std::string first = slurp(dir / "p.txt");
  const PartitionTable table = load_partition_table(dir / "p.txt");
  CHECK(table.grid.size() == 7);
  CHECK(table.log_c[0] == 0.0);
  save_partition_table(dir / "q.txt", table);
  CHECK(slurp(dir / "q.txt") == first);
  const PartitionTable again = load_partition_table(dir / "q.txt");
  CHECK(again.log_c == table.log_c);
  CHECK(again.std_err == table.std_err);
  CHECK(again.meta.entries == table.meta.entries);

  save_corpus(dir / "c.txt", random_corpus(2, 20, 8));
  const auto lda = cli({"precompute-partition", "--model", "lda", "--corpus", dir / "c.txt", "--topics", "2",
                        "--grid-size", "4", "--samples", "20", "--inner-samples", "20", "--out", dir / "l.txt"});
  CHECK(lda.code == 0);
  const auto ok = cli({"train", "--model", "lda", "--corpus", dir / "c.txt", "--topics", "2", "--mode", "vt",
                       "--grid-size", "4", "--partition-table", dir / "l.txt", "--iterations", "3",
                       "--batch-size", "5"});
  CHECK(ok.code == 0);
  const auto wrong = cli({"train", "--model", "lda", "--corpus", dir / "c.txt", "--topics", "3", "--mode", "vt",
                          "--grid-size", "4", "--partition-table", dir / "l.txt", "--iterations", "3"});
  CHECK(wrong.code == 2);
}

TEST_CASE("command line: fixed-seed training is byte-identical") {
  TempDir dir;
  save_corpus(dir / "train.txt", random_corpus(7, 60, 15));
  save_corpus(dir / "test.txt", random_corpus(8, 10, 15));
  auto run = [&](const std::string& name) {
    return cli({"train", "--model", "lda", "--mode", "svi", "--seed", "7", "--corpus", dir / "train.txt",
                "--test-corpus", dir / "test.txt", "--topics", "3", "--batch-size", "10", "--passes", "2",
                "--eval-every", "2", "--metrics", dir / name, "--reproducible"});
  };
  REQUIRE(run("a.csv").code == 0);
  REQUIRE(run("b.csv").code == 0);
  const std::string a = slurp(dir / "a.csv");
  CHECK(!a.empty());
  CHECK(a == slurp(dir / "b.csv"));
  const auto rows = load_metrics_csv(dir / "a.csv");
  REQUIRE(rows.size() == 6);
  for (const auto& row : rows) {
    CHECK(row.effective_passes == doctest::Approx(row.iteration * 10.0 / 60.0).epsilon(1e-15));
    CHECK(row.heldout.has_value());
  }

  const auto ex = cli({"export-metrics", dir / "a.csv", "--format", "json", "--out", dir / "a.json"});
  CHECK(ex.code == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "a.json")).size() == 1);
}

TEST_CASE("command line: generate, train and evaluate the factorial mixture") {
  TempDir dir;
  const auto gen = cli({"generate-fmm", "--n", "200", "--seed", "3", "--out", dir / "x.csv", "--features-out",
                        dir / "f.csv"});
  REQUIRE(gen.code == 0);
  const auto x = fmm::load_matrix_csv(dir / "x.csv");
  CHECK(x.rows() == 200);
  CHECK(x.cols() == 16);
  const auto tr = cli({"train", "--model", "fmm", "--data", dir / "x.csv", "--truth", dir / "f.csv", "--batch",
                       "--iterations", "5", "--eval-every", "5", "--track-elbo", "--lambda-out", dir / "l.txt"});
  REQUIRE(tr.code == 0);
  CHECK(tr.out.find("feature_rmse") != std::string::npos);
  CHECK(tr.out.find("elbo_T1") != std::string::npos);
  const auto ev = cli({"evaluate", "--model", "fmm", "--data", dir / "x.csv", "--lambda", dir / "l.txt"});
  CHECK(ev.code == 0);
  CHECK(ev.out.find("elbo_T1") != std::string::npos);
}
