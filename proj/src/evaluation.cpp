#include "tempervi/evaluation.hpp"

#include <cmath>

#include "tempervi/errors.hpp"
#include "tempervi/numeric.hpp"
#include "tempervi/parallel.hpp"

namespace tempervi {

HeldoutSet make_heldout_set(const Corpus& test, std::uint64_t seed) {
  HeldoutSet set;
  for (std::size_t d = 0; d < test.docs.size(); ++d) {
    if (test.docs[d].empty()) continue;
    auto [observed, held] = heldout_split(test.docs[d], substream_seed(seed, d));
    if (held.empty()) continue;
    set.held_words += held.num_tokens();
    set.observed.push_back(std::move(observed));
    set.held.push_back(std::move(held));
  }
  return set;
}

double heldout_log_prob(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& gamma,
                        const Document& held) {
  const Eigen::VectorXd theta = gamma / gamma.sum();
  const Eigen::VectorXd row_mass = lambda.rowwise().sum();
  double total = 0.0;
  for (std::size_t j = 0; j < held.words.size(); ++j) {
    const double p = theta.dot(lambda.col(held.words[j]).cwiseQuotient(row_mass));
    total += held.counts[j] * std::log(p);
  }
  return total;
}

double predictive_loglik(const lda::LdaModel& model, const Eigen::VectorXd& lambda,
                         const HeldoutSet& set, std::size_t threads) {
  if (set.held_words == 0) throw EvaluationError("no held-out words to score");
  const auto cache = model.prepare(lambda);
  std::vector<double> scores(set.held.size());
  parallel_for(set.held.size(), threads, [&](std::size_t d) {
    const auto local = lda::lda_local_step(set.observed[d], cache.elog_beta, model.config().alpha,
                                           1.0, model.solver());
    scores[d] = heldout_log_prob(cache.lambda, local.gamma, set.held[d]);
  });
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(set.held_words);
}

double predictive_loglik(const lda::LdaModel& model, const Eigen::VectorXd& lambda,
                         const Corpus& test, std::uint64_t seed, std::size_t threads) {
  return predictive_loglik(model, lambda, make_heldout_set(test, seed), threads);
}

}  // namespace tempervi
