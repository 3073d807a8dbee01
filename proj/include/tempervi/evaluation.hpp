#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "tempervi/corpus.hpp"
#include "tempervi/lda.hpp"

namespace tempervi {

/// Documents split into an observed half (used to fit q(theta)) and a
/// held-out half (scored). Documents whose held half is empty are dropped.
struct HeldoutSet {
  std::vector<Document> observed;
  std::vector<Document> held;
  std::size_t held_words = 0;
};

HeldoutSet make_heldout_set(const Corpus& test, std::uint64_t seed);

/// sum over held tokens w of log sum_k (gamma_k / sum gamma) (lambda_kw / sum_v lambda_kv).
/// `lambda` is K x V.
double heldout_log_prob(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& gamma,
                        const Document& held);

/// Average held-out log predictive probability per word, with q(theta_d)
/// fitted on each observed half at T = 1.
double predictive_loglik(const lda::LdaModel& model, const Eigen::VectorXd& lambda,
                         const HeldoutSet& set, std::size_t threads = 1);

double predictive_loglik(const lda::LdaModel& model, const Eigen::VectorXd& lambda,
                         const Corpus& test, std::uint64_t seed, std::size_t threads = 1);

}  // namespace tempervi
