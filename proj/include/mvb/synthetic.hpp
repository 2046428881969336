#ifndef MVB_SYNTHETIC_HPP
#define MVB_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "mvb/dataset.hpp"
#include "mvb/losses.hpp"

namespace mvb {

// Gaussian blobs: class centers drawn uniformly in [-1,1]^d, points scattered
// around them with the given spread. Labels are balanced (i mod classes).
Dataset make_blobs(std::size_t n, std::size_t d, int classes, double spread, std::uint64_t seed);

// Exact population statistics for hypotheses with disjoint error regions of
// mass 1/M each: L(h) = 1/M, L(h,h') = 0 off the diagonal.
OracleStats disjoint_population_stats(std::size_t m);

// Exact population statistics for independent errors: L(h,h') = L(h) L(h')
// off the diagonal.
OracleStats independent_population_stats(const std::vector<double>& risks);

// P[sum of independent Bernoulli(p_h) >= k], exact dynamic program.
double poisson_binomial_tail(const std::vector<double>& risks, std::size_t k);

// True risk of the uniformly weighted majority vote over M independent-error
// binary hypotheses whose true label is fixed to class 0 (a tie therefore
// resolves to the correct class): the vote errs when more than half err.
double true_mv_risk_uniform_independent(const std::vector<double>& risks);

// One i.i.d. sample of size n from the independent-error binary population:
// labels are all 0, hypothesis h predicts 1 exactly when it errs.
PredictionMatrix sample_independent_population(const std::vector<double>& risks, std::size_t n,
                                               std::uint64_t seed);

}  // namespace mvb

#endif  // MVB_SYNTHETIC_HPP
