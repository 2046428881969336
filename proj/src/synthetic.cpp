#include "mvb/synthetic.hpp"

#include <cmath>
#include <string>

#include "mvb/random.hpp"

namespace mvb {

Dataset make_blobs(std::size_t n, std::size_t d, int classes, double spread, std::uint64_t seed) {
  if (n < 2 || d < 1 || classes < 2) throw InputError("blob generator needs n >= 2, d >= 1, c >= 2");
  if (!(spread > 0.0)) throw InputError("spread must be positive");

  Rng rng(seed);
  std::vector<double> centers(static_cast<std::size_t>(classes) * d);
  for (double& c : centers) c = 2.0 * rng.unit() - 1.0;

  Dataset ds;
  ds.X.n_samples = n;
  ds.X.n_features = d;
  ds.X.values.resize(n * d);
  ds.labels.resize(n);
  ds.n_classes = classes;
  for (int k = 0; k < classes; ++k) ds.class_names.push_back(std::to_string(k));

  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::int32_t>(i % static_cast<std::size_t>(classes));
    ds.labels[i] = k;
    for (std::size_t j = 0; j < d; ++j) {
      ds.X.values[i * d + j] = centers[static_cast<std::size_t>(k) * d + j] + spread * rng.normal();
    }
  }
  ds.validate();
  return ds;
}

OracleStats disjoint_population_stats(std::size_t m) {
  if (m < 3) throw InputError("disjoint population needs at least three hypotheses");
  const double risk = 1.0 / static_cast<double>(m);
  std::vector<double> risks(m, risk);
  DMatrix tandem(m, m, 0.0);
  for (std::size_t h = 0; h < m; ++h) tandem.at(h, h) = risk;
  return oracle_stats(risks, tandem);
}

OracleStats independent_population_stats(const std::vector<double>& risks) {
  const std::size_t m = risks.size();
  if (m < 2) throw InputError("independent population needs at least two hypotheses");
  DMatrix tandem(m, m, 0.0);
  for (std::size_t h = 0; h < m; ++h) {
    for (std::size_t g = 0; g < m; ++g) {
      tandem.at(h, g) = h == g ? risks[h] : risks[h] * risks[g];
    }
  }
  return oracle_stats(risks, tandem);
}

double poisson_binomial_tail(const std::vector<double>& risks, std::size_t k) {
  const std::size_t m = risks.size();
  std::vector<double> pmf(m + 1, 0.0);
  pmf[0] = 1.0;
  for (std::size_t h = 0; h < m; ++h) {
    for (std::size_t c = h + 1; c > 0; --c) {
      pmf[c] = pmf[c] * (1.0 - risks[h]) + pmf[c - 1] * risks[h];
    }
    pmf[0] *= 1.0 - risks[h];
  }
  double tail = 0.0;
  for (std::size_t c = k; c <= m; ++c) tail += pmf[c];
  return tail;
}

double true_mv_risk_uniform_independent(const std::vector<double>& risks) {
  const std::size_t m = risks.size();
  // errs when the error count strictly exceeds m/2
  return poisson_binomial_tail(risks, m / 2 + 1);
}

PredictionMatrix sample_independent_population(const std::vector<double>& risks, std::size_t n,
                                               std::uint64_t seed) {
  const std::size_t m = risks.size();
  if (m < 2 || n < 1) throw InputError("population sample needs m >= 2 and n >= 1");
  Rng rng(seed);
  PredictionMatrix pm;
  pm.n_hypotheses = m;
  pm.n_samples = n;
  pm.n_classes = 2;
  pm.preds.assign(m * n, 0);
  pm.labels.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t h = 0; h < m; ++h) {
      pm.preds[h * n + i] = rng.unit() < risks[h] ? 1 : 0;
    }
  }
  pm.validate();
  return pm;
}

}  // namespace mvb
