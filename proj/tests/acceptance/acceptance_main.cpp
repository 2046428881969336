// Acceptance suite: every release criterion as one pass/fail line, with the
// measured quantities printed for inspection. Returns the number of failures.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mvb/bounds.hpp"
#include "mvb/forest.hpp"
#include "mvb/optimize.hpp"
#include "mvb/random.hpp"
#include "mvb/synthetic.hpp"
#include "support/eigen.hpp"
#include "support/generators.hpp"

using namespace mvb;
using namespace mvb_tests;

namespace {

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- helpers

struct ForestRun {
  double test_loss_uniform = 0.0;
  double test_loss_fo = 0.0;
  double test_loss_tnd = 0.0;
  double tnd_kl_uniform = 0.0;
};

ForestRun run_forest(const Dataset& full, std::size_t trees, BaggingMode mode, std::uint64_t seed,
                     bool optimize) {
  const SplitSpec split{0.2, 1.0, seed};
  auto [train, test] = stratified_split(full, split);
  const auto ens = train_forest(train, trees, mode, derive_seed(seed, 1));
  const auto train_pm = prediction_matrix(ens, train.X, &train.labels);
  const auto test_pm = prediction_matrix(ens, test.X, &test.labels);
  const auto stats = compute_loss_stats(train_pm, ens.oob_masks);
  const auto uniform = Posterior::uniform(ens.size());

  ForestRun out;
  out.test_loss_uniform = mv_loss(test_pm, uniform);
  out.tnd_kl_uniform =
      tnd_bound(aggregate_pair(stats.tandem, uniform), 0.0, stats.n_min_pair, 0.05).value;
  if (optimize) {
    const auto fo = minimize_fo(stats, uniform, 0.05, 0);
    const auto tnd = minimize_tnd(stats, uniform, 0.05, 0);
    out.test_loss_fo = mv_loss(test_pm, fo.rho_star);
    out.test_loss_tnd = mv_loss(test_pm, tnd.rho_star);
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- criteria

bool criterion_kl_inversion(std::string& detail) {
  Rng rng(101);
  double worst = 0.0;
  std::size_t interior = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const double p = rng.unit();
    const double eps = rng.unit() * 5.0;

    const double up = kl_inv_upper(p, eps);
    if (up > p && up < 1.0 - 1e-6) {
      worst = std::max(worst, std::abs(kl_bernoulli(p, up) - eps));
      ++interior;
    }
    const double down = kl_inv_lower(p, eps);
    if (down > 1e-300 && down < p) {
      worst = std::max(worst, std::abs(kl_bernoulli(p, down) - eps));
      ++interior;
    }
  }
  detail = fmt("worst interior residual %.3e over %zu interior results", worst, interior);
  return worst <= 1e-9 && interior > 1000;
}

bool criterion_second_moment_identity(std::string& detail) {
  Rng rng(102);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t m = 2 + rng.below(9);   // <= 10
    const std::size_t n = 5 + rng.below(46);  // <= 50
    const int c = 2 + static_cast<int>(rng.below(3));
    const auto pm = random_prediction_matrix(rng, m, n, c);
    const auto stats = compute_loss_stats(pm, full_masks(m, n));
    const auto post = Posterior::from_weights(random_rho(rng, m), std::vector<double>(m, 1.0 / m));

    double mean_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double e = 0.0;
      for (std::size_t h = 0; h < m; ++h)
        e += post.rho[h] * (pm.at(h, i) != pm.labels[i] ? 1.0 : 0.0);
      mean_sq += e * e;
    }
    mean_sq /= static_cast<double>(n);
    worst = std::max(worst, std::abs(mean_sq - aggregate_pair(stats.tandem, post)));
  }
  detail = fmt("max |E[rho-error^2] - tandem form| = %.3e over 500 instances", worst);
  return worst <= 1e-12;
}

bool criterion_tandem_dis_identity(std::string& detail) {
  Rng rng(103);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t m = 2 + rng.below(9);
    const std::size_t n = 5 + rng.below(46);
    const auto pm = random_prediction_matrix(rng, m, n, 2);
    const auto stats = compute_loss_stats(pm, full_masks(m, n));
    const auto post = Posterior::from_weights(random_rho(rng, m), std::vector<double>(m, 1.0 / m));
    const double tandem = aggregate_pair(stats.tandem, post);
    const double gibbs = aggregate_first(stats, post);
    const double dis = aggregate_pair(stats.disagreement, post);
    worst = std::max(worst, std::abs(tandem - (gibbs - 0.5 * dis)));
  }
  detail = fmt("max |tandem - (gibbs - dis/2)| = %.3e over 500 instances", worst);
  return worst <= 1e-12;
}

bool criterion_regimes(std::string& detail) {
  const auto best = oracle_bounds(disjoint_population_stats(4), Posterior::uniform(4));
  const bool best_ok = best.fo == 0.5 && best.tnd == 0.25 && best.ctd == 0.0;

  DMatrix same(4, 4, 0.25);
  const auto worst =
      oracle_bounds(oracle_stats(std::vector<double>(4, 0.25), same), Posterior::uniform(4));
  const bool worst_ok = worst.tnd == 2.0 * worst.fo;

  const auto indep = oracle_bounds(independent_population_stats(std::vector<double>(10, 0.3)),
                                   Posterior::uniform(10));
  const bool indep_ok = std::abs(indep.tnd - 0.444) <= 1e-12 && std::abs(indep.fo - 0.6) <= 1e-12;

  detail = fmt("best FO=%.3f TND=%.3f CTD=%.3f; worst TND/FO=%.3f; indep TND=%.15f",
               best.fo, best.tnd, best.ctd, worst.tnd / worst.fo, indep.tnd);
  return best_ok && worst_ok && indep_ok;
}

bool criterion_cbound_equivalence(std::string& detail) {
  Rng rng(105);
  double worst = 0.0;
  std::size_t checked = 0;
  while (checked < 500) {
    const auto pop = random_population(rng, 2 + rng.below(7), 20 + rng.below(60));
    const auto post = Posterior::from_weights(random_rho(rng, pop.m),
                                              std::vector<double>(pop.m, 1.0 / pop.m));
    const auto stats = pop.stats();
    double gibbs = 0.0;
    for (std::size_t h = 0; h < pop.m; ++h) gibbs += post.rho[h] * stats.risks[h];
    const double dis = aggregate_pair(stats.disagreement, post);
    if (gibbs >= 0.5 || 1.0 - 2.0 * dis < 1e-3) continue;
    const auto ob = oracle_bounds(stats, post);
    worst = std::max(worst, std::abs(ob.ctd - ob.c1));
    worst = std::max(worst, std::abs(ob.ctd - ob.c2));
    ++checked;
  }
  detail = fmt("max |CTD - C1|, |CTD - C2| = %.3e over 500 instances", worst);
  return worst <= 1e-12;
}

bool criterion_ctd_vs_tnd(std::string& detail) {
  Rng rng(106);
  std::size_t checked = 0, violations = 0;
  double min_margin = 1e300;
  while (checked < 10000) {
    const auto pop = random_population(rng, 2 + rng.below(7), 10 + rng.below(60));
    const auto post = Posterior::from_weights(random_rho(rng, pop.m),
                                              std::vector<double>(pop.m, 1.0 / pop.m));
    const auto stats = pop.stats();
    double gibbs = 0.0;
    for (std::size_t h = 0; h < pop.m; ++h) gibbs += post.rho[h] * stats.risks[h];
    if (gibbs >= 0.5) continue;
    const auto ob = oracle_bounds(stats, post);
    if (ob.ctd > ob.tnd) ++violations;
    min_margin = std::min(min_margin, ob.tnd - ob.ctd);
    ++checked;
  }
  detail = fmt("%zu violations in 10000 trials (min margin %.3e)", violations, min_margin);
  return violations == 0;
}

bool criterion_psd(std::string& detail) {
  Rng rng(107);
  double min_eig = 1e300;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t m = 2 + rng.below(10);
    const std::size_t n = 4 + rng.below(60);
    const auto pm = random_prediction_matrix(rng, m, n, 2 + static_cast<int>(rng.below(3)));
    const auto stats = compute_loss_stats(pm, full_masks(m, n));
    min_eig = std::min(min_eig, symmetric_eigenvalues(stats.tandem).front());
  }

  // the two-point / three-hypothesis overlap construction
  const std::vector<std::vector<int>> errs{{1, 0}, {0, 1}, {0, 1}};
  const std::vector<std::vector<std::vector<std::size_t>>> sets{
      {{0, 1}, {0}, {1}}, {{0}, {0, 1}, {1}}, {{1}, {1}, {0, 1}}};
  DMatrix counter(3, 3);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t g = 0; g < 3; ++g) {
      double s = 0.0;
      for (auto i : sets[h][g]) s += errs[h][i] * errs[g][i];
      counter.at(h, g) = s / static_cast<double>(sets[h][g].size());
    }
  const auto eig = symmetric_eigenvalues(counter);
  const bool counter_ok = std::abs(eig[0] + 0.5) <= 1e-9 && std::abs(eig[1] - 0.5) <= 1e-9 &&
                          std::abs(eig[2] - 1.5) <= 1e-9;

  detail = fmt("min common-set eigenvalue %.3e; counterexample eigenvalues {%.3f, %.3f, %.3f}",
               min_eig, eig[0], eig[1], eig[2]);
  return min_eig >= -1e-10 && counter_ok;
}

double gradient_relative_error(bool dis_objective, Rng& rng) {
  const std::size_t m = 2 + rng.below(9);
  const auto pop = random_population(rng, m, 40);
  const auto os = pop.stats();
  const std::vector<double> pi(m, 1.0 / static_cast<double>(m));
  const std::size_t n = 100 + rng.below(2000);
  const std::size_t mu = 100 + rng.below(2000);
  const double lambda = 0.2 + 1.5 * rng.unit();
  const double gamma = 0.1 + 1.5 * rng.unit();

  std::vector<double> tilde(m);
  for (double& t : tilde) t = rng.normal();
  std::vector<double> rho, log_rho;
  softmax(tilde, rho, log_rho);

  const auto analytic =
      dis_objective
          ? softmax_pullback(rho, grad_dis(rho, log_rho, os.risks, os.disagreement, lambda, gamma,
                                           n, mu, pi))
          : softmax_pullback(rho, grad_tnd(rho, log_rho, os.tandem, lambda, n, pi));

  const auto objective = [&](const std::vector<double>& tl) {
    std::vector<double> r, lr;
    softmax(tl, r, lr);
    double kl = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (r[i] > 0.0) kl += r[i] * (lr[i] - std::log(pi[i]));
    if (!dis_objective) {
      double quad = 0.0;
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) quad += r[a] * r[b] * os.tandem.at(a, b);
      return quad + 2.0 / (lambda * static_cast<double>(n)) * kl;
    }
    double lin = 0.0;
    for (std::size_t i = 0; i < m; ++i) lin += r[i] * os.risks[i];
    double quad = 0.0;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) quad += r[a] * r[b] * os.disagreement.at(a, b);
    const double av = 1.0 / (1.0 - lambda / 2.0);
    const double bv = 1.0 - gamma / 2.0;
    const double cv = 1.0 / (lambda * (1.0 - lambda / 2.0) * static_cast<double>(n)) +
                      1.0 / (gamma * static_cast<double>(mu));
    return 2.0 * av * lin - bv * quad + 2.0 * cv * kl;
  };

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    auto up = tilde, down = tilde;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    const double fd = (objective(up) - objective(down)) / 2e-6;
    num += (analytic[i] - fd) * (analytic[i] - fd);
    den += fd * fd;
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
}

bool criterion_gradients(std::string& detail) {
  Rng rng(108);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) worst = std::max(worst, gradient_relative_error(false, rng));
  for (int rep = 0; rep < 100; ++rep) worst = std::max(worst, gradient_relative_error(true, rng));
  detail = fmt("max relative gradient error %.3e over 100+100 instances", worst);
  return worst <= 1e-5;
}

bool criterion_closed_forms(std::string& detail) {
  Rng rng(109);
  double worst_gap = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const double t = rng.unit() * 0.5;
    const double kl = rng.unit() * 2.0;
    const std::size_t n = 20 + rng.below(5000);
    const double kl_term = 2.0 * kl + std::log(2.0 * std::sqrt(static_cast<double>(n)) / 0.05);
    const double star = optimal_lambda(t, n, kl_term);
    const double at_star = tnd_bound(t, kl, n, 0.05, BoundForm::Lambda, star).value;
    for (int k = 1; k <= 100000; ++k) {
      const double lam = 2.0 * static_cast<double>(k) / 100001.0;
      const double v = tnd_bound(t, kl, n, 0.05, BoundForm::Lambda, lam).value;
      worst_gap = std::max(worst_gap, at_star - v);
    }

    const double d = 0.02 + rng.unit() * 0.5;
    const std::size_t mu = 50 + rng.below(5000);
    const double b = (2.0 * kl + std::log(4.0 * std::sqrt(static_cast<double>(mu)) / 0.05)) /
                     static_cast<double>(mu);
    const double gstar = optimal_gamma(d, mu, kl, 0.05);
    const auto gamma_term = [&](double g) { return g * d + 2.0 * b / g; };
    const double at_gstar = gamma_term(gstar);
    for (int k = 1; k <= 100000; ++k) {
      const double g = 5.0 * gstar * static_cast<double>(k) / 100000.0;
      worst_gap = std::max(worst_gap, at_gstar - gamma_term(g));
    }
  }
  detail = fmt("max closed-form excess over the grids %.3e", worst_gap);
  return worst_gap <= 1e-10;
}

bool criterion_monotone_traces(std::string& detail) {
  Rng rng(110);
  double worst_rise = -1e300;
  double worst_final_gap = -1e300;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t m = 3 + rng.below(8);
    const auto pm = random_prediction_matrix(rng, m, 60 + rng.below(120), 2);
    const auto masks = random_masks(rng, m, pm.n_samples, 0.6, 4);
    const auto stats = compute_loss_stats(pm, masks);
    const auto prior = Posterior::uniform(m);
    for (int which = 0; which < 3; ++which) {
      const auto res = which == 0   ? minimize_tnd(stats, prior, 0.05, rep)
                       : which == 1 ? minimize_dis(stats, prior, 0.05, rep)
                                    : minimize_fo(stats, prior, 0.05, rep);
      for (std::size_t i = 1; i < res.trace.size(); ++i)
        worst_rise = std::max(worst_rise, res.trace[i] - res.trace[i - 1]);
      worst_final_gap = std::max(worst_final_gap, res.final_lambda_bound - res.initial_lambda_bound);
    }
  }
  detail = fmt("max trace increase %.3e; max final-initial gap %.3e", worst_rise, worst_final_gap);
  return worst_rise <= 1e-12 && worst_final_gap <= 1e-12;
}

bool criterion_statistical_validity(std::string& detail) {
  std::vector<double> risks(10);
  for (std::size_t h = 0; h < risks.size(); ++h)
    risks[h] = 0.2 + 0.2 * static_cast<double>(h) / 9.0;  // 0.2 .. 0.4
  const double true_risk = true_mv_risk_uniform_independent(risks);

  const auto uniform = Posterior::uniform(risks.size());
  std::size_t hold = 0;
  const std::size_t draws = 200, n = 2000;
  for (std::size_t rep = 0; rep < draws; ++rep) {
    const auto pm = sample_independent_population(risks, n, derive_seed(909, rep));
    const auto stats = compute_loss_stats(pm, full_masks(risks.size(), n));
    const double bound =
        tnd_bound(aggregate_pair(stats.tandem, uniform), 0.0, stats.n_min_pair, 0.05).value;
    hold += bound >= true_risk;
  }
  detail = fmt("bound held in %zu/200 draws (true majority-vote risk %.4f)", hold, true_risk);
  return hold >= 190;
}

bool criterion_optimization_ratios(std::string& detail) {
  struct Config {
    std::size_t n, d;
    double spread;
    std::uint64_t seed;
  };
  const std::vector<Config> configs{{3000, 4, 0.40, 21}, {3200, 6, 0.50, 22}, {3000, 8, 0.60, 23}};

  std::string per_dataset;
  bool ok = true;
  for (const auto& cfg : configs) {
    const auto full = make_blobs(cfg.n, cfg.d, 2, cfg.spread, cfg.seed);
    std::vector<double> ratio_fo, ratio_tnd;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto run = run_forest(full, 100, BaggingMode::Full, derive_seed(cfg.seed, seed), true);
      if (run.test_loss_uniform <= 0.0) continue;
      ratio_fo.push_back(run.test_loss_fo / run.test_loss_uniform);
      ratio_tnd.push_back(run.test_loss_tnd / run.test_loss_uniform);
    }
    if (ratio_fo.size() < 8) {
      ok = false;
      per_dataset += " [degenerate: uniform test loss hit zero]";
      continue;
    }
    const double med_fo = median(ratio_fo);
    const double med_tnd = median(ratio_tnd);
    per_dataset += fmt(" [d=%zu: median TND %.3f vs FO %.3f]", cfg.d, med_tnd, med_fo);
    ok = ok && med_tnd <= med_fo && med_tnd <= 1.10;
  }
  detail = "ratio of optimized to uniform test loss:" + per_dataset;
  return ok;
}

bool criterion_unlabeled_dis(std::string& detail) {
  const std::size_t n = 500;
  const std::size_t m_pool = n * n;  // 250000
  const auto full = make_blobs(n + m_pool, 5, 2, 0.9, 404);

  Dataset labeled;
  labeled.X.n_samples = n;
  labeled.X.n_features = full.n_features();
  labeled.X.values.assign(full.X.values.begin(),
                          full.X.values.begin() + static_cast<long>(n * full.n_features()));
  labeled.labels.assign(full.labels.begin(), full.labels.begin() + static_cast<long>(n));
  labeled.n_classes = 2;
  labeled.class_names = full.class_names;

  FeatureMatrix pool;
  pool.n_samples = m_pool;
  pool.n_features = full.n_features();
  pool.values.assign(full.X.values.begin() + static_cast<long>(n * full.n_features()),
                     full.X.values.end());

  // reduced bagging keeps the pairwise overlaps usable at this sample size
  const auto ens = train_forest(labeled, 100, BaggingMode::Reduced, 2024);
  const auto train_pm = prediction_matrix(ens, labeled.X, &labeled.labels);
  const auto uniform = Posterior::uniform(ens.size());

  const auto bounds_with_pool = [&](const FeatureMatrix& p) {
    PredictionMatrix pool_pm = prediction_matrix(ens, p);
    const auto stats = compute_loss_stats(train_pm, ens.oob_masks, &pool_pm);
    const auto report = make_bound_report(stats, uniform, 0.05, {BoundKind::TND, BoundKind::DIS});
    return std::pair{report.entries[0].value.value, report.entries[1].value.value};
  };

  const auto [tnd_big, dis_big] = bounds_with_pool(pool);

  FeatureMatrix small_pool;
  small_pool.n_samples = n;
  small_pool.n_features = pool.n_features;
  small_pool.values.assign(pool.values.begin(),
                           pool.values.begin() + static_cast<long>(n * pool.n_features));
  const auto [tnd_small, dis_small] = bounds_with_pool(small_pool);

  detail = fmt("m=n^2: DIS %.4f vs TND %.4f; m=n: DIS %.4f vs TND %.4f", dis_big, tnd_big,
               dis_small, tnd_small);
  const bool big_pool_wins = dis_big < tnd_big;
  const bool small_pool_flips = dis_small >= tnd_small || (tnd_small - dis_small) < 0.02;
  return big_pool_wins && small_pool_flips;
}

bool criterion_reduced_bagging(std::string& detail) {
  const auto full = make_blobs(3000, 6, 2, 0.5, 777);
  double tnd_full = 0.0, tnd_reduced = 0.0, loss_full = 0.0, loss_reduced = 0.0;
  const std::size_t seeds = 10;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const auto rf = run_forest(full, 100, BaggingMode::Full, derive_seed(31, seed), false);
    const auto rr = run_forest(full, 100, BaggingMode::Reduced, derive_seed(31, seed), false);
    tnd_full += rf.tnd_kl_uniform;
    tnd_reduced += rr.tnd_kl_uniform;
    loss_full += rf.test_loss_uniform;
    loss_reduced += rr.test_loss_uniform;
  }
  tnd_full /= seeds;
  tnd_reduced /= seeds;
  loss_full /= seeds;
  loss_reduced /= seeds;
  detail = fmt("mean TND %.4f (reduced) vs %.4f (full); mean test loss %.4f vs %.4f", tnd_reduced,
               tnd_full, loss_reduced, loss_full);
  return tnd_reduced <= tnd_full && loss_reduced - loss_full <= 0.02;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> check;
  };
  const std::vector<Criterion> criteria{
      {1, "kl inversion residuals", criterion_kl_inversion},
      {2, "multiclass second-moment identity", criterion_second_moment_identity},
      {3, "binary tandem-disagreement identity", criterion_tandem_dis_identity},
      {4, "oracle regime reference values", criterion_regimes},
      {5, "oracle C-bound equivalence", criterion_cbound_equivalence},
      {6, "oracle CTD never above TND", criterion_ctd_vs_tnd},
      {7, "tandem matrix spectra", criterion_psd},
      {8, "softmax gradient checks", criterion_gradients},
      {9, "closed-form lambda and gamma optimality", criterion_closed_forms},
      {10, "optimizer monotonicity", criterion_monotone_traces},
      {11, "statistical validity of the tandem bound", criterion_statistical_validity},
      {12, "optimized-weight test-loss ratios", criterion_optimization_ratios},
      {13, "unlabeled-pool disagreement advantage", criterion_unlabeled_dis},
      {14, "reduced versus full bagging", criterion_reduced_bagging},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    std::printf("[%s] criterion %2d: %s (%s) [%.1fs]\n", ok ? "PASS" : "FAIL", criterion.id,
                criterion.name, detail.c_str(), static_cast<double>(elapsed.count()) / 1000.0);
    std::fflush(stdout);
    failures += !ok;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
