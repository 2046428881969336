#include "mvb/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvb {

namespace {

constexpr double kEtaPlus = 1.2;
constexpr double kEtaMinus = 0.5;
constexpr double kStepInit = 0.1;
constexpr double kStepMin = 1e-6;
constexpr double kStepMax = 50.0;
constexpr int kStallLimit = 10;
constexpr double kOuterTolerance = 1e-9;
constexpr std::size_t kOuterCap = 10000;
constexpr std::size_t kInnerCap = 100000;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double kl_against_prior(const std::vector<double>& rho, const std::vector<double>& log_rho,
                        const std::vector<double>& pi) {
  double kl = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] > 0.0) kl += rho[i] * (log_rho[i] - std::log(pi[i]));
  }
  return std::max(kl, 0.0);
}

double quadratic_form(const DMatrix& a, const std::vector<double>& x) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) inner += a.at(i, j) * x[j];
    out += x[i] * inner;
  }
  return out;
}

void check_prior(const std::vector<double>& pi) {
  double sum = 0.0;
  for (double p : pi) {
    if (!(p > 0.0)) throw InputError("softmax optimization needs a strictly positive prior");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-10) throw InputError("prior does not sum to one");
}

}  // namespace

double optimal_lambda(double loss_hat, std::size_t n, double kl_term) {
  if (!(loss_hat >= 0.0)) throw InputError("loss must be nonnegative");
  if (!(kl_term > 0.0)) throw InputError("complexity term must be positive");
  return 2.0 / (std::sqrt(2.0 * static_cast<double>(n) * loss_hat / kl_term + 1.0) + 1.0);
}

double optimal_gamma(double dis_hat, std::size_t m, double kl_rho_pi, double delta) {
  if (!(dis_hat > 0.0)) throw InputError("gamma is undefined for zero disagreement");
  if (m < 1) throw InputError("m must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0,1)");
  const double md = static_cast<double>(m);
  return std::sqrt((4.0 * kl_rho_pi + std::log(16.0 * md / (delta * delta))) / (md * dis_hat));
}

void softmax(const std::vector<double>& tilde, std::vector<double>& rho,
             std::vector<double>& log_rho) {
  const std::size_t m = tilde.size();
  rho.resize(m);
  log_rho.resize(m);
  double max_val = -kInf;
  for (double t : tilde) max_val = std::max(max_val, t);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += std::exp(tilde[i] - max_val);
  const double log_sum = std::log(sum);
  for (std::size_t i = 0; i < m; ++i) {
    log_rho[i] = tilde[i] - max_val - log_sum;
    rho[i] = std::exp(log_rho[i]);
  }
}

std::vector<double> grad_tnd(const std::vector<double>& rho, const std::vector<double>& log_rho,
                             const DMatrix& tandem, double lambda, std::size_t n,
                             const std::vector<double>& pi) {
  const std::size_t m = rho.size();
  std::vector<double> grad(m);
  const double c = 1.0 / (lambda * static_cast<double>(n));
  for (std::size_t h = 0; h < m; ++h) {
    double inner = 0.0;
    for (std::size_t g = 0; g < m; ++g) inner += tandem.at(h, g) * rho[g];
    grad[h] = 2.0 * (inner + c * (1.0 + log_rho[h] - std::log(pi[h])));
  }
  return grad;
}

std::vector<double> grad_dis(const std::vector<double>& rho, const std::vector<double>& log_rho,
                             const std::vector<double>& gibbs, const DMatrix& dis, double lambda,
                             double gamma, std::size_t n, std::size_t m,
                             const std::vector<double>& pi) {
  const std::size_t dim = rho.size();
  std::vector<double> grad(dim);
  const double a = 1.0 / (1.0 - lambda / 2.0);
  const double b = 1.0 - gamma / 2.0;
  const double c = 1.0 / (lambda * (1.0 - lambda / 2.0) * static_cast<double>(n)) +
                   1.0 / (gamma * static_cast<double>(m));
  for (std::size_t h = 0; h < dim; ++h) {
    double inner = 0.0;
    for (std::size_t g = 0; g < dim; ++g) inner += dis.at(h, g) * rho[g];
    grad[h] = 2.0 * (a * gibbs[h] - b * inner + c * (1.0 + log_rho[h] - std::log(pi[h])));
  }
  return grad;
}

std::vector<double> softmax_pullback(const std::vector<double>& rho,
                                     const std::vector<double>& grad) {
  double mean = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) mean += rho[i] * grad[i];
  std::vector<double> out(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) out[i] = rho[i] * (grad[i] - mean);
  return out;
}

IRpropState::IRpropState(std::size_t dim)
    : step(dim, kStepInit), prev_grad(dim, 0.0), prev_delta(dim, 0.0) {}

void irprop_step(IRpropState& state, std::vector<double>& w, const std::vector<double>& grad,
                 double objective, double prev_objective) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double prod = state.prev_grad[i] * grad[i];
    if (prod > 0.0) {
      state.step[i] = std::min(state.step[i] * kEtaPlus, kStepMax);
      const double delta = -sign(grad[i]) * state.step[i];
      w[i] += delta;
      state.prev_delta[i] = delta;
      state.prev_grad[i] = grad[i];
    } else if (prod < 0.0) {
      state.step[i] = std::max(state.step[i] * kEtaMinus, kStepMin);
      if (objective > prev_objective) w[i] -= state.prev_delta[i];
      state.prev_delta[i] = 0.0;
      state.prev_grad[i] = 0.0;
    } else {
      const double delta = -sign(grad[i]) * state.step[i];
      w[i] += delta;
      state.prev_delta[i] = delta;
      state.prev_grad[i] = grad[i];
    }
  }
}

namespace {

struct TndEval {
  const DMatrix* tandem;
  const std::vector<double>* pi;
  std::size_t n;
  double delta;

  double bound(const std::vector<double>& rho, const std::vector<double>& log_rho,
               double lambda) const {
    const double t = quadratic_form(*tandem, rho);
    const double kl = kl_against_prior(rho, log_rho, *pi);
    return tnd_bound(std::min(t, 1.0), kl, n, delta, BoundForm::Lambda, lambda).value;
  }
  double objective(const std::vector<double>& rho, const std::vector<double>& log_rho,
                   double lambda) const {
    return quadratic_form(*tandem, rho) +
           2.0 / (lambda * static_cast<double>(n)) * kl_against_prior(rho, log_rho, *pi);
  }
  double update_lambda(const std::vector<double>& rho, const std::vector<double>& log_rho) const {
    const double t = quadratic_form(*tandem, rho);
    const double kl = kl_against_prior(rho, log_rho, *pi);
    const double kl_term = 2.0 * kl + std::log(2.0 * std::sqrt(static_cast<double>(n)) / delta);
    return optimal_lambda(t, n, kl_term);
  }
};

struct DisEval {
  const std::vector<double>* gibbs;
  const DMatrix* dis;
  const std::vector<double>* pi;
  std::size_t n;
  std::size_t m;
  double delta;
  int n_classes;

  double bound(const std::vector<double>& rho, const std::vector<double>& log_rho, double lambda,
               double gamma) const {
    double g = 0.0;
    for (std::size_t h = 0; h < rho.size(); ++h) g += rho[h] * (*gibbs)[h];
    const double d = quadratic_form(*dis, rho);
    const double kl = kl_against_prior(rho, log_rho, *pi);
    return dis_bound(std::min(g, 1.0), std::clamp(d, 0.0, 1.0), kl, n, m, delta, n_classes,
                     BoundForm::Lambda, lambda, gamma)
        .value;
  }
  double objective(const std::vector<double>& rho, const std::vector<double>& log_rho,
                   double lambda, double gamma) const {
    double g = 0.0;
    for (std::size_t h = 0; h < rho.size(); ++h) g += rho[h] * (*gibbs)[h];
    const double d = quadratic_form(*dis, rho);
    const double kl = kl_against_prior(rho, log_rho, *pi);
    const double a = 1.0 / (1.0 - lambda / 2.0);
    const double b = 1.0 - gamma / 2.0;
    const double c = 1.0 / (lambda * (1.0 - lambda / 2.0) * static_cast<double>(n)) +
                     1.0 / (gamma * static_cast<double>(m));
    return 2.0 * a * g - b * d + 2.0 * c * kl;
  }
};

}  // namespace

OptimizeResult minimize_tnd(const LossStats& stats, const Posterior& prior, double delta,
                            std::uint64_t /*seed*/) {
  prior.validate();
  check_prior(prior.pi);
  if (prior.size() != stats.size()) throw InputError("prior length does not match statistics");
  if (stats.n_min_pair < 1) throw InputError("tandem statistics need a positive sample count");

  const std::size_t m = stats.size();
  TndEval eval{&stats.tandem, &prior.pi, stats.n_min_pair, delta};

  std::vector<double> tilde(m, 0.0), rho, log_rho;
  softmax(tilde, rho, log_rho);
  double lambda = eval.update_lambda(rho, log_rho);
  double accepted = eval.bound(rho, log_rho, lambda);
  std::vector<double> best_tilde = tilde;
  double best_lambda = lambda;

  OptimizeResult result;
  result.initial_lambda_bound = accepted;
  result.trace.push_back(accepted);

  for (std::size_t outer = 0; outer < kOuterCap; ++outer) {
    ++result.outer_iterations;
    IRpropState state(m);
    double prev_obj = kInf;
    int stall = 0;
    double inner_best = eval.bound(rho, log_rho, lambda);
    for (std::size_t inner = 0; inner < kInnerCap; ++inner) {
      const double obj = eval.objective(rho, log_rho, lambda);
      const auto grad = softmax_pullback(rho, grad_tnd(rho, log_rho, stats.tandem, lambda,
                                                       stats.n_min_pair, prior.pi));
      irprop_step(state, tilde, grad, obj, prev_obj);
      prev_obj = obj;
      softmax(tilde, rho, log_rho);
      const double b = eval.bound(rho, log_rho, lambda);
      if (b < inner_best) {
        inner_best = b;
        stall = 0;
        if (b < accepted) {
          accepted = b;
          best_tilde = tilde;
          best_lambda = lambda;
        }
      } else if (++stall >= kStallLimit) {
        break;
      }
    }

    tilde = best_tilde;
    softmax(tilde, rho, log_rho);
    const double new_lambda = eval.update_lambda(rho, log_rho);
    const double b = eval.bound(rho, log_rho, new_lambda);
    if (b < accepted) {
      accepted = b;
      best_lambda = new_lambda;
    }
    lambda = best_lambda;
    const double prev_accepted = result.trace.back();
    result.trace.push_back(accepted);
    if (prev_accepted - accepted < kOuterTolerance) {
      result.converged = true;
      break;
    }
  }

  softmax(best_tilde, rho, log_rho);
  result.rho_star = Posterior::from_weights(rho, prior.pi);
  result.lambda = best_lambda;
  result.gamma = 0.0;
  result.final_lambda_bound = accepted;
  const double t = quadratic_form(stats.tandem, rho);
  const double kl = kl_against_prior(rho, log_rho, prior.pi);
  result.final_kl_bound =
      tnd_bound(std::min(t, 1.0), kl, stats.n_min_pair, delta).value;
  return result;
}

OptimizeResult minimize_dis(const LossStats& stats, const Posterior& prior, double delta,
                            std::uint64_t /*seed*/) {
  prior.validate();
  check_prior(prior.pi);
  if (prior.size() != stats.size()) throw InputError("prior length does not match statistics");
  if (stats.n_classes != 2) throw InputError("disagreement optimization is binary only");
  if (stats.n_min_first < 1 || stats.m_min < 1)
    throw InputError("statistics need positive sample counts");

  const std::size_t m = stats.size();
  DisEval eval{&stats.gibbs, &stats.disagreement, &prior.pi,
               stats.n_min_first, stats.m_min, delta, stats.n_classes};

  std::vector<double> tilde(m, 0.0), rho, log_rho;
  softmax(tilde, rho, log_rho);

  auto lambda_for = [&](const std::vector<double>& r, const std::vector<double>& lr) {
    double g = 0.0;
    for (std::size_t h = 0; h < r.size(); ++h) g += r[h] * stats.gibbs[h];
    const double kl = kl_against_prior(r, lr, prior.pi);
    const double kl_term =
        kl + std::log(4.0 * std::sqrt(static_cast<double>(stats.n_min_first)) / delta);
    return optimal_lambda(g, stats.n_min_first, kl_term);
  };
  auto gamma_for = [&](const std::vector<double>& r, const std::vector<double>& lr,
                       double fallback) {
    const double d = quadratic_form(stats.disagreement, r);
    if (!(d > 0.0)) return fallback;  // undefined; retain the current value
    return optimal_gamma(d, stats.m_min, kl_against_prior(r, lr, prior.pi), delta);
  };

  double lambda = lambda_for(rho, log_rho);
  double gamma = gamma_for(rho, log_rho, 1.0);
  double accepted = eval.bound(rho, log_rho, lambda, gamma);
  std::vector<double> best_tilde = tilde;
  double best_lambda = lambda;
  double best_gamma = gamma;

  OptimizeResult result;
  result.initial_lambda_bound = accepted;
  result.trace.push_back(accepted);

  for (std::size_t outer = 0; outer < kOuterCap; ++outer) {
    ++result.outer_iterations;
    IRpropState state(m);
    double prev_obj = kInf;
    int stall = 0;
    double inner_best = eval.bound(rho, log_rho, lambda, gamma);
    for (std::size_t inner = 0; inner < kInnerCap; ++inner) {
      const double obj = eval.objective(rho, log_rho, lambda, gamma);
      const auto grad = softmax_pullback(
          rho, grad_dis(rho, log_rho, stats.gibbs, stats.disagreement, lambda, gamma,
                        stats.n_min_first, stats.m_min, prior.pi));
      irprop_step(state, tilde, grad, obj, prev_obj);
      prev_obj = obj;
      softmax(tilde, rho, log_rho);
      const double b = eval.bound(rho, log_rho, lambda, gamma);
      if (b < inner_best) {
        inner_best = b;
        stall = 0;
        if (b < accepted) {
          accepted = b;
          best_tilde = tilde;
          best_lambda = lambda;
          best_gamma = gamma;
        }
      } else if (++stall >= kStallLimit) {
        break;
      }
    }

    tilde = best_tilde;
    softmax(tilde, rho, log_rho);
    const double new_lambda = lambda_for(rho, log_rho);
    const double new_gamma = gamma_for(rho, log_rho, best_gamma);
    const double b = eval.bound(rho, log_rho, new_lambda, new_gamma);
    if (b < accepted) {
      accepted = b;
      best_lambda = new_lambda;
      best_gamma = new_gamma;
    }
    lambda = best_lambda;
    gamma = best_gamma;
    const double prev_accepted = result.trace.back();
    result.trace.push_back(accepted);
    if (prev_accepted - accepted < kOuterTolerance) {
      result.converged = true;
      break;
    }
  }

  softmax(best_tilde, rho, log_rho);
  result.rho_star = Posterior::from_weights(rho, prior.pi);
  result.lambda = best_lambda;
  result.gamma = best_gamma;
  result.final_lambda_bound = accepted;
  double g = 0.0;
  for (std::size_t h = 0; h < m; ++h) g += rho[h] * stats.gibbs[h];
  const double d = quadratic_form(stats.disagreement, rho);
  const double kl = kl_against_prior(rho, log_rho, prior.pi);
  result.final_kl_bound = dis_bound(std::min(g, 1.0), std::clamp(d, 0.0, 1.0), kl,
                                    stats.n_min_first, stats.m_min, delta, stats.n_classes)
                              .value;
  return result;
}

OptimizeResult minimize_fo(const LossStats& stats, const Posterior& prior, double delta,
                           std::uint64_t /*seed*/) {
  prior.validate();
  check_prior(prior.pi);
  if (prior.size() != stats.size()) throw InputError("prior length does not match statistics");
  if (stats.n_min_first < 1) throw InputError("statistics need a positive sample count");

  const std::size_t m = stats.size();
  const std::size_t n = stats.n_min_first;
  const double ln_term = std::log(2.0 * std::sqrt(static_cast<double>(n)) / delta);

  std::vector<double> rho(m, 1.0 / static_cast<double>(m));
  std::vector<double> log_rho(m, -std::log(static_cast<double>(m)));

  auto gibbs_mean = [&](const std::vector<double>& r) {
    double g = 0.0;
    for (std::size_t h = 0; h < m; ++h) g += r[h] * stats.gibbs[h];
    return g;
  };
  auto bound_at = [&](const std::vector<double>& r, const std::vector<double>& lr, double lam) {
    return fo_bound(std::min(gibbs_mean(r), 1.0), kl_against_prior(r, lr, prior.pi), n, delta,
                    BoundForm::Lambda, lam)
        .value;
  };

  double lambda = optimal_lambda(gibbs_mean(rho), n, kl_against_prior(rho, log_rho, prior.pi) + ln_term);
  double accepted = bound_at(rho, log_rho, lambda);
  std::vector<double> best_rho = rho, best_log_rho = log_rho;
  double best_lambda = lambda;

  OptimizeResult result;
  result.initial_lambda_bound = accepted;
  result.trace.push_back(accepted);

  for (std::size_t outer = 0; outer < kOuterCap; ++outer) {
    ++result.outer_iterations;
    // exact block minimizer over rho for the current lambda
    std::vector<double> score(m);
    double max_score = -kInf;
    for (std::size_t h = 0; h < m; ++h) {
      score[h] = std::log(prior.pi[h]) - lambda * static_cast<double>(n) * stats.gibbs[h];
      max_score = std::max(max_score, score[h]);
    }
    double z = 0.0;
    for (std::size_t h = 0; h < m; ++h) z += std::exp(score[h] - max_score);
    const double log_z = std::log(z);
    for (std::size_t h = 0; h < m; ++h) {
      log_rho[h] = score[h] - max_score - log_z;
      rho[h] = std::exp(log_rho[h]);
    }
    lambda = optimal_lambda(gibbs_mean(rho), n, kl_against_prior(rho, log_rho, prior.pi) + ln_term);

    const double b = bound_at(rho, log_rho, lambda);
    if (b < accepted) {
      accepted = b;
      best_rho = rho;
      best_log_rho = log_rho;
      best_lambda = lambda;
    }
    const double prev_accepted = result.trace.back();
    result.trace.push_back(accepted);
    if (prev_accepted - accepted < kOuterTolerance) {
      result.converged = true;
      break;
    }
  }

  result.rho_star = Posterior::from_weights(best_rho, prior.pi);
  result.lambda = best_lambda;
  result.final_lambda_bound = accepted;
  result.final_kl_bound = fo_bound(std::min(gibbs_mean(best_rho), 1.0),
                                   kl_against_prior(best_rho, best_log_rho, prior.pi), n, delta)
                              .value;
  return result;
}

nlohmann::json optimize_result_to_json(const OptimizeResult& result) {
  return {{"rho_star", result.rho_star.rho},
          {"lambda", result.lambda},
          {"gamma", result.gamma},
          {"trace", result.trace},
          {"outer_iterations", result.outer_iterations},
          {"converged", result.converged},
          {"initial_lambda_bound", result.initial_lambda_bound},
          {"final_lambda_bound", result.final_lambda_bound},
          {"final_kl_bound", result.final_kl_bound}};
}

}  // namespace mvb
