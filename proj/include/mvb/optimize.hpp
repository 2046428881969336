#ifndef MVB_OPTIMIZE_HPP
#define MVB_OPTIMIZE_HPP

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "mvb/bounds.hpp"
#include "mvb/losses.hpp"

namespace mvb {

// Closed-form minimizer of the lambda-form bound over lambda given the
// aggregated empirical loss and complexity numerator kl_term:
//   lambda = 2 / (sqrt(2 n loss / kl_term + 1) + 1)
double optimal_lambda(double loss_hat, std::size_t n, double kl_term);

// Closed-form minimizer of the disagreement term over gamma:
//   gamma = sqrt((4 KL + ln(16 m / delta^2)) / (m dis_hat)), dis_hat > 0.
double optimal_gamma(double dis_hat, std::size_t m, double kl_rho_pi, double delta);

// Gradient of f(rho) = rho'T rho + (2/(lambda n)) KL(rho||pi) with respect
// to rho. log_rho carries ln(rho) so that underflowed coordinates stay finite.
std::vector<double> grad_tnd(const std::vector<double>& rho, const std::vector<double>& log_rho,
                             const DMatrix& tandem, double lambda, std::size_t n,
                             const std::vector<double>& pi);

// Gradient of f(rho) = 2a E_rho[gibbs] - b rho'D rho + 2c KL(rho||pi) with
// a = 1/(1-lambda/2), b = 1-gamma/2, c = 1/(lambda(1-lambda/2)n) + 1/(gamma m).
std::vector<double> grad_dis(const std::vector<double>& rho, const std::vector<double>& log_rho,
                             const std::vector<double>& gibbs, const DMatrix& dis, double lambda,
                             double gamma, std::size_t n, std::size_t m,
                             const std::vector<double>& pi);

// Pullback of a rho-gradient through the softmax parametrization.
std::vector<double> softmax_pullback(const std::vector<double>& rho,
                                     const std::vector<double>& grad);

void softmax(const std::vector<double>& tilde, std::vector<double>& rho,
             std::vector<double>& log_rho);

// iRProp+ per-coordinate state. eta+ = 1.2, eta- = 0.5, step sizes start at
// 0.1 and stay within [1e-6, 50].
struct IRpropState {
  std::vector<double> step;
  std::vector<double> prev_grad;
  std::vector<double> prev_delta;

  explicit IRpropState(std::size_t dim);
};

// One iRProp+ update of w in place. objective/prev_objective refer to the
// current and previous iterate; a coordinate whose gradient flipped sign is
// reverted if the objective got worse.
void irprop_step(IRpropState& state, std::vector<double>& w, const std::vector<double>& grad,
                 double objective, double prev_objective);

struct OptimizeResult {
  Posterior rho_star;
  double lambda = 0.0;
  double gamma = 0.0;
  std::vector<double> trace;  // accepted lambda-form bound per outer iteration
  std::size_t outer_iterations = 0;
  bool converged = false;
  double initial_lambda_bound = 0.0;
  double final_lambda_bound = 0.0;
  double final_kl_bound = 0.0;
};

// Alternating minimization: iRProp+ on softmax-parametrized rho until the
// lambda-form bound stalls for 10 iterations, then a closed-form lambda (and
// gamma) update; stops when the accepted bound improves by less than 1e-9 or
// after 10^4 outer iterations. The reported final bound is recomputed in kl
// form. The seed parameter is reserved; the procedure starts from uniform rho
// and is deterministic.
OptimizeResult minimize_tnd(const LossStats& stats, const Posterior& prior, double delta,
                            std::uint64_t seed);
OptimizeResult minimize_dis(const LossStats& stats, const Posterior& prior, double delta,
                            std::uint64_t seed);

// First-order objective via fully closed-form alternation: lambda as above and
// rho(h) proportional to pi(h) exp(-lambda n gibbs[h]).
OptimizeResult minimize_fo(const LossStats& stats, const Posterior& prior, double delta,
                           std::uint64_t seed);

nlohmann::json optimize_result_to_json(const OptimizeResult& result);

}  // namespace mvb

#endif  // MVB_OPTIMIZE_HPP
