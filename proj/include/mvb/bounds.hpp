#ifndef MVB_BOUNDS_HPP
#define MVB_BOUNDS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvb/losses.hpp"

namespace mvb {

// kl(p||q) between Bernoulli(p) and Bernoulli(q), nats. Returns +inf when
// q is 0 or 1 and p does not match.
double kl_bernoulli(double p, double q);

// max{q in [p,1] : kl(p||q) <= eps}, by bisection run to floating-point
// collapse (at most 100 halvings). The returned point satisfies
// kl(p, result) <= eps.
double kl_inv_upper(double p, double eps);

// min{q in [0,p] : kl(p||q) <= eps}, mirrored contract.
double kl_inv_lower(double p, double eps);

enum class BoundForm { Kl, Lambda };

struct BoundConfig {
  double delta = 0.05;
  std::optional<double> lambda;
  std::optional<double> gamma;
  void validate() const;
};

// One computed bound. Values are reported raw, never clamped from above;
// vacuous marks compositions whose validity preconditions failed (the value
// is then +inf and renders as ">1").
struct BoundValue {
  double value = 0.0;
  bool exceeds_one = false;
  bool vacuous = false;
  BoundForm form = BoundForm::Kl;
  double lambda = 0.0;  // lambda/gamma are meaningful only for Lambda-form entries
  double gamma = 0.0;
};

BoundValue fo_bound(double gibbs_hat, double kl_rho_pi, std::size_t n, double delta,
                    BoundForm form = BoundForm::Kl, double lambda = 0.0);

BoundValue tnd_bound(double tandem_hat, double kl_rho_pi, std::size_t n, double delta,
                     BoundForm form = BoundForm::Kl, double lambda = 0.0);

// Binary only; n is the smallest first-order validation set, m the
// disagreement sample count. delta is split across the two estimates.
BoundValue dis_bound(double gibbs_hat, double dis_hat, double kl_rho_pi, std::size_t n,
                     std::size_t m, double delta, int n_classes,
                     BoundForm form = BoundForm::Kl, double lambda = 0.0, double gamma = 0.0);

// Chebyshev-Cantelli style tandem composition at delta/2 per quantity. The
// upper Gibbs bound must stay below 1/2 for validity.
BoundValue ctd_bound(double gibbs_hat, double tandem_hat, double kl_rho_pi, std::size_t n_first,
                     std::size_t n_pair, double delta);

BoundValue c1_bound(double gibbs_hat, double dis_hat, double kl_rho_pi, std::size_t n_first,
                    std::size_t m, double delta, int n_classes);

BoundValue c2_bound(double tandem_hat, double dis_hat, double kl_rho_pi, std::size_t n_pair,
                    std::size_t m, double delta, int n_classes);

struct OracleBounds {
  double fo = 0.0;
  double tnd = 0.0;
  double dis = 0.0;
  double ctd = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  bool ctd_valid = false;
};

// Direct formula evaluation on exact population quantities, no confidence
// terms. dis/c1/c2 carry binary semantics.
OracleBounds oracle_bounds(const OracleStats& stats, const Posterior& post);

enum class BoundKind { FO, TND, DIS, CTD, C1, C2 };

std::string bound_kind_name(BoundKind kind);
BoundKind bound_kind_from_name(const std::string& name);

struct BoundReportEntry {
  BoundKind kind = BoundKind::FO;
  BoundValue value;
  std::string delta_allocation;
};

struct BoundReport {
  std::vector<BoundReportEntry> entries;
  double gibbs_hat = 0.0;
  double tandem_hat = 0.0;
  double dis_hat = 0.0;
  double kl_rho_pi = 0.0;
  std::size_t n_min_first = 0;
  std::size_t n_min_pair = 0;
  std::size_t m_min = 0;
  double delta = 0.05;
};

// kl-form report for every requested bound. Requesting DIS/C1/C2 on
// multiclass statistics is an error.
BoundReport make_bound_report(const LossStats& stats, const Posterior& post, double delta,
                              const std::vector<BoundKind>& kinds);

nlohmann::json bound_report_to_json(const BoundReport& report);

}  // namespace mvb

#endif  // MVB_BOUNDS_HPP
