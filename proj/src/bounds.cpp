#include "mvb/bounds.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace mvb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_unit(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string(what) + " must lie in [0,1]");
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0,1)");
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 2.0)) throw InputError("lambda must lie in (0,2)");
}

void check_binary(int n_classes) {
  if (n_classes != 2) throw InputError("this bound is defined for binary data only");
}

double ln_term(std::size_t n, double delta_share) {
  return std::log(2.0 * std::sqrt(static_cast<double>(n)) / delta_share);
}

BoundValue finish(double value, BoundForm form, double lambda = 0.0, double gamma = 0.0) {
  BoundValue bv;
  bv.value = std::max(value, 0.0);
  bv.exceeds_one = bv.value > 1.0;
  bv.form = form;
  bv.lambda = lambda;
  bv.gamma = gamma;
  return bv;
}

BoundValue vacuous(BoundForm form) {
  BoundValue bv;
  bv.value = kInf;
  bv.exceeds_one = true;
  bv.vacuous = true;
  bv.form = form;
  return bv;
}

}  // namespace

double kl_bernoulli(double p, double q) {
  check_unit(p, "p");
  check_unit(q, "q");
  if (q <= 0.0) return p > 0.0 ? kInf : 0.0;
  if (q >= 1.0) return p < 1.0 ? kInf : 0.0;
  double s = 0.0;
  if (p > 0.0) s += p * std::log(p / q);
  if (p < 1.0) s += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return std::max(s, 0.0);
}

double kl_inv_upper(double p, double eps) {
  check_unit(p, "p");
  if (!(eps >= 0.0)) throw InputError("eps must be nonnegative");
  if (p >= 1.0) return 1.0;
  if (eps == 0.0) return p;
  const double q_max = std::nextafter(1.0, 0.0);
  if (kl_bernoulli(p, q_max) <= eps) return 1.0;

  // Bisect on ln(1-q): kl diverges as q -> 1, so the root needs relative
  // resolution in 1-q rather than absolute resolution in q.
  double s_hi = std::log1p(-p);         // q = p, kl = 0
  double s_lo = std::log(1.0 - q_max);  // kl > eps (checked above)
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (s_lo + s_hi);
    if (mid <= s_lo || mid >= s_hi) break;
    (kl_bernoulli(p, 1.0 - std::exp(mid)) <= eps ? s_hi : s_lo) = mid;
  }
  return std::max(1.0 - std::exp(s_hi), p);
}

double kl_inv_lower(double p, double eps) {
  check_unit(p, "p");
  if (!(eps >= 0.0)) throw InputError("eps must be nonnegative");
  if (p <= 0.0) return 0.0;
  if (eps == 0.0) return p;
  const double q_min = 1e-320;
  if (kl_bernoulli(p, q_min) <= eps) return q_min;

  // Bisect on ln(q) for relative resolution near zero.
  double t_lo = std::log(q_min);  // kl > eps (checked above)
  double t_hi = std::log(p);      // q = p, kl = 0
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    if (mid <= t_lo || mid >= t_hi) break;
    (kl_bernoulli(p, std::exp(mid)) <= eps ? t_hi : t_lo) = mid;
  }
  return std::min(std::exp(t_hi), p);
}

void BoundConfig::validate() const {
  check_delta(delta);
  if (lambda) check_lambda(*lambda);
  if (gamma && !(*gamma > 0.0)) throw InputError("gamma must be positive");
}

BoundValue fo_bound(double gibbs_hat, double kl_rho_pi, std::size_t n, double delta,
                    BoundForm form, double lambda) {
  check_unit(gibbs_hat, "gibbs_hat");
  check_delta(delta);
  if (n < 1) throw InputError("n must be positive");
  const double complexity = kl_rho_pi + ln_term(n, delta);
  if (form == BoundForm::Kl) {
    return finish(2.0 * kl_inv_upper(gibbs_hat, complexity / static_cast<double>(n)), form);
  }
  check_lambda(lambda);
  const double value = 2.0 * (gibbs_hat / (1.0 - lambda / 2.0) +
                              complexity / (lambda * (1.0 - lambda / 2.0) * static_cast<double>(n)));
  return finish(value, form, lambda);
}

BoundValue tnd_bound(double tandem_hat, double kl_rho_pi, std::size_t n, double delta,
                     BoundForm form, double lambda) {
  check_unit(tandem_hat, "tandem_hat");
  check_delta(delta);
  if (n < 1) throw InputError("n must be positive");
  const double complexity = 2.0 * kl_rho_pi + ln_term(n, delta);
  if (form == BoundForm::Kl) {
    return finish(4.0 * kl_inv_upper(tandem_hat, complexity / static_cast<double>(n)), form);
  }
  check_lambda(lambda);
  const double value = 4.0 * (tandem_hat / (1.0 - lambda / 2.0) +
                              complexity / (lambda * (1.0 - lambda / 2.0) * static_cast<double>(n)));
  return finish(value, form, lambda);
}

BoundValue dis_bound(double gibbs_hat, double dis_hat, double kl_rho_pi, std::size_t n,
                     std::size_t m, double delta, int n_classes, BoundForm form, double lambda,
                     double gamma) {
  check_binary(n_classes);
  check_unit(gibbs_hat, "gibbs_hat");
  check_unit(dis_hat, "dis_hat");
  check_delta(delta);
  if (n < 1 || m < 1) throw InputError("n and m must be positive");
  // delta/2 each for the loss and disagreement estimates
  const double loss_complexity = kl_rho_pi + ln_term(n, delta / 2.0);
  const double dis_complexity = 2.0 * kl_rho_pi + ln_term(m, delta / 2.0);
  if (form == BoundForm::Kl) {
    const double ub = kl_inv_upper(gibbs_hat, loss_complexity / static_cast<double>(n));
    const double lb = kl_inv_lower(dis_hat, dis_complexity / static_cast<double>(m));
    return finish(4.0 * ub - 2.0 * lb, form);
  }
  check_lambda(lambda);
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  const double loss_part =
      4.0 * (gibbs_hat / (1.0 - lambda / 2.0) +
             loss_complexity / (lambda * (1.0 - lambda / 2.0) * static_cast<double>(n)));
  const double dis_part = 2.0 * ((1.0 - gamma / 2.0) * dis_hat -
                                 dis_complexity / (gamma * static_cast<double>(m)));
  return finish(loss_part - dis_part, form, lambda, gamma);
}

BoundValue ctd_bound(double gibbs_hat, double tandem_hat, double kl_rho_pi, std::size_t n_first,
                     std::size_t n_pair, double delta) {
  check_unit(gibbs_hat, "gibbs_hat");
  check_unit(tandem_hat, "tandem_hat");
  check_delta(delta);
  if (n_first < 1 || n_pair < 1) throw InputError("sample counts must be positive");
  const double eps_g = (kl_rho_pi + ln_term(n_first, delta / 2.0)) / static_cast<double>(n_first);
  const double eps_t =
      (2.0 * kl_rho_pi + ln_term(n_pair, delta / 2.0)) / static_cast<double>(n_pair);
  const double loss_upper = kl_inv_upper(gibbs_hat, eps_g);
  const double loss_lower = kl_inv_lower(gibbs_hat, eps_g);
  const double tandem_upper = kl_inv_upper(tandem_hat, eps_t);

  if (loss_upper >= 0.5) return vacuous(BoundForm::Kl);
  const double denom = tandem_upper - loss_upper + 0.25;
  if (!(denom > 0.0)) return vacuous(BoundForm::Kl);
  return finish((tandem_upper - loss_lower * loss_lower) / denom, BoundForm::Kl);
}

BoundValue c1_bound(double gibbs_hat, double dis_hat, double kl_rho_pi, std::size_t n_first,
                    std::size_t m, double delta, int n_classes) {
  check_binary(n_classes);
  check_unit(gibbs_hat, "gibbs_hat");
  check_unit(dis_hat, "dis_hat");
  check_delta(delta);
  if (n_first < 1 || m < 1) throw InputError("sample counts must be positive");
  const double loss_upper = kl_inv_upper(
      gibbs_hat, (kl_rho_pi + ln_term(n_first, delta / 2.0)) / static_cast<double>(n_first));
  const double dis_lower = kl_inv_lower(
      dis_hat, (2.0 * kl_rho_pi + ln_term(m, delta / 2.0)) / static_cast<double>(m));
  const double denom = 1.0 - 2.0 * dis_lower;
  if (!(denom > 0.0)) return vacuous(BoundForm::Kl);
  const double margin = std::max(0.0, 1.0 - 2.0 * loss_upper);
  auto bv = finish(1.0 - margin * margin / denom, BoundForm::Kl);
  bv.vacuous = margin == 0.0;
  return bv;
}

BoundValue c2_bound(double tandem_hat, double dis_hat, double kl_rho_pi, std::size_t n_pair,
                    std::size_t m, double delta, int n_classes) {
  check_binary(n_classes);
  check_unit(tandem_hat, "tandem_hat");
  check_unit(dis_hat, "dis_hat");
  check_delta(delta);
  if (n_pair < 1 || m < 1) throw InputError("sample counts must be positive");
  // three plug-ins, delta/3 each
  const double eps_t =
      (2.0 * kl_rho_pi + ln_term(n_pair, delta / 3.0)) / static_cast<double>(n_pair);
  const double eps_d = (2.0 * kl_rho_pi + ln_term(m, delta / 3.0)) / static_cast<double>(m);
  const double tandem_upper = kl_inv_upper(tandem_hat, eps_t);
  const double dis_upper = kl_inv_upper(dis_hat, eps_d);
  const double dis_lower = kl_inv_lower(dis_hat, eps_d);
  const double denom = 1.0 - 2.0 * dis_lower;
  if (!(denom > 0.0)) return vacuous(BoundForm::Kl);
  const double margin = std::max(0.0, 1.0 - (2.0 * tandem_upper + dis_upper));
  auto bv = finish(1.0 - margin * margin / denom, BoundForm::Kl);
  bv.vacuous = margin == 0.0;
  return bv;
}

OracleBounds oracle_bounds(const OracleStats& stats, const Posterior& post) {
  post.validate();
  if (post.size() != stats.size()) throw InputError("posterior length does not match statistics");
  double gibbs = 0.0;
  for (std::size_t h = 0; h < stats.size(); ++h) gibbs += post.rho[h] * stats.risks[h];
  const double tandem = aggregate_pair(stats.tandem, post);
  const double dis = aggregate_pair(stats.disagreement, post);

  OracleBounds ob;
  ob.fo = 2.0 * gibbs;
  ob.tnd = 4.0 * tandem;
  ob.dis = std::max(0.0, 4.0 * gibbs - 2.0 * dis);
  ob.ctd_valid = gibbs < 0.5;
  if (ob.ctd_valid) {
    const double denom = tandem - gibbs + 0.25;
    ob.ctd = denom > 0.0 ? std::max(0.0, (tandem - gibbs * gibbs) / denom) : kInf;
  } else {
    ob.ctd = kInf;
  }
  const double c_denom = 1.0 - 2.0 * dis;
  if (c_denom > 0.0) {
    const double m1 = 1.0 - 2.0 * gibbs;
    ob.c1 = 1.0 - m1 * m1 / c_denom;
    const double m2 = 1.0 - (2.0 * tandem + dis);
    ob.c2 = 1.0 - m2 * m2 / c_denom;
  } else {
    ob.c1 = kInf;
    ob.c2 = kInf;
  }
  return ob;
}

std::string bound_kind_name(BoundKind kind) {
  switch (kind) {
    case BoundKind::FO: return "FO";
    case BoundKind::TND: return "TND";
    case BoundKind::DIS: return "DIS";
    case BoundKind::CTD: return "CTD";
    case BoundKind::C1: return "C1";
    case BoundKind::C2: return "C2";
  }
  throw InputError("unknown bound kind");
}

BoundKind bound_kind_from_name(const std::string& name) {
  std::string up;
  for (char c : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "FO") return BoundKind::FO;
  if (up == "TND") return BoundKind::TND;
  if (up == "DIS") return BoundKind::DIS;
  if (up == "CTD") return BoundKind::CTD;
  if (up == "C1") return BoundKind::C1;
  if (up == "C2") return BoundKind::C2;
  throw InputError("unknown bound name: " + name);
}

BoundReport make_bound_report(const LossStats& stats, const Posterior& post, double delta,
                              const std::vector<BoundKind>& kinds) {
  check_delta(delta);
  BoundReport report;
  report.gibbs_hat = aggregate_first(stats, post);
  report.tandem_hat = aggregate_pair(stats.tandem, post);
  report.dis_hat = aggregate_pair(stats.disagreement, post);
  report.kl_rho_pi = kl_divergence(post);
  report.n_min_first = stats.n_min_first;
  report.n_min_pair = stats.n_min_pair;
  report.m_min = stats.m_min;
  report.delta = delta;

  for (BoundKind kind : kinds) {
    BoundReportEntry entry;
    entry.kind = kind;
    switch (kind) {
      case BoundKind::FO:
        entry.value = fo_bound(report.gibbs_hat, report.kl_rho_pi, stats.n_min_first, delta);
        entry.delta_allocation = "delta";
        break;
      case BoundKind::TND:
        entry.value = tnd_bound(report.tandem_hat, report.kl_rho_pi, stats.n_min_pair, delta);
        entry.delta_allocation = "delta";
        break;
      case BoundKind::DIS:
        entry.value = dis_bound(report.gibbs_hat, report.dis_hat, report.kl_rho_pi,
                                stats.n_min_first, stats.m_min, delta, stats.n_classes);
        entry.delta_allocation = "delta/2 per estimate";
        break;
      case BoundKind::CTD:
        entry.value = ctd_bound(report.gibbs_hat, report.tandem_hat, report.kl_rho_pi,
                                stats.n_min_first, stats.n_min_pair, delta);
        entry.delta_allocation = "delta/2 per estimate";
        break;
      case BoundKind::C1:
        entry.value = c1_bound(report.gibbs_hat, report.dis_hat, report.kl_rho_pi,
                               stats.n_min_first, stats.m_min, delta, stats.n_classes);
        entry.delta_allocation = "delta/2 per estimate";
        break;
      case BoundKind::C2:
        entry.value = c2_bound(report.tandem_hat, report.dis_hat, report.kl_rho_pi,
                               stats.n_min_pair, stats.m_min, delta, stats.n_classes);
        entry.delta_allocation = "delta/3 per estimate";
        break;
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

nlohmann::json bound_report_to_json(const BoundReport& report) {
  nlohmann::json bounds = nlohmann::json::object();
  for (const auto& entry : report.entries) {
    nlohmann::json value = entry.value.vacuous ? nlohmann::json(nullptr)
                                               : nlohmann::json(entry.value.value);
    bounds[bound_kind_name(entry.kind)] = {
        {"value", std::move(value)},
        {"exceeds_one", entry.value.exceeds_one},
        {"vacuous", entry.value.vacuous},
        {"form", entry.value.form == BoundForm::Kl ? "kl" : "lambda"},
        {"delta_allocation", entry.delta_allocation}};
  }
  return {{"bounds", std::move(bounds)},
          {"inputs",
           {{"gibbs_hat", report.gibbs_hat},
            {"tandem_hat", report.tandem_hat},
            {"dis_hat", report.dis_hat},
            {"kl_rho_pi", report.kl_rho_pi},
            {"n_min_first", report.n_min_first},
            {"n_min_pair", report.n_min_pair},
            {"m_min", report.m_min},
            {"delta", report.delta}}}};
}

}  // namespace mvb
