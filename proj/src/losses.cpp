#include "mvb/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvb {

namespace {
constexpr double kSumTolerance = 1e-10;
}

void PredictionMatrix::validate() const {
  if (n_hypotheses < 1 || n_samples < 1) throw InputError("prediction matrix is empty");
  if (n_classes < 2) throw InputError("prediction matrix needs at least two classes");
  if (preds.size() != n_hypotheses * n_samples) throw InputError("prediction matrix shape mismatch");
  for (std::int32_t p : preds) {
    if (p < 0 || p >= n_classes) throw InputError("prediction out of class range");
  }
  if (!labels.empty()) {
    if (labels.size() != n_samples) throw InputError("label count does not match sample count");
    for (std::int32_t y : labels) {
      if (y < 0 || y >= n_classes) throw InputError("label out of class range");
    }
  }
}

Posterior Posterior::uniform(std::size_t m) {
  if (m < 1) throw InputError("posterior over an empty hypothesis set");
  Posterior p;
  p.rho.assign(m, 1.0 / static_cast<double>(m));
  p.pi = p.rho;
  return p;
}

Posterior Posterior::from_weights(const std::vector<double>& weights,
                                  const std::vector<double>& pi) {
  if (weights.empty() || weights.size() != pi.size())
    throw InputError("weight and prior lengths differ");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weights must be finite and nonnegative");
    sum += w;
  }
  if (!(sum > 0.0)) throw InputError("weights sum to zero");
  Posterior p;
  p.rho.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) p.rho[i] = weights[i] / sum;
  p.pi = pi;
  p.validate();
  return p;
}

void Posterior::validate() const {
  if (rho.empty() || rho.size() != pi.size()) throw InputError("posterior/prior lengths differ");
  double sr = 0.0, sp = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] >= 0.0) || !(pi[i] >= 0.0)) throw InputError("negative probability mass");
    if (rho[i] > 0.0 && pi[i] <= 0.0)
      throw InputError("prior must be positive wherever the posterior is");
    sr += rho[i];
    sp += pi[i];
  }
  if (std::abs(sr - 1.0) > kSumTolerance) throw InputError("posterior does not sum to one");
  if (std::abs(sp - 1.0) > kSumTolerance) throw InputError("prior does not sum to one");
}

double kl_divergence(const Posterior& p) {
  p.validate();
  double kl = 0.0;
  for (std::size_t i = 0; i < p.rho.size(); ++i) {
    if (p.rho[i] > 0.0) kl += p.rho[i] * std::log(p.rho[i] / p.pi[i]);
  }
  return std::max(kl, 0.0);
}

PredictionMatrix prediction_matrix(const Ensemble& ens, const FeatureMatrix& X,
                                   const std::vector<std::int32_t>* labels) {
  if (ens.trees.empty()) throw InputError("empty ensemble");
  PredictionMatrix pm;
  pm.n_hypotheses = ens.size();
  pm.n_samples = X.n_samples;
  pm.n_classes = ens.trees.front().n_classes;
  pm.preds.resize(pm.n_hypotheses * pm.n_samples);
  for (std::size_t h = 0; h < ens.size(); ++h) {
    const auto row = predict_tree(ens.trees[h], X);
    std::copy(row.begin(), row.end(), pm.preds.begin() + h * pm.n_samples);
  }
  if (labels) {
    if (labels->size() != X.n_samples) throw InputError("label count does not match sample count");
    pm.labels = *labels;
  }
  pm.validate();
  return pm;
}

std::vector<std::int32_t> mv_predict(const PredictionMatrix& pm, const Posterior& post) {
  pm.validate();
  post.validate();
  if (post.size() != pm.n_hypotheses) throw InputError("posterior length does not match matrix");

  std::vector<std::int32_t> out(pm.n_samples);
  std::vector<double> mass(static_cast<std::size_t>(pm.n_classes));
  for (std::size_t i = 0; i < pm.n_samples; ++i) {
    std::fill(mass.begin(), mass.end(), 0.0);
    for (std::size_t h = 0; h < pm.n_hypotheses; ++h) {
      mass[static_cast<std::size_t>(pm.at(h, i))] += post.rho[h];
    }
    std::size_t argmax = 0;
    for (std::size_t y = 1; y < mass.size(); ++y) {
      if (mass[y] > mass[argmax]) argmax = y;  // ties stay at the lowest class
    }
    out[i] = static_cast<std::int32_t>(argmax);
  }
  return out;
}

double mv_loss(const PredictionMatrix& pm, const Posterior& post) {
  if (!pm.has_labels()) throw InputError("majority-vote loss needs labels");
  const auto votes = mv_predict(pm, post);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < votes.size(); ++i) errors += votes[i] != pm.labels[i];
  return static_cast<double>(errors) / static_cast<double>(votes.size());
}

LossStats compute_loss_stats(const PredictionMatrix& pm,
                             const std::vector<std::vector<std::uint8_t>>& oob_masks,
                             const PredictionMatrix* unlabeled) {
  pm.validate();
  if (!pm.has_labels()) throw InputError("loss statistics need labels");
  const std::size_t m = pm.n_hypotheses;
  const std::size_t n = pm.n_samples;
  if (oob_masks.size() != m) throw InputError("mask count does not match hypothesis count");
  for (const auto& mask : oob_masks) {
    if (mask.size() != n) throw InputError("mask length does not match sample count");
  }
  if (unlabeled) {
    unlabeled->validate();
    if (unlabeled->n_hypotheses != m) throw InputError("unlabeled matrix hypothesis count mismatch");
    if (unlabeled->n_classes != pm.n_classes) throw InputError("unlabeled matrix class count mismatch");
  }

  std::vector<std::uint8_t> err(m * n);
  for (std::size_t h = 0; h < m; ++h) {
    for (std::size_t i = 0; i < n; ++i) err[h * n + i] = pm.at(h, i) != pm.labels[i];
  }

  LossStats stats;
  stats.n_classes = pm.n_classes;
  stats.gibbs.assign(m, 0.0);
  stats.tandem = DMatrix(m, m);
  stats.disagreement = DMatrix(m, m);
  stats.n_min_first = n + 1;
  stats.n_min_pair = n + 1;

  for (std::size_t h = 0; h < m; ++h) {
    std::size_t count = 0, errors = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!oob_masks[h][i]) continue;
      ++count;
      errors += err[h * n + i];
    }
    if (count == 0)
      throw ComputationError("hypothesis " + std::to_string(h) + " has an empty validation set");
    stats.gibbs[h] = static_cast<double>(errors) / static_cast<double>(count);
    stats.n_min_first = std::min(stats.n_min_first, count);
  }

  for (std::size_t h = 0; h < m; ++h) {
    for (std::size_t g = h; g < m; ++g) {
      std::size_t count = 0, both = 0, differ = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!oob_masks[h][i] || !oob_masks[g][i]) continue;
        ++count;
        both += err[h * n + i] & err[g * n + i];
        differ += pm.at(h, i) != pm.at(g, i);
      }
      if (count == 0)
        throw ComputationError(
            "hypotheses " + std::to_string(h) + " and " + std::to_string(g) +
            " share no validation samples; reduced bagging yields larger overlaps");
      const double tnd = static_cast<double>(both) / static_cast<double>(count);
      stats.tandem.at(h, g) = tnd;
      stats.tandem.at(g, h) = tnd;
      if (g != h) {
        const double dis = static_cast<double>(differ) / static_cast<double>(count);
        stats.disagreement.at(h, g) = dis;
        stats.disagreement.at(g, h) = dis;
      }
      stats.n_min_pair = std::min(stats.n_min_pair, count);
    }
  }
  stats.m_min = stats.n_min_pair;

  if (unlabeled) {
    const std::size_t nu = unlabeled->n_samples;
    for (std::size_t h = 0; h < m; ++h) {
      for (std::size_t g = h + 1; g < m; ++g) {
        std::size_t differ = 0;
        const std::int32_t* row_h = unlabeled->preds.data() + h * nu;
        const std::int32_t* row_g = unlabeled->preds.data() + g * nu;
        for (std::size_t i = 0; i < nu; ++i) differ += row_h[i] != row_g[i];
        const double dis = static_cast<double>(differ) / static_cast<double>(nu);
        stats.disagreement.at(h, g) = dis;
        stats.disagreement.at(g, h) = dis;
      }
      stats.disagreement.at(h, h) = 0.0;
    }
    stats.m_min = nu;
  }

  return stats;
}

double aggregate_first(const LossStats& stats, const Posterior& post) {
  if (post.size() != stats.size()) throw InputError("posterior length does not match statistics");
  double out = 0.0;
  for (std::size_t h = 0; h < stats.size(); ++h) out += post.rho[h] * stats.gibbs[h];
  return out;
}

double aggregate_pair(const DMatrix& matrix, const Posterior& post) {
  if (matrix.rows != matrix.cols || matrix.rows != post.size())
    throw InputError("matrix shape does not match posterior");
  double out = 0.0;
  for (std::size_t h = 0; h < matrix.rows; ++h) {
    double inner = 0.0;
    for (std::size_t g = 0; g < matrix.cols; ++g) inner += matrix.at(h, g) * post.rho[g];
    out += post.rho[h] * inner;
  }
  return out;
}

OracleStats oracle_stats(const std::vector<double>& risks, const DMatrix& tandem) {
  const std::size_t m = risks.size();
  if (m < 1) throw InputError("oracle statistics need at least one hypothesis");
  if (tandem.rows != m || tandem.cols != m) throw InputError("tandem matrix shape mismatch");
  constexpr double kTol = 1e-9;
  for (double r : risks) {
    if (!(r >= 0.0 && r <= 1.0)) throw InputError("risk out of [0,1]");
  }
  for (std::size_t h = 0; h < m; ++h) {
    if (std::abs(tandem.at(h, h) - risks[h]) > kTol)
      throw InputError("tandem diagonal must equal the per-hypothesis risk");
    for (std::size_t g = 0; g < m; ++g) {
      const double t = tandem.at(h, g);
      if (std::abs(t - tandem.at(g, h)) > kTol) throw InputError("tandem matrix is not symmetric");
      if (t < -kTol || t > std::min(risks[h], risks[g]) + kTol)
        throw InputError("tandem value inconsistent with risks");
      if (t < risks[h] + risks[g] - 1.0 - kTol)
        throw InputError("tandem value below the inclusion-exclusion floor");
    }
  }

  OracleStats os;
  os.risks = risks;
  os.tandem = tandem;
  os.disagreement = DMatrix(m, m);
  for (std::size_t h = 0; h < m; ++h) {
    for (std::size_t g = 0; g < m; ++g) {
      if (h == g) continue;
      os.disagreement.at(h, g) = std::max(0.0, risks[h] + risks[g] - 2.0 * tandem.at(h, g));
    }
  }
  return os;
}

nlohmann::json loss_stats_to_json(const LossStats& stats) {
  return {{"gibbs", stats.gibbs},
          {"tandem", stats.tandem.v},
          {"disagreement", stats.disagreement.v},
          {"matrix_order", stats.size()},
          {"n_min_first", stats.n_min_first},
          {"n_min_pair", stats.n_min_pair},
          {"m_min", stats.m_min},
          {"n_classes", stats.n_classes}};
}

}  // namespace mvb
