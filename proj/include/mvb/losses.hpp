#ifndef MVB_LOSSES_HPP
#define MVB_LOSSES_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "mvb/forest.hpp"

namespace mvb {

// M x N matrix of predicted labels, one row per hypothesis, with optional
// ground-truth labels for the columns.
struct PredictionMatrix {
  std::size_t n_hypotheses = 0;
  std::size_t n_samples = 0;
  int n_classes = 0;
  std::vector<std::int32_t> preds;  // row-major
  std::vector<std::int32_t> labels;  // empty when unlabeled

  std::int32_t at(std::size_t h, std::size_t i) const { return preds[h * n_samples + i]; }
  std::int32_t& at(std::size_t h, std::size_t i) { return preds[h * n_samples + i]; }
  bool has_labels() const { return !labels.empty(); }
  void validate() const;
};

// Weight distribution rho over hypotheses together with its prior pi. Both
// must sum to one within 1e-10 and pi must be positive wherever rho is.
struct Posterior {
  std::vector<double> rho;
  std::vector<double> pi;

  static Posterior uniform(std::size_t m);
  static Posterior from_weights(const std::vector<double>& weights, const std::vector<double>& pi);
  std::size_t size() const { return rho.size(); }
  void validate() const;
};

double kl_divergence(const Posterior& p);  // KL(rho || pi), nats

// Empirical statistics over validation sets: gibbs[h] on S_h, tandem and
// disagreement on pairwise overlaps S_h & S_h' (tandem diagonal on S_h,
// disagreement diagonal 0). With an unlabeled pool, disagreement switches to
// the pool and m_min to its size.
struct LossStats {
  std::vector<double> gibbs;
  DMatrix tandem;
  DMatrix disagreement;
  std::size_t n_min_first = 0;
  std::size_t n_min_pair = 0;
  std::size_t m_min = 0;
  int n_classes = 0;

  std::size_t size() const { return gibbs.size(); }
};

PredictionMatrix prediction_matrix(const Ensemble& ens, const FeatureMatrix& X,
                                   const std::vector<std::int32_t>* labels = nullptr);

std::vector<std::int32_t> mv_predict(const PredictionMatrix& pm, const Posterior& post);
double mv_loss(const PredictionMatrix& pm, const Posterior& post);

LossStats compute_loss_stats(const PredictionMatrix& pm,
                             const std::vector<std::vector<std::uint8_t>>& oob_masks,
                             const PredictionMatrix* unlabeled = nullptr);

double aggregate_first(const LossStats& stats, const Posterior& post);
double aggregate_pair(const DMatrix& matrix, const Posterior& post);

// Exact population quantities for oracle-bound evaluation. Disagreement is
// derived under binary semantics: D(h,h') = L(h) + L(h') - 2 L(h,h').
struct OracleStats {
  std::vector<double> risks;
  DMatrix tandem;
  DMatrix disagreement;

  std::size_t size() const { return risks.size(); }
};

OracleStats oracle_stats(const std::vector<double>& risks, const DMatrix& tandem);

nlohmann::json loss_stats_to_json(const LossStats& stats);

}  // namespace mvb

#endif  // MVB_LOSSES_HPP
