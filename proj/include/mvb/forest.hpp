#ifndef MVB_FOREST_HPP
#define MVB_FOREST_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvb/tree.hpp"

namespace mvb {

enum class BaggingMode { Full, Reduced };

std::string bagging_mode_name(BaggingMode mode);
BaggingMode bagging_mode_from_name(const std::string& name);

struct BootstrapDraw {
  std::vector<std::size_t> in_bag;     // draw order, with repeats
  std::vector<std::uint8_t> oob_mask;  // 1 = index never drawn
};

// draw_count i.i.d. uniform draws with replacement from [0, n).
BootstrapDraw bootstrap_sample(std::size_t n, std::size_t draw_count, std::uint64_t seed);

struct Ensemble {
  std::vector<Tree> trees;
  std::vector<std::vector<std::uint8_t>> oob_masks;  // M x n_train
  BaggingMode mode = BaggingMode::Full;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t max_features = 0;

  std::size_t size() const { return trees.size(); }
};

// Bagged forest: tree h draws n (full) or ceil(n/2) (reduced) samples with
// replacement using a per-tree seed derived from the master seed, and its
// out-of-bag mask is recorded. max_features = 0 selects ceil(sqrt(d)).
Ensemble train_forest(const Dataset& data, std::size_t n_trees, BaggingMode mode,
                      std::uint64_t seed, std::size_t max_features = 0);

nlohmann::json ensemble_to_json(const Ensemble& ens);
Ensemble ensemble_from_json(const nlohmann::json& j);
std::uint64_t ensemble_hash(const Ensemble& ens);

}  // namespace mvb

#endif  // MVB_FOREST_HPP
