#include "mvb/forest.hpp"

#include <cmath>

#include "mvb/random.hpp"

namespace mvb {

std::string bagging_mode_name(BaggingMode mode) {
  return mode == BaggingMode::Full ? "full" : "reduced";
}

BaggingMode bagging_mode_from_name(const std::string& name) {
  if (name == "full") return BaggingMode::Full;
  if (name == "reduced") return BaggingMode::Reduced;
  throw InputError("unknown bagging mode: " + name);
}

BootstrapDraw bootstrap_sample(std::size_t n, std::size_t draw_count, std::uint64_t seed) {
  if (n < 1) throw InputError("bootstrap needs at least one sample");
  if (draw_count < 1) throw InputError("bootstrap needs at least one draw");
  Rng rng(seed);
  BootstrapDraw out;
  out.in_bag.reserve(draw_count);
  out.oob_mask.assign(n, 1);
  for (std::size_t i = 0; i < draw_count; ++i) {
    const auto idx = static_cast<std::size_t>(rng.below(n));
    out.in_bag.push_back(idx);
    out.oob_mask[idx] = 0;
  }
  return out;
}

Ensemble train_forest(const Dataset& data, std::size_t n_trees, BaggingMode mode,
                      std::uint64_t seed, std::size_t max_features) {
  data.validate();
  if (n_trees < 2) throw InputError("an ensemble needs at least two trees");
  const std::size_t n = data.n_samples();
  const std::size_t draw_count = mode == BaggingMode::Full ? n : (n + 1) / 2;
  if (max_features == 0)
    max_features = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.n_features()))));
  if (max_features > data.n_features()) max_features = data.n_features();

  Ensemble ens;
  ens.mode = mode;
  ens.seed = seed;
  ens.n_train = n;
  ens.max_features = max_features;
  ens.trees.reserve(n_trees);
  ens.oob_masks.reserve(n_trees);

  for (std::size_t h = 0; h < n_trees; ++h) {
    auto draw = bootstrap_sample(n, draw_count, derive_seed(seed, 2 * h));
    bool any_oob = false;
    for (auto b : draw.oob_mask) {
      if (b) {
        any_oob = true;
        break;
      }
    }
    if (!any_oob)
      throw ComputationError("tree " + std::to_string(h) +
                             " has an empty out-of-bag set; choose another seed or more data");
    ens.trees.push_back(train_tree(data, draw.in_bag, max_features, derive_seed(seed, 2 * h + 1)));
    ens.oob_masks.push_back(std::move(draw.oob_mask));
  }
  return ens;
}

nlohmann::json ensemble_to_json(const Ensemble& ens) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : ens.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& nd : t.nodes) {
      if (nd.is_leaf()) {
        nodes.push_back(nlohmann::json::array({nd.label}));
      } else {
        nodes.push_back(nlohmann::json::array({nd.feature, nd.threshold, nd.left, nd.right}));
      }
    }
    trees.push_back({{"nodes", std::move(nodes)},
                     {"n_features", t.n_features},
                     {"n_classes", t.n_classes}});
  }

  nlohmann::json masks = nlohmann::json::array();
  for (const auto& mask : ens.oob_masks) {
    std::string bits(mask.size(), '0');
    for (std::size_t i = 0; i < mask.size(); ++i) bits[i] = mask[i] ? '1' : '0';
    masks.push_back(std::move(bits));
  }

  return {{"format_version", 1},
          {"bagging_mode", bagging_mode_name(ens.mode)},
          {"seed", ens.seed},
          {"n_train", ens.n_train},
          {"max_features", ens.max_features},
          {"trees", std::move(trees)},
          {"oob_masks", std::move(masks)}};
}

Ensemble ensemble_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("format_version"))
    throw InputError("not an ensemble document");
  if (j.at("format_version").get<int>() != 1)
    throw InputError("unsupported ensemble format version");

  Ensemble ens;
  ens.mode = bagging_mode_from_name(j.at("bagging_mode").get<std::string>());
  ens.seed = j.at("seed").get<std::uint64_t>();
  ens.n_train = j.at("n_train").get<std::size_t>();
  ens.max_features = j.at("max_features").get<std::size_t>();

  for (const auto& jt : j.at("trees")) {
    Tree t;
    t.n_features = jt.at("n_features").get<std::size_t>();
    t.n_classes = jt.at("n_classes").get<int>();
    for (const auto& jn : jt.at("nodes")) {
      TreeNode nd;
      if (jn.size() == 1) {
        nd.label = jn[0].get<std::int32_t>();
      } else if (jn.size() == 4) {
        nd.feature = jn[0].get<std::int32_t>();
        nd.threshold = jn[1].get<double>();
        nd.left = jn[2].get<std::int32_t>();
        nd.right = jn[3].get<std::int32_t>();
      } else {
        throw InputError("malformed tree node");
      }
      t.nodes.push_back(nd);
    }
    if (t.nodes.empty()) throw InputError("tree without nodes");
    const auto node_count = static_cast<std::int32_t>(t.nodes.size());
    for (const TreeNode& nd : t.nodes) {
      if (nd.is_leaf()) {
        if (nd.label < 0 || nd.label >= t.n_classes) throw InputError("leaf label out of range");
      } else {
        if (nd.feature >= static_cast<std::int32_t>(t.n_features) || nd.left < 0 ||
            nd.left >= node_count || nd.right < 0 || nd.right >= node_count)
          throw InputError("tree node references are out of range");
      }
    }
    ens.trees.push_back(std::move(t));
  }

  for (const auto& jm : j.at("oob_masks")) {
    const auto bits = jm.get<std::string>();
    if (bits.size() != ens.n_train) throw InputError("out-of-bag mask length mismatch");
    std::vector<std::uint8_t> mask(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] != '0' && bits[i] != '1') throw InputError("out-of-bag mask is not a bitstring");
      mask[i] = bits[i] == '1';
    }
    ens.oob_masks.push_back(std::move(mask));
  }

  if (ens.trees.size() < 2) throw InputError("an ensemble needs at least two trees");
  if (ens.oob_masks.size() != ens.trees.size())
    throw InputError("mask count does not match tree count");
  return ens;
}

std::uint64_t ensemble_hash(const Ensemble& ens) {
  Fnv1a h;
  h.add_str(ensemble_to_json(ens).dump());
  return h.state;
}

}  // namespace mvb
