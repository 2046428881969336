#ifndef MVB_DATASET_HPP
#define MVB_DATASET_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvb/common.hpp"

namespace mvb {

// Dense row-major feature block shared by datasets and unlabeled pools.
struct FeatureMatrix {
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * n_features + j]; }
  const double* row(std::size_t i) const { return values.data() + i * n_features; }
};

// Labeled samples with labels remapped to 0..n_classes-1. class_names records
// the remap bijection: class_names[k] is the canonical original label of
// class k, sorted ascending (numerically when all labels are numeric,
// lexicographically otherwise).
struct Dataset {
  FeatureMatrix X;
  std::vector<std::int32_t> labels;
  int n_classes = 0;
  std::vector<std::string> class_names;

  std::size_t n_samples() const { return X.n_samples; }
  std::size_t n_features() const { return X.n_features; }
  void validate() const;
};

struct SplitSpec {
  double test_fraction = 0.2;
  double labeled_fraction = 1.0;
  std::uint64_t seed = 0;
};

Dataset parse_libsvm(std::string_view text);
Dataset parse_csv(std::string_view text, std::size_t label_column);

std::string write_libsvm(const Dataset& ds);
std::string write_csv(const Dataset& ds);  // features first, label last

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, const SplitSpec& spec);

struct UnlabeledSplit {
  Dataset labeled;
  FeatureMatrix unlabeled;
};
UnlabeledSplit split_unlabeled(const Dataset& ds, double labeled_fraction, std::uint64_t seed);

std::uint64_t dataset_hash(const Dataset& ds);

}  // namespace mvb

#endif  // MVB_DATASET_HPP
