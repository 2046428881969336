#ifndef MVB_TOOLS_COMMANDS_HPP
#define MVB_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mvb::cli {

struct SynthOptions {
  std::string kind = "blobs";
  std::size_t n = 3000;
  std::size_t d = 6;
  int classes = 2;
  double spread = 0.8;
  std::uint64_t seed = 1;
  std::string format = "csv";
  std::string out_dir;
};

struct TrainOptions {
  std::string dataset_path;
  std::string format = "csv";
  std::optional<std::size_t> label_column;
  std::size_t trees = 100;
  std::string bagging = "full";
  std::uint64_t seed = 1;
  double test_fraction = 0.2;
  std::size_t max_features = 0;
  std::string out_dir;
};

struct BoundsOptions {
  std::string ensemble_path;
  std::string dataset_path;
  std::string format = "csv";
  std::optional<std::size_t> label_column;
  double delta = 0.05;
  std::vector<std::string> bounds;  // empty: default set for the task
  std::string out_dir;
};

struct OptimizeOptions {
  std::string ensemble_path;
  std::string dataset_path;
  std::string format = "csv";
  std::optional<std::size_t> label_column;
  double delta = 0.05;
  std::vector<std::string> objectives;  // subset of fo,tnd,dis; empty: fo,tnd
  std::string out_dir;
};

struct ExperimentOptions {
  std::string dataset_path;
  std::string format = "csv";
  std::optional<std::size_t> label_column;
  std::size_t trees = 100;
  std::string bagging = "full";  // full | reduced | both
  double delta = 0.05;
  std::uint64_t seed = 1;
  std::size_t repetitions = 1;
  double test_fraction = 0.2;
  std::vector<std::string> bounds;
  std::vector<std::string> objectives;
  std::vector<double> unlabeled_r;
  std::string out_dir;
};

int run_synth(const SynthOptions& opt);
int run_train(const TrainOptions& opt);
int run_bounds(const BoundsOptions& opt);
int run_optimize(const OptimizeOptions& opt);
int run_experiment(const ExperimentOptions& opt);

// $MVB_OUT, falling back to the current directory.
std::string default_out_dir();

}  // namespace mvb::cli

#endif
