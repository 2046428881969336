#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mvb/common.hpp"

using namespace mvb::cli;

int main(int argc, char** argv) {
  CLI::App app{"PAC-Bayesian risk certificates and weight optimization for majority-vote tree ensembles"};
  app.require_subcommand(1);

  SynthOptions synth;
  synth.out_dir = default_out_dir();
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--kind", synth.kind, "Generator kind (blobs)");
  synth_cmd->add_option("--n", synth.n, "Number of samples");
  synth_cmd->add_option("--d", synth.d, "Number of features");
  synth_cmd->add_option("--classes", synth.classes, "Number of classes");
  synth_cmd->add_option("--spread", synth.spread, "Class scatter around the centers");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--format", synth.format, "Output format: csv or libsvm");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory");

  TrainOptions train;
  train.out_dir = default_out_dir();
  auto* train_cmd = app.add_subcommand("train", "Train a bagged tree ensemble");
  train_cmd->add_option("--dataset", train.dataset_path, "Dataset file")->required();
  train_cmd->add_option("--format", train.format, "Dataset format: csv or libsvm");
  train_cmd->add_option("--label-column", train.label_column, "CSV label column (default: last)");
  train_cmd->add_option("--trees", train.trees, "Number of trees");
  train_cmd->add_option("--bagging", train.bagging, "Bagging mode: full or reduced");
  train_cmd->add_option("--seed", train.seed, "Master seed");
  train_cmd->add_option("--test-fraction", train.test_fraction, "Held-out test fraction");
  train_cmd->add_option("--max-features", train.max_features,
                        "Features per split (0 = ceil(sqrt(d)))");
  train_cmd->add_option("--out", train.out_dir, "Output directory");

  BoundsOptions bounds;
  bounds.out_dir = default_out_dir();
  auto* bounds_cmd = app.add_subcommand("bounds", "Compute risk certificates at uniform weights");
  bounds_cmd->add_option("--ensemble", bounds.ensemble_path, "Ensemble file")->required();
  bounds_cmd->add_option("--dataset", bounds.dataset_path, "Dataset file")->required();
  bounds_cmd->add_option("--format", bounds.format, "Dataset format");
  bounds_cmd->add_option("--label-column", bounds.label_column, "CSV label column");
  bounds_cmd->add_option("--delta", bounds.delta, "Confidence parameter");
  bounds_cmd->add_option("--bounds", bounds.bounds, "Bounds to compute (fo tnd dis ctd c1 c2)");
  bounds_cmd->add_option("--out", bounds.out_dir, "Output directory");

  OptimizeOptions optimize;
  optimize.out_dir = default_out_dir();
  auto* opt_cmd = app.add_subcommand("optimize", "Optimize the posterior weighting");
  opt_cmd->add_option("--ensemble", optimize.ensemble_path, "Ensemble file")->required();
  opt_cmd->add_option("--dataset", optimize.dataset_path, "Dataset file")->required();
  opt_cmd->add_option("--format", optimize.format, "Dataset format");
  opt_cmd->add_option("--label-column", optimize.label_column, "CSV label column");
  opt_cmd->add_option("--delta", optimize.delta, "Confidence parameter");
  opt_cmd->add_option("--optimize", optimize.objectives, "Objectives to minimize (fo tnd dis)");
  opt_cmd->add_option("--out", optimize.out_dir, "Output directory");

  ExperimentOptions experiment;
  experiment.out_dir = default_out_dir();
  auto* exp_cmd = app.add_subcommand("experiment", "Repeated split/train/bound runs with aggregation");
  exp_cmd->add_option("--dataset", experiment.dataset_path, "Dataset file")->required();
  exp_cmd->add_option("--format", experiment.format, "Dataset format");
  exp_cmd->add_option("--label-column", experiment.label_column, "CSV label column");
  exp_cmd->add_option("--trees", experiment.trees, "Number of trees");
  exp_cmd->add_option("--bagging", experiment.bagging, "full, reduced or both");
  exp_cmd->add_option("--delta", experiment.delta, "Confidence parameter");
  exp_cmd->add_option("--seed", experiment.seed, "Master seed");
  exp_cmd->add_option("--reps", experiment.repetitions, "Repetitions");
  exp_cmd->add_option("--test-fraction", experiment.test_fraction, "Held-out test fraction");
  exp_cmd->add_option("--bounds", experiment.bounds, "Bounds to compute per repetition");
  exp_cmd->add_option("--optimize", experiment.objectives, "Objectives to optimize per repetition");
  exp_cmd->add_option("--unlabeled-r", experiment.unlabeled_r,
                      "Labeled fractions for the unlabeled-data sweep");
  exp_cmd->add_option("--out", experiment.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
    if (synth_cmd->parsed()) return run_synth(synth);
    if (train_cmd->parsed()) return run_train(train);
    if (bounds_cmd->parsed()) return run_bounds(bounds);
    if (opt_cmd->parsed()) return run_optimize(optimize);
    if (exp_cmd->parsed()) return run_experiment(experiment);
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const mvb::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mvb::ComputationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
