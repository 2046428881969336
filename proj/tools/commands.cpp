#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mvb/bounds.hpp"
#include "mvb/optimize.hpp"
#include "mvb/random.hpp"
#include "mvb/synthetic.hpp"

namespace fs = std::filesystem;

namespace mvb::cli {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out << content;
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

Dataset load_dataset(const std::string& path, const std::string& format,
                     std::optional<std::size_t> label_column) {
  const auto text = read_file(path);
  if (format == "libsvm") return parse_libsvm(text);
  if (format == "csv") {
    if (label_column) return parse_csv(text, *label_column);
    // default: label in the last column
    const auto probe = text.substr(0, text.find('\n'));
    const auto cols = std::count(probe.begin(), probe.end(), ',') + 1;
    if (cols < 2) throw InputError("csv needs at least two columns");
    return parse_csv(text, static_cast<std::size_t>(cols - 1));
  }
  throw InputError("unknown format: " + format);
}

std::string format_bound(const BoundValue& bv) {
  if (bv.exceeds_one) return ">1";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5f", bv.value);
  return buf;
}

std::string format_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5f", v);
  return buf;
}

void print_row(const std::vector<std::string>& cells, std::size_t width = 14) {
  std::string line;
  for (const auto& c : cells) {
    line += c;
    line += std::string(c.size() < width ? width - c.size() : 1, ' ');
  }
  std::cout << line << '\n';
}

std::vector<BoundKind> resolve_bounds(const std::vector<std::string>& names, int n_classes) {
  std::vector<BoundKind> kinds;
  if (names.empty()) {
    if (n_classes == 2) {
      kinds = {BoundKind::FO, BoundKind::C1, BoundKind::C2, BoundKind::CTD, BoundKind::TND};
    } else {
      kinds = {BoundKind::FO, BoundKind::CTD, BoundKind::TND};
    }
    return kinds;
  }
  for (const auto& name : names) {
    const auto kind = bound_kind_from_name(name);
    if (n_classes != 2 &&
        (kind == BoundKind::DIS || kind == BoundKind::C1 || kind == BoundKind::C2)) {
      throw InputError(bound_kind_name(kind) + " is defined for binary data only");
    }
    kinds.push_back(kind);
  }
  return kinds;
}

enum class Objective { FO, TND, DIS };

std::vector<Objective> resolve_objectives(const std::vector<std::string>& names, int n_classes) {
  const auto parse_one = [&](std::string name) {
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (name == "fo") return Objective::FO;
    if (name == "tnd") return Objective::TND;
    if (name == "dis") return Objective::DIS;
    throw InputError("unknown optimization objective: " + name);
  };
  std::vector<Objective> out;
  if (names.empty()) {
    out = {Objective::FO, Objective::TND};
    return out;
  }
  for (const auto& n : names) {
    const auto obj = parse_one(n);
    if (obj == Objective::DIS && n_classes != 2)
      throw InputError("DIS optimization is defined for binary data only");
    out.push_back(obj);
  }
  return out;
}

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::FO: return "FO";
    case Objective::TND: return "TND";
    case Objective::DIS: return "DIS";
  }
  return "?";
}

struct LoadedEnsemble {
  Ensemble ensemble;
  SplitSpec split;
  std::string dataset_hash;
};

LoadedEnsemble load_ensemble(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("cannot parse ensemble file " + path + ": " + e.what());
  }
  LoadedEnsemble out;
  out.ensemble = ensemble_from_json(j);
  if (!j.contains("split") || !j.contains("dataset_hash"))
    throw InputError("ensemble file lacks split/provenance information");
  out.split.test_fraction = j.at("split").at("test_fraction").get<double>();
  out.split.seed = j.at("split").at("seed").get<std::uint64_t>();
  out.dataset_hash = j.at("dataset_hash").get<std::string>();
  return out;
}

struct PreparedRun {
  Dataset train;
  Dataset test;
  LossStats stats;
  PredictionMatrix test_pm;
  Posterior uniform;
  std::string ensemble_hash;
};

PreparedRun prepare_run(const Ensemble& ens, const Dataset& full, const SplitSpec& split) {
  PreparedRun run;
  auto [train, test] = stratified_split(full, split);
  run.train = std::move(train);
  run.test = std::move(test);
  if (run.train.n_samples() != ens.n_train)
    throw InputError("ensemble was trained on a different split size");
  const auto train_pm = prediction_matrix(ens, run.train.X, &run.train.labels);
  run.test_pm = prediction_matrix(ens, run.test.X, &run.test.labels);
  run.stats = compute_loss_stats(train_pm, ens.oob_masks);
  run.uniform = Posterior::uniform(ens.size());
  run.ensemble_hash = to_hex(ensemble_hash(ens));
  return run;
}

nlohmann::json provenance(const std::string& dataset_hash, const std::string& ens_hash) {
  return {{"artifact_version", kArtifactVersion},
          {"dataset_hash", dataset_hash},
          {"ensemble_hash", ens_hash}};
}

}  // namespace

std::string default_out_dir() {
  const char* env = std::getenv("MVB_OUT");
  return env && *env ? env : ".";
}

int run_synth(const SynthOptions& opt) {
  if (opt.kind != "blobs") throw InputError("unknown synthetic kind: " + opt.kind);
  const auto ds = make_blobs(opt.n, opt.d, opt.classes, opt.spread, opt.seed);
  const bool libsvm = opt.format == "libsvm";
  if (!libsvm && opt.format != "csv") throw InputError("unknown format: " + opt.format);
  const auto path = out_path(opt.out_dir, libsvm ? "dataset.libsvm" : "dataset.csv");
  write_file(path, libsvm ? write_libsvm(ds) : write_csv(ds));
  std::cout << "wrote " << path << " (" << ds.n_samples() << " samples, " << ds.n_features()
            << " features, " << ds.n_classes << " classes)\n";
  return 0;
}

int run_train(const TrainOptions& opt) {
  const auto full = load_dataset(opt.dataset_path, opt.format, opt.label_column);
  const SplitSpec split{opt.test_fraction, 1.0, opt.seed};
  auto [train, test] = stratified_split(full, split);
  const auto ens = train_forest(train, opt.trees, bagging_mode_from_name(opt.bagging),
                                derive_seed(opt.seed, 1), opt.max_features);

  auto j = ensemble_to_json(ens);
  j["dataset_hash"] = to_hex(dataset_hash(full));
  j["split"] = {{"test_fraction", opt.test_fraction}, {"seed", opt.seed}};
  j["artifact_version"] = kArtifactVersion;

  const auto path = out_path(opt.out_dir, "ensemble.json");
  write_file(path, j.dump(2) + "\n");
  std::cout << "wrote " << path << " (" << ens.size() << " trees, " << bagging_mode_name(ens.mode)
            << " bagging, train n=" << ens.n_train << ", test n=" << test.n_samples() << ")\n";
  return 0;
}

int run_bounds(const BoundsOptions& opt) {
  const auto loaded = load_ensemble(opt.ensemble_path);
  const auto full = load_dataset(opt.dataset_path, opt.format, opt.label_column);
  if (to_hex(dataset_hash(full)) != loaded.dataset_hash)
    throw InputError("dataset hash does not match the ensemble's training dataset");

  const auto run = prepare_run(loaded.ensemble, full, loaded.split);
  const auto kinds = resolve_bounds(opt.bounds, run.stats.n_classes);
  const auto report = make_bound_report(run.stats, run.uniform, opt.delta, kinds);
  const double test_loss = mv_loss(run.test_pm, run.uniform);

  auto j = bound_report_to_json(report);
  j["test_mv_loss"] = test_loss;
  j["stats"] = loss_stats_to_json(run.stats);
  j["provenance"] = provenance(loaded.dataset_hash, run.ensemble_hash);
  j["config"] = {{"delta", opt.delta}};
  const auto path = out_path(opt.out_dir, "bounds.json");
  write_file(path, j.dump(2) + "\n");

  std::vector<std::string> header{"test_mv_loss"};
  std::vector<std::string> row{format_num(test_loss)};
  for (const auto& entry : report.entries) {
    header.push_back(bound_kind_name(entry.kind));
    row.push_back(format_bound(entry.value));
  }
  print_row(header);
  print_row(row);
  std::cout << "n_min_first=" << run.stats.n_min_first << " n_min_pair=" << run.stats.n_min_pair
            << " m_min=" << run.stats.m_min << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int run_optimize(const OptimizeOptions& opt) {
  const auto loaded = load_ensemble(opt.ensemble_path);
  const auto full = load_dataset(opt.dataset_path, opt.format, opt.label_column);
  if (to_hex(dataset_hash(full)) != loaded.dataset_hash)
    throw InputError("dataset hash does not match the ensemble's training dataset");

  const auto run = prepare_run(loaded.ensemble, full, loaded.split);
  const auto objectives = resolve_objectives(opt.objectives, run.stats.n_classes);
  const double uniform_test_loss = mv_loss(run.test_pm, run.uniform);

  nlohmann::json results = nlohmann::json::object();
  std::vector<std::vector<std::string>> rows;
  {
    const auto uniform_report =
        make_bound_report(run.stats, run.uniform, opt.delta, {BoundKind::FO, BoundKind::TND});
    rows.push_back({"uniform", "-", format_num(uniform_test_loss)});
    results["uniform"] = {{"test_mv_loss", uniform_test_loss},
                          {"FO_kl_bound", uniform_report.entries[0].value.value},
                          {"TND_kl_bound", uniform_report.entries[1].value.value}};
  }

  for (const auto objective : objectives) {
    OptimizeResult res;
    switch (objective) {
      case Objective::FO: res = minimize_fo(run.stats, run.uniform, opt.delta, 0); break;
      case Objective::TND: res = minimize_tnd(run.stats, run.uniform, opt.delta, 0); break;
      case Objective::DIS: res = minimize_dis(run.stats, run.uniform, opt.delta, 0); break;
    }
    const double test_loss = mv_loss(run.test_pm, res.rho_star);
    auto jr = optimize_result_to_json(res);
    jr["test_mv_loss"] = test_loss;

    // weights sorted by descending mass for inspection
    std::vector<std::size_t> order(res.rho_star.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (res.rho_star.rho[a] != res.rho_star.rho[b]) return res.rho_star.rho[a] > res.rho_star.rho[b];
      return a < b;
    });
    nlohmann::json sorted = nlohmann::json::array();
    for (auto h : order) sorted.push_back({{"tree", h}, {"weight", res.rho_star.rho[h]}});
    jr["rho_star_sorted"] = std::move(sorted);

    const auto name = objective_name(objective);
    results[name] = std::move(jr);
    rows.push_back({name, format_num(res.final_kl_bound), format_num(test_loss)});
  }

  nlohmann::json j{{"results", std::move(results)},
                   {"provenance", provenance(loaded.dataset_hash, run.ensemble_hash)},
                   {"config", {{"delta", opt.delta}}}};
  const auto path = out_path(opt.out_dir, "optimize.json");
  write_file(path, j.dump(2) + "\n");

  print_row({"weighting", "kl_bound", "test_mv_loss"});
  for (const auto& r : rows) print_row(r);
  std::cout << "wrote " << path << "\n";
  return 0;
}

namespace {

struct Accumulator {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  double stddev() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size() - 1));
  }
  nlohmann::json to_json() const { return {{"mean", mean()}, {"std", stddev()}, {"values", values}}; }
};

}  // namespace

int run_experiment(const ExperimentOptions& opt) {
  const auto full = load_dataset(opt.dataset_path, opt.format, opt.label_column);
  if (opt.repetitions < 1) throw InputError("repetitions must be at least one");

  std::vector<BaggingMode> modes;
  if (opt.bagging == "both") {
    modes = {BaggingMode::Full, BaggingMode::Reduced};
  } else {
    modes = {bagging_mode_from_name(opt.bagging)};
  }
  if (!opt.unlabeled_r.empty() && full.n_classes != 2)
    throw InputError("the unlabeled sweep estimates disagreement; binary data only");
  for (double r : opt.unlabeled_r) {
    if (!(r > 0.0 && r <= 1.0)) throw InputError("unlabeled fractions must lie in (0,1]");
  }

  const auto kinds = resolve_bounds(opt.bounds, full.n_classes);
  const auto objectives = resolve_objectives(opt.objectives, full.n_classes);
  const bool do_optimize = !opt.objectives.empty();

  nlohmann::json out;
  out["config"] = {{"dataset", opt.dataset_path},
                   {"trees", opt.trees},
                   {"bagging", opt.bagging},
                   {"delta", opt.delta},
                   {"seed", opt.seed},
                   {"repetitions", opt.repetitions},
                   {"test_fraction", opt.test_fraction},
                   {"unlabeled_r", opt.unlabeled_r}};
  out["provenance"] = {{"artifact_version", kArtifactVersion},
                       {"dataset_hash", to_hex(dataset_hash(full))}};

  for (const auto mode : modes) {
    std::map<std::string, Accumulator> agg;
    nlohmann::json reps = nlohmann::json::array();
    for (std::size_t rep = 0; rep < opt.repetitions; ++rep) {
      const auto rep_seed = derive_seed(opt.seed, 100 + rep);
      const SplitSpec split{opt.test_fraction, 1.0, rep_seed};
      auto [train, test] = stratified_split(full, split);
      const auto ens = train_forest(train, opt.trees, mode, derive_seed(rep_seed, 1));
      const auto train_pm = prediction_matrix(ens, train.X, &train.labels);
      const auto test_pm = prediction_matrix(ens, test.X, &test.labels);
      const auto stats = compute_loss_stats(train_pm, ens.oob_masks);
      const auto uniform = Posterior::uniform(ens.size());
      const auto report = make_bound_report(stats, uniform, opt.delta, kinds);
      const double test_loss = mv_loss(test_pm, uniform);

      nlohmann::json rep_row{{"seed", rep_seed}, {"test_mv_loss", test_loss}};
      agg["test_mv_loss"].add(test_loss);
      for (const auto& entry : report.entries) {
        const auto name = bound_kind_name(entry.kind);
        rep_row[name] =
            entry.value.vacuous ? nlohmann::json(nullptr) : nlohmann::json(entry.value.value);
        agg[name].add(entry.value.value);
      }

      if (do_optimize) {
        for (const auto objective : objectives) {
          OptimizeResult res;
          switch (objective) {
            case Objective::FO: res = minimize_fo(stats, uniform, opt.delta, 0); break;
            case Objective::TND: res = minimize_tnd(stats, uniform, opt.delta, 0); break;
            case Objective::DIS: res = minimize_dis(stats, uniform, opt.delta, 0); break;
          }
          const double opt_loss = mv_loss(test_pm, res.rho_star);
          const auto name = objective_name(objective);
          rep_row["test_mv_loss_" + name] = opt_loss;
          rep_row["kl_bound_" + name] = res.final_kl_bound;
          agg["test_mv_loss_" + name].add(opt_loss);
          agg["kl_bound_" + name].add(res.final_kl_bound);
        }
      }
      reps.push_back(std::move(rep_row));
    }

    const auto mode_name = bagging_mode_name(mode);
    nlohmann::json agg_json = nlohmann::json::object();
    std::cout << "== bagging=" << mode_name << " reps=" << opt.repetitions << "\n";
    print_row({"column", "mean", "std"}, 22);
    for (const auto& [name, acc] : agg) {
      agg_json[name] = acc.to_json();
      print_row({name, format_num(acc.mean()), format_num(acc.stddev())}, 22);
    }
    out["modes"][mode_name] = {{"repetitions", std::move(reps)},
                               {"aggregate", std::move(agg_json)}};
  }

  if (!opt.unlabeled_r.empty()) {
    nlohmann::json sweep = nlohmann::json::array();
    std::cout << "== unlabeled sweep (bagging=" << bagging_mode_name(modes.front()) << ")\n";
    print_row({"r", "FO", "TND", "DIS", "test_mv_loss"});
    for (const double r : opt.unlabeled_r) {
      std::map<std::string, Accumulator> agg;
      for (std::size_t rep = 0; rep < opt.repetitions; ++rep) {
        const auto rep_seed = derive_seed(opt.seed, 100 + rep);
        const SplitSpec split{opt.test_fraction, r, rep_seed};
        auto [train, test] = stratified_split(full, split);
        const auto parts = split_unlabeled(train, r, derive_seed(rep_seed, 7));
        const auto ens =
            train_forest(parts.labeled, opt.trees, modes.front(), derive_seed(rep_seed, 2));
        const auto train_pm = prediction_matrix(ens, parts.labeled.X, &parts.labeled.labels);
        const auto test_pm = prediction_matrix(ens, test.X, &test.labels);
        PredictionMatrix unlabeled_pm;
        const bool has_pool = parts.unlabeled.n_samples > 0;
        if (has_pool) unlabeled_pm = prediction_matrix(ens, parts.unlabeled);
        const auto stats =
            compute_loss_stats(train_pm, ens.oob_masks, has_pool ? &unlabeled_pm : nullptr);
        const auto uniform = Posterior::uniform(ens.size());
        const auto report = make_bound_report(stats, uniform, opt.delta,
                                              {BoundKind::FO, BoundKind::TND, BoundKind::DIS});
        agg["FO"].add(report.entries[0].value.value);
        agg["TND"].add(report.entries[1].value.value);
        agg["DIS"].add(report.entries[2].value.value);
        agg["test_mv_loss"].add(mv_loss(test_pm, uniform));
      }
      print_row({format_num(r), format_num(agg["FO"].mean()), format_num(agg["TND"].mean()),
                 format_num(agg["DIS"].mean()), format_num(agg["test_mv_loss"].mean())});
      sweep.push_back({{"r", r},
                       {"FO", agg["FO"].to_json()},
                       {"TND", agg["TND"].to_json()},
                       {"DIS", agg["DIS"].to_json()},
                       {"test_mv_loss", agg["test_mv_loss"].to_json()}});
    }
    out["unlabeled_sweep"] = std::move(sweep);
  }

  const auto path = out_path(opt.out_dir, "experiment.json");
  write_file(path, out.dump(2) + "\n");
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace mvb::cli
