#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = MVB_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const auto out_file = fs::temp_directory_path() / "mvb_cli_out.txt";
  const std::string cmd = kCli + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "mvb_cli_tests";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const fs::path kScratch = scratch_dir();

}  // namespace

TEST_CASE("end-to-end: synth, train, bounds, optimize, experiment") {
  const auto dir = (kScratch / "happy").string();
  auto r = run("synth --n 400 --d 3 --classes 2 --spread 0.5 --seed 9 --out " + dir);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(dir + "/dataset.csv"));

  r = run("train --dataset " + dir + "/dataset.csv --trees 12 --seed 4 --out " + dir);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(dir + "/ensemble.json"));
  const auto ens = nlohmann::json::parse(slurp(dir + "/ensemble.json"));
  CHECK(ens.at("trees").size() == 12);
  CHECK(ens.at("oob_masks").size() == 12);
  CHECK(ens.contains("dataset_hash"));

  r = run("bounds --ensemble " + dir + "/ensemble.json --dataset " + dir +
          "/dataset.csv --delta 0.05 --out " + dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("FO") != std::string::npos);
  CHECK(r.output.find("C1") != std::string::npos);
  CHECK(r.output.find("C2") != std::string::npos);
  CHECK(r.output.find("CTD") != std::string::npos);
  CHECK(r.output.find("TND") != std::string::npos);
  const auto bounds = nlohmann::json::parse(slurp(dir + "/bounds.json"));
  CHECK(bounds.at("bounds").size() == 5);
  CHECK(bounds.at("provenance").contains("ensemble_hash"));
  CHECK(bounds.at("stats").contains("n_min_pair"));

  r = run("optimize --ensemble " + dir + "/ensemble.json --dataset " + dir +
          "/dataset.csv --optimize fo tnd --out " + dir);
  REQUIRE(r.exit_code == 0);
  const auto opt = nlohmann::json::parse(slurp(dir + "/optimize.json"));
  CHECK(opt.at("results").contains("uniform"));
  CHECK(opt.at("results").contains("FO"));
  CHECK(opt.at("results").contains("TND"));
  const auto trace = opt.at("results").at("TND").at("trace").get<std::vector<double>>();
  REQUIRE(!trace.empty());
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
  // sorted weight list for inspection
  const auto sorted = opt.at("results").at("TND").at("rho_star_sorted");
  REQUIRE(sorted.size() == 12);
  CHECK(sorted[0].at("weight").get<double>() >= sorted[11].at("weight").get<double>());

  r = run("experiment --dataset " + dir + "/dataset.csv --trees 8 --reps 3 --seed 2 " +
          "--bagging both --unlabeled-r 0.5 1.0 --out " + dir);
  REQUIRE(r.exit_code == 0);
  const auto exp = nlohmann::json::parse(slurp(dir + "/experiment.json"));
  CHECK(exp.at("modes").contains("full"));
  CHECK(exp.at("modes").contains("reduced"));
  CHECK(exp.at("modes").at("full").at("repetitions").size() == 3);
  CHECK(exp.at("modes").at("full").at("aggregate").at("TND").contains("mean"));
  CHECK(exp.at("modes").at("full").at("aggregate").at("TND").contains("std"));
  CHECK(exp.at("unlabeled_sweep").size() == 2);

  // rerunning the whole experiment reproduces the report byte for byte
  const auto first = slurp(dir + "/experiment.json");
  r = run("experiment --dataset " + dir + "/dataset.csv --trees 8 --reps 3 --seed 2 " +
          "--bagging both --unlabeled-r 0.5 1.0 --out " + dir);
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(dir + "/experiment.json") == first);
}

TEST_CASE("reruns with the same seed are byte-identical") {
  const auto dir_a = (kScratch / "det_a").string();
  const auto dir_b = (kScratch / "det_b").string();
  REQUIRE(run("synth --n 200 --d 3 --classes 2 --spread 0.6 --seed 1 --out " + dir_a).exit_code == 0);
  REQUIRE(run("train --dataset " + dir_a + "/dataset.csv --trees 6 --seed 11 --out " + dir_a)
              .exit_code == 0);
  REQUIRE(run("train --dataset " + dir_a + "/dataset.csv --trees 6 --seed 11 --out " + dir_b)
              .exit_code == 0);
  CHECK(slurp(dir_a + "/ensemble.json") == slurp(dir_b + "/ensemble.json"));

  REQUIRE(run("bounds --ensemble " + dir_a + "/ensemble.json --dataset " + dir_a +
              "/dataset.csv --out " + dir_a)
              .exit_code == 0);
  REQUIRE(run("bounds --ensemble " + dir_a + "/ensemble.json --dataset " + dir_a +
              "/dataset.csv --out " + dir_b)
              .exit_code == 0);
  CHECK(slurp(dir_a + "/bounds.json") == slurp(dir_b + "/bounds.json"));
}

TEST_CASE("usage and input failures exit with code 2") {
  CHECK(run("train --dataset /does/not/exist.csv --out " + (kScratch / "e1").string()).exit_code == 2);
  CHECK(run("nonsense").exit_code == 2);

  // hash mismatch: bounds against a different dataset
  const auto dir = (kScratch / "mismatch").string();
  REQUIRE(run("synth --n 200 --d 3 --classes 2 --seed 1 --out " + dir).exit_code == 0);
  REQUIRE(run("train --dataset " + dir + "/dataset.csv --trees 5 --seed 1 --out " + dir).exit_code == 0);
  const auto other = (kScratch / "mismatch_other").string();
  REQUIRE(run("synth --n 200 --d 3 --classes 2 --seed 2 --out " + other).exit_code == 0);
  const auto r = run("bounds --ensemble " + dir + "/ensemble.json --dataset " + other +
                     "/dataset.csv --out " + dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("hash") != std::string::npos);

  // binary-only bounds requested on multiclass data
  const auto multi = (kScratch / "multi").string();
  REQUIRE(run("synth --n 300 --d 3 --classes 3 --seed 3 --out " + multi).exit_code == 0);
  REQUIRE(run("train --dataset " + multi + "/dataset.csv --trees 5 --seed 1 --out " + multi)
              .exit_code == 0);
  CHECK(run("bounds --ensemble " + multi + "/ensemble.json --dataset " + multi +
            "/dataset.csv --bounds c1 --out " + multi)
            .exit_code == 2);
}

TEST_CASE("multiclass default bound set omits the binary-only bounds") {
  const auto dir = (kScratch / "multi_default").string();
  REQUIRE(run("synth --n 300 --d 3 --classes 3 --seed 3 --out " + dir).exit_code == 0);
  REQUIRE(run("train --dataset " + dir + "/dataset.csv --trees 6 --seed 1 --out " + dir).exit_code == 0);
  const auto r = run("bounds --ensemble " + dir + "/ensemble.json --dataset " + dir +
                     "/dataset.csv --out " + dir);
  REQUIRE(r.exit_code == 0);
  const auto bounds = nlohmann::json::parse(slurp(dir + "/bounds.json"));
  CHECK(bounds.at("bounds").contains("FO"));
  CHECK(bounds.at("bounds").contains("CTD"));
  CHECK(bounds.at("bounds").contains("TND"));
  CHECK_FALSE(bounds.at("bounds").contains("C1"));
  CHECK_FALSE(bounds.at("bounds").contains("C2"));
  CHECK_FALSE(bounds.at("bounds").contains("DIS"));
}

TEST_CASE("vacuous bounds render as greater-than-one") {
  // tiny sample: overlaps are so small every second-order bound blows up
  const auto dir = (kScratch / "vacuous").string();
  REQUIRE(run("synth --n 60 --d 3 --classes 2 --spread 1.5 --seed 8 --out " + dir).exit_code == 0);
  int code = run("train --dataset " + dir + "/dataset.csv --trees 10 --seed 5 --out " + dir).exit_code;
  REQUIRE(code == 0);
  const auto r = run("bounds --ensemble " + dir + "/ensemble.json --dataset " + dir +
                     "/dataset.csv --out " + dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find(">1") != std::string::npos);
}

TEST_CASE("statistical prerequisite failures exit with code 1") {
  // six samples, three trees: some seed trains fine but leaves a hypothesis
  // pair without shared out-of-bag samples
  const auto dir = (kScratch / "overlap").string();
  REQUIRE(run("synth --n 6 --d 2 --classes 2 --spread 0.5 --seed 42 --out " + dir).exit_code == 0);
  bool found = false;
  for (int seed = 0; seed < 300 && !found; ++seed) {
    const auto train_r = run("train --dataset " + dir + "/dataset.csv --trees 3 --seed " +
                             std::to_string(seed) + " --test-fraction 0.34 --out " + dir);
    if (train_r.exit_code != 0) continue;
    const auto bounds_r = run("bounds --ensemble " + dir + "/ensemble.json --dataset " + dir +
                              "/dataset.csv --out " + dir);
    if (bounds_r.exit_code == 1) {
      CHECK(bounds_r.output.find("no validation samples") != std::string::npos);
      found = true;
    } else {
      REQUIRE(bounds_r.exit_code == 0);
    }
  }
  CHECK(found);
}

TEST_CASE("the MVB_OUT environment variable supplies the default output directory") {
  const auto dir = (kScratch / "env_out").string();
  fs::create_directories(dir);
  setenv("MVB_OUT", dir.c_str(), 1);
  const auto r = run("synth --n 50 --d 2 --classes 2 --seed 4");
  unsetenv("MVB_OUT");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir + "/dataset.csv"));
}
