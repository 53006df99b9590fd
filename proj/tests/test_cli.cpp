#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "reid/dataset.hpp"
#include "test_util.hpp"

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

// Runs the built binary, capturing stdout+stderr.
CliResult run_cli(const TempDir& tmp, const std::string& args) {
  static int counter = 0;
  const auto capture = tmp.file("cli_out_" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string(REID_CLI_PATH) + " " + args + " > " +
                          capture.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.output = read_file(capture);
  return result;
}

}  // namespace

TEST_CASE("synth writes a loadable manifest and is byte-deterministic") {
  TempDir tmp;
  const std::string flags =
      "synth --p-shared 12 --extra-b 4 --dim 3 --view-shift 0.5,0,0 "
      "--noise-sigma 0.1 --seed 9 --out-dir ";
  const CliResult first = run_cli(tmp, flags + (tmp.path() / "a").string());
  CHECK(first.exit_code == 0);
  CHECK(first.output.find("28 samples") != std::string::npos);
  CHECK(first.output.find("12 view A") != std::string::npos);
  CHECK(first.output.find("16 view B") != std::string::npos);

  const reid::Dataset ds = reid::load_manifest(tmp.path() / "a" / "manifest.csv");
  CHECK(ds.shared_count() == 12);
  CHECK(std::filesystem::exists(tmp.path() / "a" / "synth_config.json"));

  const CliResult second = run_cli(tmp, flags + (tmp.path() / "b").string());
  CHECK(second.exit_code == 0);
  CHECK(read_file(tmp.path() / "a" / "manifest.csv") ==
        read_file(tmp.path() / "b" / "manifest.csv"));
}

TEST_CASE("gen-triplets prints the count against the closed form") {
  TempDir tmp;
  run_cli(tmp, "synth --p-shared 7 --dim 2 --seed 1 --out-dir " +
                   (tmp.path() / "data").string());
  const CliResult res =
      run_cli(tmp, "gen-triplets --manifest " +
                       (tmp.path() / "data" / "manifest.csv").string() +
                       " --formulation III --out-dir " +
                       (tmp.path() / "trip").string());
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("M=168") != std::string::npos);
  CHECK(res.output.find("closed-form=168") != std::string::npos);
  const std::string csv = read_file(tmp.path() / "trip" / "triplets.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 169);  // header + rows
}

TEST_CASE("full pipeline: train, audit, eval, compare") {
  TempDir tmp;
  const std::string manifest = (tmp.path() / "data" / "manifest.csv").string();
  CHECK(run_cli(tmp, "synth --p-shared 10 --extra-b 3 --dim 3 "
                     "--view-shift 1,0,0 --noise-sigma 0.05 --seed 4 "
                     "--out-dir " +
                         (tmp.path() / "data").string())
            .exit_code == 0);

  const CliResult trained = run_cli(
      tmp, "train --manifest " + manifest +
               " --formulation II --n-train 6 --split-seed 2 --kind linear "
               "--out-dim 3 --init-seed 5 --epochs 40 --learning-rate 0.05 "
               "--batch-size 16 --out-dir " +
               (tmp.path() / "run").string());
  CHECK(trained.exit_code == 0);
  CHECK(std::filesystem::exists(tmp.path() / "run" / "model.txt"));
  CHECK(std::filesystem::exists(tmp.path() / "run" / "train_report.json"));

  const CliResult audited = run_cli(
      tmp, "audit --manifest " + manifest + " --model " +
               (tmp.path() / "run" / "model.txt").string() +
               " --scope train --n-train 6 --split-seed 2 --tau 1.0 "
               "--out-dir " +
               (tmp.path() / "audit").string());
  CHECK(audited.exit_code == 0);
  CHECK(audited.output.find("complement theorems: all hold") != std::string::npos);
  const auto audit_json = nlohmann::json::parse(
      read_file(tmp.path() / "audit" / "audit_report.json"));
  CHECK(audit_json["population"] == 6);

  const CliResult evaluated = run_cli(
      tmp, "eval --manifest " + manifest + " --model " +
               (tmp.path() / "run" / "model.txt").string() +
               " --n-train 6 --split-seed 2 --ranks 1,2,5 --out-dir " +
               (tmp.path() / "eval").string());
  CHECK(evaluated.exit_code == 0);
  CHECK(evaluated.output.find("gallery=7") != std::string::npos);
  CHECK(std::filesystem::exists(tmp.path() / "eval" / "cmc.csv"));

  const CliResult compared = run_cli(
      tmp, "compare --manifest " + manifest +
               " --n-train 6 --split-seed 2 --out-dim 3 --epochs 30 "
               "--learning-rate 0.05 --batch-size 16 --out-dir " +
               (tmp.path() / "cmp").string());
  CHECK(compared.exit_code == 0);
  for (const char* name :
       {"cmc_I.csv", "cmc_II.csv", "cmc_III.csv", "cmc_baseline.csv",
        "comparison.txt", "comparison.json", "prevention_ledger.txt",
        "prevention_ledger.json", "compare_config.json"}) {
    CHECK(std::filesystem::exists(tmp.path() / "cmp" / name));
  }
  CHECK(compared.output.find("prevention ledger") != std::string::npos);
}

TEST_CASE("JSON config file feeds flags, command line wins") {
  TempDir tmp;
  const nlohmann::json config{
      {"synth",
       {{"p-shared", 5}, {"dim", 2}, {"seed", 3},
        {"out-dir", (tmp.path() / "from_config").string()}}}};
  write_file(tmp.file("run.json"), config.dump());

  const CliResult from_config =
      run_cli(tmp, "--config " + tmp.file("run.json").string() + " synth");
  CHECK(from_config.exit_code == 0);
  CHECK(reid::load_manifest(tmp.path() / "from_config" / "manifest.csv")
            .shared_count() == 5);

  // command line overrides the config value
  const CliResult overridden = run_cli(
      tmp, "--config " + tmp.file("run.json").string() +
               " synth --p-shared 8 --out-dir " + (tmp.path() / "cli").string());
  CHECK(overridden.exit_code == 0);
  CHECK(reid::load_manifest(tmp.path() / "cli" / "manifest.csv").shared_count() ==
        8);
}

TEST_CASE("exit codes: 1 for usage, 2 for data errors") {
  TempDir tmp;
  CHECK(run_cli(tmp, "no-such-command").exit_code == 1);
  CHECK(run_cli(tmp, "synth --p-shared").exit_code == 1);  // missing value
  CHECK(run_cli(tmp, "gen-triplets --manifest /nonexistent.csv "
                     "--formulation I --out-dir " +
                         (tmp.path() / "x").string())
            .exit_code == 2);

  write_file(tmp.file("bad.csv"), "identity,view,source_tag,f0\n1,A,,oops\n");
  CHECK(run_cli(tmp, "gen-triplets --manifest " + tmp.file("bad.csv").string() +
                         " --formulation I --out-dir " +
                         (tmp.path() / "y").string())
            .exit_code == 2);

  CHECK(run_cli(tmp, "--help").exit_code == 0);
}
