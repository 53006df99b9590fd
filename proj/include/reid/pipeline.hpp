#ifndef REID_PIPELINE_HPP_
#define REID_PIPELINE_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reid/audit.hpp"
#include "reid/cmc.hpp"
#include "reid/dataset.hpp"
#include "reid/trainer.hpp"

namespace reid {

// One run = one output directory. Every run writes a <name>_config.json
// echo of its resolved parameters, sufficient to reproduce the run.

struct ModelSpec {
  ModelKind kind = ModelKind::linear;
  std::size_t out_dim = 16;
  std::size_t hidden = 0;  // required for two_layer
  std::uint64_t init_seed = 0;
  double init_scale = 0.5;
};

struct SynthRun {
  SynthSpec spec;
  std::filesystem::path out_dir;
};

struct SynthOutcome {
  std::filesystem::path manifest;
  std::size_t view_a_rows = 0;
  std::size_t view_b_rows = 0;
  std::size_t shared = 0;
};

SynthOutcome run_synth(const SynthRun& run);

struct GenTripletsRun {
  std::filesystem::path manifest;
  Formulation formulation = Formulation::I;
  std::optional<std::size_t> n_train;  // nullopt: use all shared identities
  std::uint64_t split_seed = 0;
  std::filesystem::path out_dir;
};

struct GenTripletsOutcome {
  std::size_t emitted = 0;
  std::uint64_t expected = 0;
  std::size_t population = 0;
  std::filesystem::path csv;
};

GenTripletsOutcome run_gen_triplets(const GenTripletsRun& run);

struct TrainRun {
  std::filesystem::path manifest;
  Formulation formulation = Formulation::I;
  std::optional<std::size_t> n_train;  // nullopt: train on all shared identities
  std::uint64_t split_seed = 0;
  ModelSpec model;
  TrainConfig config;
  std::filesystem::path out_dir;
};

struct TrainOutcome {
  TrainReport report;
  std::filesystem::path model_file;
  std::filesystem::path report_file;
};

TrainOutcome run_train(const TrainRun& run);

enum class AuditScope { train, heldout, all };
const char* to_string(AuditScope scope);
AuditScope parse_audit_scope(std::string_view text);

struct AuditRun {
  std::filesystem::path manifest;
  std::filesystem::path model_file;
  double tau = 1.0;
  std::optional<std::size_t> n_train;  // required for train/heldout scopes
  std::uint64_t split_seed = 0;
  AuditScope scope = AuditScope::all;
  std::filesystem::path out_dir;
};

struct AuditOutcome {
  AuditReport report;
  TheoremReport theorems;
  std::filesystem::path report_file;
};

AuditOutcome run_audit(const AuditRun& run);

struct EvalRun {
  std::filesystem::path manifest;
  std::filesystem::path model_file;
  std::size_t n_train = 0;
  std::uint64_t split_seed = 0;
  std::vector<std::size_t> ranks;  // empty: default ranks
  std::filesystem::path out_dir;
};

struct EvalOutcome {
  CmcEvaluation eval;
  std::filesystem::path curve_file;
  std::filesystem::path ranks_file;
};

EvalOutcome run_eval(const EvalRun& run);

// The full experiment grid: one training run per formulation from a shared
// initial model, CMC on the held-out identities for each trained model and
// for the untrained baseline, plus the prevention ledger on the training
// identities. Deterministic per seeds; emitted files reference each other
// by relative name only.
struct CompareRun {
  std::filesystem::path manifest;
  std::size_t n_train = 0;
  std::uint64_t split_seed = 0;
  ModelSpec model;
  TrainConfig config;
  std::vector<std::size_t> ranks;  // empty: default ranks
  std::filesystem::path out_dir;
};

struct CompareOutcome {
  ComparisonTable table;
  std::vector<std::pair<std::string, CmcCurve>> curves;  // I, II, III, baseline
  PreventionLedger ledger;
};

CompareOutcome run_compare(const CompareRun& run);

}  // namespace reid

#endif  // REID_PIPELINE_HPP_
