#include "reid/pipeline.hpp"

#include <fstream>

namespace reid {

namespace {

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::filesystem::path prepare_out_dir(const std::filesystem::path& dir) {
  if (dir.empty()) throw ConfigError("output directory must be set");
  std::filesystem::create_directories(dir);
  return dir;
}

nlohmann::json model_spec_json(const ModelSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"out_dim", spec.out_dim},
          {"hidden", spec.hidden},
          {"init_seed", spec.init_seed},
          {"init_scale", spec.init_scale}};
}

nlohmann::json train_config_json(const TrainConfig& cfg) {
  return {{"margin_tau", cfg.margin_tau},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"seed", cfg.seed}};
}

EmbeddingModel make_model(const ModelSpec& spec, std::size_t in_dim) {
  return init_model(spec.kind, in_dim, spec.out_dim, spec.hidden,
                    spec.init_seed, spec.init_scale);
}

// The dataset a run trains on: either the seeded split's training half or,
// with no split requested, every shared identity in the manifest.
Dataset select_train_data(const Dataset& ds, std::optional<std::size_t> n_train,
                          std::uint64_t split_seed) {
  if (n_train) return split_prid_protocol(ds, *n_train, split_seed).train;
  return restrict_to_shared(ds);
}

}  // namespace

const char* to_string(AuditScope scope) {
  switch (scope) {
    case AuditScope::train: return "train";
    case AuditScope::heldout: return "heldout";
    case AuditScope::all: return "all";
  }
  return "?";
}

AuditScope parse_audit_scope(std::string_view text) {
  if (text == "train") return AuditScope::train;
  if (text == "heldout") return AuditScope::heldout;
  if (text == "all") return AuditScope::all;
  throw ConfigError("audit scope must be train, heldout or all, got '" +
                    std::string(text) + "'");
}

SynthOutcome run_synth(const SynthRun& run) {
  const auto dir = prepare_out_dir(run.out_dir);
  const Dataset ds = synth_dataset(run.spec);

  SynthOutcome outcome;
  outcome.manifest = dir / "manifest.csv";
  save_manifest(ds, outcome.manifest);
  outcome.view_a_rows = ds.view_count(View::A);
  outcome.view_b_rows = ds.view_count(View::B);
  outcome.shared = ds.shared_count();

  nlohmann::json echo{{"command", "synth"},
                      {"p_shared", run.spec.p_shared},
                      {"extra_b", run.spec.extra_b},
                      {"dim", run.spec.dim},
                      {"view_shift", run.spec.view_shift},
                      {"noise_sigma", run.spec.noise_sigma},
                      {"seed", run.spec.seed},
                      {"manifest", "manifest.csv"}};
  write_json(echo, dir / "synth_config.json");
  return outcome;
}

GenTripletsOutcome run_gen_triplets(const GenTripletsRun& run) {
  const auto dir = prepare_out_dir(run.out_dir);
  const Dataset ds = load_manifest(run.manifest);
  const Dataset train = select_train_data(ds, run.n_train, run.split_seed);

  const TripletSet set = enumerate_triplets(train, run.formulation);
  GenTripletsOutcome outcome;
  outcome.population = train.shared_count();
  outcome.emitted = set.size();
  outcome.expected = expected_count(outcome.population, run.formulation);
  outcome.csv = dir / "triplets.csv";
  save_triplets_csv(set, outcome.csv);

  nlohmann::json echo{{"command", "gen-triplets"},
                      {"manifest", run.manifest.string()},
                      {"formulation", to_string(run.formulation)},
                      {"split_seed", run.split_seed},
                      {"triplets", "triplets.csv"}};
  if (run.n_train) echo["n_train"] = *run.n_train;
  write_json(echo, dir / "gen_triplets_config.json");
  return outcome;
}

TrainOutcome run_train(const TrainRun& run) {
  const auto dir = prepare_out_dir(run.out_dir);
  const Dataset ds = load_manifest(run.manifest);
  const Dataset train_data = select_train_data(ds, run.n_train, run.split_seed);
  const EmbeddingModel model0 = make_model(run.model, ds.dim());

  TrainOutcome outcome;
  outcome.report = train(train_data, run.formulation, model0, run.config);
  outcome.model_file = dir / "model.txt";
  outcome.report_file = dir / "train_report.json";
  save_model(outcome.report.final_model, outcome.model_file);
  write_json(train_report_json(outcome.report, "model.txt"), outcome.report_file);

  nlohmann::json echo{{"command", "train"},
                      {"manifest", run.manifest.string()},
                      {"formulation", to_string(run.formulation)},
                      {"split_seed", run.split_seed},
                      {"model", model_spec_json(run.model)},
                      {"train", train_config_json(run.config)}};
  if (run.n_train) echo["n_train"] = *run.n_train;
  write_json(echo, dir / "train_config.json");
  return outcome;
}

AuditOutcome run_audit(const AuditRun& run) {
  const auto dir = prepare_out_dir(run.out_dir);
  const Dataset ds = load_manifest(run.manifest);
  const EmbeddingModel model = load_model(run.model_file);

  Dataset scope_data = restrict_to_shared(ds);
  if (run.scope != AuditScope::all) {
    if (!run.n_train) {
      throw ConfigError("audit scope '" + std::string(to_string(run.scope)) +
                        "' needs n_train and split_seed");
    }
    const PridSplit split = split_prid_protocol(ds, *run.n_train, run.split_seed);
    if (run.scope == AuditScope::train) {
      scope_data = split.train;
    } else {
      std::vector<std::int64_t> heldout;
      for (const Sample& probe : split.split.probe) {
        heldout.push_back(probe.identity);
      }
      scope_data = subset_by_identities(ds, heldout);
    }
  }

  AuditOutcome outcome;
  outcome.report = audit_embedding(model, scope_data, run.tau);
  outcome.theorems = verify_complement_theorems(model, scope_data, run.tau);
  outcome.report_file = dir / "audit_report.json";

  nlohmann::json report = audit_report_json(outcome.report);
  report["scope"] = to_string(run.scope);
  nlohmann::json theorems = nlohmann::json::array();
  for (const TheoremCheck& check : outcome.theorems.checks) {
    theorems.push_back({{"constraint", to_string(check.constraint)},
                        {"situation", to_string(check.situation)},
                        {"holds", check.holds}});
  }
  report["complement_theorems"] = theorems;
  report["complement_theorems_all_hold"] = outcome.theorems.all_hold;
  write_json(report, outcome.report_file);

  nlohmann::json echo{{"command", "audit"},          {"manifest", run.manifest.string()},
                      {"model", run.model_file.string()}, {"tau", run.tau},
                      {"scope", to_string(run.scope)},    {"split_seed", run.split_seed}};
  if (run.n_train) echo["n_train"] = *run.n_train;
  write_json(echo, dir / "audit_config.json");
  return outcome;
}

EvalOutcome run_eval(const EvalRun& run) {
  const auto dir = prepare_out_dir(run.out_dir);
  const Dataset ds = load_manifest(run.manifest);
  const EmbeddingModel model = load_model(run.model_file);
  const PridSplit split = split_prid_protocol(ds, run.n_train, run.split_seed);
  const std::vector<std::size_t> ranks =
      run.ranks.empty() ? default_ranks() : run.ranks;

  EvalOutcome outcome;
  outcome.eval = evaluate_cmc(model, split.split, ranks);
  outcome.curve_file = dir / "cmc.csv";
  outcome.ranks_file = dir / "rank_results.csv";
  save_curve_csv(outcome.eval.curve, outcome.curve_file);
  save_rank_results_csv(outcome.eval.per_probe, outcome.ranks_file);

  nlohmann::json echo{{"command", "eval"},
                      {"manifest", run.manifest.string()},
                      {"model", run.model_file.string()},
                      {"n_train", run.n_train},
                      {"split_seed", run.split_seed},
                      {"ranks", ranks}};
  write_json(echo, dir / "eval_config.json");
  return outcome;
}

CompareOutcome run_compare(const CompareRun& run) {
  const auto dir = prepare_out_dir(run.out_dir);
  const Dataset ds = load_manifest(run.manifest);
  const PridSplit split = split_prid_protocol(ds, run.n_train, run.split_seed);
  const EmbeddingModel model0 = make_model(run.model, ds.dim());
  const std::vector<std::size_t> ranks =
      run.ranks.empty() ? default_ranks() : run.ranks;

  CompareOutcome outcome;
  std::map<Formulation, EmbeddingModel> trained;
  for (Formulation f :
       {Formulation::I, Formulation::II, Formulation::III}) {
    const TrainReport report = train(split.train, f, model0, run.config);
    const std::string label = to_string(f);
    const std::string model_name = "model_" + label + ".txt";
    save_model(report.final_model, dir / model_name);
    write_json(train_report_json(report, model_name),
               dir / ("train_report_" + label + ".json"));

    const CmcEvaluation eval = evaluate_cmc(report.final_model, split.split, ranks);
    save_curve_csv(eval.curve, dir / ("cmc_" + label + ".csv"));
    outcome.curves.emplace_back(label, eval.curve);
    trained.emplace(f, report.final_model);
  }

  const CmcEvaluation baseline = evaluate_cmc(model0, split.split, ranks);
  save_curve_csv(baseline.curve, dir / "cmc_baseline.csv");
  outcome.curves.emplace_back("baseline", baseline.curve);

  outcome.table = compare_curves(outcome.curves);
  write_text(comparison_text(outcome.table), dir / "comparison.txt");
  write_json(comparison_json(outcome.table), dir / "comparison.json");

  outcome.ledger = prevention_ledger(trained, split.train, run.config.margin_tau);
  write_text(ledger_table(outcome.ledger), dir / "prevention_ledger.txt");
  write_json(ledger_json(outcome.ledger), dir / "prevention_ledger.json");

  nlohmann::json echo{{"command", "compare"},
                      {"manifest", run.manifest.string()},
                      {"n_train", run.n_train},
                      {"split_seed", run.split_seed},
                      {"model", model_spec_json(run.model)},
                      {"train", train_config_json(run.config)},
                      {"ranks", ranks}};
  write_json(echo, dir / "compare_config.json");
  return outcome;
}

}  // namespace reid
