// Command-line front end: synthesize two-view data, enumerate triplet sets,
// train embeddings, audit the feature space, and evaluate CMC curves.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "reid/pipeline.hpp"

namespace {

// JSON config file support: top-level keys are global options, one object
// per subcommand. Command-line flags take precedence.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    return to_json(app, default_also).dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static nlohmann::json to_json(const CLI::App* app, bool default_also) {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string& name = opt->get_lnames()[0];
      if (opt->count() == 1) {
        j[name] = opt->results().at(0);
      } else if (opt->count() > 1) {
        j[name] = opt->results();
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      j[sub->get_name()] = to_json(sub, default_also);
    }
    return j;
  }

  static void collect(const nlohmann::json& j, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    if (!j.is_object()) {
      throw CLI::FileError("config must be a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      const nlohmann::json& value = it.value();
      if (value.is_object()) {
        auto next = parents;
        next.push_back(it.key());
        collect(value, std::move(next), items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (value.is_array()) {
        for (const auto& v : value) {
          item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
      } else if (value.is_string()) {
        item.inputs.push_back(value.get<std::string>());
      } else {
        item.inputs.push_back(value.dump());
      }
      items.push_back(std::move(item));
    }
  }
};

struct CliState {
  // synth
  reid::SynthRun synth;
  // gen-triplets / train / compare
  std::string formulation = "I";
  std::optional<std::size_t> n_train;
  std::uint64_t split_seed = 0;
  std::string manifest;
  std::string model_file;
  std::string out_dir;
  std::string kind = "linear";
  std::size_t out_dim = 16;
  std::size_t hidden = 0;
  std::uint64_t init_seed = 0;
  double init_scale = 0.5;
  reid::TrainConfig tcfg;
  double audit_tau = 1.0;
  std::string scope = "all";
  std::vector<std::size_t> ranks;
};

void add_model_flags(CLI::App* cmd, CliState& st) {
  cmd->add_option("--kind", st.kind, "embedding kind: linear or two_layer")
      ->check(CLI::IsMember({"linear", "two_layer"}))
      ->capture_default_str();
  cmd->add_option("--out-dim", st.out_dim, "feature dimension n")
      ->capture_default_str();
  cmd->add_option("--hidden", st.hidden, "hidden width (two_layer only)")
      ->capture_default_str();
  cmd->add_option("--init-seed", st.init_seed, "parameter init seed")
      ->capture_default_str();
  cmd->add_option("--init-scale", st.init_scale,
                  "uniform init half-width (> 0)")
      ->capture_default_str();
}

void add_train_flags(CLI::App* cmd, CliState& st) {
  cmd->add_option("--tau", st.tcfg.margin_tau, "margin tau (> 0)")
      ->capture_default_str();
  cmd->add_option("--batch-size", st.tcfg.batch_size, "mini-batch size")
      ->capture_default_str();
  cmd->add_option("--learning-rate", st.tcfg.learning_rate,
                  "gradient descent step size")
      ->capture_default_str();
  cmd->add_option("--epochs", st.tcfg.epochs, "training epochs")
      ->capture_default_str();
  cmd->add_option("--train-seed", st.tcfg.seed, "batch shuffle seed")
      ->capture_default_str();
}

void add_split_flags(CLI::App* cmd, CliState& st, bool required) {
  auto* opt = cmd->add_option("--n-train", st.n_train,
                              "training identities drawn from the shared pool");
  if (required) opt->required();
  cmd->add_option("--split-seed", st.split_seed, "identity shuffle seed")
      ->capture_default_str();
}

reid::ModelSpec model_spec(const CliState& st) {
  reid::ModelSpec spec;
  spec.kind = reid::parse_model_kind(st.kind);
  spec.out_dim = st.out_dim;
  spec.hidden = st.hidden;
  spec.init_seed = st.init_seed;
  spec.init_scale = st.init_scale;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-view single-shot re-identification workbench"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON config file mirroring all flags");
  app.config_formatter(std::make_shared<JsonConfig>());

  CliState st;

  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic two-view manifest");
  synth->configurable();
  synth->add_option("--p-shared", st.synth.spec.p_shared,
                    "identities present in both views")
      ->capture_default_str();
  synth->add_option("--extra-b", st.synth.spec.extra_b,
                    "view-B-only distractor identities")
      ->capture_default_str();
  synth->add_option("--dim", st.synth.spec.dim, "raw vector dimension")
      ->capture_default_str();
  synth->add_option("--view-shift", st.synth.spec.view_shift,
                    "comma-separated cross-view shift (defaults to zeros)")
      ->delimiter(',');
  synth->add_option("--noise-sigma", st.synth.spec.noise_sigma,
                    "per-view gaussian noise sigma")
      ->capture_default_str();
  synth->add_option("--seed", st.synth.spec.seed, "generator seed")
      ->capture_default_str();
  synth->add_option("--out-dir", st.out_dir, "output directory")->required();
  synth->callback([&] {
    st.synth.out_dir = st.out_dir;
    const auto outcome = reid::run_synth(st.synth);
    std::cout << "wrote " << outcome.manifest.string() << ": "
              << outcome.view_a_rows + outcome.view_b_rows << " samples ("
              << outcome.view_a_rows << " view A, " << outcome.view_b_rows
              << " view B, " << outcome.shared << " shared identities)\n";
  });

  CLI::App* gen = app.add_subcommand(
      "gen-triplets", "enumerate a training triplet set");
  gen->configurable();
  gen->add_option("--manifest", st.manifest, "input manifest CSV")->required();
  gen->add_option("--formulation", st.formulation, "I, II or III")->required();
  add_split_flags(gen, st, false);
  gen->add_option("--out-dir", st.out_dir, "output directory")->required();
  gen->callback([&] {
    reid::GenTripletsRun run;
    run.manifest = st.manifest;
    run.formulation = reid::parse_formulation(st.formulation);
    run.n_train = st.n_train;
    run.split_seed = st.split_seed;
    run.out_dir = st.out_dir;
    const auto outcome = reid::run_gen_triplets(run);
    std::cout << "P=" << outcome.population << " formulation=" << st.formulation
              << " M=" << outcome.emitted
              << " closed-form=" << outcome.expected << '\n';
    if (outcome.emitted != outcome.expected) {
      throw reid::ProtocolError("internal error: emitted count disagrees with "
                                "the closed form");
    }
  });

  CLI::App* tr = app.add_subcommand("train", "train an embedding by "
                                             "mini-batch gradient descent");
  tr->configurable();
  tr->add_option("--manifest", st.manifest, "input manifest CSV")->required();
  tr->add_option("--formulation", st.formulation, "I, II or III")->required();
  add_split_flags(tr, st, false);
  add_model_flags(tr, st);
  add_train_flags(tr, st);
  tr->add_option("--out-dir", st.out_dir, "output directory")->required();
  tr->callback([&] {
    reid::TrainRun run;
    run.manifest = st.manifest;
    run.formulation = reid::parse_formulation(st.formulation);
    run.n_train = st.n_train;
    run.split_seed = st.split_seed;
    run.model = model_spec(st);
    run.config = st.tcfg;
    run.out_dir = st.out_dir;
    const auto outcome = reid::run_train(run);
    std::cout << "trained formulation " << st.formulation << " on "
              << outcome.report.triplet_count << " triplets; final mean loss "
              << outcome.report.loss_history.back()
              << ", violation fraction "
              << outcome.report.violation_history.back() << '\n'
              << "model: " << outcome.model_file.string() << '\n';
  });

  CLI::App* audit = app.add_subcommand(
      "audit", "check ranking constraints and failure situations");
  audit->configurable();
  audit->add_option("--manifest", st.manifest, "input manifest CSV")->required();
  audit->add_option("--model", st.model_file, "embedding model file")->required();
  audit->add_option("--tau", st.audit_tau, "margin tau")->capture_default_str();
  audit->add_option("--scope", st.scope, "identities to audit: train, heldout or all")
      ->check(CLI::IsMember({"train", "heldout", "all"}))
      ->capture_default_str();
  add_split_flags(audit, st, false);
  audit->add_option("--out-dir", st.out_dir, "output directory")->required();
  audit->callback([&] {
    reid::AuditRun run;
    run.manifest = st.manifest;
    run.model_file = st.model_file;
    run.tau = st.audit_tau;
    run.scope = reid::parse_audit_scope(st.scope);
    run.n_train = st.n_train;
    run.split_seed = st.split_seed;
    run.out_dir = st.out_dir;
    const auto outcome = reid::run_audit(run);
    for (int c = 0; c < 4; ++c) {
      const auto& res = outcome.report.constraints[static_cast<std::size_t>(c)];
      std::cout << reid::to_string(static_cast<reid::ConstraintId>(c)) << ": "
                << (res.satisfied ? "satisfied" : "violated") << " ("
                << res.witnesses.size() << " witnesses)   "
                << reid::to_string(static_cast<reid::SituationId>(c)) << ": "
                << (outcome.report.situations[static_cast<std::size_t>(c)].occurs
                        ? "occurs"
                        : "absent")
                << '\n';
    }
    std::cout << "complement theorems: "
              << (outcome.theorems.all_hold ? "all hold" : "VIOLATED") << '\n';
  });

  CLI::App* ev = app.add_subcommand("eval", "probe/gallery CMC evaluation");
  ev->configurable();
  ev->add_option("--manifest", st.manifest, "input manifest CSV")->required();
  ev->add_option("--model", st.model_file, "embedding model file")->required();
  add_split_flags(ev, st, true);
  ev->add_option("--ranks", st.ranks, "comma-separated CMC ranks")
      ->delimiter(',');
  ev->add_option("--out-dir", st.out_dir, "output directory")->required();
  ev->callback([&] {
    reid::EvalRun run;
    run.manifest = st.manifest;
    run.model_file = st.model_file;
    run.n_train = st.n_train.value();
    run.split_seed = st.split_seed;
    run.ranks = st.ranks;
    run.out_dir = st.out_dir;
    const auto outcome = reid::run_eval(run);
    const auto& curve = outcome.eval.curve;
    std::cout << "probes=" << curve.probe_count
              << " gallery=" << curve.gallery_count << '\n';
    for (std::size_t i = 0; i < curve.ranks.size(); ++i) {
      std::cout << "CMC(" << curve.ranks[i] << ") = " << curve.scores[i] << '\n';
    }
  });

  CLI::App* cmp = app.add_subcommand(
      "compare", "train all three formulations and compare CMC curves");
  cmp->configurable();
  cmp->add_option("--manifest", st.manifest, "input manifest CSV")->required();
  add_split_flags(cmp, st, true);
  add_model_flags(cmp, st);
  add_train_flags(cmp, st);
  cmp->add_option("--ranks", st.ranks, "comma-separated CMC ranks")
      ->delimiter(',');
  cmp->add_option("--out-dir", st.out_dir, "output directory")->required();
  cmp->callback([&] {
    reid::CompareRun run;
    run.manifest = st.manifest;
    run.n_train = st.n_train.value();
    run.split_seed = st.split_seed;
    run.model = model_spec(st);
    run.config = st.tcfg;
    run.ranks = st.ranks;
    run.out_dir = st.out_dir;
    const auto outcome = reid::run_compare(run);
    std::cout << reid::comparison_text(outcome.table) << '\n'
              << reid::ledger_table(outcome.ledger);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // 1 on usage errors, 0 for --help
  } catch (const reid::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
