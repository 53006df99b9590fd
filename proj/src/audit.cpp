#include "reid/audit.hpp"

#include <iomanip>
#include <sstream>

#include "reid/kernels.hpp"

namespace reid {

namespace {

struct SharedFeatures {
  std::vector<std::int64_t> ids;   // ascending
  std::vector<double> feats_a;     // P x n
  std::vector<double> feats_b;     // P x n
  std::size_t dim = 0;
};

SharedFeatures embed_shared(const EmbeddingModel& model, const Dataset& shared) {
  model.validate();
  SharedFeatures out;
  out.ids = shared.shared_identities();
  if (out.ids.size() < 2) {
    throw DegenerateError("audit needs at least 2 shared identities, have " +
                          std::to_string(out.ids.size()));
  }
  std::vector<Sample> a_samples, b_samples;
  a_samples.reserve(out.ids.size());
  b_samples.reserve(out.ids.size());
  for (std::int64_t id : out.ids) {
    a_samples.push_back(shared.sample(shared.position(id, View::A)));
    b_samples.push_back(shared.sample(shared.position(id, View::B)));
  }
  out.feats_a = kernels::embed_all(model, a_samples);
  out.feats_b = kernels::embed_all(model, b_samples);
  out.dim = model.out_dim;
  return out;
}

// anchor / negative feature matrices per constraint; the partner matrix is
// always the anchor's other view.
void select_views(const SharedFeatures& sf, ConstraintId id,
                  std::span<const double>& anchor,
                  std::span<const double>& partner,
                  std::span<const double>& negative) {
  switch (id) {
    case ConstraintId::c1:
      anchor = sf.feats_a; partner = sf.feats_b; negative = sf.feats_b;
      return;
    case ConstraintId::c2:
      anchor = sf.feats_b; partner = sf.feats_a; negative = sf.feats_a;
      return;
    case ConstraintId::c3:
      anchor = sf.feats_a; partner = sf.feats_b; negative = sf.feats_a;
      return;
    case ConstraintId::c4:
      anchor = sf.feats_b; partner = sf.feats_a; negative = sf.feats_b;
      return;
  }
  throw ConfigError("unknown constraint id");
}

Witness to_witness(const SharedFeatures& sf, const kernels::PairSlack& ps) {
  Witness w;
  w.p = sf.ids[ps.j];
  w.q = sf.ids[ps.k];
  w.lhs_distance = ps.lhs;
  w.rhs_distance = ps.rhs;
  w.slack = ps.lhs - ps.rhs;
  return w;
}

nlohmann::json witness_json(const Witness& w) {
  return nlohmann::json{{"p", w.p},
                        {"q", w.q},
                        {"lhs_distance", w.lhs_distance},
                        {"rhs_distance", w.rhs_distance},
                        {"slack", w.slack}};
}

}  // namespace

const char* to_string(ConstraintId id) {
  switch (id) {
    case ConstraintId::c1: return "c1";
    case ConstraintId::c2: return "c2";
    case ConstraintId::c3: return "c3";
    case ConstraintId::c4: return "c4";
  }
  return "?";
}

const char* to_string(SituationId id) {
  switch (id) {
    case SituationId::s_a: return "s_a";
    case SituationId::s_b: return "s_b";
    case SituationId::s_c: return "s_c";
    case SituationId::s_d: return "s_d";
  }
  return "?";
}

SituationId situation_for(ConstraintId id) {
  return static_cast<SituationId>(static_cast<int>(id));
}

ConstraintId constraint_for(SituationId id) {
  return static_cast<ConstraintId>(static_cast<int>(id));
}

ConstraintResult check_constraint(const EmbeddingModel& model,
                                  const Dataset& shared, ConstraintId id,
                                  double tau) {
  const SharedFeatures sf = embed_shared(model, shared);
  std::span<const double> anchor, partner, negative;
  select_views(sf, id, anchor, partner, negative);
  const auto violations = kernels::pair_slack_scan(
      anchor, partner, negative, sf.ids.size(), sf.dim, tau);
  ConstraintResult result;
  result.witnesses.reserve(violations.size());
  for (const auto& ps : violations) result.witnesses.push_back(to_witness(sf, ps));
  result.satisfied = result.witnesses.empty();
  return result;
}

std::array<SituationResult, 4> detect_situations(const EmbeddingModel& model,
                                                 const Dataset& shared,
                                                 double tau) {
  const SharedFeatures sf = embed_shared(model, shared);
  const std::size_t p_count = sf.ids.size();
  const std::size_t n = sf.dim;
  std::array<SituationResult, 4> results;

  // Deliberately a plain double loop transcribing each situation's strict
  // inequality, independent of the constraint scan.
  const auto row = [&](const std::vector<double>& m, std::size_t i) {
    return std::span<const double>(m.data() + i * n, n);
  };
  for (int s = 0; s < 4; ++s) {
    const auto sid = static_cast<SituationId>(s);
    const bool anchor_in_a = sid == SituationId::s_a || sid == SituationId::s_c;
    const bool negative_in_a = sid == SituationId::s_b || sid == SituationId::s_c;
    const std::vector<double>& anchors = anchor_in_a ? sf.feats_a : sf.feats_b;
    const std::vector<double>& partners = anchor_in_a ? sf.feats_b : sf.feats_a;
    const std::vector<double>& negatives = negative_in_a ? sf.feats_a : sf.feats_b;
    SituationResult& res = results[static_cast<std::size_t>(s)];
    for (std::size_t j = 0; j < p_count; ++j) {
      const double rhs = sq_dist(row(anchors, j), row(partners, j));
      for (std::size_t k = 0; k < p_count; ++k) {
        if (k == j) continue;
        const double lhs = sq_dist(row(anchors, j), row(negatives, k));
        if (lhs - rhs < tau) {
          Witness w;
          w.p = sf.ids[j];
          w.q = sf.ids[k];
          w.lhs_distance = lhs;
          w.rhs_distance = rhs;
          w.slack = lhs - rhs;
          res.witnesses.push_back(w);
        }
      }
    }
    res.occurs = !res.witnesses.empty();
  }
  return results;
}

AuditReport audit_embedding(const EmbeddingModel& model, const Dataset& shared,
                            double tau) {
  AuditReport report;
  report.tau = tau;
  report.population = shared.shared_identities().size();
  for (int c = 0; c < 4; ++c) {
    report.constraints[static_cast<std::size_t>(c)] =
        check_constraint(model, shared, static_cast<ConstraintId>(c), tau);
  }
  report.situations = detect_situations(model, shared, tau);
  return report;
}

TheoremReport verify_complement_theorems(const EmbeddingModel& model,
                                         const Dataset& shared, double tau) {
  TheoremReport report;
  report.all_hold = true;
  const auto situations = detect_situations(model, shared, tau);
  for (int c = 0; c < 4; ++c) {
    const auto cid = static_cast<ConstraintId>(c);
    const ConstraintResult cres = check_constraint(model, shared, cid, tau);
    const SituationResult& sres = situations[static_cast<std::size_t>(c)];
    TheoremCheck& check = report.checks[static_cast<std::size_t>(c)];
    check.constraint = cid;
    check.situation = situation_for(cid);
    check.holds = cres.satisfied == !sres.occurs;
    if (!check.holds) {
      check.counterexamples = cres.satisfied ? sres.witnesses : cres.witnesses;
      report.all_hold = false;
    }
  }
  return report;
}

std::vector<SituationId> prevented_situations(Formulation f) {
  switch (f) {
    case Formulation::I: return {SituationId::s_a};
    case Formulation::II: return {SituationId::s_a, SituationId::s_b};
    case Formulation::III:
      return {SituationId::s_a, SituationId::s_b, SituationId::s_c,
              SituationId::s_d};
  }
  return {};
}

PreventionLedger prevention_ledger(
    const std::map<Formulation, EmbeddingModel>& trained_models,
    const Dataset& shared, double tau) {
  PreventionLedger ledger;
  ledger.tau = tau;
  ledger.population = shared.shared_identities().size();
  ledger.all_preconditions_met = true;

  for (const auto& [formulation, model] : trained_models) {
    LedgerRow row;
    row.formulation = formulation;

    const TripletSet set = enumerate_triplets(shared, formulation);
    if (set.empty()) {
      throw DegenerateError("prevention ledger needs at least 2 shared identities");
    }
    const auto losses =
        kernels::triplet_losses(model, shared, set.triplets(), tau);
    std::size_t violations = 0;
    for (double l : losses) {
      if (l > 0.0) ++violations;
    }
    row.violation_fraction =
        static_cast<double>(violations) / static_cast<double>(set.size());
    row.zero_violations = violations == 0;
    if (!row.zero_violations) ledger.all_preconditions_met = false;

    const auto situations = detect_situations(model, shared, tau);
    for (int s = 0; s < 4; ++s) {
      row.situation_occurs[static_cast<std::size_t>(s)] =
          situations[static_cast<std::size_t>(s)].occurs;
    }

    row.prevention_upheld = true;
    if (row.zero_violations) {
      for (SituationId sid : prevented_situations(formulation)) {
        if (row.situation_occurs[static_cast<std::size_t>(sid)]) {
          row.prevention_upheld = false;  // only reachable through a bug
        }
      }
    }
    ledger.rows.push_back(row);
  }
  return ledger;
}

std::string ledger_table(const PreventionLedger& ledger) {
  std::ostringstream out;
  out << "prevention ledger: situation occurrence on training identities"
      << " (P=" << ledger.population << ", tau=" << format_double(ledger.tau)
      << ")\n";
  out << std::left << std::setw(13) << "formulation" << std::setw(20)
      << "violation_fraction";
  for (int s = 0; s < 4; ++s) {
    out << std::setw(9) << to_string(static_cast<SituationId>(s));
  }
  out << '\n';
  for (const LedgerRow& row : ledger.rows) {
    out << std::left << std::setw(13) << to_string(row.formulation)
        << std::setw(20) << format_double(row.violation_fraction);
    for (int s = 0; s < 4; ++s) {
      out << std::setw(9)
          << (row.situation_occurs[static_cast<std::size_t>(s)] ? "present"
                                                                : "absent");
    }
    out << '\n';
    if (!row.zero_violations) {
      out << "  (constraints not fully satisfied for " << to_string(row.formulation)
          << "; occurrences above are observations, not assertions)\n";
    }
  }
  return out.str();
}

nlohmann::json ledger_json(const PreventionLedger& ledger) {
  nlohmann::json rows = nlohmann::json::array();
  for (const LedgerRow& row : ledger.rows) {
    nlohmann::json occurs;
    for (int s = 0; s < 4; ++s) {
      occurs[to_string(static_cast<SituationId>(s))] =
          row.situation_occurs[static_cast<std::size_t>(s)];
    }
    nlohmann::json prevented = nlohmann::json::array();
    for (SituationId sid : prevented_situations(row.formulation)) {
      prevented.push_back(to_string(sid));
    }
    rows.push_back({{"formulation", to_string(row.formulation)},
                    {"violation_fraction", row.violation_fraction},
                    {"zero_violations", row.zero_violations},
                    {"situation_occurs", occurs},
                    {"prevented_situations", prevented},
                    {"prevention_upheld", row.prevention_upheld}});
  }
  return nlohmann::json{{"tau", ledger.tau},
                        {"population", ledger.population},
                        {"all_preconditions_met", ledger.all_preconditions_met},
                        {"rows", rows}};
}

nlohmann::json audit_report_json(const AuditReport& report) {
  nlohmann::json constraints;
  for (int c = 0; c < 4; ++c) {
    const ConstraintResult& res = report.constraints[static_cast<std::size_t>(c)];
    nlohmann::json witnesses = nlohmann::json::array();
    for (const Witness& w : res.witnesses) witnesses.push_back(witness_json(w));
    constraints[to_string(static_cast<ConstraintId>(c))] = {
        {"satisfied", res.satisfied}, {"witnesses", witnesses}};
  }
  nlohmann::json situations;
  for (int s = 0; s < 4; ++s) {
    const SituationResult& res = report.situations[static_cast<std::size_t>(s)];
    nlohmann::json witnesses = nlohmann::json::array();
    for (const Witness& w : res.witnesses) witnesses.push_back(witness_json(w));
    situations[to_string(static_cast<SituationId>(s))] = {
        {"occurs", res.occurs}, {"witnesses", witnesses}};
  }
  return nlohmann::json{{"tau", report.tau},
                        {"population", report.population},
                        {"constraints", constraints},
                        {"situations", situations}};
}

}  // namespace reid
