#ifndef REID_AUDIT_HPP_
#define REID_AUDIT_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reid/dataset.hpp"
#include "reid/embedding.hpp"
#include "reid/tripletgen.hpp"

namespace reid {

// Universal ranking constraints over the embedded shared identities. Each
// one demands, for every ordered identity pair (j, k) with j != k, that an
// anchor's distance to a wrong-identity sample exceeds the distance to its
// own cross-view partner by more than tau (squared Euclidean throughout):
//   c1  anchor view A, wrong-identity sample from view B
//   c2  anchor view B, wrong-identity sample from view A
//   c3  anchor view A, wrong-identity sample from view A
//   c4  anchor view B, wrong-identity sample from view B
enum class ConstraintId { c1, c2, c3, c4 };

// Existential failure modes, the exact complements of c1..c4: some pair
// (p, q) where the anchor is NOT closer (by tau) to its cross-view partner
// than to the other identity's sample.
//   s_a  positive-pair sparsity seen from view A   (complement of c1)
//   s_b  positive-pair sparsity seen from view B   (complement of c2)
//   s_c  identity clustering within view A         (complement of c3)
//   s_d  identity clustering within view B         (complement of c4)
enum class SituationId { s_a, s_b, s_c, s_d };

const char* to_string(ConstraintId id);
const char* to_string(SituationId id);
SituationId situation_for(ConstraintId id);
ConstraintId constraint_for(SituationId id);

// One ordered identity pair that breaks a constraint / realizes a situation.
// Boundary convention: slack exactly tau counts as satisfied/absent, so a
// constraint's violating pairs and its situation's witnesses coincide.
struct Witness {
  std::int64_t p = 0;  // anchor identity
  std::int64_t q = 0;  // other identity
  double lhs_distance = 0.0;  // anchor -> wrong-identity sample
  double rhs_distance = 0.0;  // anchor -> own cross-view partner
  double slack = 0.0;         // lhs - rhs

  bool operator==(const Witness&) const = default;
};

struct ConstraintResult {
  bool satisfied = true;
  std::vector<Witness> witnesses;  // violating pairs, (p, q) ascending
};

struct SituationResult {
  bool occurs = false;
  std::vector<Witness> witnesses;  // realizing pairs, (p, q) ascending
};

struct AuditReport {
  double tau = 0.0;
  std::size_t population = 0;  // P, shared identities audited
  std::array<ConstraintResult, 4> constraints;
  std::array<SituationResult, 4> situations;
};

// Evaluates one constraint over all ordered pairs of the dataset's shared
// identities (at least two required). Satisfied iff no witness.
ConstraintResult check_constraint(const EmbeddingModel& model,
                                  const Dataset& shared, ConstraintId id,
                                  double tau);

// Independent pass over the same pairs with the situations' own predicate
// (slack strictly below tau). Kept as a separate code path from
// check_constraint so the complement theorems are a real cross-check.
std::array<SituationResult, 4> detect_situations(const EmbeddingModel& model,
                                                 const Dataset& shared,
                                                 double tau);

AuditReport audit_embedding(const EmbeddingModel& model, const Dataset& shared,
                            double tau);

struct TheoremCheck {
  ConstraintId constraint = ConstraintId::c1;
  SituationId situation = SituationId::s_a;
  bool holds = false;
  std::vector<Witness> counterexamples;
};

struct TheoremReport {
  std::array<TheoremCheck, 4> checks;
  bool all_hold = false;
};

// Checks the four biconditionals "constraint satisfied for every pair iff
// its situation has no witness". Under the shared boundary convention a
// failure can only mean an implementation bug.
TheoremReport verify_complement_theorems(const EmbeddingModel& model,
                                         const Dataset& shared, double tau);

// Situations a formulation's triplet set rules out once trained to zero
// violations: I -> {s_a}, II -> {s_a, s_b}, III -> all four.
std::vector<SituationId> prevented_situations(Formulation f);

struct LedgerRow {
  Formulation formulation = Formulation::I;
  double violation_fraction = 0.0;  // over this formulation's triplet set
  bool zero_violations = false;
  std::array<bool, 4> situation_occurs{};
  bool prevention_upheld = false;  // meaningful only when zero_violations
};

struct PreventionLedger {
  double tau = 0.0;
  std::size_t population = 0;
  std::vector<LedgerRow> rows;
  bool all_preconditions_met = false;
};

// Per-formulation situation occurrence over the given (training) identities.
// Rows whose model still violates its triplet set are flagged rather than
// asserted against.
PreventionLedger prevention_ledger(
    const std::map<Formulation, EmbeddingModel>& trained_models,
    const Dataset& shared, double tau);

std::string ledger_table(const PreventionLedger& ledger);
nlohmann::json ledger_json(const PreventionLedger& ledger);
nlohmann::json audit_report_json(const AuditReport& report);

}  // namespace reid

#endif  // REID_AUDIT_HPP_
