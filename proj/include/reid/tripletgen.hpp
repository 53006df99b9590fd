#ifndef REID_TRIPLETGEN_HPP_
#define REID_TRIPLETGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "reid/dataset.hpp"

namespace reid {

// View-assignment rules for (anchor, positive, negative), by increasing
// permissiveness:
//   I   anchor view A, positive view B, negative view B
//   II  anchor either view, positive the other, negative in the positive's view
//   III anchor either view, positive the other, negative in either view
enum class Formulation { I, II, III };

const char* to_string(Formulation f);
Formulation parse_formulation(std::string_view text);

// Sample positions into the source dataset. The positive always shares the
// anchor's identity; the negative never does.
struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;

  bool operator==(const Triplet&) const = default;
  auto operator<=>(const Triplet&) const = default;
};

// All triplets admitted by one formulation over one training dataset, in
// the documented emission order. Holds positions only; the source dataset
// must outlive the set.
class TripletSet {
 public:
  TripletSet(const Dataset& source, Formulation formulation,
             std::vector<Triplet> triplets);

  Formulation formulation() const { return formulation_; }
  std::size_t size() const { return triplets_.size(); }
  bool empty() const { return triplets_.empty(); }
  const std::vector<Triplet>& triplets() const { return triplets_; }
  const Dataset& source() const { return *source_; }

 private:
  const Dataset* source_;
  Formulation formulation_;
  std::vector<Triplet> triplets_;
};

// Closed-form set size for P shared identities:
// P(P-1) for I, 2P(P-1) for II, 4P(P-1) for III.
std::uint64_t expected_count(std::uint64_t p, Formulation f);

// Emits every admissible triplet in lexicographic
// (anchor identity, anchor view, negative identity, negative view) order
// with A < B. The positive is forced: the anchor identity's other view.
// Requires every identity in `train` to have a sample in both views.
TripletSet enumerate_triplets(const Dataset& train, Formulation f);

// Seeded per-epoch shuffle of 0..size-1, cut into consecutive chunks of
// batch_size (last chunk may be short). Deterministic per (seed, epoch).
std::vector<std::vector<std::size_t>> make_batches(const TripletSet& set,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed,
                                                   std::uint64_t epoch);

// CSV export, emission order:
// anchor_identity,anchor_view,positive_identity,positive_view,negative_identity,negative_view
void save_triplets_csv(const TripletSet& set, const std::filesystem::path& path);

}  // namespace reid

#endif  // REID_TRIPLETGEN_HPP_
