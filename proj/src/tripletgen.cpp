#include "reid/tripletgen.hpp"

#include <algorithm>
#include <fstream>

namespace reid {

const char* to_string(Formulation f) {
  switch (f) {
    case Formulation::I: return "I";
    case Formulation::II: return "II";
    case Formulation::III: return "III";
  }
  return "?";
}

Formulation parse_formulation(std::string_view text) {
  if (text == "I" || text == "i" || text == "1") return Formulation::I;
  if (text == "II" || text == "ii" || text == "2") return Formulation::II;
  if (text == "III" || text == "iii" || text == "3") return Formulation::III;
  throw ConfigError("formulation must be I, II or III, got '" +
                    std::string(text) + "'");
}

TripletSet::TripletSet(const Dataset& source, Formulation formulation,
                       std::vector<Triplet> triplets)
    : source_(&source), formulation_(formulation), triplets_(std::move(triplets)) {
  const std::uint64_t expected =
      expected_count(source.shared_count(), formulation);
  if (triplets_.size() != expected) {
    throw ProtocolError("triplet set has " + std::to_string(triplets_.size()) +
                        " entries, closed form expects " +
                        std::to_string(expected));
  }
  std::vector<Triplet> sorted = triplets_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ProtocolError("triplet set contains duplicate triples");
  }
}

std::uint64_t expected_count(std::uint64_t p, Formulation f) {
  if (p < 2) return 0;
  const std::uint64_t pairs = p * (p - 1);
  switch (f) {
    case Formulation::I: return pairs;
    case Formulation::II: return 2 * pairs;
    case Formulation::III: return 4 * pairs;
  }
  return 0;
}

TripletSet enumerate_triplets(const Dataset& train, Formulation f) {
  const std::vector<std::int64_t> ids = train.shared_identities();
  // Every training identity must be shared; a one-view identity cannot form
  // its forced positive pair.
  for (const Sample& s : train.samples()) {
    if (!train.has(s.identity, other_view(s.view))) {
      throw ProtocolError("training identity " + std::to_string(s.identity) +
                          " lacks a sample in view " +
                          std::string(1, view_char(other_view(s.view))));
    }
  }

  const std::size_t p = ids.size();
  const std::size_t triplets_per_anchor =
      p < 2 ? 0 : (f == Formulation::III ? 2 * (p - 1) : (p - 1));
  const std::size_t anchors_per_identity = f == Formulation::I ? 1 : 2;
  const std::size_t per_identity = anchors_per_identity * triplets_per_anchor;

  std::vector<Triplet> triplets(per_identity * p);

  // Anchor identities fill disjoint slices, so the loop can run in parallel
  // while keeping the documented lexicographic order.
#pragma omp parallel for schedule(static)
  for (std::int64_t ji = 0; ji < static_cast<std::int64_t>(p); ++ji) {
    const std::int64_t j = ids[static_cast<std::size_t>(ji)];
    std::size_t slot = per_identity * static_cast<std::size_t>(ji);
    const View anchor_views[2] = {View::A, View::B};
    for (std::size_t vi = 0; vi < anchors_per_identity; ++vi) {
      const View x = anchor_views[vi];
      const View y = other_view(x);
      const std::size_t anchor = train.position(j, x);
      const std::size_t positive = train.position(j, y);
      for (std::size_t ki = 0; ki < p; ++ki) {
        const std::int64_t k = ids[ki];
        if (k == j) continue;
        switch (f) {
          case Formulation::I:
          case Formulation::II:
            // negative comes from the positive's view
            triplets[slot++] = Triplet{anchor, positive, train.position(k, y)};
            break;
          case Formulation::III:
            triplets[slot++] = Triplet{anchor, positive, train.position(k, View::A)};
            triplets[slot++] = Triplet{anchor, positive, train.position(k, View::B)};
            break;
        }
      }
    }
  }

  return TripletSet(train, f, std::move(triplets));
}

std::vector<std::vector<std::size_t>> make_batches(const TripletSet& set,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed,
                                                   std::uint64_t epoch) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix64(seed) ^ mix64(epoch + 0x9e3779b97f4a7c15ULL));
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(start + batch_size, order.size());
    batches.emplace_back(order.begin() + start, order.begin() + stop);
  }
  return batches;
}

void save_triplets_csv(const TripletSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write triplet CSV '" + path.string() + "'");
  out << "anchor_identity,anchor_view,positive_identity,positive_view,"
         "negative_identity,negative_view\n";
  const Dataset& ds = set.source();
  for (const Triplet& t : set.triplets()) {
    const Sample& a = ds.sample(t.anchor);
    const Sample& pos = ds.sample(t.positive);
    const Sample& neg = ds.sample(t.negative);
    out << a.identity << ',' << view_char(a.view) << ',' << pos.identity << ','
        << view_char(pos.view) << ',' << neg.identity << ','
        << view_char(neg.view) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace reid
