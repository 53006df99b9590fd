#ifndef REID_CMC_HPP_
#define REID_CMC_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "reid/dataset.hpp"
#include "reid/embedding.hpp"

namespace reid {

// Cumulative matching characteristic: scores[i] is the fraction of probes
// whose correct gallery match ranked within the top ranks[i].
struct CmcCurve {
  std::vector<std::size_t> ranks;  // ascending, last entry = gallery_count
  std::vector<double> scores;      // non-decreasing, last entry = 1
  std::size_t probe_count = 0;
  std::size_t gallery_count = 0;

  double score_at(std::size_t rank) const;  // throws EvalError if absent
  void validate() const;
};

struct RankResult {
  std::int64_t probe_identity = 0;
  std::size_t rank = 0;  // 1-based
  double correct_distance = 0.0;
  double best_distance = 0.0;
};

// 1 + number of gallery entries strictly closer than the correct one, plus
// equal-distance entries appearing earlier in gallery_order (pass an empty
// order for the natural 0..G-1 order).
std::size_t rank_of_match(std::span<const double> distances,
                          std::size_t correct_index,
                          std::span<const std::size_t> gallery_order);

struct CmcEvaluation {
  CmcCurve curve;
  std::vector<RankResult> per_probe;  // probe order
};

// Embeds probe and gallery once, ranks every probe against the gallery by
// squared Euclidean distance, and accumulates the curve at the requested
// ranks (clamped to the gallery size; the gallery size itself is always
// included so the curve ends at 1).
CmcEvaluation evaluate_cmc(const EmbeddingModel& model, const SplitSpec& split,
                           std::vector<std::size_t> ranks);

// {1, 5, 10, 20, 50, 100}
const std::vector<std::size_t>& default_ranks();

struct ComparisonTable {
  std::vector<std::size_t> ranks;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> scores;  // [label][rank]
  std::vector<double> best_score;           // per rank
};

// Rank-by-label table over curves sharing the same rank list; the best
// score per rank is recorded so renderers can mark it.
ComparisonTable compare_curves(
    const std::vector<std::pair<std::string, CmcCurve>>& curves);

std::string comparison_text(const ComparisonTable& table);
nlohmann::json comparison_json(const ComparisonTable& table);
void save_curve_csv(const CmcCurve& curve, const std::filesystem::path& path);
void save_rank_results_csv(const std::vector<RankResult>& results,
                           const std::filesystem::path& path);

}  // namespace reid

#endif  // REID_CMC_HPP_
