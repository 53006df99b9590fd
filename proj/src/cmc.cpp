#include "reid/cmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "reid/kernels.hpp"

namespace reid {

double CmcCurve::score_at(std::size_t rank) const {
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] == rank) return scores[i];
  }
  throw EvalError("curve has no score at rank " + std::to_string(rank));
}

void CmcCurve::validate() const {
  if (ranks.size() != scores.size()) {
    throw EvalError("curve rank/score lists differ in length");
  }
  if (ranks.empty()) throw EvalError("curve is empty");
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (i > 0 && ranks[i] <= ranks[i - 1]) {
      throw EvalError("curve ranks must be strictly ascending");
    }
    if (i > 0 && scores[i] < scores[i - 1]) {
      throw EvalError("curve scores must be non-decreasing");
    }
    if (scores[i] < 0.0 || scores[i] > 1.0) {
      throw EvalError("curve scores must lie in [0, 1]");
    }
  }
  if (ranks.back() != gallery_count || scores.back() != 1.0) {
    throw EvalError("curve must end at (gallery_count, 1)");
  }
}

std::size_t rank_of_match(std::span<const double> distances,
                          std::size_t correct_index,
                          std::span<const std::size_t> gallery_order) {
  const std::size_t g_count = distances.size();
  if (g_count == 0) throw EvalError("rank_of_match over an empty gallery");
  if (correct_index >= g_count) {
    throw EvalError("correct gallery index out of range");
  }
  for (double d : distances) {
    if (!std::isfinite(d)) throw EvalError("non-finite distance during ranking");
  }

  std::vector<std::size_t> pos(g_count);
  if (gallery_order.empty()) {
    for (std::size_t g = 0; g < g_count; ++g) pos[g] = g;
  } else {
    if (gallery_order.size() != g_count) {
      throw EvalError("gallery_order does not match gallery size");
    }
    std::vector<bool> seen(g_count, false);
    for (std::size_t i = 0; i < g_count; ++i) {
      const std::size_t g = gallery_order[i];
      if (g >= g_count || seen[g]) {
        throw EvalError("gallery_order is not a permutation");
      }
      seen[g] = true;
      pos[g] = i;
    }
  }

  const double dc = distances[correct_index];
  std::size_t ahead = 0;
  for (std::size_t g = 0; g < g_count; ++g) {
    if (distances[g] < dc ||
        (distances[g] == dc && pos[g] < pos[correct_index])) {
      ++ahead;
    }
  }
  return ahead + 1;
}

CmcEvaluation evaluate_cmc(const EmbeddingModel& model, const SplitSpec& split,
                           std::vector<std::size_t> ranks) {
  const std::size_t np = split.probe.size();
  const std::size_t ng = split.gallery.size();
  if (np == 0) throw ProtocolError("split has no probe samples");
  if (ng == 0) throw ProtocolError("split has no gallery samples");

  // each probe identity must match exactly one gallery entry
  std::vector<std::size_t> correct(np);
  for (std::size_t i = 0; i < np; ++i) {
    const std::int64_t id = split.probe[i].identity;
    std::size_t found = ng;
    for (std::size_t g = 0; g < ng; ++g) {
      if (split.gallery[g].identity == id) {
        if (found != ng) {
          throw ProtocolError("probe identity " + std::to_string(id) +
                              " has multiple gallery matches");
        }
        found = g;
      }
    }
    if (found == ng) {
      throw ProtocolError("probe identity " + std::to_string(id) +
                          " has no gallery match");
    }
    correct[i] = found;
  }

  const std::vector<double> probe_feats = kernels::embed_all(model, split.probe);
  const std::vector<double> gallery_feats =
      kernels::embed_all(model, split.gallery);
  const std::vector<double> dist = kernels::sq_dist_matrix(
      probe_feats, np, gallery_feats, ng, model.out_dim);
  const std::vector<kernels::RankRow> rows =
      kernels::ranks_all(dist, np, ng, correct);

  CmcEvaluation eval;
  eval.per_probe.resize(np);
  for (std::size_t i = 0; i < np; ++i) {
    eval.per_probe[i] = RankResult{split.probe[i].identity, rows[i].rank,
                                   rows[i].correct_distance,
                                   rows[i].best_distance};
  }

  // clamp requested ranks to the gallery size and always include the end
  for (std::size_t& r : ranks) r = std::min(std::max<std::size_t>(r, 1), ng);
  ranks.push_back(ng);
  std::sort(ranks.begin(), ranks.end());
  ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());

  CmcCurve curve;
  curve.probe_count = np;
  curve.gallery_count = ng;
  curve.ranks = std::move(ranks);
  curve.scores.reserve(curve.ranks.size());
  for (std::size_t r : curve.ranks) {
    std::size_t hits = 0;
    for (const RankResult& res : eval.per_probe) {
      if (res.rank <= r) ++hits;
    }
    curve.scores.push_back(static_cast<double>(hits) / static_cast<double>(np));
  }
  curve.validate();
  eval.curve = std::move(curve);
  return eval;
}

const std::vector<std::size_t>& default_ranks() {
  static const std::vector<std::size_t> ranks{1, 5, 10, 20, 50, 100};
  return ranks;
}

ComparisonTable compare_curves(
    const std::vector<std::pair<std::string, CmcCurve>>& curves) {
  if (curves.empty()) throw EvalError("compare_curves needs at least one curve");
  ComparisonTable table;
  table.ranks = curves.front().second.ranks;
  for (const auto& [label, curve] : curves) {
    if (curve.ranks != table.ranks) {
      throw EvalError("curve '" + label + "' has mismatched ranks");
    }
    table.labels.push_back(label);
    table.scores.push_back(curve.scores);
  }
  table.best_score.assign(table.ranks.size(), 0.0);
  for (std::size_t r = 0; r < table.ranks.size(); ++r) {
    double best = 0.0;
    for (const auto& row : table.scores) best = std::max(best, row[r]);
    table.best_score[r] = best;
  }
  return table;
}

std::string comparison_text(const ComparisonTable& table) {
  std::ostringstream out;
  std::size_t label_width = 12;
  for (const auto& label : table.labels) {
    label_width = std::max(label_width, label.size() + 2);
  }
  out << "CMC scores by rank (best per rank marked *)\n";
  out << std::left << std::setw(static_cast<int>(label_width)) << "model";
  for (std::size_t r : table.ranks) {
    out << std::setw(10) << ("r=" + std::to_string(r));
  }
  out << '\n';
  for (std::size_t row = 0; row < table.labels.size(); ++row) {
    out << std::left << std::setw(static_cast<int>(label_width))
        << table.labels[row];
    for (std::size_t r = 0; r < table.ranks.size(); ++r) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(4) << table.scores[row][r];
      if (table.scores[row][r] == table.best_score[r]) cell << '*';
      out << std::setw(10) << cell.str();
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json comparison_json(const ComparisonTable& table) {
  nlohmann::json curves;
  for (std::size_t row = 0; row < table.labels.size(); ++row) {
    curves[table.labels[row]] = table.scores[row];
  }
  return nlohmann::json{{"ranks", table.ranks},
                        {"curves", curves},
                        {"best_score", table.best_score}};
}

void save_curve_csv(const CmcCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write curve CSV '" + path.string() + "'");
  out << "rank,score\n";
  for (std::size_t i = 0; i < curve.ranks.size(); ++i) {
    out << curve.ranks[i] << ',' << format_double(curve.scores[i]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_rank_results_csv(const std::vector<RankResult>& results,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write rank CSV '" + path.string() + "'");
  out << "probe_identity,rank,correct_distance,best_distance\n";
  for (const RankResult& r : results) {
    out << r.probe_identity << ',' << r.rank << ','
        << format_double(r.correct_distance) << ','
        << format_double(r.best_distance) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace reid
