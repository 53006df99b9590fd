#include "reid/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "reid/loss.hpp"

namespace reid::kernels {

namespace {

double row_sq_dist(const double* u, const double* v, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double diff = u[i] - v[i];
    acc += diff * diff;
  }
  return acc;
}

void check_matrix(std::span<const double> m, std::size_t rows, std::size_t dim,
                  const char* name) {
  if (m.size() != rows * dim) {
    throw DimensionError(std::string(name) + " matrix has " +
                         std::to_string(m.size()) + " entries, expected " +
                         std::to_string(rows * dim));
  }
}

RankRow rank_row(const double* row, std::size_t ng, std::size_t correct_pos) {
  const double dc = row[correct_pos];
  std::size_t ahead = 0;
  double best = row[0];
  for (std::size_t g = 0; g < ng; ++g) {
    const double d = row[g];
    if (d < best) best = d;
    if (d < dc || (d == dc && g < correct_pos)) ++ahead;
  }
  return RankRow{ahead + 1, dc, best};
}

}  // namespace

std::vector<double> embed_all(const EmbeddingModel& model,
                              const std::vector<Sample>& samples) {
  model.validate();
  for (const Sample& s : samples) {
    if (s.data.size() != model.in_dim) {
      throw DimensionError("sample for identity " + std::to_string(s.identity) +
                           " has dimension " + std::to_string(s.data.size()) +
                           ", model expects " + std::to_string(model.in_dim));
    }
  }
  const std::size_t n = model.out_dim;
  std::vector<double> feats(samples.size() * n);
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(samples.size()); ++i) {
      model.embed_cached(samples[static_cast<std::size_t>(i)].data,
                         std::span<double>(feats.data() + i * n, n), scratch);
    }
  }
  return feats;
}

std::vector<double> embed_all_serial(const EmbeddingModel& model,
                                     const std::vector<Sample>& samples) {
  model.validate();
  const std::size_t n = model.out_dim;
  std::vector<double> feats(samples.size() * n);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    model.embed_cached(samples[i].data,
                       std::span<double>(feats.data() + i * n, n), scratch);
  }
  return feats;
}

std::vector<double> sq_dist_matrix(std::span<const double> a, std::size_t na,
                                   std::span<const double> b, std::size_t nb,
                                   std::size_t dim) {
  check_matrix(a, na, dim, "left");
  check_matrix(b, nb, dim, "right");
  std::vector<double> dist(na * nb);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(na); ++i) {
    const double* u = a.data() + i * dim;
    double* out = dist.data() + i * nb;
    for (std::size_t j = 0; j < nb; ++j) {
      out[j] = row_sq_dist(u, b.data() + j * dim, dim);
    }
  }
  return dist;
}

std::vector<double> sq_dist_matrix_serial(std::span<const double> a,
                                          std::size_t na,
                                          std::span<const double> b,
                                          std::size_t nb, std::size_t dim) {
  check_matrix(a, na, dim, "left");
  check_matrix(b, nb, dim, "right");
  std::vector<double> dist(na * nb);
  for (std::size_t i = 0; i < na; ++i) {
    const double* u = a.data() + i * dim;
    double* out = dist.data() + i * nb;
    for (std::size_t j = 0; j < nb; ++j) {
      out[j] = row_sq_dist(u, b.data() + j * dim, dim);
    }
  }
  return dist;
}

std::vector<double> triplet_losses(const EmbeddingModel& model,
                                   const Dataset& data,
                                   std::span<const Triplet> triplets,
                                   double tau) {
  std::vector<double> losses(triplets.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(triplets.size()); ++t) {
    const Triplet& tr = triplets[static_cast<std::size_t>(t)];
    losses[static_cast<std::size_t>(t)] =
        triplet_loss(model, data.sample(tr.anchor).data,
                     data.sample(tr.positive).data,
                     data.sample(tr.negative).data, tau);
  }
  return losses;
}

std::vector<double> triplet_losses_serial(const EmbeddingModel& model,
                                          const Dataset& data,
                                          std::span<const Triplet> triplets,
                                          double tau) {
  std::vector<double> losses(triplets.size());
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    const Triplet& tr = triplets[t];
    losses[t] = triplet_loss(model, data.sample(tr.anchor).data,
                             data.sample(tr.positive).data,
                             data.sample(tr.negative).data, tau);
  }
  return losses;
}

// Per-triplet gradients land in chunk slots and are reduced in batch order,
// so the sum is grouped exactly as in the serial twin.
BatchGradient batch_gradient(const EmbeddingModel& model, const Dataset& data,
                             std::span<const Triplet> batch, double tau) {
  if (batch.empty()) throw ConfigError("batch_gradient over an empty batch");
  const std::size_t n_params = model.params.size();
  constexpr std::size_t kChunk = 256;

  BatchGradient result;
  result.losses.resize(batch.size());
  std::vector<double> acc(n_params, 0.0);
  std::vector<double> slots(std::min(batch.size(), kChunk) * n_params);

  for (std::size_t start = 0; start < batch.size(); start += kChunk) {
    const std::size_t stop = std::min(start + kChunk, batch.size());
    const std::size_t width = stop - start;
    std::fill(slots.begin(), slots.begin() + width * n_params, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(width); ++t) {
      const Triplet& tr = batch[start + static_cast<std::size_t>(t)];
      std::span<double> slot(slots.data() + t * n_params, n_params);
      result.losses[start + static_cast<std::size_t>(t)] =
          triplet_loss_accumulate_grad(model, data.sample(tr.anchor).data,
                                       data.sample(tr.positive).data,
                                       data.sample(tr.negative).data, tau, slot);
    }
    for (std::size_t t = 0; t < width; ++t) {
      const double* slot = slots.data() + t * n_params;
      for (std::size_t i = 0; i < n_params; ++i) acc[i] += slot[i];
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : acc) g *= inv;
  result.grad = std::move(acc);
  return result;
}

BatchGradient batch_gradient_serial(const EmbeddingModel& model,
                                    const Dataset& data,
                                    std::span<const Triplet> batch, double tau) {
  if (batch.empty()) throw ConfigError("batch_gradient over an empty batch");
  const std::size_t n_params = model.params.size();
  BatchGradient result;
  result.losses.resize(batch.size());
  std::vector<double> acc(n_params, 0.0);
  std::vector<double> slot(n_params);
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const Triplet& tr = batch[t];
    std::fill(slot.begin(), slot.end(), 0.0);
    result.losses[t] = triplet_loss_accumulate_grad(
        model, data.sample(tr.anchor).data, data.sample(tr.positive).data,
        data.sample(tr.negative).data, tau, slot);
    for (std::size_t i = 0; i < n_params; ++i) acc[i] += slot[i];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : acc) g *= inv;
  result.grad = std::move(acc);
  return result;
}

std::vector<PairSlack> pair_slack_scan(std::span<const double> anchor,
                                       std::span<const double> partner,
                                       std::span<const double> negative,
                                       std::size_t count, std::size_t dim,
                                       double tau) {
  check_matrix(anchor, count, dim, "anchor");
  check_matrix(partner, count, dim, "partner");
  check_matrix(negative, count, dim, "negative");
  std::vector<std::vector<PairSlack>> buckets(count);
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(count); ++j) {
    const double* aj = anchor.data() + j * dim;
    const double rhs = row_sq_dist(aj, partner.data() + j * dim, dim);
    auto& bucket = buckets[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < count; ++k) {
      if (k == static_cast<std::size_t>(j)) continue;
      const double lhs = row_sq_dist(aj, negative.data() + k * dim, dim);
      if (lhs - rhs < tau) {
        bucket.push_back(PairSlack{static_cast<std::size_t>(j), k, lhs, rhs});
      }
    }
  }
  std::vector<PairSlack> out;
  for (auto& bucket : buckets) {
    out.insert(out.end(), bucket.begin(), bucket.end());
  }
  return out;
}

std::vector<PairSlack> pair_slack_scan_serial(std::span<const double> anchor,
                                              std::span<const double> partner,
                                              std::span<const double> negative,
                                              std::size_t count, std::size_t dim,
                                              double tau) {
  check_matrix(anchor, count, dim, "anchor");
  check_matrix(partner, count, dim, "partner");
  check_matrix(negative, count, dim, "negative");
  std::vector<PairSlack> out;
  for (std::size_t j = 0; j < count; ++j) {
    const double* aj = anchor.data() + j * dim;
    const double rhs = row_sq_dist(aj, partner.data() + j * dim, dim);
    for (std::size_t k = 0; k < count; ++k) {
      if (k == j) continue;
      const double lhs = row_sq_dist(aj, negative.data() + k * dim, dim);
      if (lhs - rhs < tau) out.push_back(PairSlack{j, k, lhs, rhs});
    }
  }
  return out;
}

std::vector<RankRow> ranks_all(std::span<const double> dist, std::size_t np,
                               std::size_t ng,
                               std::span<const std::size_t> correct) {
  check_matrix(dist, np, ng, "distance");
  if (correct.size() != np) {
    throw DimensionError("correct-index list does not match probe count");
  }
  for (std::size_t i = 0; i < np; ++i) {
    if (correct[i] >= ng) throw EvalError("correct gallery index out of range");
  }
  std::vector<RankRow> rows(np);
  std::atomic<bool> bad{false};
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(np); ++i) {
    const double* row = dist.data() + i * ng;
    for (std::size_t g = 0; g < ng; ++g) {
      if (!std::isfinite(row[g])) bad.store(true, std::memory_order_relaxed);
    }
    rows[static_cast<std::size_t>(i)] =
        rank_row(row, ng, correct[static_cast<std::size_t>(i)]);
  }
  if (bad.load()) throw EvalError("non-finite distance during ranking");
  return rows;
}

std::vector<RankRow> ranks_all_serial(std::span<const double> dist,
                                      std::size_t np, std::size_t ng,
                                      std::span<const std::size_t> correct) {
  check_matrix(dist, np, ng, "distance");
  if (correct.size() != np) {
    throw DimensionError("correct-index list does not match probe count");
  }
  for (std::size_t i = 0; i < np; ++i) {
    if (correct[i] >= ng) throw EvalError("correct gallery index out of range");
  }
  std::vector<RankRow> rows(np);
  for (std::size_t i = 0; i < np; ++i) {
    const double* row = dist.data() + i * ng;
    for (std::size_t g = 0; g < ng; ++g) {
      if (!std::isfinite(row[g])) {
        throw EvalError("non-finite distance during ranking");
      }
    }
    rows[i] = rank_row(row, ng, correct[i]);
  }
  return rows;
}

}  // namespace reid::kernels
