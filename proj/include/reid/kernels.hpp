#ifndef REID_KERNELS_HPP_
#define REID_KERNELS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "reid/dataset.hpp"
#include "reid/embedding.hpp"
#include "reid/tripletgen.hpp"

namespace reid::kernels {

// Data-parallel cores. Each OpenMP kernel writes results into slots indexed
// by loop position and reduces in a fixed order, so its output is bitwise
// identical to the serial reference at any thread count. The *_serial twins
// are kept for parity tests and benchmarks.

// Row-major samples.size() x model.out_dim feature matrix.
std::vector<double> embed_all(const EmbeddingModel& model,
                              const std::vector<Sample>& samples);
std::vector<double> embed_all_serial(const EmbeddingModel& model,
                                     const std::vector<Sample>& samples);

// Row-major na x nb matrix of squared Euclidean distances between rows of
// two row-major matrices with `dim` columns.
std::vector<double> sq_dist_matrix(std::span<const double> a, std::size_t na,
                                   std::span<const double> b, std::size_t nb,
                                   std::size_t dim);
std::vector<double> sq_dist_matrix_serial(std::span<const double> a,
                                          std::size_t na,
                                          std::span<const double> b,
                                          std::size_t nb, std::size_t dim);

// Hinge loss per triplet, slot-indexed by position in `triplets`.
std::vector<double> triplet_losses(const EmbeddingModel& model,
                                   const Dataset& data,
                                   std::span<const Triplet> triplets,
                                   double tau);
std::vector<double> triplet_losses_serial(const EmbeddingModel& model,
                                          const Dataset& data,
                                          std::span<const Triplet> triplets,
                                          double tau);

struct BatchGradient {
  std::vector<double> grad;    // mean over the batch, one entry per parameter
  std::vector<double> losses;  // pre-update loss per triplet, batch order
};

// Mean gradient of the hinge loss over a non-empty batch. Per-triplet
// contributions are computed independently and summed in batch order.
BatchGradient batch_gradient(const EmbeddingModel& model, const Dataset& data,
                             std::span<const Triplet> batch, double tau);
BatchGradient batch_gradient_serial(const EmbeddingModel& model,
                                    const Dataset& data,
                                    std::span<const Triplet> batch, double tau);

// One ordered identity pair (j, k), j != k, whose ranking slack
// lhs - rhs fell below tau. Indices refer to rows of the feature matrices.
struct PairSlack {
  std::size_t j = 0;
  std::size_t k = 0;
  double lhs = 0.0;  // squared distance anchor_j -> negative_k
  double rhs = 0.0;  // squared distance anchor_j -> partner_j
};

// Scans all ordered pairs over P identities. anchor/partner/negative are
// P x dim row-major feature matrices: the anchor's positive partner is
// partner[j], candidate negatives are negative[k]. Emits pairs with
// lhs - rhs < tau in (j, k) order.
std::vector<PairSlack> pair_slack_scan(std::span<const double> anchor,
                                       std::span<const double> partner,
                                       std::span<const double> negative,
                                       std::size_t count, std::size_t dim,
                                       double tau);
std::vector<PairSlack> pair_slack_scan_serial(std::span<const double> anchor,
                                              std::span<const double> partner,
                                              std::span<const double> negative,
                                              std::size_t count, std::size_t dim,
                                              double tau);

struct RankRow {
  std::size_t rank = 0;  // 1-based
  double correct_distance = 0.0;
  double best_distance = 0.0;
};

// Per-probe rank of the correct gallery entry inside an np x ng distance
// matrix. Ties break by gallery position (earlier wins). Throws EvalError on
// non-finite distances.
std::vector<RankRow> ranks_all(std::span<const double> dist, std::size_t np,
                               std::size_t ng,
                               std::span<const std::size_t> correct);
std::vector<RankRow> ranks_all_serial(std::span<const double> dist,
                                      std::size_t np, std::size_t ng,
                                      std::span<const std::size_t> correct);

}  // namespace reid::kernels

#endif  // REID_KERNELS_HPP_
