#ifndef REID_TRAINER_HPP_
#define REID_TRAINER_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reid/dataset.hpp"
#include "reid/embedding.hpp"
#include "reid/loss.hpp"
#include "reid/tripletgen.hpp"

namespace reid {

struct TrainConfig {
  double margin_tau = 1.0;
  std::size_t batch_size = 64;
  double learning_rate = 1e-2;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  // Mean per-triplet loss per epoch, from the pre-update batch passes,
  // summed in triplet-index order (so a zero learning rate yields an exactly
  // constant history regardless of shuffling).
  std::vector<double> loss_history;
  // Fraction of the full triplet set with positive loss after each epoch.
  std::vector<double> violation_history;
  EmbeddingModel final_model;
  Formulation formulation = Formulation::I;
  std::size_t triplet_count = 0;
  TrainConfig config;
};

// Mean hinge-loss gradient over a non-empty batch of triplets.
std::vector<double> batch_gradient(const EmbeddingModel& model,
                                   const Dataset& data,
                                   std::span<const Triplet> batch, double tau);

// Plain mini-batch gradient descent over the enumerated triplet set:
// per epoch, a seeded shuffle into batches, then params -= lr * mean grad.
// Deterministic for fixed (model0, config). Throws DivergenceError naming
// epoch and batch if a loss or gradient goes non-finite.
TrainReport train(const Dataset& train_data, Formulation formulation,
                  const EmbeddingModel& model0, const TrainConfig& config);

// Max relative error between the analytic triplet gradient and central
// finite differences with the given step, relative to max(1, |g|) per
// coordinate. Requires the triplet to sit clear of the hinge kink
// (loss > 10 * step); throws KinkError otherwise.
double grad_check(const EmbeddingModel& model, std::span<const double> a,
                  std::span<const double> p, std::span<const double> n,
                  double tau, double step);

// Config echo, per-epoch arrays, and the file name of the saved final model.
nlohmann::json train_report_json(const TrainReport& report,
                                 std::string_view model_file);

}  // namespace reid

#endif  // REID_TRAINER_HPP_
