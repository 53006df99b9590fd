#include "reid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reid/kernels.hpp"

namespace reid {

void TrainConfig::validate() const {
  if (!(margin_tau > 0.0) || !std::isfinite(margin_tau)) {
    throw ConfigError("margin_tau must be finite and > 0");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
}

std::vector<double> batch_gradient(const EmbeddingModel& model,
                                   const Dataset& data,
                                   std::span<const Triplet> batch, double tau) {
  return kernels::batch_gradient(model, data, batch, tau).grad;
}

TrainReport train(const Dataset& train_data, Formulation formulation,
                  const EmbeddingModel& model0, const TrainConfig& config) {
  config.validate();
  model0.validate();
  if (train_data.dim() != model0.in_dim) {
    throw DimensionError("training data dimension " +
                         std::to_string(train_data.dim()) +
                         " does not match model input " +
                         std::to_string(model0.in_dim));
  }

  const TripletSet set = enumerate_triplets(train_data, formulation);
  if (set.empty()) {
    throw ProtocolError("training requires a non-empty triplet set "
                        "(need at least 2 shared identities)");
  }
  const std::size_t m = set.size();

  TrainReport report;
  report.formulation = formulation;
  report.triplet_count = m;
  report.config = config;

  EmbeddingModel model = model0;
  std::vector<double> loss_slots(m);
  std::vector<Triplet> batch_triplets;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = make_batches(set, config.batch_size, config.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      batch_triplets.clear();
      for (std::size_t idx : batch) batch_triplets.push_back(set.triplets()[idx]);

      const kernels::BatchGradient bg =
          kernels::batch_gradient(model, train_data, batch_triplets,
                                  config.margin_tau);
      for (std::size_t t = 0; t < batch.size(); ++t) {
        const double loss = bg.losses[t];
        if (!std::isfinite(loss)) {
          throw DivergenceError("non-finite loss at epoch " +
                                std::to_string(epoch) + " batch " +
                                std::to_string(b));
        }
        loss_slots[batch[t]] = loss;
      }
      for (std::size_t i = 0; i < model.params.size(); ++i) {
        const double g = bg.grad[i];
        if (!std::isfinite(g)) {
          throw DivergenceError("non-finite gradient at epoch " +
                                std::to_string(epoch) + " batch " +
                                std::to_string(b));
        }
        model.params[i] -= config.learning_rate * g;
      }
    }

    double loss_sum = 0.0;
    for (double l : loss_slots) loss_sum += l;
    report.loss_history.push_back(loss_sum / static_cast<double>(m));

    const std::vector<double> losses =
        kernels::triplet_losses(model, train_data, set.triplets(),
                                config.margin_tau);
    std::size_t violations = 0;
    for (double l : losses) {
      if (!std::isfinite(l)) {
        throw DivergenceError("non-finite loss evaluating epoch " +
                              std::to_string(epoch));
      }
      if (l > 0.0) ++violations;
    }
    report.violation_history.push_back(static_cast<double>(violations) /
                                       static_cast<double>(m));
  }

  std::ostringstream origin;
  origin << model0.provenance << "; trained formulation=" << to_string(formulation)
         << " epochs=" << config.epochs << " seed=" << config.seed;
  model.provenance = origin.str();
  report.final_model = std::move(model);
  return report;
}

double grad_check(const EmbeddingModel& model, std::span<const double> a,
                  std::span<const double> p, std::span<const double> n,
                  double tau, double step) {
  if (!(step > 0.0)) throw ConfigError("grad_check step must be > 0");
  const double loss = triplet_loss(model, a, p, n, tau);
  if (!(loss > 10.0 * step)) {
    throw KinkError("triplet too close to the hinge kink (loss " +
                    format_double(loss) + ", step " + format_double(step) + ")");
  }
  const std::vector<double> analytic = triplet_gradient(model, a, p, n, tau);

  EmbeddingModel probe = model;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const double saved = probe.params[i];
    probe.params[i] = saved + step;
    const double up = triplet_loss(probe, a, p, n, tau);
    probe.params[i] = saved - step;
    const double down = triplet_loss(probe, a, p, n, tau);
    probe.params[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max(1.0, std::max(std::fabs(fd), std::fabs(analytic[i])));
    max_rel = std::max(max_rel, std::fabs(analytic[i] - fd) / denom);
  }
  return max_rel;
}

nlohmann::json train_report_json(const TrainReport& report,
                                 std::string_view model_file) {
  nlohmann::json j;
  j["config"] = {
      {"margin_tau", report.config.margin_tau},
      {"batch_size", report.config.batch_size},
      {"learning_rate", report.config.learning_rate},
      {"epochs", report.config.epochs},
      {"seed", report.config.seed},
  };
  j["formulation"] = to_string(report.formulation);
  j["triplet_count"] = report.triplet_count;
  j["loss_history"] = report.loss_history;
  j["violation_history"] = report.violation_history;
  j["final_violation_fraction"] = report.violation_history.empty()
                                      ? nlohmann::json()
                                      : nlohmann::json(report.violation_history.back());
  j["model_file"] = std::string(model_file);
  return j;
}

}  // namespace reid
