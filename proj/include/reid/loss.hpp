#ifndef REID_LOSS_HPP_
#define REID_LOSS_HPP_

#include <span>
#include <vector>

#include "reid/embedding.hpp"

namespace reid {

// Hinge form of the relative-distance objective over one (anchor, positive,
// negative) triple of raw vectors:
//
//   loss = max(0, ||F(a)-F(p)||^2 - ||F(a)-F(n)||^2 + tau)
//
// Zero loss means the negative pair is farther than the positive pair by at
// least tau; the boundary (slack exactly tau) counts as satisfied.
double triplet_loss(const EmbeddingModel& model, std::span<const double> a,
                    std::span<const double> p, std::span<const double> n,
                    double tau);

// Adds this triplet's parameter gradient into grad_accum and returns the
// loss. A zero-loss triplet contributes nothing (hinge flat region).
double triplet_loss_accumulate_grad(const EmbeddingModel& model,
                                    std::span<const double> a,
                                    std::span<const double> p,
                                    std::span<const double> n, double tau,
                                    std::span<double> grad_accum);

// Convenience: standalone gradient of one triplet.
std::vector<double> triplet_gradient(const EmbeddingModel& model,
                                     std::span<const double> a,
                                     std::span<const double> p,
                                     std::span<const double> n, double tau);

}  // namespace reid

#endif  // REID_LOSS_HPP_
