#include "reid/loss.hpp"

#include <cmath>
#include <limits>

namespace reid {

double triplet_loss(const EmbeddingModel& model, std::span<const double> a,
                    std::span<const double> p, std::span<const double> n,
                    double tau) {
  const std::vector<double> fa = model.embed(a);
  const std::vector<double> fp = model.embed(p);
  const std::vector<double> fn = model.embed(n);
  const double d_pos = sq_dist(fa, fp);
  const double d_neg = sq_dist(fa, fn);
  const double hinge = d_pos - d_neg + tau;
  // overflowed distances must surface as NaN, not hide under the hinge
  if (!std::isfinite(hinge)) return std::numeric_limits<double>::quiet_NaN();
  return hinge > 0.0 ? hinge : 0.0;
}

double triplet_loss_accumulate_grad(const EmbeddingModel& model,
                                    std::span<const double> a,
                                    std::span<const double> p,
                                    std::span<const double> n, double tau,
                                    std::span<double> grad_accum) {
  const std::size_t out = model.out_dim;
  std::vector<double> fa(out), fp(out), fn(out);
  std::vector<double> ha, hp, hn;
  model.embed_cached(a, fa, ha);
  model.embed_cached(p, fp, hp);
  model.embed_cached(n, fn, hn);

  const double d_pos = sq_dist(fa, fp);
  const double d_neg = sq_dist(fa, fn);
  const double hinge = d_pos - d_neg + tau;
  if (!std::isfinite(hinge)) return std::numeric_limits<double>::quiet_NaN();
  if (!(hinge > 0.0)) return 0.0;

  // d(loss)/dF(a) = 2(F(n)-F(p)), d/dF(p) = -2(F(a)-F(p)), d/dF(n) = 2(F(a)-F(n))
  std::vector<double> ga(out), gp(out), gn(out);
  for (std::size_t i = 0; i < out; ++i) {
    ga[i] = 2.0 * (fn[i] - fp[i]);
    gp[i] = -2.0 * (fa[i] - fp[i]);
    gn[i] = 2.0 * (fa[i] - fn[i]);
  }
  model.backprop(a, ha, ga, grad_accum);
  model.backprop(p, hp, gp, grad_accum);
  model.backprop(n, hn, gn, grad_accum);
  return hinge;
}

std::vector<double> triplet_gradient(const EmbeddingModel& model,
                                     std::span<const double> a,
                                     std::span<const double> p,
                                     std::span<const double> n, double tau) {
  std::vector<double> grad(model.params.size(), 0.0);
  triplet_loss_accumulate_grad(model, a, p, n, tau, grad);
  return grad;
}

}  // namespace reid
