#ifndef REID_EMBEDDING_HPP_
#define REID_EMBEDDING_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "reid/common.hpp"

namespace reid {

enum class ModelKind { linear, two_layer };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

// Parameterized map from a raw d-dimensional representation to an
// n-dimensional feature vector.
//
// Parameter layout (flat, row-major matrices):
//   linear:    W (out x in), b (out)                    -> out = W x + b
//   two_layer: W1 (hidden x in), b1 (hidden),
//              W2 (out x hidden), b2 (out)              -> out = W2 relu(W1 x + b1) + b2
//
// The rectified-linear derivative at exactly zero is taken as zero.
struct EmbeddingModel {
  ModelKind kind = ModelKind::linear;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::size_t hidden = 0;  // zero for linear
  std::vector<double> params;
  std::string provenance;  // free-form origin note, carried through save/load

  static std::size_t param_count(ModelKind kind, std::size_t in_dim,
                                 std::size_t out_dim, std::size_t hidden);
  std::size_t param_count() const {
    return param_count(kind, in_dim, out_dim, hidden);
  }

  void validate() const;

  void embed(std::span<const double> x, std::span<double> out) const;
  std::vector<double> embed(std::span<const double> x) const;

  // Forward pass that also captures hidden pre-activations (two_layer only;
  // left empty for linear). Needed for backprop and for kink checks.
  void embed_cached(std::span<const double> x, std::span<double> out,
                    std::vector<double>& hidden_pre) const;

  // Accumulates d(scalar)/d(params) into grad_accum given d(scalar)/d(output)
  // for input x. hidden_pre must come from embed_cached on the same x.
  void backprop(std::span<const double> x, std::span<const double> hidden_pre,
                std::span<const double> out_grad,
                std::span<double> grad_accum) const;
};

// Parameters i.i.d. uniform on [-scale, scale], deterministic per seed.
// two_layer requires hidden >= 1.
EmbeddingModel init_model(ModelKind kind, std::size_t in_dim,
                          std::size_t out_dim, std::size_t hidden,
                          std::uint64_t seed, double scale);

// Squared Euclidean distance between equal-length vectors.
double sq_dist(std::span<const double> u, std::span<const double> v);

// Versioned text format, shortest-round-trip decimals; load(save(m)) == m.
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(const std::filesystem::path& path);

}  // namespace reid

#endif  // REID_EMBEDDING_HPP_
