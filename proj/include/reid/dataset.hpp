#ifndef REID_DATASET_HPP_
#define REID_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reid/common.hpp"

namespace reid {

// Exactly two camera views exist.
enum class View : std::uint8_t { A = 0, B = 1 };

inline char view_char(View v) { return v == View::A ? 'A' : 'B'; }
inline View other_view(View v) { return v == View::A ? View::B : View::A; }
View parse_view(std::string_view text);

// One person image's representation: a raw fixed-dimension feature vector
// tagged with identity and camera view.
struct Sample {
  std::int64_t identity = 0;
  View view = View::A;
  std::vector<double> data;
  std::string source_tag;  // file path, "synthetic", or empty

  bool operator==(const Sample&) const = default;
};

// Immutable two-view single-shot collection: at most one sample per
// (identity, view) pair, all samples sharing one raw dimension.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Sample> samples, std::size_t dim);
  explicit Dataset(std::vector<Sample> samples);  // dim taken from first sample

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t dim() const { return dim_; }
  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& sample(std::size_t pos) const { return samples_[pos]; }

  std::optional<std::size_t> find(std::int64_t identity, View view) const;
  std::size_t position(std::int64_t identity, View view) const;  // throws ProtocolError
  bool has(std::int64_t identity, View view) const { return find(identity, view).has_value(); }

  // Identities present in BOTH views, ascending. Their count is P.
  std::vector<std::int64_t> shared_identities() const;
  std::size_t shared_count() const { return shared_identities().size(); }
  std::size_t view_count(View view) const;

  bool operator==(const Dataset& rhs) const {
    return dim_ == rhs.dim_ && samples_ == rhs.samples_;
  }

 private:
  void build_index();

  std::vector<Sample> samples_;
  std::size_t dim_ = 0;
  std::map<std::pair<std::int64_t, View>, std::size_t> index_;
};

// Probe/gallery evaluation split. Probes are view-A samples of held-out
// shared identities; the gallery is every view-B sample not belonging to a
// training identity, so each probe has exactly one gallery match.
struct SplitSpec {
  std::vector<std::int64_t> train_identities;  // ascending
  std::vector<Sample> probe;
  std::vector<Sample> gallery;
};

struct PridSplit {
  Dataset train;
  SplitSpec split;
};

// Manifest CSV: header `identity,view,source_tag,f0,...,f{d-1}`, one sample
// per line, LF endings. Feature text is shortest-round-trip decimal, so
// save followed by load reproduces the dataset bit for bit.
Dataset load_manifest(const std::filesystem::path& path);
void save_manifest(const Dataset& dataset, const std::filesystem::path& path);

struct SynthSpec {
  std::size_t p_shared = 1;  // identities present in both views
  std::size_t extra_b = 0;   // gallery-distractor identities, view B only
  std::size_t dim = 4;
  std::vector<double> view_shift;  // empty means zero shift
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Two-view generator: per-identity latent, view A = latent + noise,
// view B = latent + shift + noise. Latents and the shift are snapped to
// multiples of 2^-20 so that with noise_sigma = 0 the cross-view difference
// equals the (snapped) shift without rounding. Deterministic per seed.
Dataset synth_dataset(const SynthSpec& spec);

// Seeded uniform choice of n_train shared identities as the training pool;
// probe = view-A samples of the remaining shared identities, gallery = all
// view-B samples except those of training identities.
PridSplit split_prid_protocol(const Dataset& dataset, std::size_t n_train,
                              std::uint64_t seed);

// Sub-datasets used by training and audits.
Dataset restrict_to_shared(const Dataset& dataset);
Dataset subset_by_identities(const Dataset& dataset,
                             const std::vector<std::int64_t>& identities);

}  // namespace reid

#endif  // REID_DATASET_HPP_
