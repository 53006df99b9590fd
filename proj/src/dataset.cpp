#include "reid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace reid {

namespace {

constexpr double kLatentGrid = 0x1.0p-20;  // latent/shift quantum

double snap_to_grid(double x) {
  return static_cast<double>(std::llround(x / kLatentGrid)) * kLatentGrid;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

View parse_view(std::string_view text) {
  if (text == "A") return View::A;
  if (text == "B") return View::B;
  throw ParseError("view must be 'A' or 'B', got '" + std::string(text) + "'");
}

Dataset::Dataset(std::vector<Sample> samples, std::size_t dim)
    : samples_(std::move(samples)), dim_(dim) {
  if (dim_ < 1) throw DimensionError("dataset dimension must be >= 1");
  build_index();
}

Dataset::Dataset(std::vector<Sample> samples) {
  if (samples.empty()) {
    throw DimensionError("cannot deduce dimension from an empty sample list");
  }
  dim_ = samples.front().data.size();
  samples_ = std::move(samples);
  if (dim_ < 1) throw DimensionError("dataset dimension must be >= 1");
  build_index();
}

void Dataset::build_index() {
  index_.clear();
  for (std::size_t pos = 0; pos < samples_.size(); ++pos) {
    const Sample& s = samples_[pos];
    if (s.identity < 0) {
      throw ParseError("identity must be non-negative, got " +
                       std::to_string(s.identity));
    }
    if (s.data.size() != dim_) {
      throw DimensionError("sample for identity " + std::to_string(s.identity) +
                           " has dimension " + std::to_string(s.data.size()) +
                           ", expected " + std::to_string(dim_));
    }
    for (double v : s.data) {
      if (!std::isfinite(v)) {
        throw ParseError("non-finite feature for identity " +
                         std::to_string(s.identity));
      }
    }
    const auto key = std::make_pair(s.identity, s.view);
    if (!index_.emplace(key, pos).second) {
      throw UniquenessError("duplicate sample for identity " +
                            std::to_string(s.identity) + " view " +
                            std::string(1, view_char(s.view)));
    }
  }
}

std::optional<std::size_t> Dataset::find(std::int64_t identity, View view) const {
  const auto it = index_.find(std::make_pair(identity, view));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Dataset::position(std::int64_t identity, View view) const {
  const auto pos = find(identity, view);
  if (!pos) {
    throw ProtocolError("no sample for identity " + std::to_string(identity) +
                        " view " + std::string(1, view_char(view)));
  }
  return *pos;
}

std::vector<std::int64_t> Dataset::shared_identities() const {
  std::vector<std::int64_t> shared;
  for (const auto& [key, pos] : index_) {
    if (key.second == View::A && index_.count({key.first, View::B})) {
      shared.push_back(key.first);
    }
  }
  return shared;  // map iteration is already ascending
}

std::size_t Dataset::view_count(View view) const {
  std::size_t n = 0;
  for (const Sample& s : samples_) {
    if (s.view == view) ++n;
  }
  return n;
}

Dataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("manifest is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_fields(line);
  if (header.size() < 4 || header[0] != "identity" || header[1] != "view" ||
      header[2] != "source_tag") {
    throw ParseError("line 1: header must be identity,view,source_tag,f0,...");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[3 + i] != "f" + std::to_string(i)) {
      throw ParseError("line 1: feature column " + std::to_string(i) +
                       " must be named f" + std::to_string(i));
    }
  }

  std::vector<Sample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3 + dim) {
      throw DimensionError("line " + std::to_string(line_no) + ": row carries " +
                           std::to_string(fields.size() >= 3 ? fields.size() - 3 : 0) +
                           " features, manifest dimension is " +
                           std::to_string(dim));
    }
    Sample s;
    try {
      s.identity = parse_int(fields[0]);
      s.view = parse_view(fields[1]);
      s.source_tag = std::string(fields[2]);
      s.data.reserve(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        s.data.push_back(parse_double(fields[3 + i]));
      }
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw ParseError("manifest has no sample rows");
  return Dataset(std::move(samples), dim);
}

void save_manifest(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << "identity,view,source_tag";
  for (std::size_t i = 0; i < dataset.dim(); ++i) out << ",f" << i;
  out << '\n';
  for (const Sample& s : dataset.samples()) {
    out << s.identity << ',' << view_char(s.view) << ',' << s.source_tag;
    for (double v : s.data) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dataset synth_dataset(const SynthSpec& spec) {
  if (spec.p_shared < 1) throw ConfigError("p_shared must be >= 1");
  if (spec.dim < 1) throw DimensionError("dim must be >= 1");
  std::vector<double> shift = spec.view_shift;
  if (shift.empty()) shift.assign(spec.dim, 0.0);
  if (shift.size() != spec.dim) {
    throw DimensionError("view_shift has dimension " +
                         std::to_string(shift.size()) + ", expected " +
                         std::to_string(spec.dim));
  }
  for (double& v : shift) {
    if (!std::isfinite(v)) throw ConfigError("view_shift must be finite");
    v = snap_to_grid(v);
  }
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw ConfigError("noise_sigma must be finite and >= 0");
  }

  Rng rng(spec.seed);
  // grid points in [-2, 2]
  constexpr std::uint64_t kGridSpan = 4u * (1u << 20) + 1u;
  const auto draw_latent = [&](std::vector<double>& latent) {
    latent.resize(spec.dim);
    for (double& v : latent) {
      const std::int64_t k =
          static_cast<std::int64_t>(rng.below(kGridSpan)) - 2 * (1 << 20);
      v = static_cast<double>(k) * kLatentGrid;
    }
  };

  std::vector<Sample> samples;
  samples.reserve(2 * spec.p_shared + spec.extra_b);
  std::vector<double> latent;
  for (std::size_t id = 0; id < spec.p_shared; ++id) {
    draw_latent(latent);
    Sample a;
    a.identity = static_cast<std::int64_t>(id);
    a.view = View::A;
    a.source_tag = "synthetic";
    a.data.resize(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i) {
      a.data[i] = latent[i] + spec.noise_sigma * rng.gaussian();
    }
    Sample b;
    b.identity = a.identity;
    b.view = View::B;
    b.source_tag = "synthetic";
    b.data.resize(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i) {
      b.data[i] = (latent[i] + shift[i]) + spec.noise_sigma * rng.gaussian();
    }
    samples.push_back(std::move(a));
    samples.push_back(std::move(b));
  }
  for (std::size_t extra = 0; extra < spec.extra_b; ++extra) {
    draw_latent(latent);
    Sample b;
    b.identity = static_cast<std::int64_t>(spec.p_shared + extra);
    b.view = View::B;
    b.source_tag = "synthetic";
    b.data.resize(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i) {
      b.data[i] = (latent[i] + shift[i]) + spec.noise_sigma * rng.gaussian();
    }
    samples.push_back(std::move(b));
  }
  return Dataset(std::move(samples), spec.dim);
}

PridSplit split_prid_protocol(const Dataset& dataset, std::size_t n_train,
                              std::uint64_t seed) {
  std::vector<std::int64_t> shared = dataset.shared_identities();
  if (shared.size() < n_train + 1) {
    throw ProtocolError("split needs at least n_train+1 = " +
                        std::to_string(n_train + 1) + " shared identities, have " +
                        std::to_string(shared.size()));
  }

  std::vector<std::int64_t> order = shared;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::int64_t> train_ids(order.begin(), order.begin() + n_train);
  std::sort(train_ids.begin(), train_ids.end());
  const std::set<std::int64_t> train_set(train_ids.begin(), train_ids.end());

  std::vector<Sample> train_samples;
  for (const Sample& s : dataset.samples()) {
    if (train_set.count(s.identity)) train_samples.push_back(s);
  }

  SplitSpec split;
  split.train_identities = train_ids;
  for (std::int64_t id : shared) {
    if (!train_set.count(id)) {
      split.probe.push_back(dataset.sample(dataset.position(id, View::A)));
    }
  }
  for (const Sample& s : dataset.samples()) {
    if (s.view == View::B && !train_set.count(s.identity)) {
      split.gallery.push_back(s);
    }
  }

  PridSplit result;
  result.train = Dataset(std::move(train_samples), dataset.dim());
  result.split = std::move(split);
  return result;
}

Dataset restrict_to_shared(const Dataset& dataset) {
  return subset_by_identities(dataset, dataset.shared_identities());
}

Dataset subset_by_identities(const Dataset& dataset,
                             const std::vector<std::int64_t>& identities) {
  const std::set<std::int64_t> wanted(identities.begin(), identities.end());
  std::vector<Sample> samples;
  for (const Sample& s : dataset.samples()) {
    if (wanted.count(s.identity)) samples.push_back(s);
  }
  return Dataset(std::move(samples), dataset.dim());
}

}  // namespace reid
