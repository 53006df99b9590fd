#include "reid/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace reid {

const char* to_string(ModelKind kind) {
  return kind == ModelKind::linear ? "linear" : "two_layer";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "linear") return ModelKind::linear;
  if (text == "two_layer") return ModelKind::two_layer;
  throw ConfigError("model kind must be 'linear' or 'two_layer', got '" +
                    std::string(text) + "'");
}

std::size_t EmbeddingModel::param_count(ModelKind kind, std::size_t in_dim,
                                        std::size_t out_dim,
                                        std::size_t hidden) {
  if (kind == ModelKind::linear) return out_dim * in_dim + out_dim;
  return hidden * in_dim + hidden + out_dim * hidden + out_dim;
}

void EmbeddingModel::validate() const {
  if (in_dim < 1 || out_dim < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
  if (kind == ModelKind::two_layer && hidden < 1) {
    throw ConfigError("two_layer model requires hidden width >= 1");
  }
  if (kind == ModelKind::linear && hidden != 0) {
    throw ConfigError("linear model must have hidden == 0");
  }
  if (params.size() != param_count()) {
    throw ConfigError("model has " + std::to_string(params.size()) +
                      " parameters, layout expects " +
                      std::to_string(param_count()));
  }
  for (double p : params) {
    if (!std::isfinite(p)) throw ConfigError("model parameters must be finite");
  }
}

void EmbeddingModel::embed(std::span<const double> x,
                           std::span<double> out) const {
  std::vector<double> scratch;
  embed_cached(x, out, scratch);
}

std::vector<double> EmbeddingModel::embed(std::span<const double> x) const {
  std::vector<double> out(out_dim);
  embed(x, out);
  return out;
}

void EmbeddingModel::embed_cached(std::span<const double> x,
                                  std::span<double> out,
                                  std::vector<double>& hidden_pre) const {
  if (x.size() != in_dim) {
    throw DimensionError("embed input has dimension " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(in_dim));
  }
  if (out.size() != out_dim) {
    throw DimensionError("embed output span has wrong dimension");
  }
  if (kind == ModelKind::linear) {
    hidden_pre.clear();
    const double* w = params.data();
    const double* b = params.data() + out_dim * in_dim;
    for (std::size_t i = 0; i < out_dim; ++i) {
      double acc = b[i];
      const double* row = w + i * in_dim;
      for (std::size_t j = 0; j < in_dim; ++j) acc += row[j] * x[j];
      out[i] = acc;
    }
    return;
  }
  const double* w1 = params.data();
  const double* b1 = w1 + hidden * in_dim;
  const double* w2 = b1 + hidden;
  const double* b2 = w2 + out_dim * hidden;
  hidden_pre.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    double acc = b1[i];
    const double* row = w1 + i * in_dim;
    for (std::size_t j = 0; j < in_dim; ++j) acc += row[j] * x[j];
    hidden_pre[i] = acc;
  }
  for (std::size_t i = 0; i < out_dim; ++i) {
    double acc = b2[i];
    const double* row = w2 + i * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
      const double r = hidden_pre[j] > 0.0 ? hidden_pre[j] : 0.0;
      acc += row[j] * r;
    }
    out[i] = acc;
  }
}

void EmbeddingModel::backprop(std::span<const double> x,
                              std::span<const double> hidden_pre,
                              std::span<const double> out_grad,
                              std::span<double> grad_accum) const {
  if (grad_accum.size() != params.size()) {
    throw DimensionError("gradient accumulator has wrong size");
  }
  if (out_grad.size() != out_dim || x.size() != in_dim) {
    throw DimensionError("backprop span dimensions do not match model");
  }
  if (kind == ModelKind::linear) {
    double* gw = grad_accum.data();
    double* gb = grad_accum.data() + out_dim * in_dim;
    for (std::size_t i = 0; i < out_dim; ++i) {
      const double g = out_grad[i];
      double* row = gw + i * in_dim;
      for (std::size_t j = 0; j < in_dim; ++j) row[j] += g * x[j];
      gb[i] += g;
    }
    return;
  }
  if (hidden_pre.size() != hidden) {
    throw DimensionError("backprop needs cached hidden pre-activations");
  }
  const double* w2 = params.data() + hidden * in_dim + hidden;
  double* gw1 = grad_accum.data();
  double* gb1 = gw1 + hidden * in_dim;
  double* gw2 = gb1 + hidden;
  double* gb2 = gw2 + out_dim * hidden;

  for (std::size_t i = 0; i < out_dim; ++i) {
    const double g = out_grad[i];
    double* row = gw2 + i * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
      const double r = hidden_pre[j] > 0.0 ? hidden_pre[j] : 0.0;
      row[j] += g * r;
    }
    gb2[i] += g;
  }
  for (std::size_t j = 0; j < hidden; ++j) {
    if (!(hidden_pre[j] > 0.0)) continue;  // relu derivative 0 at and below 0
    double h = 0.0;
    for (std::size_t i = 0; i < out_dim; ++i) {
      h += w2[i * hidden + j] * out_grad[i];
    }
    double* row = gw1 + j * in_dim;
    for (std::size_t k = 0; k < in_dim; ++k) row[k] += h * x[k];
    gb1[j] += h;
  }
}

EmbeddingModel init_model(ModelKind kind, std::size_t in_dim,
                          std::size_t out_dim, std::size_t hidden,
                          std::uint64_t seed, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("init scale must be finite and > 0");
  }
  if (kind == ModelKind::two_layer && hidden < 1) {
    throw ConfigError("two_layer model requires a hidden width");
  }
  EmbeddingModel model;
  model.kind = kind;
  model.in_dim = in_dim;
  model.out_dim = out_dim;
  model.hidden = kind == ModelKind::two_layer ? hidden : 0;
  model.params.resize(model.param_count());
  Rng rng(seed);
  for (double& p : model.params) p = rng.uniform(-scale, scale);
  std::ostringstream origin;
  origin << "uniform-init seed=" << seed << " scale=" << scale;
  model.provenance = origin.str();
  model.validate();
  return model;
}

double sq_dist(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionError("sq_dist over vectors of dimension " +
                         std::to_string(u.size()) + " and " +
                         std::to_string(v.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double diff = u[i] - v[i];
    acc += diff * diff;
  }
  return acc;
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model '" + path.string() + "'");
  out << "reid-model v1\n";
  out << "kind " << to_string(model.kind) << '\n';
  out << "in_dim " << model.in_dim << '\n';
  out << "out_dim " << model.out_dim << '\n';
  out << "hidden " << model.hidden << '\n';
  out << "origin " << model.provenance << '\n';
  out << "params " << model.params.size() << '\n';
  for (double p : model.params) out << format_double(p) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::string expect_key(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("model file truncated at " + key);
  if (line.rfind(key + " ", 0) != 0) {
    throw ParseError("model file: expected '" + key + " ...', got '" + line + "'");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "reid-model v1") {
    throw ParseError("model file: bad or missing version header");
  }
  EmbeddingModel model;
  model.kind = parse_model_kind(expect_key(in, "kind"));
  model.in_dim = static_cast<std::size_t>(parse_int(expect_key(in, "in_dim")));
  model.out_dim = static_cast<std::size_t>(parse_int(expect_key(in, "out_dim")));
  model.hidden = static_cast<std::size_t>(parse_int(expect_key(in, "hidden")));
  model.provenance = expect_key(in, "origin");
  const auto count = static_cast<std::size_t>(parse_int(expect_key(in, "params")));
  model.params.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError("model file truncated at parameter " + std::to_string(i));
    }
    model.params.push_back(parse_double(line));
  }
  model.validate();
  return model;
}

}  // namespace reid
