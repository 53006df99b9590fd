#include <doctest.h>

#include <cmath>

#include "reid/kernels.hpp"
#include "reid/trainer.hpp"
#include "test_util.hpp"

using namespace reid;

namespace {

EmbeddingModel identity_linear(std::size_t dim) {
  EmbeddingModel m;
  m.kind = ModelKind::linear;
  m.in_dim = dim;
  m.out_dim = dim;
  m.params.assign(dim * dim + dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) m.params[i * dim + i] = 1.0;
  m.provenance = "identity";
  return m;
}

Dataset zero_noise_dataset(std::size_t p, std::uint64_t seed) {
  SynthSpec spec;
  spec.p_shared = p;
  spec.dim = 4;
  spec.view_shift = {0.75, -0.5, 0.25, 0.0};
  spec.noise_sigma = 0.0;
  spec.seed = seed;
  return synth_dataset(spec);
}

std::vector<double> random_vec(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

// Triplet with positive loss whose hidden pre-activations sit away from the
// relu kinks for all three inputs (two_layer), for finite-difference checks.
struct RawTriplet {
  std::vector<double> a, p, n;
};

RawTriplet sample_checkable_triplet(const EmbeddingModel& model, Rng& rng,
                                    double tau, double step) {
  (void)step;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    RawTriplet t{random_vec(rng, model.in_dim), random_vec(rng, model.in_dim),
                 random_vec(rng, model.in_dim)};
    // well clear of the hinge kink: parameter nudges of size `step` move the
    // loss by far less than this
    if (triplet_loss(model, t.a, t.p, t.n, tau) <= 0.05) continue;
    if (model.kind == ModelKind::two_layer) {
      bool clear = true;
      std::vector<double> out(model.out_dim), pre;
      for (const auto* v : {&t.a, &t.p, &t.n}) {
        model.embed_cached(*v, out, pre);
        for (double z : pre) {
          if (std::fabs(z) < 1e-3) clear = false;
        }
      }
      if (!clear) continue;
    }
    return t;
  }
  FAIL("could not sample a kink-clear triplet");
  return {};
}

}  // namespace

TEST_CASE("triplet loss hand cases") {
  const EmbeddingModel m = identity_linear(2);
  const std::vector<double> origin{0.0, 0.0};

  // satisfied constraint: d_pos = 0, d_neg = 4, tau = 1
  CHECK(triplet_loss(m, origin, origin, std::vector<double>{2.0, 0.0}, 1.0) == 0.0);

  // tie case: d_pos = d_neg = 1, tau = 0.5 -> loss = margin
  CHECK(triplet_loss(m, origin, std::vector<double>{1.0, 0.0},
                     std::vector<double>{0.0, 1.0}, 0.5) == 0.5);

  // d_pos = 4, d_neg = 1, tau = 1 -> 4
  CHECK(triplet_loss(m, origin, std::vector<double>{2.0, 0.0},
                     std::vector<double>{1.0, 0.0}, 1.0) == 4.0);
}

TEST_CASE("boundary slack of exactly tau counts as satisfied") {
  const EmbeddingModel m = identity_linear(1);
  // d_pos = 0, d_neg = 1, tau = 1: hinge value exactly 0
  CHECK(triplet_loss(m, std::vector<double>{0.0}, std::vector<double>{0.0},
                     std::vector<double>{1.0}, 1.0) == 0.0);
}

TEST_CASE("all-satisfied batch has zero gradient") {
  const Dataset ds = zero_noise_dataset(4, 21);
  EmbeddingModel m = identity_linear(4);
  for (double& p : m.params) p *= 8.0;  // spread identities far apart
  const TripletSet set = enumerate_triplets(ds, Formulation::III);
  const auto losses = kernels::triplet_losses(m, ds, set.triplets(), 0.05);
  bool all_zero = true;
  for (double l : losses) all_zero = all_zero && l == 0.0;
  REQUIRE(all_zero);  // construction check: margin small, identities far
  const auto grad = batch_gradient(m, ds, set.triplets(), 0.05);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("duplicated-triplet batch equals the single-triplet gradient") {
  const Dataset ds = zero_noise_dataset(3, 5);
  const EmbeddingModel m = init_model(ModelKind::linear, 4, 3, 0, 2, 0.6);
  const TripletSet set = enumerate_triplets(ds, Formulation::II);
  Triplet chosen{};
  bool found = false;
  for (const Triplet& t : set.triplets()) {
    if (triplet_loss(m, ds.sample(t.anchor).data, ds.sample(t.positive).data,
                     ds.sample(t.negative).data, 1.0) > 0.0) {
      chosen = t;
      found = true;
      break;
    }
  }
  REQUIRE(found);
  const std::vector<Triplet> single{chosen};
  const std::vector<double> g1 = batch_gradient(m, ds, single, 1.0);

  // doubling then halving is exact in binary floating point
  const std::vector<Triplet> twice(2, chosen);
  CHECK(batch_gradient(m, ds, twice, 1.0) == g1);

  // odd counts pick up one rounding in the ordered sum
  const std::vector<double> g3 = batch_gradient(m, ds, std::vector<Triplet>(3, chosen), 1.0);
  REQUIRE(g3.size() == g1.size());
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g3[i] == doctest::Approx(g1[i]).epsilon(1e-12));
  }
}

TEST_CASE("batch gradient rejects an empty batch") {
  const Dataset ds = zero_noise_dataset(2, 1);
  const EmbeddingModel m = identity_linear(4);
  CHECK_THROWS_AS(batch_gradient(m, ds, std::vector<Triplet>{}, 1.0), ConfigError);
}

TEST_CASE("analytic gradient matches finite differences (linear)") {
  Rng rng(31337);
  const EmbeddingModel m = init_model(ModelKind::linear, 5, 3, 0, 8, 0.7);
  const double step = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const RawTriplet t = sample_checkable_triplet(m, rng, 1.0, step);
    CHECK(grad_check(m, t.a, t.p, t.n, 1.0, step) < 1e-6);
  }
}

TEST_CASE("analytic gradient matches finite differences (two_layer)") {
  Rng rng(777);
  const EmbeddingModel m = init_model(ModelKind::two_layer, 4, 3, 6, 9, 0.7);
  const double step = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const RawTriplet t = sample_checkable_triplet(m, rng, 1.0, step);
    CHECK(grad_check(m, t.a, t.p, t.n, 1.0, step) < 1e-5);
  }
}

TEST_CASE("grad_check rejects zero-loss triplets") {
  const EmbeddingModel m = identity_linear(2);
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> n{5.0, 0.0};
  CHECK_THROWS_AS(grad_check(m, a, a, n, 1.0, 1e-5), KinkError);
}

TEST_CASE("zero learning rate is a no-op descent") {
  const Dataset ds = zero_noise_dataset(5, 3);
  const EmbeddingModel m0 = init_model(ModelKind::linear, 4, 4, 0, 4, 0.5);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 6;
  cfg.batch_size = 7;
  cfg.seed = 2;
  const TrainReport report = train(ds, Formulation::II, m0, cfg);
  CHECK(report.final_model.params == m0.params);
  for (double l : report.loss_history) {
    CHECK(l == report.loss_history.front());
  }
  for (double v : report.violation_history) {
    CHECK(v == report.violation_history.front());
  }
}

TEST_CASE("training is deterministic") {
  const Dataset ds = zero_noise_dataset(6, 8);
  const EmbeddingModel m0 = init_model(ModelKind::two_layer, 4, 3, 5, 1, 0.5);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.learning_rate = 5e-3;
  cfg.batch_size = 16;
  cfg.seed = 4;
  const TrainReport a = train(ds, Formulation::III, m0, cfg);
  const TrainReport b = train(ds, Formulation::III, m0, cfg);
  CHECK(a.final_model.params == b.final_model.params);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.violation_history == b.violation_history);
}

TEST_CASE("zero-noise training reaches zero violations and reduces loss") {
  const Dataset ds = zero_noise_dataset(6, 12);
  const EmbeddingModel m0 = init_model(ModelKind::linear, 4, 4, 0, 3, 0.5);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 2e-2;
  cfg.batch_size = 16;
  cfg.seed = 6;
  const TrainReport report = train(ds, Formulation::III, m0, cfg);
  CHECK(report.violation_history.back() == 0.0);
  CHECK(report.loss_history.back() < report.loss_history.front());
  CHECK(report.triplet_count == expected_count(6, Formulation::III));
}

TEST_CASE("histories have one entry per epoch") {
  const Dataset ds = zero_noise_dataset(3, 2);
  const EmbeddingModel m0 = init_model(ModelKind::linear, 4, 2, 0, 0, 0.5);
  TrainConfig cfg;
  cfg.epochs = 9;
  const TrainReport report = train(ds, Formulation::I, m0, cfg);
  CHECK(report.loss_history.size() == 9);
  CHECK(report.violation_history.size() == 9);
  for (double v : report.violation_history) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("a wild learning rate reports divergence with its location") {
  const Dataset ds = zero_noise_dataset(5, 4);
  const EmbeddingModel m0 = init_model(ModelKind::linear, 4, 4, 0, 2, 0.5);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 1e200;  // one step overflows the squared distances
  cfg.batch_size = 8;
  CHECK_THROWS_WITH_AS(train(ds, Formulation::II, m0, cfg),
                       doctest::Contains("epoch"), DivergenceError);
}

TEST_CASE("training needs a non-empty triplet set") {
  const Dataset ds = zero_noise_dataset(1, 4);
  const EmbeddingModel m0 = init_model(ModelKind::linear, 4, 2, 0, 0, 0.5);
  CHECK_THROWS_AS(train(ds, Formulation::I, m0, TrainConfig{}), ProtocolError);
}

TEST_CASE("train report JSON carries histories and the model reference") {
  const Dataset ds = zero_noise_dataset(3, 6);
  const EmbeddingModel m0 = init_model(ModelKind::linear, 4, 2, 0, 0, 0.5);
  TrainConfig cfg;
  cfg.epochs = 2;
  const TrainReport report = train(ds, Formulation::I, m0, cfg);
  const nlohmann::json j = train_report_json(report, "model.txt");
  CHECK(j["model_file"] == "model.txt");
  CHECK(j["loss_history"].size() == 2);
  CHECK(j["violation_history"].size() == 2);
  CHECK(j["formulation"] == "I");
  CHECK(j["config"]["batch_size"] == 64);
}
