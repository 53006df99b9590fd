// Times each OpenMP kernel against its serial reference and checks that the
// outputs are bitwise identical. Build and run:
//   cmake --build build --target bench_kernels && ./build/benchmarks/bench_kernels

#include <cstdio>
#include <omp.h>

#include "reid/kernels.hpp"
#include "reid/tripletgen.hpp"

using namespace reid;

namespace {

template <typename F>
double best_of(int repeats, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const double t0 = omp_get_wtime();
    fn();
    best = std::min(best, omp_get_wtime() - t0);
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-18s serial %8.3f ms   omp %8.3f ms   speedup %5.2fx   %s\n",
              name, serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
              equal ? "bitwise-equal" : "MISMATCH");
}

std::vector<double> random_matrix(std::size_t rows, std::size_t cols,
                                  std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> m(rows * cols);
  for (double& v : m) v = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());

  {
    SynthSpec spec;
    spec.p_shared = 30000;
    spec.dim = 64;
    spec.noise_sigma = 0.3;
    spec.seed = 11;
    const Dataset ds = synth_dataset(spec);
    const EmbeddingModel model =
        init_model(ModelKind::two_layer, 64, 32, 48, 3, 0.4);
    std::vector<double> serial_out, omp_out;
    const double ts = best_of(3, [&] { serial_out = kernels::embed_all_serial(model, ds.samples()); });
    const double tp = best_of(3, [&] { omp_out = kernels::embed_all(model, ds.samples()); });
    report("embed_all", ts, tp, serial_out == omp_out);
  }

  {
    const std::size_t na = 1200, nb = 1400, dim = 128;
    const auto a = random_matrix(na, dim, 1);
    const auto b = random_matrix(nb, dim, 2);
    std::vector<double> serial_out, omp_out;
    const double ts = best_of(3, [&] { serial_out = kernels::sq_dist_matrix_serial(a, na, b, nb, dim); });
    const double tp = best_of(3, [&] { omp_out = kernels::sq_dist_matrix(a, na, b, nb, dim); });
    report("sq_dist_matrix", ts, tp, serial_out == omp_out);
  }

  {
    SynthSpec spec;
    spec.p_shared = 120;
    spec.dim = 48;
    spec.view_shift = std::vector<double>(48, 0.4);
    spec.noise_sigma = 0.2;
    spec.seed = 21;
    const Dataset ds = synth_dataset(spec);
    const EmbeddingModel model =
        init_model(ModelKind::two_layer, 48, 24, 32, 5, 0.4);
    const TripletSet set = enumerate_triplets(ds, Formulation::III);
    const std::span<const Triplet> batch(set.triplets().data(), 8192);
    kernels::BatchGradient serial_out, omp_out;
    const double ts = best_of(3, [&] { serial_out = kernels::batch_gradient_serial(model, ds, batch, 1.0); });
    const double tp = best_of(3, [&] { omp_out = kernels::batch_gradient(model, ds, batch, 1.0); });
    report("batch_gradient", ts, tp,
           serial_out.grad == omp_out.grad && serial_out.losses == omp_out.losses);

    std::vector<double> serial_losses, omp_losses;
    const double tls = best_of(3, [&] { serial_losses = kernels::triplet_losses_serial(model, ds, set.triplets(), 1.0); });
    const double tlp = best_of(3, [&] { omp_losses = kernels::triplet_losses(model, ds, set.triplets(), 1.0); });
    report("triplet_losses", tls, tlp, serial_losses == omp_losses);
  }

  {
    const std::size_t p = 900, dim = 32;
    const auto fa = random_matrix(p, dim, 7);
    const auto fb = random_matrix(p, dim, 8);
    std::vector<kernels::PairSlack> serial_out, omp_out;
    const double ts = best_of(3, [&] { serial_out = kernels::pair_slack_scan_serial(fa, fb, fb, p, dim, 0.5); });
    const double tp = best_of(3, [&] { omp_out = kernels::pair_slack_scan(fa, fb, fb, p, dim, 0.5); });
    bool equal = serial_out.size() == omp_out.size();
    for (std::size_t i = 0; equal && i < serial_out.size(); ++i) {
      equal = serial_out[i].j == omp_out[i].j && serial_out[i].k == omp_out[i].k &&
              serial_out[i].lhs == omp_out[i].lhs && serial_out[i].rhs == omp_out[i].rhs;
    }
    report("pair_slack_scan", ts, tp, equal);
  }

  {
    const std::size_t np = 1500, ng = 1500;
    const auto dist = random_matrix(np, ng, 9);
    std::vector<std::size_t> correct(np);
    Rng rng(10);
    for (std::size_t i = 0; i < np; ++i) correct[i] = rng.below(ng);
    std::vector<kernels::RankRow> serial_out, omp_out;
    const double ts = best_of(3, [&] { serial_out = kernels::ranks_all_serial(dist, np, ng, correct); });
    const double tp = best_of(3, [&] { omp_out = kernels::ranks_all(dist, np, ng, correct); });
    bool equal = serial_out.size() == omp_out.size();
    for (std::size_t i = 0; equal && i < np; ++i) {
      equal = serial_out[i].rank == omp_out[i].rank &&
              serial_out[i].correct_distance == omp_out[i].correct_distance &&
              serial_out[i].best_distance == omp_out[i].best_distance;
    }
    report("ranks_all", ts, tp, equal);
  }

  return 0;
}
