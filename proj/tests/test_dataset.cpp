#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "reid/dataset.hpp"
#include "test_util.hpp"

using namespace reid;

namespace {

// Independent recount of a manifest: unique (identity, view) pairs and the
// identities present in both views, straight off the text.
struct Recount {
  std::set<std::pair<std::string, std::string>> pairs;
  std::set<std::string> in_a, in_b;
  std::size_t rows = 0;
};

Recount recount_manifest(const std::string& text) {
  Recount rc;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rc.rows;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const std::string id = line.substr(0, c1);
    const std::string view = line.substr(c1 + 1, c2 - c1 - 1);
    rc.pairs.insert({id, view});
    (view == "A" ? rc.in_a : rc.in_b).insert(id);
  }
  return rc;
}

Dataset with_extra_a_only(const Dataset& base, std::size_t count) {
  std::vector<Sample> samples = base.samples();
  std::int64_t next_id = 0;
  for (const Sample& s : samples) next_id = std::max(next_id, s.identity + 1);
  for (std::size_t i = 0; i < count; ++i) {
    Sample s;
    s.identity = next_id + static_cast<std::int64_t>(i);
    s.view = View::A;
    s.source_tag = "synthetic";
    s.data.assign(base.dim(), static_cast<double>(i));
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), base.dim());
}

}  // namespace

TEST_CASE("minimal two-row manifest") {
  TempDir tmp;
  write_file(tmp.file("m.csv"),
             "identity,view,source_tag,f0,f1\n"
             "1,A,imgs/0001a.png,0,0\n"
             "1,B,imgs/0001b.png,0.1,0\n");
  const Dataset ds = load_manifest(tmp.file("m.csv"));
  CHECK(ds.size() == 2);
  CHECK(ds.dim() == 2);
  CHECK(ds.shared_count() == 1);
  CHECK(ds.sample(0).identity == 1);
  CHECK(ds.sample(0).view == View::A);
  CHECK(ds.sample(0).source_tag == "imgs/0001a.png");
  CHECK(ds.sample(1).data == std::vector<double>{0.1, 0.0});
}

TEST_CASE("duplicate (identity, view) rows are rejected") {
  TempDir tmp;
  write_file(tmp.file("m.csv"),
             "identity,view,source_tag,f0\n"
             "1,A,,0\n"
             "1,A,,1\n");
  CHECK_THROWS_AS(load_manifest(tmp.file("m.csv")), UniquenessError);
}

TEST_CASE("manifest recount oracle agrees on P") {
  TempDir tmp;
  std::string text = "identity,view,source_tag,f0,f1,f2\n";
  for (int id = 0; id < 4; ++id) {
    for (const char* view : {"A", "B"}) {
      text += std::to_string(id) + "," + view + ",," + std::to_string(id) +
              ",0.5,-1.25\n";
    }
  }
  write_file(tmp.file("m.csv"), text);
  const Dataset ds = load_manifest(tmp.file("m.csv"));
  const Recount rc = recount_manifest(text);
  CHECK(ds.size() == rc.rows);
  CHECK(ds.size() == rc.pairs.size());
  std::set<std::string> both;
  std::set_intersection(rc.in_a.begin(), rc.in_a.end(), rc.in_b.begin(),
                        rc.in_b.end(), std::inserter(both, both.begin()));
  CHECK(ds.shared_count() == both.size());
  CHECK(ds.shared_count() == 4);
}

TEST_CASE("malformed rows name their line") {
  TempDir tmp;
  write_file(tmp.file("m.csv"),
             "identity,view,source_tag,f0\n"
             "1,A,,0\n"
             "2,A,,not_a_number\n");
  CHECK_THROWS_WITH_AS(load_manifest(tmp.file("m.csv")),
                       doctest::Contains("line 3"), ParseError);
}

TEST_CASE("inconsistent feature width is a dimension error") {
  TempDir tmp;
  write_file(tmp.file("m.csv"),
             "identity,view,source_tag,f0,f1\n"
             "1,A,,0,0\n"
             "1,B,,0\n");
  CHECK_THROWS_AS(load_manifest(tmp.file("m.csv")), DimensionError);
}

TEST_CASE("save/load round trip is exact") {
  SynthSpec spec;
  spec.p_shared = 7;
  spec.extra_b = 3;
  spec.dim = 5;
  spec.view_shift = {0.3, -1.7, 0.0, 2.5, 1e-3};
  spec.noise_sigma = 0.37;
  spec.seed = 99;
  const Dataset ds = synth_dataset(spec);

  TempDir tmp;
  save_manifest(ds, tmp.file("m.csv"));
  const Dataset reloaded = load_manifest(tmp.file("m.csv"));
  CHECK(reloaded == ds);

  save_manifest(reloaded, tmp.file("m2.csv"));
  CHECK(read_file(tmp.file("m.csv")) == read_file(tmp.file("m2.csv")));
}

TEST_CASE("zero-noise synthesis: cross-view difference equals the shift") {
  SynthSpec spec;
  spec.p_shared = 2;
  spec.extra_b = 0;
  spec.dim = 2;
  spec.view_shift = {1.0, 0.0};
  spec.noise_sigma = 0.0;
  spec.seed = 5;
  const Dataset ds = synth_dataset(spec);
  CHECK(ds.size() == 4);
  for (std::int64_t id : ds.shared_identities()) {
    const Sample& a = ds.sample(ds.position(id, View::A));
    const Sample& b = ds.sample(ds.position(id, View::B));
    CHECK(b.data[0] - a.data[0] == 1.0);
    CHECK(b.data[1] - a.data[1] == 0.0);
  }
}

TEST_CASE("zero-noise synthesis is exact for non-dyadic shifts too") {
  SynthSpec spec;
  spec.p_shared = 20;
  spec.dim = 3;
  spec.view_shift = {0.3, -2.7, 11.1};  // snapped to the 2^-20 grid internally
  spec.noise_sigma = 0.0;
  spec.seed = 123;
  const Dataset ds = synth_dataset(spec);
  const Sample& a0 = ds.sample(ds.position(0, View::A));
  const Sample& b0 = ds.sample(ds.position(0, View::B));
  const double snapped[3] = {b0.data[0] - a0.data[0], b0.data[1] - a0.data[1],
                             b0.data[2] - a0.data[2]};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(snapped[i] == doctest::Approx(spec.view_shift[i]).epsilon(1e-5));
  }
  for (std::int64_t id : ds.shared_identities()) {
    const Sample& a = ds.sample(ds.position(id, View::A));
    const Sample& b = ds.sample(ds.position(id, View::B));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(b.data[i] - a.data[i] == snapped[i]);
    }
  }
}

TEST_CASE("synthesis counts: 2 * p_shared + extra_b") {
  SynthSpec spec;
  spec.p_shared = 10;
  spec.extra_b = 5;
  spec.dim = 4;
  spec.noise_sigma = 0.1;
  spec.seed = 3;
  const Dataset ds = synth_dataset(spec);
  CHECK(ds.size() == 25);
  CHECK(ds.view_count(View::A) == 10);
  CHECK(ds.view_count(View::B) == 15);
  CHECK(ds.shared_count() == 10);
}

TEST_CASE("synthesis is deterministic per seed") {
  SynthSpec spec;
  spec.p_shared = 6;
  spec.extra_b = 2;
  spec.dim = 3;
  spec.view_shift = {0.5, 0.5, 0.5};
  spec.noise_sigma = 0.25;
  spec.seed = 42;
  CHECK(synth_dataset(spec) == synth_dataset(spec));
  SynthSpec other = spec;
  other.seed = 43;
  CHECK_FALSE(synth_dataset(other) == synth_dataset(spec));
}

TEST_CASE("PRID-shaped split arithmetic") {
  SynthSpec spec;
  spec.p_shared = 200;
  spec.extra_b = 549;
  spec.dim = 4;
  spec.noise_sigma = 0.2;
  spec.seed = 17;
  const Dataset base = synth_dataset(spec);
  const Dataset ds = with_extra_a_only(base, 185);
  CHECK(ds.view_count(View::A) == 385);
  CHECK(ds.view_count(View::B) == 749);
  CHECK(ds.shared_count() == 200);

  const PridSplit ps = split_prid_protocol(ds, 100, 7);
  CHECK(ps.split.probe.size() == 100);
  CHECK(ps.split.gallery.size() == 649);
  CHECK(ps.train.shared_count() == 100);
  CHECK(ps.train.size() == 200);
}

TEST_CASE("smallest valid split") {
  SynthSpec spec;
  spec.p_shared = 2;
  spec.dim = 2;
  spec.seed = 1;
  const Dataset ds = synth_dataset(spec);
  const PridSplit ps = split_prid_protocol(ds, 1, 0);
  CHECK(ps.split.probe.size() == 1);
  CHECK(ps.split.gallery.size() == ds.view_count(View::B) - 1);
}

TEST_CASE("split properties: disjoint train/probe, unique gallery match") {
  SynthSpec spec;
  spec.p_shared = 23;
  spec.extra_b = 11;
  spec.dim = 3;
  spec.noise_sigma = 0.3;
  spec.seed = 77;
  const Dataset ds = synth_dataset(spec);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const PridSplit ps = split_prid_protocol(ds, 9, seed);
    std::set<std::int64_t> train_ids(ps.split.train_identities.begin(),
                                     ps.split.train_identities.end());
    CHECK(train_ids.size() == 9);
    CHECK(ps.split.probe.size() == 23 - 9);
    for (const Sample& probe : ps.split.probe) {
      CHECK(probe.view == View::A);
      CHECK(train_ids.count(probe.identity) == 0);
      std::size_t matches = 0;
      for (const Sample& g : ps.split.gallery) {
        CHECK(g.view == View::B);
        CHECK(train_ids.count(g.identity) == 0);
        if (g.identity == probe.identity) ++matches;
      }
      CHECK(matches == 1);
    }
    // deterministic per seed
    const PridSplit again = split_prid_protocol(ds, 9, seed);
    CHECK(again.split.train_identities == ps.split.train_identities);
    CHECK(again.split.probe == ps.split.probe);
    CHECK(again.split.gallery == ps.split.gallery);
  }
}

TEST_CASE("split requires n_train + 1 shared identities") {
  SynthSpec spec;
  spec.p_shared = 3;
  spec.dim = 2;
  spec.seed = 0;
  const Dataset ds = synth_dataset(spec);
  CHECK_THROWS_AS(split_prid_protocol(ds, 3, 0), ProtocolError);
  CHECK_NOTHROW(split_prid_protocol(ds, 2, 0));
}

TEST_CASE("programmatic construction validates the single-shot condition") {
  std::vector<Sample> samples;
  samples.push_back({0, View::A, {1.0, 2.0}, ""});
  samples.push_back({0, View::A, {3.0, 4.0}, ""});
  CHECK_THROWS_AS(Dataset(std::move(samples), 2), UniquenessError);

  std::vector<Sample> bad_dim;
  bad_dim.push_back({0, View::A, {1.0, 2.0}, ""});
  bad_dim.push_back({0, View::B, {1.0}, ""});
  CHECK_THROWS_AS(Dataset(std::move(bad_dim), 2), DimensionError);
}
