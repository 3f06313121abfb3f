#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "core/descriptors.hpp"
#include "core/geometry.hpp"
#include "core/network.hpp"
#include "core/network_io.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cellmat;

namespace {

// Small valid network: four nodes in a 10 um box, one boundary-crossing fiber.
Network sample_network() {
  Network net;
  net.box.set_edge_lengths(Vec3(10.0, 10.0, 10.0));
  net.nodes = {{0, Vec3(1.0, 5.0, 5.0)},
               {1, Vec3(3.5, 5.0, 5.0)},
               {2, Vec3(3.5, 7.0, 5.0)},
               {3, Vec3(9.5, 5.0, 5.0)}};
  net.fibers = {{0, 0, 1, IVec3(0, 0, 0), 0.18, 1.1e6},
                {1, 1, 2, IVec3(0, 0, 0), 0.18, 1.1e6},
                {2, 3, 0, IVec3(1, 0, 0), 0.18, 1.1e6},  // crosses the +x face
                {3, 2, 0, IVec3(0, 0, 0), 0.18, 1.1e6}};
  return net;
}

}  // namespace

TEST_CASE("periodic box wraps coordinates into the unit cell") {
  PeriodicBox box(Vec3(10.0, 20.0, 30.0));
  const Vec3 w = box.wrap(Vec3(-0.5, 20.0, 65.0));
  CHECK(w.x() == doctest::Approx(9.5));
  CHECK(w.y() == doctest::Approx(0.0));
  CHECK(w.z() == doctest::Approx(5.0));
  for (int k = 0; k < 3; ++k) {
    CHECK(w[k] >= 0.0);
    CHECK(w[k] < box.edge_lengths()[k]);
  }
}

TEST_CASE("wrapping by one period is exact in floating point") {
  PeriodicBox box(Vec3(245.0, 245.0, 245.0));
  SequentialRng rng(2024);
  std::uniform_real_distribution<double> u(245.0, 490.0);
  for (int i = 0; i < 1000; ++i) {
    const double y = u(rng);  // one period out of range
    const double w = box.wrap(Vec3(y, 100.0, 100.0)).x();
    // The single-period subtraction rounds nothing away (Sterbenz), so the
    // double result equals the same difference at extended precision.
    CHECK(static_cast<long double>(w) == static_cast<long double>(y) - 245.0L);
    CHECK(box.wrap(Vec3(w, 100.0, 100.0)).x() == w);  // idempotent once inside
  }
}

TEST_CASE("minimum image shift points across the nearest face") {
  PeriodicBox box(Vec3(10.0, 10.0, 10.0));
  const Vec3 a(9.5, 5.0, 5.0), b(0.5, 5.0, 5.0);
  CHECK(box.min_image_shift(a, b) == IVec3(1, 0, 0));
  CHECK(box.min_image_separation(a, b).x() == doctest::Approx(1.0));
  CHECK(box.min_image_shift(b, a) == IVec3(-1, 0, 0));
  CHECK(box.min_image_shift(a, a) == IVec3(0, 0, 0));
}

TEST_CASE("box deformation maps edges and volumes") {
  PeriodicBox box(Vec3(245.0, 245.0, 245.0));
  Mat3 f = Mat3::Identity();
  f(0, 0) = 1.01;
  box.set_deformation(f);
  CHECK(box.to_physical(Vec3(245.0, 0.0, 0.0)).x() == doctest::Approx(247.45));
  CHECK(box.deformed_volume() == doctest::Approx(1.01 * 245.0 * 245.0 * 245.0));

  Mat3 shear = Mat3::Identity();
  shear(0, 1) = 0.01;  // x picks up 1% of y
  box.set_deformation(shear);
  const Vec3 p = box.to_physical(Vec3(0.0, 245.0, 0.0));
  CHECK(p.x() == doctest::Approx(2.45));
  CHECK(p.y() == doctest::Approx(245.0));

  CHECK_THROWS_AS(box.set_deformation(Mat3::Zero()), DomainError);
  Mat3 inverted = Mat3::Identity();
  inverted(0, 0) = -1.0;
  CHECK_THROWS_AS(box.set_deformation(inverted), DomainError);
  CHECK_THROWS_AS(box.set_edge_lengths(Vec3(1.0, -1.0, 1.0)), DomainError);
}

TEST_CASE("counter rng is a pure function of its key") {
  CounterRng rng{12345};
  const double a = rng.uniform(CounterRng::kLinkBind, 7, 42, 0);
  CHECK(a == rng.uniform(CounterRng::kLinkBind, 7, 42, 0));
  CHECK(a != rng.uniform(CounterRng::kLinkUnbind, 7, 42, 0));
  CHECK(a != rng.uniform(CounterRng::kLinkBind, 8, 42, 0));
  CHECK(a != rng.uniform(CounterRng::kLinkBind, 7, 43, 0));
  CHECK(a != rng.uniform(CounterRng::kLinkBind, 7, 42, 1));
  CHECK(a >= 0.0);
  CHECK(a < 1.0);
  CHECK_FALSE(rng.bernoulli(0.0, CounterRng::kGeneric, 1, 1));
  CHECK(rng.bernoulli(1.0, CounterRng::kGeneric, 1, 1));
  CHECK(pair_key(3, 5) != pair_key(5, 3));
}

TEST_CASE("counter rng draws look uniform") {
  CounterRng rng{99};
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += rng.uniform(CounterRng::kGeneric, i, 0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("network validation accepts a well-formed network") {
  CHECK_NOTHROW(sample_network().validate());
}

TEST_CASE("network validation rejects malformed input") {
  SUBCASE("node id mismatch") {
    Network net = sample_network();
    net.nodes[1].id = 7;
    CHECK_THROWS_AS(net.validate(), DomainError);
  }
  SUBCASE("position outside the box") {
    Network net = sample_network();
    net.nodes[0].position.x() = 10.0;
    CHECK_THROWS_AS(net.validate(), DomainError);
  }
  SUBCASE("duplicate fiber, same orientation") {
    Network net = sample_network();
    net.fibers.push_back({4, 0, 1, IVec3(0, 0, 0), 0.18, 1.1e6});
    CHECK_THROWS_AS(net.validate(), DomainError);
  }
  SUBCASE("duplicate fiber, swapped orientation and negated shift") {
    Network net = sample_network();
    net.fibers.push_back({4, 0, 3, IVec3(-1, 0, 0), 0.18, 1.1e6});
    CHECK_THROWS_AS(net.validate(), DomainError);
  }
  SUBCASE("zero-length fiber") {
    Network net = sample_network();
    net.fibers.push_back({4, 0, 0, IVec3(0, 0, 0), 0.18, 1.1e6});
    CHECK_THROWS_AS(net.validate(false), DomainError);
  }
  SUBCASE("fiber beyond the one-third-edge bound") {
    Network net = sample_network();
    net.nodes.push_back({4, Vec3(8.0, 5.0, 5.0)});
    net.fibers.push_back({4, 1, 4, IVec3(0, 0, 0), 0.18, 1.1e6});
    CHECK_THROWS_AS(net.validate(true), DomainError);
    CHECK_NOTHROW(net.validate(false));
  }
  SUBCASE("isolated node") {
    Network net = sample_network();
    net.nodes.push_back({4, Vec3(8.0, 8.0, 8.0)});
    CHECK_THROWS_AS(net.validate(), DomainError);
  }
  SUBCASE("non-positive section") {
    Network net = sample_network();
    net.fibers[0].diameter = 0.0;
    CHECK_THROWS_AS(net.validate(), DomainError);
  }
}

TEST_CASE("fiber vectors follow image shifts") {
  Network net = sample_network();
  const Vec3 v = net.fiber_vector_undeformed(net.fibers[2]);  // 9.5 -> 1.0 across +x
  CHECK(v.x() == doctest::Approx(1.5));
  CHECK(v.y() == doctest::Approx(0.0));
  CHECK(net.fiber_length(net.fibers[2]) == doctest::Approx(1.5));
}

TEST_CASE("removing one fiber decrements exactly two valencies") {
  Network net = sample_network();
  const auto before = net.valencies();
  const Fiber gone = net.fibers.back();
  net.fibers.pop_back();
  const auto after = net.valencies();
  int changed = 0;
  for (size_t i = 0; i < before.size(); ++i) changed += before[i] - after[i];
  CHECK(changed == 2);
  CHECK(after[gone.node_a] == before[gone.node_a] - 1);
  CHECK(after[gone.node_b] == before[gone.node_b] - 1);
}

TEST_CASE("translation by whole periods is a bit-exact no-op") {
  Network net = sample_network();
  const Network ref = net;
  net.translate(Vec3(10.0, -20.0, 30.0));
  for (size_t i = 0; i < net.nodes.size(); ++i) {
    CHECK(net.nodes[i].position.x() == ref.nodes[i].position.x());
    CHECK(net.nodes[i].position.y() == ref.nodes[i].position.y());
    CHECK(net.nodes[i].position.z() == ref.nodes[i].position.z());
  }
  for (size_t i = 0; i < net.fibers.size(); ++i)
    CHECK(net.fibers[i].image_shift == ref.fibers[i].image_shift);
}

TEST_CASE("general translation preserves fiber vectors and validity") {
  Network net = sample_network();
  std::vector<Vec3> before;
  for (const Fiber& f : net.fibers) before.push_back(net.fiber_vector_undeformed(f));
  net.translate(Vec3(3.7, -1.2, 9.9));
  net.validate();
  for (size_t i = 0; i < net.fibers.size(); ++i)
    CHECK((net.fiber_vector_undeformed(net.fibers[i]) - before[i]).norm() < 1e-9);
}

TEST_CASE("network file round trip is bitwise exact") {
  Network net = sample_network();
  Mat3 f = Mat3::Identity();
  f(0, 0) = 1.01;
  f(0, 1) = 0.004;
  net.box.set_deformation(f);
  net.nodes[0].position.x() = 4.0 / 3.0;  // force a non-terminating decimal

  const std::string path = "roundtrip_test_net.txt";
  save_network(net, path);
  const Network back = load_network(path, /*strict_length_bound=*/true);
  std::filesystem::remove(path);

  REQUIRE(back.nodes.size() == net.nodes.size());
  REQUIRE(back.fibers.size() == net.fibers.size());
  for (size_t i = 0; i < net.nodes.size(); ++i) {
    CHECK(back.nodes[i].position.x() == net.nodes[i].position.x());
    CHECK(back.nodes[i].position.y() == net.nodes[i].position.y());
    CHECK(back.nodes[i].position.z() == net.nodes[i].position.z());
  }
  for (size_t i = 0; i < net.fibers.size(); ++i) {
    CHECK(back.fibers[i].node_a == net.fibers[i].node_a);
    CHECK(back.fibers[i].node_b == net.fibers[i].node_b);
    CHECK(back.fibers[i].image_shift == net.fibers[i].image_shift);
    CHECK(back.fibers[i].diameter == net.fibers[i].diameter);
    CHECK(back.fibers[i].modulus == net.fibers[i].modulus);
  }
  CHECK(back.box.deformation() == net.box.deformation());
  CHECK(back.box.edge_lengths() == net.box.edge_lengths());
}

TEST_CASE("network reader rejects malformed files") {
  auto write_file = [](const std::string& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs(text.c_str(), f);
    std::fclose(f);
  };
  const std::string path = "malformed_test_net.txt";

  SUBCASE("wrong magic") {
    write_file(path, "something-else 1\n");
    CHECK_THROWS_AS(load_network(path), IoError);
  }
  SUBCASE("truncated node block") {
    write_file(path,
               "cellmat-net 1\nbox 10 10 10\ndeform 1 0 0 0 1 0 0 0 1\nnodes 2\n0 1 1 1\n");
    CHECK_THROWS_AS(load_network(path), IoError);
  }
  SUBCASE("garbage numbers") {
    write_file(path,
               "cellmat-net 1\nbox 10 10 10\ndeform 1 0 0 0 1 0 0 0 1\nnodes 1\n0 x y z\n"
               "fibers 0\n");
    CHECK_THROWS_AS(load_network(path), IoError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("valency histogram puts each integer in its own bin") {
  const Network net = sample_network();  // valencies 3, 2, 2, 1
  const DescriptorHistogram h = valency_distribution(net);
  std::map<int, double> by_valency;
  for (size_t j = 0; j < h.counts.size(); ++j)
    if (h.counts[j] > 0.0)
      by_valency[static_cast<int>(std::lround(h.bin_center(j)))] = h.counts[j];
  CHECK(by_valency[1] == 1.0);
  CHECK(by_valency[2] == 2.0);
  CHECK(by_valency[3] == 1.0);
  CHECK(h.total == 4.0);
}

TEST_CASE("length normalization scales by mean node spacing") {
  Network net = sample_network();
  // 4 nodes in 1000 um^3 -> (4/1000)^(1/3)
  CHECK(length_normalization(net) == doctest::Approx(std::cbrt(4.0 / 1000.0)));
  const auto phys = length_samples(net, false);
  const auto norm = length_samples(net, true);
  REQUIRE(phys.size() == norm.size());
  for (size_t i = 0; i < phys.size(); ++i)
    CHECK(norm[i] == doctest::Approx(phys[i] * std::cbrt(4.0 / 1000.0)));
}

TEST_CASE("direction cosines use outward directions at the shared node") {
  Network net;
  net.box.set_edge_lengths(Vec3(10.0, 10.0, 10.0));
  net.nodes = {{0, Vec3(5.0, 5.0, 5.0)},
               {1, Vec3(7.0, 5.0, 5.0)},
               {2, Vec3(3.0, 5.0, 5.0)},
               {3, Vec3(5.0, 7.0, 5.0)}};
  // Center node with fibers along +x, -x, +y; note fiber 1 is stored with the
  // center as its second node, so the outward direction needs the sign flip.
  net.fibers = {{0, 0, 1, IVec3(0, 0, 0), 0.18, 1.1e6},
                {1, 2, 0, IVec3(0, 0, 0), 0.18, 1.1e6},
                {2, 0, 3, IVec3(0, 0, 0), 0.18, 1.1e6}};
  auto samples = cosine_samples(net);
  std::multiset<double> rounded;
  for (double c : samples) rounded.insert(std::round(c * 1e9) / 1e9);
  CHECK(samples.size() == 3);  // pairs at the center node only
  CHECK(rounded.count(-1.0) == 1);  // straight continuation +x / -x
  CHECK(rounded.count(0.0) == 2);   // right angles with +y
}

TEST_CASE("collagen density from fiber volume") {
  Network net;
  net.box.set_edge_lengths(Vec3(10.0, 10.0, 10.0));
  net.nodes = {{0, Vec3(2.0, 2.0, 2.0)}, {1, Vec3(7.0, 2.0, 2.0)}};
  net.fibers = {{0, 0, 1, IVec3(0, 0, 0), 0.18, 1.1e6}};
  CHECK(collagen_density(net) == doctest::Approx(oracle::kDensityOneFiber).epsilon(1e-12));
  // Deformed lengths over deformed volume: an x-stretch elongates this
  // x-aligned fiber by the same factor the volume grows, so no change...
  Mat3 f = Mat3::Identity();
  f(0, 0) = 1.01;
  net.box.set_deformation(f);
  CHECK(collagen_density(net) == doctest::Approx(oracle::kDensityOneFiber).epsilon(1e-9));
  // ...while a y-stretch only dilutes it.
  f(0, 0) = 1.0;
  f(1, 1) = 1.01;
  net.box.set_deformation(f);
  CHECK(collagen_density(net) == doctest::Approx(oracle::kDensityOneFiber / 1.01).epsilon(1e-9));
}

TEST_CASE("histogram clamps out-of-range samples into end bins") {
  const DescriptorHistogram h = make_histogram({-5.0, 0.5, 1.5, 99.0}, 0.0, 2.0, 2);
  REQUIRE(h.counts.size() == 2);
  CHECK(h.counts[0] == 2.0);
  CHECK(h.counts[1] == 2.0);
  CHECK(h.total == 4.0);
}
