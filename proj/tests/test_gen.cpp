#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "core/descriptors.hpp"
#include "doctest.h"
#include "gen/cvm.hpp"
#include "gen/netgen.hpp"
#include "gen/targets.hpp"
#include "gen/voronoi.hpp"
#include "oracles.hpp"

using namespace cellmat;
using namespace cellmat::gen;

namespace {

// Reference brute-force evaluation: every sample contributes its rank term
// (i - n C - 1/2)^2 with C taken at its bin center.
double rank_sum_reference(const std::vector<int>& counts, const std::vector<double>& cdf) {
  double n = 0.0;
  for (int m : counts) n += m;
  double e = 0.0;
  int rank = 0;
  for (size_t j = 0; j < counts.size(); ++j)
    for (int t = 0; t < counts[j]; ++t) {
      ++rank;
      const double d = rank - n * cdf[j] - 0.5;
      e += d * d;
    }
  return e / (n * n);
}

Network small_matched_network(unsigned seed, double box_edge, int node_target) {
  PeriodicBox box;
  box.set_edge_lengths(Vec3(box_edge, box_edge, box_edge));
  SequentialRng rng(seed);
  Network net = voronoi_seed(box, node_target, rng);
  return match_valency(net, {{3, 0.7}, {4, 0.3}}, rng);
}

}  // namespace

TEST_CASE("length target is the lognormal CDF") {
  DescriptorTargets t;
  CHECK(target_length_cdf(1.0, t) == doctest::Approx(oracle::kLengthCdfAtOne).epsilon(1e-12));
  CHECK(target_length_cdf(std::exp(t.length_mu), t) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(target_length_cdf(1e9, t) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(target_length_cdf(0.0, t), DomainError);
  CHECK_THROWS_AS(target_length_cdf(-1.0, t), DomainError);
}

TEST_CASE("length quantile inverts the CDF") {
  DescriptorTargets t;
  for (double p : {0.001, 0.1, 0.5, 0.9, 0.999})
    CHECK(target_length_cdf(target_length_quantile(p, t), t) == doctest::Approx(p).epsilon(1e-9));
  CHECK(standard_normal_quantile(0.975) ==
        doctest::Approx(oracle::kNormalQuantile975).epsilon(1e-9));
}

TEST_CASE("cosine CDF endpoint values in both forms") {
  DescriptorTargets t;
  CHECK(target_cosine_cdf(1.0, t, CosineCdfForm::kAsPrinted) == doctest::Approx(1.0));
  CHECK(target_cosine_cdf(-1.0, t, CosineCdfForm::kAsPrinted) ==
        doctest::Approx(oracle::kCosinePrintedCdfAtMinusOne).epsilon(1e-12));
  CHECK(target_cosine_cdf(1.0, t, CosineCdfForm::kIntegrated) == doctest::Approx(1.0));
  CHECK(target_cosine_cdf(-1.0, t, CosineCdfForm::kIntegrated) ==
        doctest::Approx(oracle::kCosineIntegratedCdfAtMinusOne).epsilon(1e-9));
  CHECK_THROWS_AS(target_cosine_cdf(-1.0001, t), DomainError);
  CHECK_THROWS_AS(target_cosine_cdf(1.0001, t), DomainError);
}

TEST_CASE("cosine CDF is monotone non-decreasing on a 1000-point grid") {
  DescriptorTargets t;
  for (CosineCdfForm form : {CosineCdfForm::kAsPrinted, CosineCdfForm::kIntegrated}) {
    double prev = target_cosine_cdf(-1.0, t, form);
    for (int i = 1; i <= 1000; ++i) {
      const double beta = -1.0 + 2.0 * i / 1000.0;
      const double c = target_cosine_cdf(beta, t, form);
      CHECK(c >= prev - 1e-12);
      prev = c;
    }
  }
}

TEST_CASE("integrated cosine CDF is the exact integral of the density") {
  DescriptorTargets t;
  // Trapezoid integration of the density reproduces CDF differences.
  const int steps = 20000;
  double acc = 0.0, prev_pdf = cosine_pdf(-1.0, t);
  const double c0 = target_cosine_cdf(-1.0, t, CosineCdfForm::kIntegrated);
  for (int i = 1; i <= steps; ++i) {
    const double beta = -1.0 + 2.0 * i / steps;
    const double pdf = cosine_pdf(beta, t);
    acc += 0.5 * (pdf + prev_pdf) * (2.0 / steps);
    prev_pdf = pdf;
    if (i % 4000 == 0)
      CHECK(target_cosine_cdf(beta, t, CosineCdfForm::kIntegrated) - c0 ==
            doctest::Approx(acc).epsilon(1e-6));
  }
}

TEST_CASE("target validation flags bad parameters") {
  DescriptorTargets t;
  CHECK_NOTHROW(t.validate());
  CHECK(t.mean_valency() == doctest::Approx(oracle::kMeanValency));

  DescriptorTargets bad_sigma = t;
  bad_sigma.length_sigma = 0.0;
  CHECK_THROWS_AS(bad_sigma.validate(), ConfigError);

  DescriptorTargets negative_pdf = t;
  negative_pdf.cosine_b[0] = -1.0;
  CHECK_THROWS_AS(negative_pdf.validate(), ConfigError);

  DescriptorTargets bad_valency = t;
  bad_valency.valency_weights = {{0, 1.0}};
  CHECK_THROWS_AS(bad_valency.validate(), ConfigError);
}

TEST_CASE("target samplers reproduce their distributions") {
  DescriptorTargets t;
  SequentialRng rng(123);
  double len_sum = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) len_sum += sample_length(t, rng);
  CHECK(len_sum / n == doctest::Approx(oracle::kMeanNormalizedLength).epsilon(0.02));

  // Cosine samples against the integrated CDF via a coarse empirical CDF.
  std::vector<double> cs(n);
  for (int i = 0; i < n; ++i) cs[i] = sample_cosine(t, rng);
  std::sort(cs.begin(), cs.end());
  for (double q : {0.25, 0.5, 0.75}) {
    const double empirical = cs[static_cast<size_t>(q * n)];
    const double lo = target_cosine_cdf(empirical, t, CosineCdfForm::kIntegrated);
    CHECK(lo == doctest::Approx(q).epsilon(0.05));
  }
}

TEST_CASE("single-bin mismatch hand values") {
  CHECK(cvm_energy({1.0}, {0.5}) == doctest::Approx(oracle::kCvmSingleHalf));
  CHECK(cvm_energy({1.0}, {0.0}) == doctest::Approx(oracle::kCvmSingleZero));
}

TEST_CASE("binned mismatch equals the per-sample rank reference") {
  SequentialRng rng(7);
  std::uniform_int_distribution<int> cnt(0, 9);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int bins = 1 + rep % 13;
    std::vector<int> counts(bins);
    std::vector<double> cdf(bins);
    int total = 0;
    double c = 0.0;
    for (int j = 0; j < bins; ++j) {
      counts[j] = cnt(rng);
      total += counts[j];
      c += u01(rng);
      cdf[j] = c;
    }
    if (total == 0) counts[0] = 1;
    for (int j = 0; j < bins; ++j) cdf[j] /= c + 1.0;  // monotone values in (0,1)
    std::vector<double> dcounts(counts.begin(), counts.end());
    const double expected = rank_sum_reference(counts, cdf);
    CHECK(cvm_energy(dcounts, cdf) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("matching histograms score near the discretization floor") {
  DescriptorTargets t;
  const int bins = 64;
  const double lo = target_length_quantile(0.001, t), hi = target_length_quantile(0.999, t);
  std::vector<double> cdf(bins), match(bins), uniform(bins);
  const double n = 1000.0;
  double prev = 0.0;
  for (int j = 0; j < bins; ++j) {
    const double right = target_length_cdf(lo + (hi - lo) * (j + 1.0) / bins, t);
    cdf[j] = target_length_cdf(lo + (hi - lo) * (j + 0.5) / bins, t);
    match[j] = n * (right - prev);  // per-bin mass of the target itself
    uniform[j] = n / bins;
    prev = right;
  }
  const double e_match = cvm_energy(match, cdf);
  const double e_uniform = cvm_energy(uniform, cdf);
  // A histogram equal to the per-bin target mass scores only the within-bin
  // rank spread, sum of m^3/12 over bins (plus small curvature terms).
  double floor_est = 0.0;
  for (int j = 0; j < bins; ++j) floor_est += match[j] * match[j] * match[j] / 12.0;
  floor_est /= n * n;
  CHECK(e_match > 0.7 * floor_est);
  CHECK(e_match < 1.5 * floor_est);
  CHECK(e_uniform > 10.0 * e_match);  // a real mismatch dominates the floor
  // Same shape at 10x the sample count: the floor grows ~linearly, far less
  // than the quadratic growth a distribution mismatch would show.
  std::vector<double> match10(bins);
  for (int j = 0; j < bins; ++j) match10[j] = 10.0 * match[j];
  CHECK(cvm_energy(match10, cdf) < 12.0 * e_match + 1e-9);
}

TEST_CASE("mismatch statistic rejects malformed input") {
  CHECK_THROWS_AS(cvm_energy({}, {}), DomainError);
  CHECK_THROWS_AS(cvm_energy({1.0, 2.0}, {0.5}), DomainError);
  CHECK_THROWS_AS(cvm_energy({0.0, 0.0}, {0.2, 0.7}), DomainError);
}

TEST_CASE("tessellating a cubic seed lattice yields valency-4 vertices") {
  PeriodicBox box(Vec3(40.0, 40.0, 40.0));
  std::vector<Vec3> seeds;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) seeds.push_back(Vec3(5.0 + 20.0 * i, 5.0 + 20.0 * j, 5.0 + 20.0 * k));
  SequentialRng rng(3);
  const Network net = voronoi_from_seeds(box, seeds, rng);
  net.validate(/*strict_length_bound=*/false);
  REQUIRE(net.nodes.size() > 0);
  for (int v : net.valencies()) CHECK(v == 4);
}

TEST_CASE("tessellation node count lands within 20% of the request") {
  PeriodicBox box(Vec3(50.0, 50.0, 50.0));
  SequentialRng rng(11);
  const Network net = voronoi_seed(box, 400, rng);
  CHECK(net.nodes.size() >= 320);
  CHECK(net.nodes.size() <= 480);
}

TEST_CASE("tessellation is deterministic and periodic") {
  PeriodicBox box(Vec3(35.0, 35.0, 35.0));
  SequentialRng r1(21), r2(21);
  const Network a = voronoi_seed(box, 200, r1);
  const Network b = voronoi_seed(box, 200, r2);
  REQUIRE(a.nodes.size() == b.nodes.size());
  REQUIRE(a.fibers.size() == b.fibers.size());
  for (size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].position.x() == b.nodes[i].position.x());
    CHECK(a.nodes[i].position.y() == b.nodes[i].position.y());
    CHECK(a.nodes[i].position.z() == b.nodes[i].position.z());
  }
  int crossing = 0;
  for (size_t i = 0; i < a.fibers.size(); ++i) {
    CHECK(a.fibers[i].node_a == b.fibers[i].node_a);
    CHECK(a.fibers[i].node_b == b.fibers[i].node_b);
    CHECK(a.fibers[i].image_shift == b.fibers[i].image_shift);
    if (a.fibers[i].image_shift != IVec3(0, 0, 0)) ++crossing;
    // Short fibers must carry the minimum-image shift.
    const double len = a.fiber_vector_undeformed(a.fibers[i]).norm();
    if (len < 0.45 * 35.0)
      CHECK(a.fibers[i].image_shift ==
            a.box.min_image_shift(a.nodes[a.fibers[i].node_a].position,
                                  a.nodes[a.fibers[i].node_b].position));
  }
  CHECK(crossing > 0);  // a periodic tessellation must cross the faces
}

TEST_CASE("valency editing is a no-op when the target is already met") {
  // A ring: every node valency 2.
  Network net;
  net.box.set_edge_lengths(Vec3(30.0, 30.0, 30.0));
  const int n = 12;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    net.nodes.push_back({i, Vec3(15.0 + 4.0 * std::cos(a), 15.0 + 4.0 * std::sin(a), 15.0)});
  }
  for (int i = 0; i < n; ++i) {
    Fiber f;
    f.id = i;
    f.node_a = i;
    f.node_b = (i + 1) % n;
    net.fibers.push_back(f);
  }
  net.validate();
  SequentialRng rng(5);
  const Network out = match_valency(net, {{2, 1.0}}, rng);
  REQUIRE(out.fibers.size() == net.fibers.size());
  for (size_t i = 0; i < net.fibers.size(); ++i) {
    CHECK(out.fibers[i].node_a == net.fibers[i].node_a);
    CHECK(out.fibers[i].node_b == net.fibers[i].node_b);
  }
}

TEST_CASE("valency editing reaches the standard target from a tessellation") {
  const Network net = small_matched_network(31, 40.0, 280);
  net.validate(/*strict_length_bound=*/true);
  const auto vals = net.valencies();
  double mean = 0.0;
  for (int v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  CHECK(mean == doctest::Approx(3.3).epsilon(0.03));
  // The editor stops once within a few stragglers of the exact-count floor.
  CHECK(valency_energy(vals, {{3, 0.7}, {4, 0.3}}) < 2.5e-4);
}

TEST_CASE("valency editing failure carries the best network so far") {
  PeriodicBox box(Vec3(40.0, 40.0, 40.0));
  SequentialRng rng(13);
  const Network net = voronoi_seed(box, 200, rng);
  ValencyMatchConfig cfg;
  cfg.max_iters = 3;  // starve the edit budget
  CHECK_THROWS_AS(match_valency(net, {{3, 0.7}, {4, 0.3}}, rng, cfg), ValencyMatchError);
  try {
    SequentialRng r2(13);
    const Network n2 = voronoi_seed(box, 200, r2);
    match_valency(n2, {{3, 0.7}, {4, 0.3}}, r2, cfg);
  } catch (const ValencyMatchError& e) {
    CHECK(e.best_network().nodes.size() > 0);
    CHECK(e.best_network().fibers.size() > 0);
  }
}

TEST_CASE("valency mismatch floor is attained by the rounded target") {
  const std::map<int, double> w = {{3, 0.7}, {4, 0.3}};
  // 2000 nodes: 1400/600 splits exactly and has even total degree.
  std::vector<int> vals(2000, 3);
  std::fill(vals.begin() + 1400, vals.end(), 4);
  CHECK(valency_energy(vals, w) == doctest::Approx(0.0));
  CHECK(valency_energy_floor(2000, w) == doctest::Approx(0.0));
  // Off-target histograms score worse than the floor.
  std::fill(vals.begin(), vals.end(), 4);
  CHECK(valency_energy(vals, w) > 0.1);
}

TEST_CASE("annealing lowers the descriptor mismatch deterministically") {
  const Network net = small_matched_network(41, 32.0, 150);
  AnnealConfig cfg;
  cfg.bins_length = 100;
  cfg.bins_cosine = 100;
  cfg.max_iters = 30000;
  cfg.iters_per_stage = 3000;
  cfg.trace_stride = 100;

  SequentialRng r1(99), r2(99);
  DescriptorTargets targets;
  const AnnealResult a = anneal(net, targets, cfg, r1);
  const AnnealResult b = anneal(net, targets, cfg, r2);

  REQUIRE(a.trace.size() > 2);
  CHECK(a.trace.front().energy > a.best_energy * 3.0);  // substantial reduction
  CHECK(a.best_energy == b.best_energy);
  for (size_t i = 0; i < a.network.nodes.size(); ++i) {
    CHECK(a.network.nodes[i].position.x() == b.network.nodes[i].position.x());
    CHECK(a.network.nodes[i].position.y() == b.network.nodes[i].position.y());
    CHECK(a.network.nodes[i].position.z() == b.network.nodes[i].position.z());
  }
  // Iterations strictly increase along the trace and weights combine terms.
  for (size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i].iter > a.trace[i - 1].iter);
  for (const auto& p : a.trace)
    CHECK(p.energy == doctest::Approx(cfg.w_length * p.energy_length +
                                      cfg.w_cosine * p.energy_cosine));
  CHECK(a.initial_uphill_acceptance >= 0.0);
  CHECK(a.initial_uphill_acceptance <= 1.0);
}

TEST_CASE("default temperature accepts about half the first-stage uphill moves") {
  PeriodicBox box(Vec3(60.0, 60.0, 60.0));
  SequentialRng rng(31);
  const Network vor = voronoi_seed(box, 2340, rng);
  const Network net = match_valency(vor, {{3, 0.7}, {4, 0.3}}, rng);

  AnnealConfig cfg;  // default t0, bins, move scale
  cfg.iters_per_stage = 20000;
  cfg.max_iters = 20000;  // first stage only
  cfg.trace_stride = 20000;
  SequentialRng ar(7);
  const AnnealResult res = anneal(net, DescriptorTargets{}, cfg, ar);
  CHECK(res.initial_uphill_acceptance > 0.4);
  CHECK(res.initial_uphill_acceptance < 0.6);
}

TEST_CASE("annealing preserves topology and the length bound") {
  const Network net = small_matched_network(51, 32.0, 150);
  AnnealConfig cfg;
  cfg.bins_length = 100;
  cfg.bins_cosine = 100;
  cfg.max_iters = 20000;
  cfg.iters_per_stage = 2000;
  cfg.trace_stride = 500;
  SequentialRng rng(7);
  const AnnealResult res = anneal(net, DescriptorTargets{}, cfg, rng);

  REQUIRE(res.network.nodes.size() == net.nodes.size());
  REQUIRE(res.network.fibers.size() == net.fibers.size());
  for (size_t i = 0; i < net.fibers.size(); ++i) {
    CHECK(res.network.fibers[i].node_a == net.fibers[i].node_a);
    CHECK(res.network.fibers[i].node_b == net.fibers[i].node_b);
  }
  res.network.validate(/*strict_length_bound=*/true);  // length bound held
  const auto va = net.valencies();
  const auto vb = res.network.valencies();
  for (size_t i = 0; i < va.size(); ++i) CHECK(va[i] == vb[i]);
}

TEST_CASE("at vanishing temperature annealing only ever descends") {
  const Network net = small_matched_network(61, 30.0, 120);
  AnnealConfig cfg;
  cfg.bins_length = 80;
  cfg.bins_cosine = 80;
  cfg.max_iters = 8000;
  cfg.iters_per_stage = 1000;
  cfg.t0 = 1e-300;  // uphill acceptance is exp(-dE/T) -> 0
  cfg.trace_stride = 1;
  SequentialRng rng(17);
  const AnnealResult res = anneal(net, DescriptorTargets{}, cfg, rng);
  for (size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].energy <= res.trace[i - 1].energy + 1e-12);
  // With no uphill moves the final state is the best state.
  CHECK(res.trace.back().energy == doctest::Approx(res.best_energy));
}

TEST_CASE("annealing stops at the energy threshold") {
  const Network net = small_matched_network(71, 30.0, 120);
  AnnealConfig probe;
  probe.bins_length = 80;
  probe.bins_cosine = 80;
  probe.max_iters = 1;
  probe.trace_stride = 1;
  SequentialRng r0(1);
  const double e0 = anneal(net, DescriptorTargets{}, probe, r0).trace.front().energy;

  AnnealConfig cfg = probe;
  cfg.max_iters = 50000;
  cfg.iters_per_stage = 5000;
  cfg.energy_threshold = 0.5 * e0;
  SequentialRng rng(1);
  const AnnealResult res = anneal(net, DescriptorTargets{}, cfg, rng);
  CHECK(res.iterations < cfg.max_iters);
  CHECK(res.trace.back().energy <= cfg.energy_threshold);
}

TEST_CASE("generation hits the requested concentration") {
  GenerateConfig cfg;
  cfg.box_edges = Vec3(45.0, 45.0, 45.0);
  cfg.concentration_mg_ml = 1.2;
  cfg.seed = 5;
  cfg.anneal.bins_length = 200;
  cfg.anneal.bins_cosine = 200;
  cfg.anneal.max_iters = 60000;
  cfg.anneal.iters_per_stage = 6000;
  cfg.anneal.trace_stride = 500;
  const GenerateResult res = generate_network(cfg);

  res.network.validate(/*strict_length_bound=*/true);
  CHECK(std::abs(res.density_mg_ml - 1.2) / 1.2 <= cfg.density_tolerance);
  CHECK(collagen_density(res.network) == doctest::Approx(res.density_mg_ml));
  CHECK(res.energy_final < res.energy_initial);
  REQUIRE(res.trace.size() > 2);

  // Same configuration, same network.
  const GenerateResult rep = generate_network(cfg);
  CHECK(rep.density_mg_ml == res.density_mg_ml);
  CHECK(rep.network.nodes.size() == res.network.nodes.size());
}

TEST_CASE("generation rejects invalid configurations") {
  GenerateConfig cfg;
  cfg.concentration_mg_ml = -1.0;
  CHECK_THROWS_AS(generate_network(cfg), ConfigError);
  GenerateConfig cfg2;
  cfg2.box_edges = Vec3(0.0, 45.0, 45.0);
  CHECK_THROWS_AS(generate_network(cfg2), ConfigError);
  GenerateConfig cfg3;
  cfg3.anneal.cooling_base = 1.5;
  CHECK_THROWS_AS(generate_network(cfg3), ConfigError);
}
