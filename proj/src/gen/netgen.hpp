#pragma once

// Network construction pipeline: Voronoi initialization, valency editing
// against a discrete target, simulated annealing of node positions against
// length and direction-cosine targets, and concentration control.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "core/network.hpp"
#include "core/rng.hpp"
#include "gen/targets.hpp"

namespace cellmat::gen {

struct ValencyMatchConfig {
  long max_iters = 500000;
  long patience = 50000;      // proposals without improvement before giving up
  double floor_ratio = 8.0;   // success threshold over the discretization floor
  double count_slack = 8.0;   // extra allowed squared-count residual (scaled by 1/n^2)
};

// Thrown when valency editing cannot reach the target; carries the best
// network found so callers can inspect or reuse it.
class ValencyMatchError : public DomainError {
 public:
  ValencyMatchError(const std::string& what, Network best);
  const Network& best_network() const { return *best_; }

 private:
  std::shared_ptr<const Network> best_;
};

// Discrete mismatch statistic between a valency histogram and target weights
// (integer bins; target CDF evaluated at the integers).
double valency_energy(const std::vector<int>& valencies, const std::map<int, double>& weights);

// Lowest valency_energy achievable by any integer histogram with the given
// total; used as the convergence floor for match_valency.
double valency_energy_floor(int node_count, const std::map<int, double>& weights);

// Greedy stochastic fiber add/remove edits until the valency histogram
// matches the target weights. Also removes fibers longer than min(edge)/3 so
// the result satisfies the strict network invariants; added fibers always
// respect that bound. Node positions are never changed.
Network match_valency(const Network& net, const std::map<int, double>& target_weights,
                      SequentialRng& rng, const ValencyMatchConfig& cfg = {});

struct AnnealConfig {
  double w_length = 1.0;     // weight of the length mismatch term
  double w_cosine = 1.0;     // weight of the direction-cosine mismatch term
  int bins_length = 1000;
  int bins_cosine = 1000;
  double t0 = 0.05;          // initial temperature
  double cooling_base = 0.95;
  long iters_per_stage = 20000;  // temperature stage length (t = base^stage * t0)
  long max_iters = 2000000;
  double energy_threshold = 0.0;  // stop early when total energy falls below
  // Proposal half-width in um, halved whenever stage acceptance drops under
  // 1%. The default puts the first-stage uphill acceptance near one half at
  // the default temperature on desk-scale networks.
  double move_scale = 1.0;
  long trace_stride = 1;          // record every k-th iteration (ends always kept)

  void validate() const;  // throws ConfigError
};

struct AnnealTracePoint {
  long iter = 0;
  double energy = 0.0;
  double energy_length = 0.0;
  double energy_cosine = 0.0;
  double temperature = 0.0;
};

struct AnnealResult {
  Network network;  // best-energy state visited
  std::vector<AnnealTracePoint> trace;
  double best_energy = 0.0;
  long iterations = 0;
  // Accepted fraction among uphill proposals during the first stage.
  double initial_uphill_acceptance = 0.0;
};

// Metropolis annealing of node positions. Connectivity, node count and the
// valency distribution are untouched; moves creating fibers longer than
// min(edge)/3 are rejected outright.
AnnealResult anneal(const Network& net, const DescriptorTargets& targets,
                    const AnnealConfig& config, SequentialRng& rng);

struct GenerateConfig {
  Vec3 box_edges = Vec3(60.0, 60.0, 60.0);  // um
  double concentration_mg_ml = 2.5;
  double density_tolerance = 0.02;  // relative, on the final network
  double fiber_diameter = 0.18;     // um
  double fiber_modulus = 1.1e6;     // pN/um^2
  unsigned long long seed = 1;
  DescriptorTargets targets;
  ValencyMatchConfig valency;
  AnnealConfig anneal;

  void validate();  // throws ConfigError
};

struct GenerateResult {
  Network network;
  std::vector<AnnealTracePoint> trace;
  double density_mg_ml = 0.0;
  double energy_initial = 0.0;
  double energy_final = 0.0;
};

// Full pipeline: choose a node count by bisection so the final collagen
// density lands within tolerance, then seed, match valency, and anneal.
GenerateResult generate_network(const GenerateConfig& config);

}  // namespace cellmat::gen
