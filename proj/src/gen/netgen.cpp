#include "gen/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "core/descriptors.hpp"
#include "gen/cvm.hpp"
#include "gen/voronoi.hpp"

namespace cellmat::gen {

namespace {

std::map<int, double> normalized_weights(const std::map<int, double>& weights) {
  double total = 0.0;
  for (const auto& [v, w] : weights) {
    if (v < 1) throw ConfigError("valency target: valencies must be >= 1");
    if (!(w >= 0.0)) throw ConfigError("valency target: weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("valency target: weights must not all vanish");
  std::map<int, double> out;
  for (const auto& [v, w] : weights) out[v] = w / total;
  return out;
}

// Squared mismatch between the empirical and target cumulative valency
// distributions, summed over integer valencies. Bins past the last mass on
// both sides contribute zero, so the value does not depend on the cap.
double stairs_mismatch(const std::vector<double>& counts, const std::vector<double>& target_cum,
                       double n) {
  double cum = 0.0, e = 0.0;
  for (size_t v = 0; v < counts.size(); ++v) {
    cum += counts[v];
    const double diff = cum / n - target_cum[v];
    e += diff * diff;
  }
  return e;
}

std::vector<double> cumulative_target(const std::map<int, double>& weights, int vcap) {
  std::vector<double> cum(vcap + 1, 0.0);
  double c = 0.0;
  for (int v = 0; v <= vcap; ++v) {
    auto it = weights.find(v);
    if (it != weights.end()) c += it->second;
    cum[v] = c;
  }
  return cum;
}

}  // namespace

double valency_energy(const std::vector<int>& valencies, const std::map<int, double>& weights) {
  if (valencies.empty()) throw DomainError("valency_energy: no nodes");
  const auto norm = normalized_weights(weights);
  int vcap = norm.rbegin()->first;
  for (int v : valencies) {
    if (v < 0) throw DomainError("valency_energy: negative valency");
    vcap = std::max(vcap, v);
  }
  vcap += 1;
  std::vector<double> counts(vcap + 1, 0.0);
  for (int v : valencies) counts[v] += 1.0;
  return stairs_mismatch(counts, cumulative_target(norm, vcap),
                         static_cast<double>(valencies.size()));
}

double valency_energy_floor(int node_count, const std::map<int, double>& weights) {
  if (node_count < 1) throw DomainError("valency_energy_floor: need at least one node");
  const auto norm = normalized_weights(weights);
  const double n = node_count;

  // Largest-remainder apportionment of n nodes over the target support.
  std::vector<int> support;
  std::vector<double> ideal;
  for (const auto& [v, w] : norm) {
    support.push_back(v);
    ideal.push_back(n * w);
  }
  const size_t s = support.size();
  std::vector<int> base(s);
  int assigned = 0;
  for (size_t j = 0; j < s; ++j) {
    base[j] = static_cast<int>(std::floor(ideal[j]));
    assigned += base[j];
  }
  std::vector<size_t> order(s);
  for (size_t j = 0; j < s; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return ideal[a] - std::floor(ideal[a]) > ideal[b] - std::floor(ideal[b]);
  });
  for (int r = 0; r < node_count - assigned; ++r) base[order[r % s]] += 1;

  const int vcap = support.back() + 1;
  const auto target_cum = cumulative_target(norm, vcap);

  // Search compositions near the apportionment; only parity-feasible ones
  // (even total degree) are reachable by a graph.
  const size_t vary = std::min<size_t>(s > 0 ? s - 1 : 0, 4);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> adj(vary, -3);
  while (true) {
    std::vector<int> m(base);
    long others = 0;
    bool ok = true;
    for (size_t j = 0; j < vary; ++j) {
      m[j] += adj[j];
      if (m[j] < 0) ok = false;
      others += m[j];
    }
    if (ok) {
      m[s - 1] = node_count - static_cast<int>(others);
      for (size_t j = vary; j + 1 < s; ++j) m[s - 1] -= base[j];
      if (m[s - 1] >= 0) {
        long degree = 0;
        for (size_t j = 0; j < s; ++j) degree += static_cast<long>(support[j]) * m[j];
        if (degree % 2 == 0) {
          std::vector<double> counts(vcap + 1, 0.0);
          for (size_t j = 0; j < s; ++j) counts[support[j]] += m[j];
          best = std::min(best, stairs_mismatch(counts, target_cum, n));
        }
      }
    }
    size_t k = 0;
    for (; k < vary; ++k) {
      if (++adj[k] <= 3) break;
      adj[k] = -3;
    }
    if (k == vary) break;
    if (vary == 0) break;
  }
  // Single-support targets can be parity-infeasible; one straggler node just
  // outside the support then bounds the floor.
  if (!std::isfinite(best)) best = 2.0 / (n * n);
  return best;
}

ValencyMatchError::ValencyMatchError(const std::string& what, Network best)
    : DomainError(what), best_(std::make_shared<const Network>(std::move(best))) {}

Network match_valency(const Network& net, const std::map<int, double>& target_weights,
                      SequentialRng& rng, const ValencyMatchConfig& cfg) {
  const auto weights = normalized_weights(target_weights);
  Network out = net;
  const int n = static_cast<int>(out.nodes.size());
  if (n < 2) throw DomainError("match_valency: need at least two nodes");
  const double max_len = out.box.min_edge() / 3.0;

  // Fibers longer than the length bound can never survive annealing; drop
  // them up front (the greedy phase restores any lost connectivity).
  {
    std::vector<Fiber> kept;
    for (const Fiber& f : out.fibers)
      if (out.fiber_vector_undeformed(f).norm() <= max_len) kept.push_back(f);
    out.fibers = std::move(kept);
    for (size_t i = 0; i < out.fibers.size(); ++i) out.fibers[i].id = static_cast<int>(i);
  }
  const double fib_diameter = net.fibers.empty() ? 0.18 : net.fibers.front().diameter;
  const double fib_modulus = net.fibers.empty() ? 1.1e6 : net.fibers.front().modulus;

  // Geometric candidate neighbors within the length bound, via a coarse cell
  // list; per node we keep the nearest few dozen for bounded memory.
  constexpr int kMaxCandidates = 64;
  std::vector<std::vector<int>> candidates(n);
  {
    const Vec3 L = out.box.edge_lengths();
    IVec3 dims;
    for (int k = 0; k < 3; ++k) dims[k] = std::max(1, static_cast<int>(std::floor(L[k] / max_len)));
    auto cell_of = [&](const Vec3& p) {
      IVec3 c;
      for (int k = 0; k < 3; ++k)
        c[k] = std::min(dims[k] - 1, static_cast<int>(std::floor(p[k] / L[k] * dims[k])));
      return c;
    };
    auto flat = [&](const IVec3& c) { return (c[0] * dims[1] + c[1]) * dims[2] + c[2]; };
    std::vector<std::vector<int>> occupants(dims[0] * dims[1] * dims[2]);
    for (int i = 0; i < n; ++i) occupants[flat(cell_of(out.nodes[i].position))].push_back(i);

    std::vector<std::pair<double, int>> near;
    for (int i = 0; i < n; ++i) {
      near.clear();
      const IVec3 c = cell_of(out.nodes[i].position);
      std::set<int> visited;
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            IVec3 cc((c[0] + dx + dims[0]) % dims[0], (c[1] + dy + dims[1]) % dims[1],
                     (c[2] + dz + dims[2]) % dims[2]);
            if (!visited.insert(flat(cc)).second) continue;  // small dims alias
            for (int j : occupants[flat(cc)]) {
              if (j == i) continue;
              const double d =
                  out.box.min_image_separation(out.nodes[i].position, out.nodes[j].position).norm();
              if (d <= max_len) near.emplace_back(d, j);
            }
          }
      std::sort(near.begin(), near.end());
      const size_t keep = std::min<size_t>(near.size(), kMaxCandidates);
      for (size_t k = 0; k < keep; ++k) candidates[i].push_back(near[k].second);
    }
  }

  // Duplicate guard: canonical (low node, high node, shift) keys.
  auto key_of = [&](int a, int b, IVec3 s) {
    if (a > b) {
      std::swap(a, b);
      s = -s;
    }
    return std::make_tuple(a, b, s[0], s[1], s[2]);
  };
  std::set<std::tuple<int, int, int, int, int>> existing;
  std::vector<int> valency(n, 0);
  for (const Fiber& f : out.fibers) {
    existing.insert(key_of(f.node_a, f.node_b, f.image_shift));
    valency[f.node_a]++;
    valency[f.node_b]++;
  }

  auto add_fiber = [&](int a, int b) {
    Fiber f;
    f.id = static_cast<int>(out.fibers.size());
    f.node_a = a;
    f.node_b = b;
    f.image_shift = out.box.min_image_shift(out.nodes[a].position, out.nodes[b].position);
    f.diameter = fib_diameter;
    f.modulus = fib_modulus;
    out.fibers.push_back(f);
    existing.insert(key_of(a, b, f.image_shift));
    valency[a]++;
    valency[b]++;
  };
  auto remove_fiber = [&](int idx) {
    const Fiber& f = out.fibers[idx];
    existing.erase(key_of(f.node_a, f.node_b, f.image_shift));
    valency[f.node_a]--;
    valency[f.node_b]--;
    out.fibers[idx] = out.fibers.back();
    out.fibers[idx].id = idx;
    out.fibers.pop_back();
  };

  // Reconnect nodes orphaned by the long-fiber removal.
  for (int i = 0; i < n; ++i) {
    if (valency[i] > 0) continue;
    if (candidates[i].empty())
      throw ValencyMatchError("match_valency: node " + std::to_string(i) +
                                  " has no neighbor within the length bound",
                              out);
    add_fiber(i, candidates[i].front());
  }

  // Valency bookkeeping for the mismatch statistic. The cap leaves headroom
  // so additions cannot run off the binning; proposals beyond it are skipped.
  int vcap = weights.rbegin()->first;
  for (int v : valency) vcap = std::max(vcap, v);
  vcap += 3;
  const auto target_cum = cumulative_target(weights, vcap);
  std::vector<double> counts(vcap + 1, 0.0);
  for (int v : valency) counts[v] += 1.0;

  double energy = stairs_mismatch(counts, target_cum, n);
  const double threshold = cfg.floor_ratio * valency_energy_floor(n, weights) +
                           cfg.count_slack / (static_cast<double>(n) * n) + 1e-12;

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> pick_node(0, n - 1);
  long since_improvement = 0;
  for (long iter = 0; iter < cfg.max_iters && energy > threshold; ++iter) {
    if (++since_improvement > cfg.patience)
      throw ValencyMatchError("match_valency: no improving edit found within patience", out);

    int va = -1, vb = -1;  // endpoint valencies touched by the proposal
    int fiber_idx = -1, node_a = -1, node_b = -1;
    bool removal = u01(rng) < 0.5;
    if (removal) {
      if (out.fibers.empty()) continue;
      fiber_idx =
          std::uniform_int_distribution<int>(0, static_cast<int>(out.fibers.size()) - 1)(rng);
      node_a = out.fibers[fiber_idx].node_a;
      node_b = out.fibers[fiber_idx].node_b;
      if (valency[node_a] <= 1 || valency[node_b] <= 1) continue;  // would orphan a node
      va = valency[node_a];
      vb = valency[node_b];
      counts[va] -= 1.0;
      counts[va - 1] += 1.0;
      counts[vb] -= 1.0;
      counts[vb - 1] += 1.0;
    } else {
      node_a = pick_node(rng);
      if (candidates[node_a].empty()) continue;
      node_b = candidates[node_a][std::uniform_int_distribution<int>(
          0, static_cast<int>(candidates[node_a].size()) - 1)(rng)];
      if (valency[node_a] + 1 >= vcap || valency[node_b] + 1 >= vcap) continue;
      const IVec3 s = out.box.min_image_shift(out.nodes[node_a].position, out.nodes[node_b].position);
      if (existing.count(key_of(node_a, node_b, s))) continue;
      va = valency[node_a];
      vb = valency[node_b];
      counts[va] -= 1.0;
      counts[va + 1] += 1.0;
      counts[vb] -= 1.0;
      counts[vb + 1] += 1.0;
    }

    const double proposed = stairs_mismatch(counts, target_cum, n);
    if (proposed < energy + 1e-15) {
      // Plateau moves (equal energy) are taken too: rewiring an over-connected
      // node through a neutral step often exposes a strictly better edit. Only
      // strict improvements reset the patience clock.
      if (proposed < energy - 1e-15) since_improvement = 0;
      energy = proposed;
      if (removal)
        remove_fiber(fiber_idx);
      else
        add_fiber(node_a, node_b);
    } else {
      const int d = removal ? -1 : 1;  // undo the tentative count update
      counts[va] += 1.0;
      counts[va + d] -= 1.0;
      counts[vb] += 1.0;
      counts[vb + d] -= 1.0;
    }
  }

  if (energy > threshold)
    throw ValencyMatchError("match_valency: iteration budget exhausted before reaching target",
                            out);
  out.validate(/*strict_length_bound=*/true);
  return out;
}

void AnnealConfig::validate() const {
  if (!(w_length >= 0.0 && w_cosine >= 0.0 && w_length + w_cosine > 0.0))
    throw ConfigError("anneal: descriptor weights must be non-negative and not all zero");
  if (bins_length < 1 || bins_cosine < 1) throw ConfigError("anneal: bin counts must be positive");
  if (!(t0 > 0.0)) throw ConfigError("anneal: initial temperature must be positive");
  if (!(cooling_base > 0.0 && cooling_base < 1.0))
    throw ConfigError("anneal: cooling base must lie in (0,1)");
  if (iters_per_stage < 1) throw ConfigError("anneal: iters_per_stage must be positive");
  if (max_iters < 0) throw ConfigError("anneal: max_iters must be non-negative");
  if (!(energy_threshold >= 0.0)) throw ConfigError("anneal: energy threshold must be >= 0");
  if (!(move_scale > 0.0)) throw ConfigError("anneal: move_scale must be positive");
  if (trace_stride < 1) throw ConfigError("anneal: trace_stride must be positive");
}

namespace {

struct BinSpec {
  double lo = 0.0;
  double width = 1.0;
  int bins = 1;

  int index(double x) const {
    int j = static_cast<int>(std::floor((x - lo) / width));
    return std::clamp(j, 0, bins - 1);
  }
};

}  // namespace

AnnealResult anneal(const Network& net, const DescriptorTargets& targets,
                    const AnnealConfig& config, SequentialRng& rng) {
  config.validate();
  DescriptorTargets tgt = targets;
  tgt.validate();
  net.validate(/*strict_length_bound=*/true);

  const PeriodicBox& box = net.box;
  const Vec3 L = box.edge_lengths();
  const double max_len = box.min_edge() / 3.0;
  const int n_nodes = static_cast<int>(net.nodes.size());
  const double norm = length_normalization(net);

  std::vector<Vec3> pos(n_nodes);
  for (int i = 0; i < n_nodes; ++i) pos[i] = net.nodes[i].position;
  std::vector<IVec3> shift(net.fibers.size());
  for (size_t f = 0; f < net.fibers.size(); ++f) shift[f] = net.fibers[f].image_shift;
  const auto inc = net.incidence();

  // Binning and target CDF tables.
  BinSpec len_bins, cos_bins;
  len_bins.bins = config.bins_length;
  len_bins.lo = target_length_quantile(0.001, tgt);
  len_bins.width = (target_length_quantile(0.999, tgt) - len_bins.lo) / config.bins_length;
  cos_bins.bins = config.bins_cosine;
  cos_bins.lo = -1.0;
  cos_bins.width = 2.0 / config.bins_cosine;
  std::vector<double> len_cdf(len_bins.bins), cos_cdf(cos_bins.bins);
  for (int j = 0; j < len_bins.bins; ++j)
    len_cdf[j] = target_length_cdf(len_bins.lo + (j + 0.5) * len_bins.width, tgt);
  for (int j = 0; j < cos_bins.bins; ++j)
    cos_cdf[j] = target_cosine_cdf(cos_bins.lo + (j + 0.5) * cos_bins.width, tgt);

  // Geometry helpers on the working state.
  auto fiber_vec = [&](int f) {
    const Fiber& fb = net.fibers[f];
    return box.to_physical(box.separation(pos[fb.node_a], pos[fb.node_b], shift[f]));
  };
  auto fiber_vec_undeformed = [&](int f) {
    const Fiber& fb = net.fibers[f];
    return box.separation(pos[fb.node_a], pos[fb.node_b], shift[f]);
  };
  auto outward_dir = [&](int f, int node) {
    Vec3 v = fiber_vec(f).normalized();
    return net.fibers[f].node_b == node ? Vec3(-v) : v;
  };

  std::vector<double> len_counts(len_bins.bins, 0.0), cos_counts(cos_bins.bins, 0.0);
  for (size_t f = 0; f < net.fibers.size(); ++f)
    len_counts[len_bins.index(norm * fiber_vec(f).norm())] += 1.0;
  for (int node = 0; node < n_nodes; ++node) {
    const auto& fl = inc[node];
    for (size_t a = 0; a < fl.size(); ++a)
      for (size_t b = a + 1; b < fl.size(); ++b) {
        const double c =
            std::clamp(outward_dir(fl[a], node).dot(outward_dir(fl[b], node)), -1.0, 1.0);
        cos_counts[cos_bins.index(c)] += 1.0;
      }
  }

  auto total_energy = [&](double& e_l, double& e_c) {
    e_l = cvm_energy(len_counts, len_cdf);
    e_c = cvm_energy(cos_counts, cos_cdf);
    return config.w_length * e_l + config.w_cosine * e_c;
  };

  double e_l = 0.0, e_c = 0.0;
  double energy = total_energy(e_l, e_c);

  AnnealResult result;
  result.network = net;
  result.trace.push_back({0, energy, e_l, e_c, config.t0});
  double best_energy = energy;
  std::vector<Vec3> best_pos = pos;
  std::vector<IVec3> best_shift = shift;

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> pick_node(0, n_nodes - 1);
  double move_scale = config.move_scale;
  double temperature = config.t0;
  long stage_proposals = 0, stage_accepts = 0;
  long uphill_seen = 0, uphill_accepted = 0;
  bool first_stage = true;

  std::vector<std::pair<int, double>> len_delta, cos_delta;
  std::vector<IVec3> saved_shifts;
  std::vector<double> new_lengths;

  long iter = 0;
  for (; iter < config.max_iters; ++iter) {
    const long stage = iter / config.iters_per_stage;
    if (iter % config.iters_per_stage == 0 && iter > 0) {
      if (stage_proposals > 0 &&
          static_cast<double>(stage_accepts) / static_cast<double>(stage_proposals) < 0.01)
        move_scale *= 0.5;
      stage_proposals = stage_accepts = 0;
      first_stage = false;
      temperature = config.t0 * std::pow(config.cooling_base, static_cast<double>(stage));
    }

    const int node = pick_node(rng);
    Vec3 delta;
    for (int k = 0; k < 3; ++k) delta[k] = move_scale * (2.0 * u01(rng) - 1.0);
    ++stage_proposals;

    const auto& fl = inc[node];

    // Old-state contributions of everything the move touches.
    len_delta.clear();
    cos_delta.clear();
    for (int f : fl) len_delta.emplace_back(len_bins.index(norm * fiber_vec(f).norm()), -1.0);
    for (size_t a = 0; a < fl.size(); ++a)
      for (size_t b = a + 1; b < fl.size(); ++b) {
        const double c =
            std::clamp(outward_dir(fl[a], node).dot(outward_dir(fl[b], node)), -1.0, 1.0);
        cos_delta.emplace_back(cos_bins.index(c), -1.0);
      }
    for (int f : fl) {
      const Fiber& fb = net.fibers[f];
      const int other = fb.node_a == node ? fb.node_b : fb.node_a;
      for (int g : inc[other]) {
        if (g == f) continue;
        const double c =
            std::clamp(outward_dir(f, other).dot(outward_dir(g, other)), -1.0, 1.0);
        cos_delta.emplace_back(cos_bins.index(c), -1.0);
      }
    }

    // Apply the move: wrap the node and absorb whole-period crossings into
    // the incident image shifts so fiber vectors stay continuous.
    const Vec3 old_pos = pos[node];
    const Vec3 moved = old_pos + delta;
    const Vec3 wrapped = box.wrap(moved);
    IVec3 wraps;
    for (int k = 0; k < 3; ++k)
      wraps[k] = static_cast<int>(std::lround((wrapped[k] - moved[k]) / L[k]));
    pos[node] = wrapped;
    saved_shifts.clear();
    for (int f : fl) {
      saved_shifts.push_back(shift[f]);
      if (net.fibers[f].node_a == node) shift[f] += wraps;
      if (net.fibers[f].node_b == node) shift[f] -= wraps;
    }

    auto revert_geometry = [&]() {
      pos[node] = old_pos;
      for (size_t k = 0; k < fl.size(); ++k) shift[fl[k]] = saved_shifts[k];
    };

    new_lengths.clear();
    bool out_of_bound = false;
    for (int f : fl) {
      const double l = fiber_vec_undeformed(f).norm();
      if (l > max_len) out_of_bound = true;
      new_lengths.push_back(fiber_vec(f).norm());
    }
    if (out_of_bound) {
      revert_geometry();
      continue;
    }

    // New-state contributions.
    for (size_t k = 0; k < fl.size(); ++k)
      len_delta.emplace_back(len_bins.index(norm * new_lengths[k]), 1.0);
    for (size_t a = 0; a < fl.size(); ++a)
      for (size_t b = a + 1; b < fl.size(); ++b) {
        const double c =
            std::clamp(outward_dir(fl[a], node).dot(outward_dir(fl[b], node)), -1.0, 1.0);
        cos_delta.emplace_back(cos_bins.index(c), 1.0);
      }
    for (int f : fl) {
      const Fiber& fb = net.fibers[f];
      const int other = fb.node_a == node ? fb.node_b : fb.node_a;
      for (int g : inc[other]) {
        if (g == f) continue;
        const double c =
            std::clamp(outward_dir(f, other).dot(outward_dir(g, other)), -1.0, 1.0);
        cos_delta.emplace_back(cos_bins.index(c), 1.0);
      }
    }

    for (const auto& [j, d] : len_delta) len_counts[j] += d;
    for (const auto& [j, d] : cos_delta) cos_counts[j] += d;
    double new_e_l = 0.0, new_e_c = 0.0;
    const double new_energy = total_energy(new_e_l, new_e_c);
    const double d_energy = new_energy - energy;

    bool accept = d_energy <= 0.0;
    if (!accept) {
      if (first_stage) ++uphill_seen;
      accept = u01(rng) < std::exp(-d_energy / temperature);
      if (accept && first_stage) ++uphill_accepted;
    }

    if (accept) {
      ++stage_accepts;
      energy = new_energy;
      e_l = new_e_l;
      e_c = new_e_c;
      if (energy < best_energy) {
        best_energy = energy;
        best_pos = pos;
        best_shift = shift;
      }
    } else {
      for (const auto& [j, d] : len_delta) len_counts[j] -= d;
      for (const auto& [j, d] : cos_delta) cos_counts[j] -= d;
      revert_geometry();
    }

    if ((iter + 1) % config.trace_stride == 0)
      result.trace.push_back({iter + 1, energy, e_l, e_c, temperature});
    if (energy <= config.energy_threshold) {
      ++iter;
      break;
    }
  }

  if (result.trace.back().iter != iter)
    result.trace.push_back({iter, energy, e_l, e_c, temperature});
  result.iterations = iter;
  result.best_energy = best_energy;
  result.initial_uphill_acceptance =
      uphill_seen > 0 ? static_cast<double>(uphill_accepted) / static_cast<double>(uphill_seen)
                      : 0.0;
  for (int i = 0; i < n_nodes; ++i) result.network.nodes[i].position = best_pos[i];
  for (size_t f = 0; f < net.fibers.size(); ++f) result.network.fibers[f].image_shift = best_shift[f];
  result.network.validate(/*strict_length_bound=*/true);
  return result;
}

void GenerateConfig::validate() {
  for (int k = 0; k < 3; ++k)
    if (!(box_edges[k] > 0.0)) throw ConfigError("generate: box edges must be positive");
  if (!(concentration_mg_ml > 0.0)) throw ConfigError("generate: concentration must be positive");
  if (!(density_tolerance > 0.0 && density_tolerance < 0.5))
    throw ConfigError("generate: density tolerance must lie in (0, 0.5)");
  if (!(fiber_diameter > 0.0)) throw ConfigError("generate: fiber diameter must be positive");
  if (!(fiber_modulus > 0.0)) throw ConfigError("generate: fiber modulus must be positive");
  targets.validate();
  anneal.validate();
}

namespace {

unsigned long long mix_seed(unsigned long long a, unsigned long long b) {
  return detail::splitmix64(detail::splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

}  // namespace

GenerateResult generate_network(const GenerateConfig& config) {
  GenerateConfig cfg = config;
  cfg.validate();
  PeriodicBox box;
  box.set_edge_lengths(cfg.box_edges);

  const double volume = box.volume();
  const double area = M_PI * cfg.fiber_diameter * cfg.fiber_diameter / 4.0;
  // Total fiber length needed for the requested mass concentration.
  const double target_total_len = cfg.concentration_mg_ml * 7.3e-4 * volume / area;
  const double mean_norm_len =
      std::exp(cfg.targets.length_mu + 0.5 * cfg.targets.length_sigma * cfg.targets.length_sigma);
  const double mean_valency = cfg.targets.mean_valency();
  const double node_estimate = std::pow(
      target_total_len / (mean_norm_len * 0.5 * mean_valency * std::cbrt(volume)), 1.5);
  if (!(node_estimate > 4.0))
    throw ConfigError("generate: requested concentration implies fewer than a handful of nodes");

  // The annealed length distribution matches the target, so the expected
  // final total length is fiber_count * mean target length; bisect the node
  // budget on that prediction.
  auto build_candidate = [&](int node_target, Network& out) {
    // The greedy valency edit can stall on an unlucky seeding; a fresh draw of
    // seed points almost always resolves it.
    for (int attempt = 0;; ++attempt) {
      SequentialRng vr(mix_seed(cfg.seed, 1000 + static_cast<unsigned long long>(node_target) +
                                              900000ULL * attempt));
      try {
        Network seeded =
            voronoi_seed(box, node_target, vr, cfg.fiber_diameter, cfg.fiber_modulus);
        out = match_valency(seeded, cfg.targets.valency_weights, vr, cfg.valency);
        break;
      } catch (const ValencyMatchError&) {
        if (attempt >= 2) throw;
      }
    }
    return static_cast<double>(out.fibers.size()) * mean_norm_len *
           std::cbrt(volume / static_cast<double>(out.nodes.size()));
  };

  int lo = std::max(8, static_cast<int>(std::lround(0.55 * node_estimate)));
  int hi = std::max(lo + 4, static_cast<int>(std::lround(1.7 * node_estimate)));
  Network best_net;
  double best_err = std::numeric_limits<double>::infinity();
  for (int probe = 0; probe < 14 && hi - lo > 1; ++probe) {
    const int mid = lo + (hi - lo) / 2;
    Network cand;
    const double predicted = build_candidate(mid, cand);
    const double err = std::abs(predicted - target_total_len) / target_total_len;
    if (err < best_err) {
      best_err = err;
      best_net = std::move(cand);
    }
    if (err < 0.35 * cfg.density_tolerance) break;
    (predicted < target_total_len ? lo : hi) = mid;
  }
  if (!std::isfinite(best_err))
    throw DomainError("generate: node-count bisection produced no candidate");

  GenerateResult result;
  for (int pass = 0; pass < 2; ++pass) {
    SequentialRng ar(mix_seed(cfg.seed, 2000 + pass));
    AnnealResult annealed = anneal(best_net, cfg.targets, cfg.anneal, ar);
    result.network = std::move(annealed.network);
    result.trace = std::move(annealed.trace);
    result.energy_initial = result.trace.front().energy;
    result.energy_final = annealed.best_energy;
    result.density_mg_ml = collagen_density(result.network);
    const double rel = std::abs(result.density_mg_ml - cfg.concentration_mg_ml) /
                       cfg.concentration_mg_ml;
    if (rel <= cfg.density_tolerance) return result;
    // One corrective rebuild with the node budget scaled by the miss.
    const double scale = std::pow(cfg.concentration_mg_ml / result.density_mg_ml, 1.5);
    const int corrected =
        std::max(8, static_cast<int>(std::lround(scale * best_net.nodes.size())));
    Network cand;
    build_candidate(corrected, cand);
    best_net = std::move(cand);
  }
  throw DomainError("generate: final density missed the requested concentration tolerance");
}

}  // namespace cellmat::gen
