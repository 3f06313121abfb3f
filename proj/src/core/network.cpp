#include "core/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace cellmat {

std::vector<int> Network::valencies() const {
  std::vector<int> v(nodes.size(), 0);
  for (const Fiber& f : fibers) {
    v[f.node_a]++;
    v[f.node_b]++;
  }
  return v;
}

std::vector<std::vector<int>> Network::incidence() const {
  std::vector<std::vector<int>> inc(nodes.size());
  for (size_t i = 0; i < fibers.size(); ++i) {
    inc[fibers[i].node_a].push_back(static_cast<int>(i));
    inc[fibers[i].node_b].push_back(static_cast<int>(i));
  }
  return inc;
}

void Network::validate(bool strict_length_bound) const {
  const int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i) {
    if (nodes[i].id != i) throw DomainError("Network: node ids must equal their index");
    for (int k = 0; k < 3; ++k) {
      const double x = nodes[i].position[k];
      if (!(x >= 0.0 && x < box.edge_lengths()[k]))
        throw DomainError("Network: node " + std::to_string(i) + " outside [0, L)");
    }
  }

  const double max_len = box.min_edge() / 3.0;
  std::set<std::tuple<int, int, int, int, int>> seen;
  for (size_t i = 0; i < fibers.size(); ++i) {
    const Fiber& f = fibers[i];
    if (f.id != static_cast<int>(i)) throw DomainError("Network: fiber ids must equal their index");
    if (f.node_a < 0 || f.node_a >= n || f.node_b < 0 || f.node_b >= n)
      throw DomainError("Network: fiber " + std::to_string(i) + " references invalid node");
    if (!(f.diameter > 0.0)) throw DomainError("Network: fiber diameter must be positive");
    if (!(f.modulus > 0.0)) throw DomainError("Network: fiber modulus must be positive");

    // Canonical key: low node first, shift flipped accordingly.
    int a = f.node_a, b = f.node_b;
    IVec3 s = f.image_shift;
    if (a > b) {
      std::swap(a, b);
      s = -s;
    }
    if (a == b) s = IVec3(std::abs(s[0]), std::abs(s[1]), std::abs(s[2]));
    if (!seen.insert({a, b, s[0], s[1], s[2]}).second)
      throw DomainError("Network: duplicate fiber between nodes " + std::to_string(a) + " and " +
                        std::to_string(b) + " with identical image shift");

    const double len = fiber_vector_undeformed(f).norm();
    if (!(len > 0.0)) throw DomainError("Network: zero-length fiber " + std::to_string(i));
    if (strict_length_bound && len > max_len)
      throw DomainError("Network: fiber " + std::to_string(i) + " longer than min(edge)/3");
  }

  for (int v : valencies())
    if (v < 1) throw DomainError("Network: disconnected node (valency 0)");
}

void Network::translate(const Vec3& delta) {
  // Reduce to the in-box equivalent offset; a whole-period translation is a
  // bit-exact no-op.
  Vec3 d;
  for (int k = 0; k < 3; ++k) {
    const double L = box.edge_lengths()[k];
    d[k] = delta[k] - L * std::round(delta[k] / L);
  }
  if (d.isZero(0.0)) return;
  // Track how many whole periods each node wrapped so fiber image shifts can
  // be corrected exactly, preserving every fiber vector bit-for-bit.
  std::vector<IVec3> wraps(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    const Vec3 moved = nodes[i].position + d;
    const Vec3 wrapped = box.wrap(moved);
    for (int k = 0; k < 3; ++k)
      wraps[i][k] = static_cast<int>(std::lround((wrapped[k] - moved[k]) / box.edge_lengths()[k]));
    nodes[i].position = wrapped;
  }
  for (Fiber& f : fibers) f.image_shift += wraps[f.node_a] - wraps[f.node_b];
}

}  // namespace cellmat
