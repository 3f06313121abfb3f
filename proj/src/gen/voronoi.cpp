#include "gen/voronoi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

namespace cellmat::gen {

namespace {

// Signals a geometrically degenerate configuration; caller retries with jitter.
struct Degenerate {};

struct GenRef {
  int id;
  IVec3 shift;
};

using PackedRef = std::array<int, 4>;  // (id, sx, sy, sz)
using VKey = std::array<PackedRef, 4>; // four generating seeds, canonical
using EKey = std::array<PackedRef, 3>; // three generating seeds, canonical

PackedRef pack(const GenRef& g, const IVec3& rel) {
  return {g.id, g.shift[0] - rel[0], g.shift[1] - rel[1], g.shift[2] - rel[2]};
}

// Canonical form: among the translations putting one member at shift zero,
// pick the lexicographically smallest sorted tuple.
template <size_t N>
std::array<PackedRef, N> canonicalize(const std::array<GenRef, N>& refs) {
  std::array<PackedRef, N> best{};
  bool have = false;
  for (size_t a = 0; a < N; ++a) {
    std::array<PackedRef, N> cand;
    for (size_t k = 0; k < N; ++k) cand[k] = pack(refs[k], refs[a].shift);
    std::sort(cand.begin(), cand.end());
    if (!have || cand < best) {
      best = cand;
      have = true;
    }
  }
  return best;
}

// Convex cell being clipped: simple polyhedron tracked as vertices with
// exactly three neighbors and three generating planes each.
struct ClipCell {
  std::vector<Vec3> pos;
  std::vector<std::array<int, 3>> gen;  // plane ids, sorted; negatives = bounding cube
  std::vector<std::array<int, 3>> adj;
  std::vector<char> alive;

  void init_cube(double h) {
    pos.clear();
    gen.clear();
    adj.clear();
    alive.clear();
    // Cube corners; planes -1..-6 = (+x,-x,+y,-y,+z,-z) faces.
    for (int c = 0; c < 8; ++c) {
      const int sx = (c & 1) ? 1 : -1, sy = (c & 2) ? 1 : -1, sz = (c & 4) ? 1 : -1;
      pos.push_back(Vec3(sx * h, sy * h, sz * h));
      std::array<int, 3> g = {sx > 0 ? -1 : -2, sy > 0 ? -3 : -4, sz > 0 ? -5 : -6};
      std::sort(g.begin(), g.end());
      gen.push_back(g);
      adj.push_back({c ^ 1, c ^ 2, c ^ 4});
      alive.push_back(1);
    }
  }

  double max_radius() const {
    double r2 = 0.0;
    for (size_t v = 0; v < pos.size(); ++v)
      if (alive[v]) r2 = std::max(r2, pos[v].squaredNorm());
    return std::sqrt(r2);
  }

  static std::array<int, 2> common_planes(const std::array<int, 3>& a,
                                          const std::array<int, 3>& b) {
    std::array<int, 2> out = {0, 0};
    int k = 0;
    for (int x : a)
      for (int y : b)
        if (x == y) {
          if (k >= 2) throw Degenerate{};
          out[k++] = x;
        }
    if (k != 2) throw Degenerate{};
    return out;
  }

  // Keep half-space n.x <= d; returns false if the plane did not cut.
  bool clip(const Vec3& n, double d, int plane_id, double eps) {
    const size_t nv = pos.size();
    std::vector<double> sd(nv, -1.0);
    bool any_out = false, any_in = false;
    for (size_t v = 0; v < nv; ++v) {
      if (!alive[v]) continue;
      sd[v] = n.dot(pos[v]) - d;
      (sd[v] > 0.0 ? any_out : any_in) = true;
    }
    // A vertex sitting on the plane means more than four generators meet
    // there, whether or not the plane cuts: degenerate either way.
    for (size_t v = 0; v < nv; ++v)
      if (alive[v] && std::abs(sd[v]) < eps) throw Degenerate{};
    if (!any_out) return false;
    if (!any_in) throw Degenerate{};

    struct NewVert {
      int idx;
      std::array<int, 2> on_planes;
      int linked = 0;
    };
    std::vector<NewVert> fresh;
    for (size_t v = 0; v < nv; ++v) {
      if (!alive[v] || sd[v] > 0.0) continue;
      for (int slot = 0; slot < 3; ++slot) {
        const int w = adj[v][slot];
        if (sd[w] <= 0.0) continue;  // edge fully inside or w already replaced
        const double t = sd[v] / (sd[v] - sd[w]);
        const Vec3 x = pos[v] + t * (pos[w] - pos[v]);
        const auto shared = common_planes(gen[v], gen[w]);
        std::array<int, 3> g = {shared[0], shared[1], plane_id};
        std::sort(g.begin(), g.end());
        const int ni = static_cast<int>(pos.size());
        pos.push_back(x);
        gen.push_back(g);
        adj.push_back({static_cast<int>(v), -1, -1});
        alive.push_back(1);
        sd.push_back(0.0);
        adj[v][slot] = ni;
        fresh.push_back({ni, shared});
      }
    }
    if (fresh.size() < 3) throw Degenerate{};
    // Close the cut face: new vertices sharing an old plane are consecutive.
    for (size_t a = 0; a < fresh.size(); ++a)
      for (size_t b = a + 1; b < fresh.size(); ++b)
        for (int pa : fresh[a].on_planes)
          for (int pb : fresh[b].on_planes)
            if (pa == pb) {
              if (fresh[a].linked >= 2 || fresh[b].linked >= 2) throw Degenerate{};
              adj[fresh[a].idx][1 + fresh[a].linked++] = fresh[b].idx;
              adj[fresh[b].idx][1 + fresh[b].linked++] = fresh[a].idx;
            }
    for (const NewVert& f : fresh)
      if (f.linked != 2) throw Degenerate{};
    for (size_t v = 0; v < nv; ++v)
      if (alive[v] && sd[v] > 0.0) alive[v] = 0;
    return true;
  }
};

Vec3 circumcenter(const std::array<Vec3, 4>& q, double scale) {
  Mat3 a;
  Vec3 rhs;
  for (int r = 0; r < 3; ++r) {
    a.row(r) = 2.0 * (q[r + 1] - q[0]).transpose();
    rhs[r] = q[r + 1].squaredNorm() - q[0].squaredNorm();
  }
  const double det = a.determinant();
  if (std::abs(det) < 1e-9 * scale * scale * scale) throw Degenerate{};
  return a.partialPivLu().solve(rhs);
}

struct Candidate {
  double dist2;
  int seed;
  IVec3 shift;
  Vec3 rel;  // replica position minus cell seed
};

struct EdgeRec {
  VKey va, vb;
  Vec3 evec;  // geometric edge vector from va to vb
};

Network build_once(const PeriodicBox& box, const std::vector<Vec3>& seeds, int shell,
                   double fiber_diameter, double fiber_modulus) {
  const Vec3 L = box.edge_lengths();
  const double lmin = box.min_edge();
  const double eps = 1e-9 * lmin;
  const int s = static_cast<int>(seeds.size());

  std::map<VKey, Vec3> verts;
  std::map<EKey, EdgeRec> edges;

  std::vector<Candidate> cands;
  ClipCell cell;
  for (int i = 0; i < s; ++i) {
    cands.clear();
    for (int j = 0; j < s; ++j)
      for (int sx = -shell; sx <= shell; ++sx)
        for (int sy = -shell; sy <= shell; ++sy)
          for (int sz = -shell; sz <= shell; ++sz) {
            if (j == i && sx == 0 && sy == 0 && sz == 0) continue;
            const IVec3 sh(sx, sy, sz);
            const Vec3 rel = seeds[j] + box.shift_offset(sh) - seeds[i];
            cands.push_back({rel.squaredNorm(), j, sh, rel});
          }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
      if (a.seed != b.seed) return a.seed < b.seed;
      return std::lexicographical_compare(a.shift.data(), a.shift.data() + 3, b.shift.data(),
                                          b.shift.data() + 3);
    });

    cell.init_cube(1.2 * L.maxCoeff() * shell);
    double rmax = cell.max_radius();
    for (size_t c = 0; c < cands.size(); ++c) {
      const double d = std::sqrt(cands[c].dist2);
      if (d > 2.0 * rmax + eps) break;
      if (d < eps) throw Degenerate{};  // coincident seeds
      const Vec3 n = cands[c].rel / d;
      if (cell.clip(n, 0.5 * d, static_cast<int>(c), eps)) rmax = cell.max_radius();
    }

    // Collect vertices and edges of this cell.
    std::vector<VKey> vkey(cell.pos.size());
    for (size_t v = 0; v < cell.pos.size(); ++v) {
      if (!cell.alive[v]) continue;
      std::array<GenRef, 4> refs;
      refs[0] = {i, IVec3::Zero()};
      for (int k = 0; k < 3; ++k) {
        const int pid = cell.gen[v][k];
        if (pid < 0) throw Degenerate{};  // cell not closed by bisectors
        refs[k + 1] = {cands[pid].seed, cands[pid].shift};
      }
      vkey[v] = canonicalize(refs);
      if (!verts.count(vkey[v])) {
        // Deterministic position: circumcenter of the canonical generator set.
        std::array<Vec3, 4> q;
        for (int k = 0; k < 4; ++k) {
          const PackedRef& pr = vkey[v][k];
          q[k] = seeds[pr[0]] + box.shift_offset(IVec3(pr[1], pr[2], pr[3]));
        }
        verts.emplace(vkey[v], box.wrap(circumcenter(q, lmin)));
      }
    }
    for (size_t v = 0; v < cell.pos.size(); ++v) {
      if (!cell.alive[v]) continue;
      for (int slot = 0; slot < 3; ++slot) {
        const size_t w = static_cast<size_t>(cell.adj[v][slot]);
        if (!cell.alive[w] || w <= v) continue;
        const auto shared = ClipCell::common_planes(cell.gen[v], cell.gen[w]);
        std::array<GenRef, 3> refs;
        refs[0] = {i, IVec3::Zero()};
        for (int k = 0; k < 2; ++k) refs[k + 1] = {cands[shared[k]].seed, cands[shared[k]].shift};
        const EKey ek = canonicalize(refs);
        EdgeRec rec{vkey[v], vkey[w], cell.pos[w] - cell.pos[v]};
        if (rec.vb < rec.va) {
          std::swap(rec.va, rec.vb);
          rec.evec = -rec.evec;
        }
        auto [it, inserted] = edges.emplace(ek, rec);
        if (!inserted) {
          // All three cells sharing this edge must agree on its identity.
          if (it->second.va != rec.va || it->second.vb != rec.vb ||
              (it->second.evec - rec.evec).norm() > 1e-6 * lmin)
            throw Degenerate{};
        }
      }
    }
  }

  Network net;
  net.box = box;
  std::map<VKey, int> node_of;
  for (const auto& [key, p] : verts) {
    const int id = static_cast<int>(net.nodes.size());
    node_of.emplace(key, id);
    net.nodes.push_back({id, p});
  }
  for (const auto& [key, rec] : edges) {
    (void)key;
    Fiber f;
    f.id = static_cast<int>(net.fibers.size());
    f.node_a = node_of.at(rec.va);
    f.node_b = node_of.at(rec.vb);
    f.diameter = fiber_diameter;
    f.modulus = fiber_modulus;
    // Image shift from the geometric edge vector (robust for any length).
    const Vec3 d = rec.evec - (net.nodes[f.node_b].position - net.nodes[f.node_a].position);
    for (int k = 0; k < 3; ++k) {
      const double sk = d[k] / L[k];
      f.image_shift[k] = static_cast<int>(std::lround(sk));
      if (std::abs(sk - f.image_shift[k]) > 1e-6) throw Degenerate{};
    }
    if (net.fiber_vector_undeformed(f).norm() < eps) throw Degenerate{};
    net.fibers.push_back(f);
  }
  return net;
}

}  // namespace

Network voronoi_seed(const PeriodicBox& box, int node_target, SequentialRng& rng,
                     double fiber_diameter, double fiber_modulus) {
  if (node_target < 1) throw DomainError("voronoi_seed: node_target must be positive");
  const int seed_count = std::max(2, static_cast<int>(std::lround(node_target / 6.77)));

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Vec3> seeds(seed_count);
  for (Vec3& p : seeds)
    for (int k = 0; k < 3; ++k) p[k] = u01(rng) * box.edge_lengths()[k];
  return voronoi_from_seeds(box, std::move(seeds), rng, fiber_diameter, fiber_modulus);
}

Network voronoi_from_seeds(const PeriodicBox& box, std::vector<Vec3> seeds, SequentialRng& rng,
                           double fiber_diameter, double fiber_modulus) {
  if (seeds.size() < 2) throw DomainError("voronoi_from_seeds: need at least two seed points");
  const int shell = seeds.size() < 16 ? 2 : 1;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (Vec3& p : seeds) p = box.wrap(p);

  for (int attempt = 0; attempt < 24; ++attempt) {
    try {
      Network net = build_once(box, seeds, shell, fiber_diameter, fiber_modulus);
      net.validate(/*strict_length_bound=*/false);
      return net;
    } catch (const Degenerate&) {
      // Perturb and retry; the jitter is tiny relative to the box.
      const double jit = 1e-4 * box.min_edge() * (attempt + 1);
      for (Vec3& p : seeds) {
        for (int k = 0; k < 3; ++k) p[k] += jit * (2.0 * u01(rng) - 1.0);
        p = box.wrap(p);
      }
    }
  }
  throw DomainError("voronoi: could not resolve a non-degenerate tessellation");
}

}  // namespace cellmat::gen
