#include "mech/tensile.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "mech/stress.hpp"

namespace cellmat {

namespace {

double slope_of(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double sx = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw ConfigError("fit requires at least two distinct abscissae");
  return sxy / sxx;
}

}  // namespace

TensileResult run_tensile(MechSystem& sys, const TensileConfig& cfg) {
  if (cfg.axis < 0 || cfg.axis > 2) throw ConfigError("tensile: axis must be 0, 1, or 2");
  if (!(cfg.target_strain > 0.0 && cfg.target_strain <= 0.5))
    throw ConfigError("tensile: target strain must lie in (0, 0.5]");
  if (!(cfg.rate_um_per_s > 0.0)) throw ConfigError("tensile: rate must be positive");
  if (!(cfg.dt > 0.0)) throw ConfigError("tensile: dt must be positive");

  const double length = sys.box().edge_lengths()[cfg.axis];
  const double duration = cfg.target_strain * length / cfg.rate_um_per_s;
  const double t0 = sys.time();

  Mat3 target = Mat3::Zero();
  target(cfg.axis, cfg.axis) = cfg.target_strain;
  LoadProgram ramp;
  ramp.schedule = {{t0, Mat3::Zero()}, {t0 + duration, target}};

  TensileResult result;
  result.strains.push_back(0.0);
  result.stresses.push_back(pk1_plane(sys)(cfg.axis, cfg.axis));

  double remaining = duration;
  while (remaining > 1e-12 * duration) {
    const double dt = std::min(cfg.dt, remaining);
    sys.step(dt, ramp);
    remaining = t0 + duration - sys.time();
    const double strain = cfg.target_strain * (sys.time() - t0) / duration;
    result.strains.push_back(strain);
    result.stresses.push_back(pk1_plane(sys)(cfg.axis, cfg.axis));
  }

  result.modulus = slope_of(result.strains, result.stresses);
  return result;
}

double fit_power_law(const std::vector<double>& densities, const std::vector<double>& moduli) {
  if (densities.size() != moduli.size() || densities.size() < 2)
    throw ConfigError("power-law fit needs matching density/modulus lists with >= 2 entries");
  std::vector<double> lx, ly;
  lx.reserve(densities.size());
  ly.reserve(moduli.size());
  for (size_t i = 0; i < densities.size(); ++i) {
    if (!(densities[i] > 0.0) || !(moduli[i] > 0.0))
      throw ConfigError("power-law fit needs strictly positive densities and moduli");
    lx.push_back(std::log(densities[i]));
    ly.push_back(std::log(moduli[i]));
  }
  return slope_of(lx, ly);
}

}  // namespace cellmat
