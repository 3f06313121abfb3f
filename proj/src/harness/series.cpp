#include "harness/series.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "core/errors.hpp"
#include "core/network_io.hpp"

namespace cellmat::harness {

void TimeSeries::append(const TimeRow& row) {
  if (!rows_.empty() && !(row.time > rows_.back().time))
    throw DomainError("time series rows must have strictly increasing times");
  rows_.push_back(row);
}

std::vector<double> TimeSeries::times() const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const TimeRow& r : rows_) out.push_back(r.time);
  return out;
}

std::vector<double> TimeSeries::mean_stresses() const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const TimeRow& r : rows_) out.push_back(r.mean_stress);
  return out;
}

void write_csv(const TimeSeries& series, std::ostream& os) {
  os << "time_s,pxx,pxy,pxz,pyx,pyy,pyz,pzx,pzy,pzz,mean_stress"
        ",links,link_mean_force_pn,link_births_per_s,link_deaths_per_s"
        ",adhesions,live_clusters,bonded_integrins,mean_integrin_force_pn,mean_cell_force_pn\n";
  for (const TimeRow& r : series.rows()) {
    os << format_double(r.time);
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col) os << ',' << format_double(r.pk1(row, col));
    os << ',' << format_double(r.mean_stress);
    os << ',' << r.links;
    os << ',' << format_double(r.link_mean_force);
    os << ',' << format_double(r.link_births_per_s);
    os << ',' << format_double(r.link_deaths_per_s);
    os << ',' << r.adhesions;
    os << ',' << r.live_clusters;
    os << ',' << r.bonded_integrins;
    os << ',' << format_double(r.mean_integrin_force);
    os << ',' << format_double(r.mean_cell_force);
    os << '\n';
  }
}

void save_csv(const TimeSeries& series, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  write_csv(series, os);
  if (!os) throw ConfigError("write failed: " + path);
}

void PlateauConfig::validate() const {
  if (!(window_s > 0.0)) throw ConfigError("plateau window must be positive");
  if (!(drift_tol_per_min > 0.0)) throw ConfigError("plateau drift tolerance must be positive");
  if (!(floor_fraction >= 0.0)) throw ConfigError("plateau floor fraction must be non-negative");
  if (!(abs_floor > 0.0)) throw ConfigError("plateau absolute floor must be positive");
}

PlateauResult detect_plateau(const std::vector<double>& time, const std::vector<double>& value,
                             const PlateauConfig& cfg) {
  cfg.validate();
  if (time.size() != value.size())
    throw DomainError("plateau detection needs matching time and value arrays");

  const double boundary_slack = 1e-9 * cfg.window_s;
  double peak = 0.0;
  size_t lo = 0;
  // Running sums over the window [lo, i].
  double s_t = 0.0, s_v = 0.0, s_tt = 0.0, s_tv = 0.0, s_abs = 0.0;
  size_t n_win = 0;

  for (size_t i = 0; i < time.size(); ++i) {
    peak = std::max(peak, std::abs(value[i]));
    s_t += time[i];
    s_v += value[i];
    s_tt += time[i] * time[i];
    s_tv += time[i] * value[i];
    s_abs += std::abs(value[i]);
    ++n_win;
    while (time[lo] < time[i] - cfg.window_s - boundary_slack) {
      s_t -= time[lo];
      s_v -= value[lo];
      s_tt -= time[lo] * time[lo];
      s_tv -= time[lo] * value[lo];
      s_abs -= std::abs(value[lo]);
      --n_win;
      ++lo;
    }
    if (time[i] - time.front() < cfg.window_s - boundary_slack) continue;  // window not yet full
    if (n_win < 2) continue;

    const double n = static_cast<double>(n_win);
    const double denom = s_tt - s_t * s_t / n;
    if (!(denom > 0.0)) continue;
    const double slope = (s_tv - s_t * s_v / n) / denom;
    const double scale =
        std::max({s_abs / n, cfg.floor_fraction * peak, cfg.abs_floor});
    const double drift_per_min = std::abs(slope) * 60.0 / scale;
    if (drift_per_min < cfg.drift_tol_per_min) return {true, time[i], s_v / n};
  }
  return {false, 0.0, 0.0};
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("line fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("line fit needs at least two distinct x values");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = syy - fit.slope * sxy;  // residual sum of squares
  fit.r2 = (syy > 0.0) ? 1.0 - std::max(0.0, ss_res) / syy : 1.0;
  return fit;
}

}  // namespace cellmat::harness
