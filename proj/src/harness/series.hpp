#pragma once

// Time series recorded by the simulation drivers: one row per recorded step
// holding the clock, the full first Piola-Kirchhoff stress tensor, a census
// of fiber-fiber bonds and aggregate cell telemetry. Includes the CSV
// writer (17-significant-digit floats, so equal runs produce byte-equal
// files) and the sliding-window plateau detector.

#include <iosfwd>
#include <string>
#include <vector>

#include "core/geometry.hpp"

namespace cellmat::harness {

struct TimeRow {
  double time = 0.0;             // s
  Mat3 pk1 = Mat3::Zero();       // pN/um^2
  double mean_stress = 0.0;      // tr(pk1)/3, the scalar the detectors watch

  int links = 0;                 // live fiber-fiber bonds
  double link_mean_force = 0.0;  // pN over live bonds
  double link_births_per_s = 0.0;
  double link_deaths_per_s = 0.0;

  int adhesions = 0;             // focal adhesions over all cells
  int live_clusters = 0;
  int bonded_integrins = 0;
  double mean_integrin_force = 0.0;  // pN, weighted by bonded integrins
  double mean_cell_force = 0.0;      // pN, mean |net force on a cell center|
};

class TimeSeries {
 public:
  const std::vector<TimeRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  size_t size() const { return rows_.size(); }
  const TimeRow& back() const { return rows_.back(); }

  // Rows must arrive in strictly increasing time order (throws DomainError).
  void append(const TimeRow& row);

  std::vector<double> times() const;
  std::vector<double> mean_stresses() const;

 private:
  std::vector<TimeRow> rows_;
};

// Column header and rows; an empty series yields just the header line.
void write_csv(const TimeSeries& series, std::ostream& os);
void save_csv(const TimeSeries& series, const std::string& path);

struct PlateauConfig {
  double window_s = 180.0;        // sliding window length
  double drift_tol_per_min = 0.01;  // relative drift bound within the window
  // Scale floors keeping the relative drift meaningful near zero signal: the
  // reference scale is max(window mean |v|, floor_fraction * peak |v| so
  // far, abs_floor).
  double floor_fraction = 1e-3;
  double abs_floor = 1e-12;

  void validate() const;  // throws ConfigError
};

struct PlateauResult {
  bool reached = false;
  double time = 0.0;   // end of the first window satisfying the drift bound
  double value = 0.0;  // mean of the signal over that window
};

// First time T with a full lookback window [T - window, T] whose
// least-squares slope, expressed per minute and relative to the window's
// signal scale, stays below the tolerance. Pure function of its inputs.
PlateauResult detect_plateau(const std::vector<double>& time, const std::vector<double>& value,
                             const PlateauConfig& cfg = {});

// Least-squares line fit y = intercept + slope x with coefficient of
// determination; r2 is 1 for a perfect fit and 0 when the fit explains
// nothing (constant y gives slope 0, r2 1). Requires >= 2 points.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cellmat::harness
