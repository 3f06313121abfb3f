#include "gen/targets.hpp"

#include <cmath>

namespace cellmat::gen {

void DescriptorTargets::validate() {
  if (!(length_sigma > 0.0)) throw ConfigError("targets: length sigma must be > 0");
  for (int i = 0; i <= 2000; ++i) {
    const double beta = -1.0 + 2.0 * i / 2000.0;
    if (cosine_pdf(beta, *this) < -1e-12)
      throw ConfigError("targets: cosine density negative at beta = " + std::to_string(beta));
  }
  double sum = 0.0;
  for (auto& [v, w] : valency_weights) {
    if (v < 1) throw ConfigError("targets: valency values must be >= 1");
    if (w < 0.0) throw ConfigError("targets: valency weights must be >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw ConfigError("targets: valency weights must not all vanish");
  for (auto& [v, w] : valency_weights) w /= sum;
}

double DescriptorTargets::mean_valency() const {
  double m = 0.0, sum = 0.0;
  for (auto& [v, w] : valency_weights) {
    m += v * w;
    sum += w;
  }
  return sum > 0.0 ? m / sum : 0.0;
}

double target_length_cdf(double l_norm, const DescriptorTargets& t) {
  if (!(l_norm > 0.0)) throw DomainError("target_length_cdf: length must be positive");
  return 0.5 + 0.5 * std::erf((std::log(l_norm) - t.length_mu) / (std::sqrt(2.0) * t.length_sigma));
}

double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("standard_normal_quantile: p must be in (0,1)");
  double lo = -10.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 + 0.5 * std::erf(mid / std::sqrt(2.0)) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double target_length_quantile(double p, const DescriptorTargets& t) {
  return std::exp(t.length_mu + t.length_sigma * standard_normal_quantile(p));
}

double cosine_pdf(double beta, const DescriptorTargets& t) {
  const double u = 1.0 - beta;
  double acc = 0.0, upow = u;  // u^(2k-1)
  for (int k = 1; k <= 3; ++k) {
    acc += t.cosine_b[k - 1] * upow;
    upow *= u * u;
  }
  return acc;
}

double target_cosine_cdf(double beta, const DescriptorTargets& t, CosineCdfForm form) {
  if (!(beta >= -1.0 && beta <= 1.0)) throw DomainError("target_cosine_cdf: beta must be in [-1,1]");
  const double u = 1.0 - beta;
  double acc = 1.0;
  if (form == CosineCdfForm::kAsPrinted) {
    double upow = u;  // u^(2k-1)
    for (int k = 1; k <= 3; ++k) {
      acc -= t.cosine_b[k - 1] / (2.0 * k) * upow;
      upow *= u * u;
    }
  } else {
    double upow = u * u;  // u^(2k)
    for (int k = 1; k <= 3; ++k) {
      acc -= t.cosine_b[k - 1] / (2.0 * k) * upow;
      upow *= u * u;
    }
  }
  return acc;
}

double target_cosine_cdf(double beta, const DescriptorTargets& t) {
  return target_cosine_cdf(beta, t, t.cosine_cdf_form);
}

double sample_length(const DescriptorTargets& t, SequentialRng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  return std::exp(t.length_mu + t.length_sigma * z(rng));
}

double sample_cosine(const DescriptorTargets& t, SequentialRng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // The integrated form is a proper monotone CDF on [-1,1]; normalize away
  // the truncation residue of the power series so u=0,1 map to the endpoints.
  const double c_lo = target_cosine_cdf(-1.0, t, CosineCdfForm::kIntegrated);
  const double c_hi = target_cosine_cdf(1.0, t, CosineCdfForm::kIntegrated);
  const double u = c_lo + u01(rng) * (c_hi - c_lo);
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (target_cosine_cdf(mid, t, CosineCdfForm::kIntegrated) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

int sample_valency(const DescriptorTargets& t, SequentialRng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double u = u01(rng);
  double acc = 0.0;
  int last = 1;
  for (auto& [v, w] : t.valency_weights) {
    acc += w;
    last = v;
    if (u < acc) return v;
  }
  return last;
}

}  // namespace cellmat::gen
