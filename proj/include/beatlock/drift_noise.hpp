#pragma once

// Repetition-rate trajectories (slow drift plus fast jitter) and fractional
// noise processes with a prescribed one-sided PSD.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "beatlock/errors.hpp"
#include "beatlock/seed.hpp"
#include "beatlock/spectral.hpp"

namespace beatlock::noise {

struct DriftProfile {
  double slope = 0.0;                // Hz/s, linear drift of nu_rep
  double temp_amplitude = 0.0;       // Hz
  double temp_period = 0.0;          // s
  double random_walk_density = 0.0; // Hz/sqrt(s)
};

struct JitterProfile {
  double white_freq_density = 0.0;  // Hz/sqrt(Hz), one-sided
  double bandwidth = 10e3;          // Hz
};

struct RepRateTrajectory {
  std::vector<double> t;       // s, uniform, starting at 0
  std::vector<double> nu_rep;  // Hz
  std::uint64_t seed = 0;

  std::size_t size() const { return t.size(); }
  double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

enum class NoiseShape { flat, pll_shaped };

/// One-sided fractional PSD. alpha_db_per_hz = -inf disables the noise.
struct NoiseSpec {
  double alpha_db_per_hz = -std::numeric_limits<double>::infinity();
  NoiseShape shape = NoiseShape::flat;
  double loop_bandwidth = 0.0;  // Hz, pll_shaped only
  double floor_db_per_hz = -std::numeric_limits<double>::infinity();  // pll_shaped only

  static NoiseSpec off() { return {}; }
  static NoiseSpec flat(double alpha_db) { return {alpha_db, NoiseShape::flat, 0.0, -std::numeric_limits<double>::infinity()}; }
  static NoiseSpec pll_shaped(double alpha_db, double loop_bandwidth_hz, double floor_db) {
    return {alpha_db, NoiseShape::pll_shaped, loop_bandwidth_hz, floor_db};
  }

  /// PSD in 1/Hz at frequency f >= 0.
  double density(double f) const {
    if (shape == NoiseShape::pll_shaped && f > loop_bandwidth) return spectral::from_db(floor_db_per_hz);
    return spectral::from_db(alpha_db_per_hz);
  }

  /// Mean PSD over [lo, hi].
  double mean_density(double lo, double hi) const {
    if (shape != NoiseShape::pll_shaped) return spectral::from_db(alpha_db_per_hz);
    return spectral::step_mean(lo, hi, spectral::from_db(alpha_db_per_hz), loop_bandwidth,
                               spectral::from_db(floor_db_per_hz));
  }

  bool disabled() const {
    const bool in_band_off = std::isinf(alpha_db_per_hz) && alpha_db_per_hz < 0;
    if (shape == NoiseShape::flat) return in_band_off;
    return in_band_off && std::isinf(floor_db_per_hz) && floor_db_per_hz < 0;
  }

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

inline std::vector<std::string> validate(const NoiseSpec& s) {
  std::vector<std::string> issues;
  if (std::isnan(s.alpha_db_per_hz) || s.alpha_db_per_hz == std::numeric_limits<double>::infinity())
    issues.push_back("alpha_db_per_hz must be finite or -inf");
  if (s.shape == NoiseShape::pll_shaped) {
    if (!(s.loop_bandwidth > 0.0)) issues.push_back("loop_bandwidth must be > 0 for pll_shaped noise");
    if (std::isnan(s.floor_db_per_hz) || s.floor_db_per_hz == std::numeric_limits<double>::infinity())
      issues.push_back("floor_db_per_hz must be finite or -inf");
  }
  return issues;
}

inline std::vector<std::string> validate(const DriftProfile& d) {
  std::vector<std::string> issues;
  if (!std::isfinite(d.slope) || !std::isfinite(d.temp_amplitude) || !std::isfinite(d.temp_period) ||
      !std::isfinite(d.random_walk_density))
    issues.push_back("drift magnitudes must be finite");
  if (d.temp_amplitude != 0.0 && !(d.temp_period > 0.0))
    issues.push_back("temp_period must be > 0 when temp_amplitude != 0");
  if (d.random_walk_density < 0.0) issues.push_back("random_walk_density must be >= 0");
  return issues;
}

inline std::vector<std::string> validate(const JitterProfile& j) {
  std::vector<std::string> issues;
  if (!(j.white_freq_density >= 0.0) || !std::isfinite(j.white_freq_density))
    issues.push_back("white_freq_density must be >= 0");
  if (!(j.bandwidth > 0.0) || !std::isfinite(j.bandwidth)) issues.push_back("jitter bandwidth must be > 0");
  return issues;
}

/// nu_rep(t) = nu_rep0 + slope t + A sin(2 pi t / P) + random walk + white
/// frequency jitter band-limited to jitter.bandwidth. Samples at k*dt for
/// k = 0..floor(duration/dt).
inline RepRateTrajectory generate_trajectory(double nu_rep0, const DriftProfile& drift, const JitterProfile& jitter,
                                             double duration, double dt, std::uint64_t seed) {
  if (auto issues = validate(drift); !issues.empty()) throw ValidationError(issues);
  if (auto issues = validate(jitter); !issues.empty()) throw ValidationError(issues);
  if (!(nu_rep0 > 0.0)) throw InvalidArgument("generate_trajectory: nu_rep0 must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("generate_trajectory: dt must be positive");
  if (!(duration >= dt)) throw InvalidArgument("generate_trajectory: duration must be >= dt");
  if (jitter.white_freq_density > 0.0 && dt > 1.0 / (2.0 * jitter.bandwidth) * (1.0 + 1e-12))
    throw AliasingError("generate_trajectory: dt = " + std::to_string(dt) + " s aliases jitter bandwidth " +
                        std::to_string(jitter.bandwidth) + " Hz (need dt <= 1/(2*bandwidth))");

  const auto steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
  const std::size_t n = steps + 1;
  RepRateTrajectory traj;
  traj.seed = seed;
  traj.t.resize(n);
  traj.nu_rep.resize(n);

  std::vector<double> walk(n, 0.0);
  if (drift.random_walk_density > 0.0) {
    Rng rng(derive_seed(seed, "drift.random_walk"));
    std::normal_distribution<double> normal(0.0, drift.random_walk_density * std::sqrt(dt));
    for (std::size_t k = 1; k < n; ++k) walk[k] = walk[k - 1] + normal(rng);
  }
  std::vector<double> jit;
  if (jitter.white_freq_density > 0.0) {
    const double fs = 1.0 / dt;
    const double s = jitter.white_freq_density * jitter.white_freq_density;
    const double bw = jitter.bandwidth;
    jit = spectral::shaped_gaussian([s, bw](double lo, double hi) { return spectral::step_mean(lo, hi, s, bw, 0.0); },
                                    n, fs, derive_seed(seed, "drift.jitter"));
  }

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    double v = nu_rep0 + drift.slope * t + walk[k];
    if (drift.temp_amplitude != 0.0) v += drift.temp_amplitude * std::sin(2.0 * std::numbers::pi * t / drift.temp_period);
    if (!jit.empty()) v += jit[k];
    if (!(v > 0.0)) throw InvalidArgument("generate_trajectory: nu_rep became non-positive at sample " + std::to_string(k));
    traj.t[k] = t;
    traj.nu_rep[k] = v;
  }
  return traj;
}

/// Pointwise m * nu_rep(t).
inline std::vector<double> tooth_frequency(const RepRateTrajectory& traj, int m) {
  if (m < 1) throw InvalidArgument("tooth_frequency: m must be >= 1");
  std::vector<double> out(traj.nu_rep.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = m * traj.nu_rep[k];
  return out;
}

struct NoiseSamples {
  std::vector<double> samples;
  std::vector<std::string> warnings;
};

/// Zero-mean fractional noise with the one-sided PSD described by `spec`.
inline NoiseSamples sample_fractional_noise(const NoiseSpec& spec, double duration, double sample_rate,
                                            std::uint64_t seed) {
  if (auto issues = validate(spec); !issues.empty()) throw ValidationError(issues);
  if (!(sample_rate > 0.0)) throw InvalidArgument("sample_fractional_noise: sample rate must be positive");
  if (!(duration >= 0.0)) throw InvalidArgument("sample_fractional_noise: duration must be >= 0");
  if (spec.shape == NoiseShape::pll_shaped && !(sample_rate > 2.0 * spec.loop_bandwidth))
    throw AliasingError("sample_fractional_noise: sample rate must exceed twice the loop bandwidth");

  NoiseSamples out;
  if (spec.alpha_db_per_hz > 0.0)
    out.warnings.push_back("alpha_db_per_hz > 0: fractional noise exceeds the carrier per Hz");
  if (spec.shape == NoiseShape::pll_shaped && spec.floor_db_per_hz > 0.0)
    out.warnings.push_back("floor_db_per_hz > 0: fractional noise exceeds the carrier per Hz");

  const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  if (spec.disabled()) {
    out.samples.assign(n, 0.0);
    return out;
  }
  if (spec.shape == NoiseShape::flat) {
    // A flat PSD needs no spectral shaping: scaled white samples are exact.
    Rng rng(derive_seed(seed, "noise.fractional"));
    std::normal_distribution<double> normal(0.0, std::sqrt(spec.density(0.0) * sample_rate / 2.0));
    out.samples.resize(n);
    for (double& v : out.samples) v = normal(rng);
    return out;
  }
  out.samples = spectral::shaped_gaussian([&spec](double lo, double hi) { return spec.mean_density(lo, hi); }, n,
                                          sample_rate, derive_seed(seed, "noise.fractional"));
  return out;
}

}  // namespace beatlock::noise
