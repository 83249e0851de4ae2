#pragma once

// Beat-note lock electronics at the frequency/PSD level: pick tooth n, mix
// it against a stable LO, and drive AOM1 with either the raw (noisy) error
// signal or a PLL-regenerated tone that tracks it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "beatlock/drift_noise.hpp"
#include "beatlock/errors.hpp"

namespace beatlock::lock {

using noise::NoiseSpec;
using noise::RepRateTrajectory;

struct DirectMode {};

struct PllMode {
  double loop_bandwidth = 1e3;           // Hz
  double oscillator_floor_db_per_hz = -120.0;
};

using LockMode = std::variant<DirectMode, PllMode>;

struct LockConfig {
  int n = 157;
  double nu_lo = 12.438e9;
  double bpf_center = 0.0;  // Hz; 0 centers the filter on n * nu_rep0
  double bpf_width = 0.0;   // Hz; 0 selects nu_rep0
  double lpf_cutoff = 300e6;
  LockMode mode = PllMode{};
  NoiseSpec error_noise = NoiseSpec::flat(-90.0);
};

/// A tone driving an AOM: center frequency per sample plus its fractional
/// amplitude-noise PSD.
struct DriveTone {
  std::vector<double> t;
  std::vector<double> freq;
  double phase0 = 0.0;
  NoiseSpec noise;
};

/// Raman beat frequency presented to the qubit.
struct BeatNote {
  std::vector<double> t;
  std::vector<double> freq;
  NoiseSpec noise;
};

inline double bpf_center(const LockConfig& c, double nu_rep0) {
  return c.bpf_center > 0.0 ? c.bpf_center : c.n * nu_rep0;
}
inline double bpf_width(const LockConfig& c, double nu_rep0) { return c.bpf_width > 0.0 ? c.bpf_width : nu_rep0; }

inline std::vector<std::string> validate(const LockConfig& c, double nu_rep0) {
  std::vector<std::string> issues;
  if (c.n < 1) issues.push_back("n must be >= 1");
  if (!(c.nu_lo > 0.0)) issues.push_back("nu_lo must be positive");
  if (c.n >= 1 && nu_rep0 > 0.0) {
    const double tooth = c.n * nu_rep0;
    if (!(c.nu_lo < tooth)) issues.push_back("nu_lo must be below n * nu_rep0");
    const double center = bpf_center(c, nu_rep0), half = bpf_width(c, nu_rep0) / 2.0;
    if (!(std::abs(tooth - center) <= half)) issues.push_back("band-pass filter must pass tooth n");
    if (std::abs(tooth + nu_rep0 - center) <= half || std::abs(tooth - nu_rep0 - center) <= half)
      issues.push_back("band-pass filter must reject teeth n-1 and n+1");
    if (!(c.lpf_cutoff > 0.0)) issues.push_back("lpf_cutoff must be positive");
    if (!(c.lpf_cutoff < tooth + c.nu_lo)) issues.push_back("lpf_cutoff must reject the sum beat n*nu_rep0 + nu_lo");
    if (c.nu_lo < tooth && !(tooth - c.nu_lo <= c.lpf_cutoff))
      issues.push_back("difference beat n*nu_rep0 - nu_lo must lie inside the low-pass band");
  }
  if (c.bpf_width < 0.0) issues.push_back("bpf_width must be >= 0");
  if (const auto* p = std::get_if<PllMode>(&c.mode)) {
    if (!(p->loop_bandwidth > 0.0)) issues.push_back("pll loop_bandwidth must be > 0");
    if (std::isnan(p->oscillator_floor_db_per_hz)) issues.push_back("pll oscillator_floor must not be NaN");
  }
  for (auto& i : noise::validate(c.error_noise)) issues.push_back("error_noise: " + i);
  return issues;
}

/// AOM1 drive derived from the locked tooth: freq(t) = n nu_rep(t) - nu_lo.
/// Direct mode passes the amplifier noise through; PLL mode keeps freq(t)
/// and replaces the out-of-band noise with the oscillator floor.
inline DriveTone error_signal(const RepRateTrajectory& traj, const LockConfig& cfg) {
  if (traj.nu_rep.empty()) throw InvalidArgument("error_signal: empty trajectory");
  if (auto issues = validate(cfg, traj.nu_rep.front()); !issues.empty()) throw ValidationError(issues);
  const double center = bpf_center(cfg, traj.nu_rep.front());
  const double half = bpf_width(cfg, traj.nu_rep.front()) / 2.0;

  DriveTone d;
  d.t = traj.t;
  d.freq.resize(traj.nu_rep.size());
  for (std::size_t k = 0; k < traj.nu_rep.size(); ++k) {
    const double tooth = cfg.n * traj.nu_rep[k];
    if (std::abs(tooth - center) > half)
      throw LockLossError(k, traj.t[k], "tooth n left the band-pass filter");
    const double beat = tooth - cfg.nu_lo;
    if (!(beat > 0.0) || beat > cfg.lpf_cutoff)
      throw LockLossError(k, traj.t[k], "beat note " + std::to_string(beat) + " Hz outside (0, lpf_cutoff]");
    d.freq[k] = beat;
  }
  if (const auto* p = std::get_if<PllMode>(&cfg.mode))
    d.noise = NoiseSpec::pll_shaped(cfg.error_noise.alpha_db_per_hz, p->loop_bandwidth, p->oscillator_floor_db_per_hz);
  else
    d.noise = cfg.error_noise;
  return d;
}

/// The same drive with its frequency held at the t = 0 value (lock disengaged).
inline DriveTone freeze(DriveTone d) {
  if (!d.freq.empty()) std::fill(d.freq.begin(), d.freq.end(), d.freq.front());
  return d;
}

namespace detail {
inline void check_aligned(const RepRateTrajectory& traj, const DriveTone& d) {
  if (traj.t.size() != d.t.size() || traj.t != d.t)
    throw AlignmentError("drive tone and trajectory do not share sample times");
}
}  // namespace detail

/// nu_sb(t) = n nu_rep(t) - |nu_m1(t) - nu_m2|.
inline BeatNote effective_beat(const RepRateTrajectory& traj, const DriveTone& drive1, double nu_m2, int n) {
  detail::check_aligned(traj, drive1);
  if (n < 1) throw InvalidArgument("effective_beat: n must be >= 1");
  BeatNote b;
  b.t = traj.t;
  b.noise = drive1.noise;
  b.freq.resize(traj.nu_rep.size());
  for (std::size_t k = 0; k < b.freq.size(); ++k) {
    const double tooth = n * traj.nu_rep[k];
    if (!(tooth > drive1.freq[k]))
      throw InvalidArgument("effective_beat: n*nu_rep must exceed the drive frequency (sample " + std::to_string(k) + ")");
    b.freq[k] = tooth - std::abs(drive1.freq[k] - nu_m2);
  }
  return b;
}

/// Sideband beat at tooth m minus its t = 0 value. Vanishes identically only
/// at the locked tooth.
inline std::vector<double> residual_at_tooth(const RepRateTrajectory& traj, const DriveTone& drive1, double nu_m2,
                                             int m, int n) {
  detail::check_aligned(traj, drive1);
  if (m < 1 || n < 1) throw InvalidArgument("residual_at_tooth: tooth indices must be >= 1");
  std::vector<double> out(traj.nu_rep.size());
  if (out.empty()) return out;
  const double base = m * traj.nu_rep[0] - std::abs(drive1.freq[0] - nu_m2);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = (m * traj.nu_rep[k] - std::abs(drive1.freq[k] - nu_m2)) - base;
  return out;
}

}  // namespace beatlock::lock
