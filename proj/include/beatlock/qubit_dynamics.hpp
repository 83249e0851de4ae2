#pragma once

// Effective two-level qubit driven by the Raman beat note.
//
// Rotating frame, hbar = 1:
//   H(t) = -delta(t)/2 sz + Omega(t)/2 (cos(phi) sx + sin(phi) sy)
// with delta = 2 pi (nu_sb - nu_res) and Omega = 2 pi omega0 (1 + x(t)), where
// x(t) is the fractional amplitude noise of the drive. Each step applies the
// exact SU(2) exponential of H frozen at the step midpoint.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beatlock/drift_noise.hpp"
#include "beatlock/errors.hpp"
#include "beatlock/lock_chain.hpp"
#include "beatlock/seed.hpp"

namespace beatlock::qubit {

using cplx = std::complex<double>;
using lock::BeatNote;
using lock::DriveTone;
using noise::NoiseSpec;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

enum class Level { a, b };

struct Sideband {
  double offset = 0.0;    // Hz, relative to nu_ab
  double strength = 0.0;  // Rabi frequency relative to the carrier
};

struct QubitSpec {
  double nu_ab = 12.642819e9;  // Hz
  double omega0 = 62.5e3;      // Hz (cycles)
  std::vector<Sideband> sidebands;
  Level init_state = Level::a;
};

inline std::vector<std::string> validate(const QubitSpec& q) {
  std::vector<std::string> issues;
  if (!(q.nu_ab > 0.0)) issues.push_back("nu_ab must be positive");
  if (!(q.omega0 >= 0.0) || !std::isfinite(q.omega0)) issues.push_back("omega0 must be >= 0");
  for (std::size_t i = 0; i < q.sidebands.size(); ++i) {
    const auto& s = q.sidebands[i];
    if (!(s.strength >= 0.0 && s.strength <= 1.0))
      issues.push_back("sidebands[" + std::to_string(i) + "].strength must be in [0, 1]");
    if (!std::isfinite(s.offset)) issues.push_back("sidebands[" + std::to_string(i) + "].offset must be finite");
  }
  return issues;
}

struct State {
  cplx a{1.0, 0.0};
  cplx b{0.0, 0.0};

  static State ground(Level l) { return l == Level::a ? State{{1, 0}, {0, 0}} : State{{0, 0}, {1, 0}}; }
  double norm() const { return std::norm(a) + std::norm(b); }
  double p_b() const { return std::norm(b); }
};

/// Exact propagator for a step of length h with constant Rabi rate omega,
/// detuning delta (rad/s) and drive phase phi.
inline State step(const State& s, double omega, double delta, double h, double phi = 0.0) {
  const double gen = std::hypot(omega, delta);
  if (gen == 0.0) return s;
  const double theta = 0.5 * gen * h;
  const double c = std::cos(theta), sn = std::sin(theta);
  const double nx = omega * std::cos(phi) / gen, ny = omega * std::sin(phi) / gen, nz = -delta / gen;
  // U = cos(theta) I - i sin(theta) (n . sigma)
  const cplx u00(c, -sn * nz);
  const cplx u11(c, sn * nz);
  const cplx u01 = cplx(0.0, -sn) * cplx(nx, -ny);
  const cplx u10 = cplx(0.0, -sn) * cplx(nx, ny);
  return {u00 * s.a + u01 * s.b, u10 * s.a + u11 * s.b};
}

/// Free precession by an accumulated phase (rad) with no drive.
inline State precess(const State& s, double phase) {
  return {s.a * std::polar(1.0, 0.5 * phase), s.b * std::polar(1.0, -0.5 * phase)};
}

/// Integrates piecewise-constant coefficients; series hold one value per step.
inline State propagate(State s, std::span<const double> omega, std::span<const double> delta, double h,
                       double phi = 0.0) {
  for (std::size_t k = 0; k < omega.size(); ++k) s = step(s, omega[k], delta[k], h, phi);
  return s;
}

struct EvolutionResult {
  double p_b = 0.0;
  std::vector<std::pair<double, double>> trajectory;  // (t, p_b), when requested
  std::uint64_t seed = 0;
};

struct EvolveOptions {
  bool record_trajectory = false;
  std::size_t trajectory_stride = 1;
};

namespace detail {

inline double interp(const std::vector<double>& t, const std::vector<double>& y, double x) {
  if (y.size() == 1 || x <= t.front()) return y.front();
  if (x >= t.back()) return y.back();
  const auto it = std::upper_bound(t.begin(), t.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
  const double w = (x - t[i]) / (t[i + 1] - t[i]);
  return y[i] + w * (y[i + 1] - y[i]);
}

struct Channel {
  double resonance;  // Hz
  double strength;
};

inline std::vector<Channel> channels(const QubitSpec& q) {
  std::vector<Channel> ch{{q.nu_ab, 1.0}};
  for (const auto& s : q.sidebands)
    if (s.strength > 0.0) ch.push_back({q.nu_ab + s.offset, s.strength});
  return ch;
}

inline void check_beat(const BeatNote& beat) {
  if (beat.freq.empty() || beat.t.size() != beat.freq.size())
    throw AlignmentError("beat note needs matching, non-empty time and frequency series");
}

}  // namespace detail

/// Largest step evolve accepts for this qubit and beat over [0, duration].
inline double max_step(const QubitSpec& q, const BeatNote& beat, double duration) {
  detail::check_beat(beat);
  double fastest = q.omega0;
  for (const auto& ch : detail::channels(q)) {
    for (std::size_t k = 0; k < beat.t.size(); ++k) {
      if (k > 0 && beat.t[k - 1] > duration) break;
      fastest = std::max(fastest, std::abs(beat.freq[k] - ch.resonance));
    }
  }
  return fastest > 0.0 ? 1.0 / (50.0 * fastest) : std::numeric_limits<double>::infinity();
}

/// Population of |b> after a drive pulse of length pulse_duration. Motional
/// sidebands are independent two-level channels at nu_ab + offset with Rabi
/// frequency strength*omega0; their transfer probabilities are summed and
/// clamped to [0, 1]. All channels share one noise realization.
inline EvolutionResult evolve(const QubitSpec& q, const BeatNote& beat, double pulse_duration, double dt,
                              std::uint64_t seed, const EvolveOptions& opt = {}) {
  if (auto issues = validate(q); !issues.empty()) throw ValidationError(issues);
  detail::check_beat(beat);
  if (!(pulse_duration >= 0.0)) throw InvalidArgument("evolve: pulse duration must be >= 0");
  if (!(dt > 0.0)) throw InvalidArgument("evolve: dt must be positive");
  const double limit = max_step(q, beat, pulse_duration);
  if (dt > limit * (1.0 + 1e-12)) throw ResolutionError(dt, limit);

  EvolutionResult res;
  res.seed = seed;
  const double p_start = q.init_state == Level::a ? 0.0 : 1.0;
  res.p_b = p_start;
  if (opt.record_trajectory) res.trajectory.emplace_back(0.0, p_start);
  if (pulse_duration == 0.0) return res;

  const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(pulse_duration / dt - 1e-9)));
  const double h = pulse_duration / static_cast<double>(steps);
  const auto x = q.omega0 > 0.0 ? noise::sample_fractional_noise(beat.noise, static_cast<double>(steps) * h, 1.0 / h,
                                                                 derive_seed(seed, "qubit.evolve"))
                                      .samples
                                : std::vector<double>{};
  std::vector<double> nu_mid(steps);
  for (std::size_t k = 0; k < steps; ++k) nu_mid[k] = detail::interp(beat.t, beat.freq, (k + 0.5) * h);

  const auto chans = detail::channels(q);
  const std::size_t stride = std::max<std::size_t>(1, opt.trajectory_stride);
  std::vector<State> st(chans.size(), State::ground(q.init_state));
  auto combined = [&] {
    double moved = 0.0;
    for (const auto& s : st) moved += q.init_state == Level::a ? s.p_b() : 1.0 - s.p_b();
    moved = std::min(1.0, moved);
    return q.init_state == Level::a ? moved : 1.0 - moved;
  };
  for (std::size_t k = 0; k < steps; ++k) {
    const double noise_factor = 1.0 + (k < x.size() ? x[k] : 0.0);
    for (std::size_t c = 0; c < chans.size(); ++c) {
      const double omega = two_pi * chans[c].strength * q.omega0 * noise_factor;
      const double delta = two_pi * (nu_mid[k] - chans[c].resonance);
      st[c] = step(st[c], omega, delta, h);
    }
    if (opt.record_trajectory && ((k + 1) % stride == 0 || k + 1 == steps))
      res.trajectory.emplace_back(static_cast<double>(k + 1) * h, combined());
  }
  res.p_b = combined();
  return res;
}

/// Closed-form noiseless two-level transfer probability (rad/s inputs).
inline double rabi_formula(double omega, double delta, double t) {
  const double gen2 = omega * omega + delta * delta;
  if (gen2 == 0.0) return 0.0;
  const double s = std::sin(0.5 * std::sqrt(gen2) * t);
  return omega * omega / gen2 * s * s;
}

struct ScanPoint {
  double nu_m2 = 0.0;
  double p_b = 0.0;
  double std_error = 0.0;
};

/// Raman spectrum versus AOM2 frequency. Each point builds the beat note
/// through the lock chain, picks the coarsest admissible step, and averages
/// evolve over `trials` noise realizations (one run when the drive is
/// noiseless).
inline std::vector<ScanPoint> raman_scan(const QubitSpec& q, const noise::RepRateTrajectory& traj,
                                         const DriveTone& lock_output, int n, std::span<const double> nu_m2_range,
                                         double pulse_duration, int trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("raman_scan: trials must be >= 1");
  std::vector<ScanPoint> out;
  out.reserve(nu_m2_range.size());
  const int runs = lock_output.noise.disabled() ? 1 : trials;
  for (std::size_t i = 0; i < nu_m2_range.size(); ++i) {
    const double nu_m2 = nu_m2_range[i];
    const auto beat = lock::effective_beat(traj, lock_output, nu_m2, n);
    const double dt = max_step(q, beat, pulse_duration);
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < runs; ++r) {
      const double p = evolve(q, beat, pulse_duration, dt, derive_seed(seed, "qubit.raman_scan", i * 1000003ULL + r)).p_b;
      sum += p;
      sum2 += p * p;
    }
    const double mean = sum / runs;
    const double var = runs > 1 ? std::max(0.0, (sum2 - runs * mean * mean) / (runs - 1)) : 0.0;
    out.push_back({nu_m2, mean, std::sqrt(var / runs)});
  }
  return out;
}

struct ErrorEstimate {
  double epsilon = 0.0;
  double std_error = 0.0;
  double formula = 0.0;  // (pi^2/2) alpha omega0^2 T
  int trials = 0;
};

/// (pi^2 / 2) * alpha * omega0^2 * T, alpha linear per Hz, omega0 in Hz.
inline double error_law(double alpha_db_per_hz, double omega0, double total_time) {
  return 0.5 * std::numbers::pi * std::numbers::pi * spectral::from_db(alpha_db_per_hz) * omega0 * omega0 * total_time;
}

/// Monte-Carlo infidelity of a resonant drive of length total_time whose
/// Rabi rate carries flat fractional noise alpha, relative to the noiseless
/// evolution: mean of 1 - |<psi_ideal|psi_noisy>|^2.
inline ErrorEstimate error_probability_mc(double alpha_db_per_hz, double omega0, double total_time, int trials,
                                          std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("error_probability_mc: trials must be >= 1");
  if (!(omega0 > 0.0) || !(total_time > 0.0)) throw InvalidArgument("error_probability_mc: omega0 and T must be positive");
  QubitSpec q;
  q.omega0 = omega0;
  q.nu_ab = 1.0;
  const double dt = 1.0 / (50.0 * omega0);
  const auto steps = static_cast<std::size_t>(std::ceil(total_time / dt - 1e-9));
  const double h = total_time / static_cast<double>(steps);
  const NoiseSpec spec = NoiseSpec::flat(alpha_db_per_hz);

  std::vector<double> omega(steps, two_pi * omega0), delta(steps, 0.0);
  const State ideal = propagate(State::ground(Level::a), omega, delta, h);

  ErrorEstimate est;
  est.trials = trials;
  est.formula = error_law(alpha_db_per_hz, omega0, total_time);
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < trials; ++r) {
    // Same noise stream that evolve would draw for this trial seed.
    const auto x = noise::sample_fractional_noise(spec, static_cast<double>(steps) * h, 1.0 / h,
                                                  derive_seed(derive_seed(seed, "qubit.error_mc", r), "qubit.evolve"))
                       .samples;
    for (std::size_t k = 0; k < steps; ++k) omega[k] = two_pi * omega0 * (1.0 + (k < x.size() ? x[k] : 0.0));
    const State s = propagate(State::ground(Level::a), omega, delta, h);
    const double overlap = std::norm(std::conj(ideal.a) * s.a + std::conj(ideal.b) * s.b);
    const double e = std::max(0.0, 1.0 - overlap);
    sum += e;
    sum2 += e * e;
  }
  est.epsilon = sum / trials;
  const double var = trials > 1 ? std::max(0.0, (sum2 - trials * est.epsilon * est.epsilon) / (trials - 1)) : 0.0;
  est.std_error = std::sqrt(var / trials);
  return est;
}

/// Fractional Rabi-frequency noise PSD implied by one noisy arm. The Rabi
/// rate is the product of the two arms' fields and only one arm carries the
/// noise, so the fractional PSD equals the arm's alpha; omega0 only scales
/// the absolute density (omega0^2 * alpha).
inline NoiseSpec rabi_noise_density(double omega0, const NoiseSpec& arm_noise) {
  if (!(omega0 >= 0.0)) throw InvalidArgument("rabi_noise_density: omega0 must be >= 0");
  if (omega0 == 0.0) return NoiseSpec::off();
  return arm_noise;
}

}  // namespace beatlock::qubit
