#pragma once

// Ramsey interferometry against the qubit: pi/2 - free evolution - pi/2 with
// a scanned analysis phase, repeated over delays to extract the coherence
// time of the Raman beat note with the lock engaged or disengaged.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "beatlock/comb_model.hpp"
#include "beatlock/drift_noise.hpp"
#include "beatlock/errors.hpp"
#include "beatlock/lock_chain.hpp"
#include "beatlock/qubit_dynamics.hpp"
#include "beatlock/seed.hpp"

namespace beatlock::ramsey {

struct RamseyConfig {
  std::vector<double> delays;  // s, strictly increasing, >= 0
  int trials_per_delay = 200;
  bool lock_engaged = true;
  int phase_points = 8;
  double trajectory_dt = 0.0;  // s; 0 selects 1/(2 * jitter bandwidth)
  std::size_t max_samples = std::size_t{1} << 22;  // per-trial trajectory budget
};

struct ExponentialFit {
  double rate = 0.0;        // 1/s
  double rate_error = 0.0;  // 1/s
  double tau = std::numeric_limits<double>::infinity();
  double fit_error = std::numeric_limits<double>::quiet_NaN();
  double tau_lower_bound = std::numeric_limits<double>::infinity();
  bool decay_resolved = false;
  bool converged = true;
};

struct CoherenceResult {
  std::vector<double> delays;
  std::vector<double> contrast;
  std::vector<double> std_error;
  double tau = std::numeric_limits<double>::infinity();  // +inf: no decay resolved
  double fit_error = std::numeric_limits<double>::quiet_NaN();
  double tau_lower_bound = std::numeric_limits<double>::infinity();
  bool decay_resolved = false;
  bool fit_converged = true;
  bool lock_engaged = true;
};

inline std::vector<std::string> validate(const RamseyConfig& c) {
  std::vector<std::string> issues;
  if (c.delays.empty()) issues.push_back("delays must not be empty");
  for (std::size_t i = 0; i < c.delays.size(); ++i) {
    if (!(c.delays[i] >= 0.0)) issues.push_back("delays must be >= 0");
    if (i > 0 && !(c.delays[i] > c.delays[i - 1])) issues.push_back("delays must be strictly increasing");
  }
  if (c.trials_per_delay < 1) issues.push_back("trials_per_delay must be >= 1");
  if (c.phase_points < 3) issues.push_back("phase_points must be >= 3");
  if (c.trajectory_dt < 0.0) issues.push_back("trajectory_dt must be >= 0");
  return issues;
}

/// Least-squares fit of contrast(T) = exp(-T / tau). A decay counts as
/// resolved when the fitted drop at the longest delay clears three standard
/// errors; otherwise tau is reported as +inf with a lower bound.
inline ExponentialFit fit_exponential(const std::vector<double>& delays, const std::vector<double>& contrast) {
  ExponentialFit fit;
  if (delays.size() != contrast.size() || delays.size() < 2) {
    fit.converged = false;
    return fit;
  }
  double t_min = std::numeric_limits<double>::infinity(), t_max = 0.0;
  for (double t : delays) {
    if (t > 0.0) t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
  }
  if (!(t_max > 0.0)) {
    fit.converged = false;
    return fit;
  }
  auto sse = [&](double g) {
    double s = 0.0;
    for (std::size_t i = 0; i < delays.size(); ++i) {
      const double r = contrast[i] - std::exp(-g * delays[i]);
      s += r * r;
    }
    return s;
  };
  const double g_max = 20.0 / t_min;
  const auto [g, best] = boost::math::tools::brent_find_minima(sse, 0.0, g_max, 52);
  fit.rate = g;
  if (g > 0.999 * g_max) fit.converged = false;

  double jj = 0.0;
  for (double t : delays) {
    const double j = t * std::exp(-g * t);
    jj += j * j;
  }
  const double sigma2 = best / static_cast<double>(delays.size() - 1);
  fit.rate_error = jj > 0.0 ? std::sqrt(sigma2 / jj) : 0.0;

  const double drop = 1.0 - std::exp(-g * t_max);
  const double drop_err = t_max * std::exp(-g * t_max) * fit.rate_error;
  fit.decay_resolved = fit.converged && drop > 3.0 * drop_err && drop > 1e-6;
  if (fit.decay_resolved) {
    fit.tau = 1.0 / g;
    fit.fit_error = fit.rate_error / (g * g);
  }
  fit.tau_lower_bound = 1.0 / std::max(g + 3.0 * fit.rate_error, 1e-6 / t_max);
  if (!fit.converged) {
    fit.tau = 0.0;
    fit.tau_lower_bound = 0.0;
  }
  return fit;
}

namespace detail {

using qubit::State;

// Zero-order-hold phase integral of delta over the trajectory samples.
struct PhaseIntegral {
  std::vector<double> cum;
  const std::vector<double>* delta;
  double dt;

  PhaseIntegral(const std::vector<double>& d, double step) : cum(d.size() + 1, 0.0), delta(&d), dt(step) {
    for (std::size_t k = 0; k < d.size(); ++k) cum[k + 1] = cum[k] + d[k] * dt;
  }
  std::size_t index(double t) const {
    const auto k = static_cast<std::size_t>(std::floor(t / dt));
    return std::min(k, delta->size() - 1);
  }
  double at(double t) const {
    const std::size_t k = index(t);
    return cum[k] + (*delta)[k] * (t - static_cast<double>(k) * dt);
  }
  double detuning(double t) const { return (*delta)[index(t)]; }
};

inline State pulse(State s, double omega0, double duration, double phase, const PhaseIntegral& ph, double t_start,
                   const noise::NoiseSpec& noise, std::uint64_t seed) {
  double fastest = omega0;
  fastest = std::max({fastest, std::abs(ph.detuning(t_start)) / qubit::two_pi,
                      std::abs(ph.detuning(t_start + duration)) / qubit::two_pi});
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(duration * 50.0 * fastest - 1e-9)));
  const double h = duration / static_cast<double>(steps);
  const auto x = noise::sample_fractional_noise(noise, static_cast<double>(steps) * h, 1.0 / h, seed).samples;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = t_start + (static_cast<double>(k) + 0.5) * h;
    const double omega = qubit::two_pi * omega0 * (1.0 + (k < x.size() ? x[k] : 0.0));
    s = qubit::step(s, omega, ph.detuning(t), h, phase);
  }
  return s;
}

}  // namespace detail

/// For each delay T: pi/2 pulse, free evolution under
/// delta(t) = 2 pi (nu_sb(t) - nu_ab), then a pi/2 pulse at each of
/// phase_points analysis phases. Contrast is twice the amplitude of the
/// trial-averaged fringe. With the lock disengaged nu_m1 is frozen at its
/// t = 0 value. AOM2 sits at comb.nu_m2.
inline CoherenceResult run_ramsey(const qubit::QubitSpec& q, const comb::CombSpec& comb, const lock::LockConfig& lock_cfg,
                                  const noise::DriftProfile& drift, const noise::JitterProfile& jitter,
                                  const RamseyConfig& cfg, std::uint64_t seed) {
  if (auto issues = validate(cfg); !issues.empty()) throw ValidationError(issues);
  if (auto issues = qubit::validate(q); !issues.empty()) throw ValidationError(issues);
  if (!(q.omega0 > 0.0)) throw InvalidArgument("run_ramsey: omega0 must be positive");
  const double t_half = 1.0 / (4.0 * q.omega0);
  double min_pos = std::numeric_limits<double>::infinity();
  for (double d : cfg.delays)
    if (d > 0.0) min_pos = std::min(min_pos, d);
  if (std::isfinite(min_pos) && !(t_half <= 0.1 * min_pos))
    throw InvalidArgument("run_ramsey: pi/2 pulse must be much shorter than the shortest delay");

  const double dt = cfg.trajectory_dt > 0.0 ? cfg.trajectory_dt : 1.0 / (2.0 * jitter.bandwidth);
  const double span = cfg.delays.back() + 2.0 * t_half + 2.0 * dt;
  const auto samples = static_cast<std::size_t>(std::floor(span / dt + 1e-9)) + 1;
  if (samples > cfg.max_samples) throw SampleBudgetExceeded(samples, cfg.max_samples);

  const std::size_t nd = cfg.delays.size();
  const int trials = cfg.trials_per_delay;
  const int np = cfg.phase_points;
  std::vector<std::vector<std::complex<double>>> phasors(nd, std::vector<std::complex<double>>(trials));

  for (int r = 0; r < trials; ++r) {
    const std::uint64_t trial_seed = derive_seed(seed, "ramsey.trial", static_cast<std::uint64_t>(r));
    const auto traj = noise::generate_trajectory(comb.nu_rep0, drift, jitter, span, dt, derive_seed(trial_seed, "trajectory"));
    auto drive = lock::error_signal(traj, lock_cfg);
    if (!cfg.lock_engaged) drive = lock::freeze(std::move(drive));
    const auto beat = lock::effective_beat(traj, drive, comb.nu_m2, lock_cfg.n);
    std::vector<double> delta(beat.freq.size());
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = qubit::two_pi * (beat.freq[k] - q.nu_ab);
    const detail::PhaseIntegral ph(delta, dt);

    const auto s1 = detail::pulse(qubit::State::ground(q.init_state), q.omega0, t_half, 0.0, ph, 0.0, beat.noise,
                                  derive_seed(trial_seed, "pulse1"));
    for (std::size_t i = 0; i < nd; ++i) {
      const double t2 = t_half + cfg.delays[i];
      const auto s2 = qubit::precess(s1, ph.at(t2) - ph.at(t_half));
      const std::uint64_t p2_seed = derive_seed(trial_seed, "pulse2", i);
      std::complex<double> z{0.0, 0.0};
      for (int k = 0; k < np; ++k) {
        const double phi = qubit::two_pi * k / np;
        const double p = detail::pulse(s2, q.omega0, t_half, phi, ph, t2, beat.noise, p2_seed).p_b();
        z += p * std::polar(1.0, -phi);
      }
      phasors[i][r] = 2.0 * (2.0 / np) * z;
    }
  }

  CoherenceResult res;
  res.lock_engaged = cfg.lock_engaged;
  res.delays = cfg.delays;
  for (std::size_t i = 0; i < nd; ++i) {
    std::complex<double> mean{0.0, 0.0};
    for (const auto& z : phasors[i]) mean += z;
    mean /= static_cast<double>(trials);
    const double c = std::abs(mean);
    const std::complex<double> dir = c > 0.0 ? mean / c : std::complex<double>{1.0, 0.0};
    double var = 0.0;
    for (const auto& z : phasors[i]) {
      const double proj = std::real(z * std::conj(dir)) - c;
      var += proj * proj;
    }
    var = trials > 1 ? var / (trials - 1) : 0.0;
    res.contrast.push_back(std::min(1.0, c));
    res.std_error.push_back(std::sqrt(var / trials));
  }
  const auto fit = fit_exponential(res.delays, res.contrast);
  res.tau = fit.tau;
  res.fit_error = fit.fit_error;
  res.tau_lower_bound = fit.tau_lower_bound;
  res.decay_resolved = fit.decay_resolved;
  res.fit_converged = fit.converged;
  return res;
}

/// Everything run_ramsey needs besides the jitter being searched for.
struct CalibrationSetup {
  qubit::QubitSpec qubit;
  comb::CombSpec comb;
  lock::LockConfig lock;
  noise::DriftProfile drift;
  double jitter_bandwidth = 10e3;
  RamseyConfig ramsey;  // lock_engaged is forced off
};

/// Default setup around tooth n: 80.6 MHz repetition rate, LO 216.2 MHz
/// below the tooth, AOM2 resonant with the qubit, delays spanning 2.5x the
/// target coherence time.
inline CalibrationSetup default_calibration_setup(int n, double target_tau) {
  CalibrationSetup s;
  s.comb.nu_rep0 = 80.6e6;
  s.comb.m_max = std::max(1, n + 1);
  s.lock.n = n;
  s.lock.nu_lo = n * s.comb.nu_rep0 - 216.2e6;
  s.lock.mode = lock::PllMode{};
  s.qubit.omega0 = 600e3;
  s.qubit.nu_ab = s.lock.nu_lo + 204.819e6;
  s.comb.nu_m1 = 216.2e6;
  s.comb.nu_m2 = s.qubit.nu_ab - s.lock.nu_lo;
  s.drift.slope = 1.0 / 60.0;
  s.ramsey.trials_per_delay = 400;
  for (int i = 0; i <= 10; ++i) s.ramsey.delays.push_back(0.25 * target_tau * i);
  return s;
}

struct CalibrationResult {
  noise::JitterProfile jitter;
  double tau = 0.0;
  int iterations = 0;
};

namespace detail {
inline double unlocked_tau(const CalibrationSetup& s, double density, std::uint64_t seed) {
  RamseyConfig cfg = s.ramsey;
  cfg.lock_engaged = false;
  const noise::JitterProfile jitter{density, s.jitter_bandwidth};
  const auto r = run_ramsey(s.qubit, s.comb, s.lock, s.drift, jitter, cfg, seed);
  return r.tau;  // +inf when unresolved, 0 when faster than the delay grid
}
}  // namespace detail

/// Bisection (in log density) on the white frequency jitter of nu_rep until
/// the unlocked coherence time is within rel_tol of target_tau. Every
/// evaluation reuses the same seed, so tau(density) is a smooth function.
inline CalibrationResult calibrate_jitter(double target_tau, const CalibrationSetup& setup,
                                          std::pair<double, double> bounds, std::uint64_t seed,
                                          double rel_tol = 0.1) {
  if (!(target_tau > 0.0)) throw InvalidArgument("calibrate_jitter: target must be positive");
  double lo = bounds.first, hi = bounds.second;
  if (!(lo > 0.0) || !(hi > lo)) throw InvalidArgument("calibrate_jitter: need 0 < lower bound < upper bound");
  const double tau_lo = detail::unlocked_tau(setup, lo, seed);
  const double tau_hi = detail::unlocked_tau(setup, hi, seed);
  if (!(tau_lo > target_tau) || !(tau_hi < target_tau)) throw BracketError(tau_lo, tau_hi, target_tau);

  CalibrationResult res;
  for (int it = 1; it <= 80; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double tau = detail::unlocked_tau(setup, mid, seed);
    res.iterations = it;
    if (std::abs(tau / target_tau - 1.0) <= rel_tol) {
      res.jitter = {mid, setup.jitter_bandwidth};
      res.tau = tau;
      return res;
    }
    (tau > target_tau ? lo : hi) = mid;
  }
  throw Error("calibrate_jitter: bisection did not converge");
}

inline CalibrationResult calibrate_jitter(double target_tau, int n, std::pair<double, double> bounds,
                                          std::uint64_t seed) {
  return calibrate_jitter(target_tau, default_calibration_setup(n, target_tau), bounds, seed);
}

}  // namespace beatlock::ramsey
