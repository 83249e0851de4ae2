// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances are the contract values.

#include <beatlock/beatlock.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace beatlock;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

scenario::Scenario bundled(const std::string& name) { return scenario::load_scenario(scenario::resolve(name)); }

// 1 ------------------------------------------------------------------------
Outcome lock_invariance() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  lock::LockConfig cfg;
  cfg.n = 157;
  cfg.nu_lo = 12.438e9;
  const double nu_m2 = 204.819e6;
  const double target = cfg.nu_lo + nu_m2;
  const double roundoff = 8.0 * std::numeric_limits<double>::epsilon() * target;
  double worst_locked = 0.0, worst_unlocked = 0.0;
  for (int i = 0; i < 100; ++i) {
    noise::DriftProfile d;
    d.slope = (u(rng) - 0.5) * 0.2;
    d.temp_amplitude = 5.0 * u(rng);
    d.temp_period = 10.0 + 100.0 * u(rng);
    d.random_walk_density = u(rng);
    const noise::JitterProfile j{0.5 * u(rng), 50.0};
    const auto traj = noise::generate_trajectory(80.6e6, d, j, 100.0, 0.01, derive_seed(7, "acceptance.lock", i));
    const auto drive = lock::error_signal(traj, cfg);
    const auto locked = lock::effective_beat(traj, drive, nu_m2, cfg.n);
    const auto unlocked = lock::effective_beat(traj, lock::freeze(drive), nu_m2, cfg.n);
    for (std::size_t k = 0; k < traj.t.size(); ++k) {
      worst_locked = std::max(worst_locked, std::abs(locked.freq[k] - target));
      const double dev = unlocked.freq[k] - unlocked.freq[0];
      worst_unlocked = std::max(worst_unlocked, std::abs(dev - cfg.n * (traj.nu_rep[k] - traj.nu_rep[0])));
    }
  }
  const double secs = since(t0);
  return {worst_locked <= roundoff && worst_unlocked <= roundoff && secs < 10.0,
          fmt("100 trajectories x 10001 samples; max |locked - (LO+M2)| = %.3g Hz, max unlocked deviation error = %.3g Hz "
              "(round-off bound %.3g Hz); %.2f s (limit 10 s)",
              worst_locked, worst_unlocked, roundoff, secs)};
}

// 2 ------------------------------------------------------------------------
Outcome frequency_algebra() {
  const auto traj = noise::generate_trajectory(80.6e6, {}, {}, 1.0, 1.0, 1);
  lock::LockConfig cfg;
  cfg.n = 157;
  cfg.nu_lo = 12.438e9;
  const auto drive = lock::error_signal(traj, cfg);
  const double nu_ab = 12.642819e9;
  const double nu_m2 = nu_ab - cfg.nu_lo;
  const auto beat = lock::effective_beat(traj, drive, nu_m2, cfg.n);
  const bool ok = drive.freq[0] == 216.2e6 && nu_m2 == 204.819e6 && beat.freq[0] == nu_ab && beat.freq[1] == nu_ab;
  return {ok, fmt("beat = %.1f Hz (expect 216200000), nu_M2 = %.1f Hz (expect 204819000), carrier = %.1f Hz "
                  "(expect 12642819000), exact comparison",
                  drive.freq[0], nu_m2, beat.freq[0])};
}

// 3 ------------------------------------------------------------------------
Outcome error_law() {
  const auto t0 = std::chrono::steady_clock::now();
  const int trials = 1000;
  auto mc = [&](double a, double w, double t, int k) {
    return qubit::error_probability_mc(a, w, t, trials, derive_seed(3, "acceptance.error", k));
  };
  const auto ref = mc(-115, 600e3, 1e-3, 0);
  const double rel = std::abs(ref.epsilon / ref.formula - 1.0);
  const double r_alpha = ref.epsilon / mc(-125, 600e3, 1e-3, 1).epsilon;
  const double r_time = ref.epsilon / mc(-115, 600e3, 1e-4, 2).epsilon;
  const double r_rabi = ref.epsilon / mc(-115, 60e3, 1e-3, 3).epsilon;
  const double secs = since(t0);
  const bool ok = rel <= 0.25 && std::abs(r_alpha / 10.0 - 1.0) <= 0.25 && std::abs(r_time / 10.0 - 1.0) <= 0.25 &&
                  std::abs(r_rabi / 100.0 - 1.0) <= 0.25 && secs < 300.0;
  return {ok, fmt("eps(-115 dB/Hz, 600 kHz, 1 ms) = %.4f%% +- %.4f%% vs formula %.4f%% (rel err %.1f%%, limit 25%%); "
                  "decade ratios: alpha %.2f (10), T %.2f (10), Omega0 %.1f (100), each within 25%%; %.1f s (limit 300 s)",
                  100 * ref.epsilon, 100 * ref.std_error, 100 * ref.formula, 100 * rel, r_alpha, r_time, r_rabi, secs)};
}

// 4 ------------------------------------------------------------------------
Outcome raman_background() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = bundled("fig4b");
  const auto& e = std::get<scenario::RamanScanExperiment>(s.experiment);
  const double dt = std::min(1.0 / (2.0 * s.jitter.bandwidth), e.pulse_duration / 16.0);
  const auto traj = noise::generate_trajectory(s.comb.nu_rep0, s.drift, s.jitter, e.pulse_duration, dt,
                                               derive_seed(s.seed, "drift_noise"));
  const auto grid = e.grid();
  const std::uint64_t seed = derive_seed(s.seed, "qubit_dynamics");

  auto pll_cfg = s.lock;
  pll_cfg.mode = lock::PllMode{1e3, -120};
  pll_cfg.error_noise = noise::NoiseSpec::flat(-90);
  auto direct_cfg = pll_cfg;
  direct_cfg.mode = lock::DirectMode{};
  const auto pll_drive = lock::error_signal(traj, pll_cfg);
  auto quiet_drive = pll_drive;
  quiet_drive.noise = noise::NoiseSpec::off();

  const auto pll = qubit::raman_scan(s.qubit, traj, pll_drive, s.lock.n, grid, e.pulse_duration, e.trials, seed);
  const auto direct = qubit::raman_scan(s.qubit, traj, lock::error_signal(traj, direct_cfg), s.lock.n, grid,
                                        e.pulse_duration, e.trials, seed);
  const auto quiet = qubit::raman_scan(s.qubit, traj, quiet_drive, s.lock.n, grid, e.pulse_duration, 1, seed);

  const double carrier = s.qubit.nu_ab - s.lock.nu_lo;
  double bg_pll = 0.0, bg_direct = 0.0, bg_quiet = 0.0, var_pll = 0.0;
  int far = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - carrier) < 10e6 - 1.0) continue;
    bg_pll += pll[i].p_b;
    bg_direct += direct[i].p_b;
    bg_quiet += quiet[i].p_b;
    var_pll += pll[i].std_error * pll[i].std_error;
    ++far;
  }
  bg_pll /= far;
  bg_direct /= far;
  bg_quiet /= far;
  const double se_pll = std::sqrt(var_pll) / far;
  const double z = std::abs(bg_pll - bg_quiet) / se_pll;

  // Peak positions: largest p_b within +-2.5 MHz of each expected resonance.
  auto peak_near = [&](double f) {
    std::size_t best = 0;
    double p = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (std::abs(grid[i] - f) <= 2.5e6 && pll[i].p_b > p) {
        p = pll[i].p_b;
        best = i;
      }
    return grid[best];
  };
  double worst_peak = 0.0;
  std::vector<double> expected{carrier};
  for (const auto& sb : s.qubit.sidebands) expected.push_back(carrier + sb.offset);
  for (double f : expected) worst_peak = std::max(worst_peak, std::abs(peak_near(f) - f));

  const double secs = since(t0);
  const bool ok = bg_direct > 5.0 * bg_pll && z <= 3.0 && worst_peak <= e.step;
  return {ok, fmt("%d far points (>= 10 MHz from carrier), %d trials: direct bg %.3g, pll bg %.3g (ratio %.1f, need > 5), "
                  "noiseless bg %.3g, |pll - noiseless| = %.2f MC standard errors (need <= 3); worst peak offset %.0f Hz "
                  "(step %.0f Hz); %.1f s",
                  far, e.trials, bg_direct, bg_pll, bg_direct / bg_pll, bg_quiet, z, worst_peak, e.step, secs)};
}

// 5 ------------------------------------------------------------------------
Outcome pll_shaping() {
  const double fs = 100e3;
  lock::LockConfig cfg;
  cfg.mode = lock::PllMode{1e3, -120};
  cfg.error_noise = noise::NoiseSpec::flat(-90);
  const auto traj = noise::generate_trajectory(80.6e6, {}, {}, 1.0, 1.0, 1);
  const auto spec = lock::error_signal(traj, cfg).noise;
  const auto x = noise::sample_fractional_noise(spec, 20.0, fs, derive_seed(5, "acceptance.pll")).samples;
  const auto w = spectral::welch(x, fs, 4096);
  double in = 0.0, out = 0.0;
  int ni = 0, no = 0;
  for (std::size_t k = 1; k < w.freq.size(); ++k) {
    if (w.freq[k] >= 50.0 && w.freq[k] <= 800.0) {
      in += w.density(k);
      ++ni;
    } else if (w.freq[k] >= 2e3 && w.freq[k] <= fs / 4) {
      out += w.density(k);
      ++no;
    }
  }
  const double in_db = spectral::to_db(in / ni), out_db = spectral::to_db(out / no);
  const double step = in_db - out_db;
  return {std::abs(step - 30.0) <= 3.0,
          fmt("Welch (%zu segments): in-band %.2f dB/Hz, out-of-band %.2f dB/Hz, step %.2f dB (need 30 +- 3)", w.segments,
              in_db, out_db, step)};
}

// 6 ------------------------------------------------------------------------
Outcome ramsey_ratio() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = bundled("ramsey_unlocked");
  const auto& e = std::get<scenario::RamseyExperiment>(s.experiment);
  const auto& cal = *e.calibrate;
  auto setup = ramsey::default_calibration_setup(s.lock.n, cal.target_tau);
  setup.qubit = s.qubit;
  setup.comb = s.comb;
  setup.lock = s.lock;
  setup.drift = s.drift;
  setup.jitter_bandwidth = s.jitter.bandwidth;
  setup.ramsey.trials_per_delay = cal.trials;
  const auto c = ramsey::calibrate_jitter(3e-3, setup, {cal.lower, cal.upper}, derive_seed(s.seed, "ramsey.calibrate"));
  auto cfg = e.config;
  cfg.lock_engaged = false;
  const auto unlocked = ramsey::run_ramsey(s.qubit, s.comb, s.lock, s.drift, c.jitter, cfg, derive_seed(s.seed, "ramsey"));
  cfg.lock_engaged = true;
  const auto locked = ramsey::run_ramsey(s.qubit, s.comb, s.lock, s.drift, c.jitter, cfg, derive_seed(s.seed, "ramsey"));
  const double secs = since(t0);
  const bool in_window = unlocked.decay_resolved && unlocked.tau >= 1.5e-3 && unlocked.tau <= 6e-3;
  const bool ratio = locked.tau >= 100.0 * unlocked.tau;
  const std::string locked_tau = std::isinf(locked.tau) ? "inf (no decay resolved)" : fmt("%.4g s", locked.tau);
  return {in_window && ratio && secs < 300.0,
          fmt("calibrated jitter %.4g Hz/sqrt(Hz) in %d steps; unlocked tau %.3f ms (need 1.5..6 ms); locked tau %s, "
              "3-sigma lower bound %.3g s; ratio >= %.0f (need >= 100); %.1f s (limit 300 s)",
              c.jitter.white_freq_density, c.iterations, 1e3 * unlocked.tau, locked_tau.c_str(), locked.tau_lower_bound,
              locked.tau_lower_bound / unlocked.tau, secs)};
}

// 7 ------------------------------------------------------------------------
Outcome oracle_equivalence() {
  Rng rng(7007);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int spectra_ok = 0;
  double worst_pos = 0.0, worst_db = 0.0;
  std::string first_failure;
  for (int i = 0; i < 20; ++i) {
    comb::CombSpec c;
    c.nu_rep0 = 40e6 + 80e6 * u(rng);
    c.m_max = 1 + static_cast<int>(8 * u(rng)) % 8;
    c.power_arm1 = 0.2 + 0.8 * u(rng);
    c.power_arm2 = 0.2 + 0.8 * u(rng);
    c.nu_m1 = 200e6;
    c.nu_m2 = 200e6 + (8e6 + (0.4 * c.nu_rep0 - 8e6) * u(rng)) * (u(rng) < 0.5 ? -1.0 : 1.0);
    const double delta = comb::delta_nu_m(c);
    // High enough that harmonics above m_max alias far below the line set.
    const double fs = 6.4 * c.m_max * c.nu_rep0 + 4.0 * delta;
    const double rbw = 0.5e6;
    const auto x = comb::synthesize_time_domain(c, 20e-6, fs, derive_seed(7, "acceptance.comb", i));
    const auto measured = comb::periodogram(x, fs, rbw);
    const auto analytic = comb::rf_line_spectrum(c, true, true, {100e9, rbw});

    const double lo = c.nu_rep0 - delta - measured.rbw, hi = c.m_max * c.nu_rep0 + delta + measured.rbw;
    std::vector<comb::SpectralLine> in_band;
    for (const auto& l : measured.lines)
      if (l.freq >= lo && l.freq <= hi) in_band.push_back(l);
    double top = -1e300;
    for (const auto& l : in_band) top = std::max(top, l.power);

    bool ok = in_band.size() == analytic.lines.size();
    for (std::size_t k = 0; ok && k < in_band.size(); ++k) {
      const double dpos = std::abs(in_band[k].freq - analytic.lines[k].freq);
      const double ddb = std::abs((in_band[k].power - top) - analytic.lines[k].power);
      worst_pos = std::max(worst_pos, dpos / measured.rbw);
      worst_db = std::max(worst_db, ddb);
      ok = dpos <= measured.rbw && ddb <= 1.0;
    }
    if (ok)
      ++spectra_ok;
    else if (first_failure.empty())
      first_failure = fmt(" first mismatch: spec %d (%zu vs %zu lines)", i, in_band.size(), analytic.lines.size());
  }

  double worst_rabi = 0.0;
  for (int i = 0; i < 100; ++i) {
    qubit::QubitSpec q;
    q.nu_ab = 1e9;
    q.omega0 = 1e3 + 1e6 * u(rng);
    const double detune = (u(rng) - 0.5) * 4.0 * q.omega0;
    const double t = (0.1 + 5.0 * u(rng)) / q.omega0;
    const lock::BeatNote beat{{0.0}, {q.nu_ab + detune}, noise::NoiseSpec::off()};
    const double p = qubit::evolve(q, beat, t, qubit::max_step(q, beat, t), i).p_b;
    const double W = 2 * std::numbers::pi * q.omega0, D = 2 * std::numbers::pi * detune;
    const double g = std::hypot(W, D);
    const double oracle = W * W / (g * g) * std::pow(std::sin(0.5 * g * t), 2);
    worst_rabi = std::max(worst_rabi, std::abs(p - oracle));
  }
  return {spectra_ok == 20 && worst_rabi <= 1e-6,
          fmt("%d/20 random comb specs match (worst offset %.3f bins, worst power error %.3f dB; limits 1 bin, 1 dB);%s "
              "Rabi oracle worst |dp| = %.2g over 100 cases (limit 1e-6)",
              spectra_ok, worst_pos, worst_db, first_failure.c_str(), worst_rabi)};
}

// 8 ------------------------------------------------------------------------
Outcome drift_arithmetic() {
  noise::DriftProfile d;
  d.slope = 1.0 / 60.0;
  const auto traj = noise::generate_trajectory(80.6e6, d, {}, 3600.0, 60.0, 1);
  const auto tooth = noise::tooth_frequency(traj, 157);
  bool exact = true;
  double worst = 0.0;
  for (std::size_t k = 1; k < tooth.size(); ++k) {
    const double per_minute = tooth[k] - tooth[k - 1];
    worst = std::max(worst, std::abs(per_minute - 157.0));
    exact = exact && per_minute == 157.0;
  }
  return {exact, fmt("tooth 157 step per minute over 60 minutes: max |step - 157 Hz| = %.3g Hz (exact required)", worst)};
}

// 9 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome reproducibility() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto root = fs::temp_directory_path() / "beatlock_acceptance_repro";
  fs::remove_all(root);
  int files = 0;
  std::vector<std::string> mismatched;
  const auto names = scenario::list_bundled();
  for (const auto& name : names) {
    std::vector<runner::RunManifest> runs;
    for (int r = 0; r < 2; ++r) {
      auto s = bundled(name);
      s.output_dir = root / std::to_string(r) / name;
      runs.push_back(runner::run_scenario(s));
    }
    for (const auto& a : runs[0].artifacts) {
      ++files;
      if (slurp(root / "0" / name / a) != slurp(root / "1" / name / a)) mismatched.push_back(name + "/" + a);
    }
    // The manifest differs only in its wall-clock field.
    auto m0 = nlohmann::json::parse(slurp(root / "0" / name / "manifest.json"));
    auto m1 = nlohmann::json::parse(slurp(root / "1" / name / "manifest.json"));
    m0.erase("wall_clock_s");
    m1.erase("wall_clock_s");
    ++files;
    if (m0 != m1) mismatched.push_back(name + "/manifest.json");
  }
  std::string which;
  for (const auto& m : mismatched) which += " " + m;
  return {names.size() == 7 && mismatched.empty(),
          fmt("%zu bundled scenarios run twice, %d artifacts compared byte for byte, %zu differ%s; %.1f s", names.size(),
              files, mismatched.size(), which.c_str(), since(t0))};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"lock invariance", lock_invariance},
      {"frequency algebra", frequency_algebra},
      {"error law", error_law},
      {"Raman-scan background", raman_background},
      {"PLL noise shaping", pll_shaping},
      {"Ramsey contrast", ramsey_ratio},
      {"oracle equivalence", oracle_equivalence},
      {"drift arithmetic", drift_arithmetic},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
