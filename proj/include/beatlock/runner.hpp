#pragma once

// Dispatches a validated Scenario to its experiment and writes the CSV/JSON
// artifacts plus a run manifest into the scenario's output directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "beatlock/comb_model.hpp"
#include "beatlock/csv.hpp"
#include "beatlock/drift_noise.hpp"
#include "beatlock/lock_chain.hpp"
#include "beatlock/qubit_dynamics.hpp"
#include "beatlock/ramsey.hpp"
#include "beatlock/scenario.hpp"
#include "beatlock/seed.hpp"
#include "beatlock/spectral.hpp"

#ifndef BEATLOCK_VERSION
#define BEATLOCK_VERSION "0.0.0"
#endif

namespace beatlock::runner {

namespace fs = std::filesystem;
using nlohmann::json;
using scenario::Scenario;

struct RunManifest {
  std::string scenario_name;
  std::string scenario_hash;  // FNV-1a of the canonical scenario JSON
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;  // relative to output_dir
  json versions;
  double wall_clock_s = 0.0;
  bool ok = true;
  std::string error;
};

/// Content hash of the scenario with the effective seed; the output location
/// does not enter.
inline std::string scenario_hash(const Scenario& s) {
  json canon = s.source;
  canon["seed"] = s.seed;
  canon.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canon.dump())));
  return buf;
}

inline json versions() {
  return {{"beatlock", BEATLOCK_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                        std::to_string(BOOST_VERSION % 100)}};
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open " + p.string() + " for writing");
  out << j.dump(2) << '\n';
}

namespace detail {

class Artifacts {
 public:
  Artifacts(fs::path dir, RunManifest& m) : dir_(std::move(dir)), m_(&m) {}
  fs::path operator()(const std::string& name) {
    m_->artifacts.push_back(name);
    return dir_ / name;
  }

 private:
  fs::path dir_;
  RunManifest* m_;
};

inline void run(const Scenario& s, const scenario::SpectrumExperiment& e, Artifacts& out) {
  const comb::LineSpectrumOptions opt{100e9, e.rbw};
  csv::write_spectrum(out("spectrum_arm1.csv"), comb::rf_line_spectrum(s.comb, true, false, opt));
  csv::write_spectrum(out("spectrum_arm2.csv"), comb::rf_line_spectrum(s.comb, false, true, opt));
  csv::write_spectrum(out("spectrum_both.csv"), comb::rf_line_spectrum(s.comb, true, true, opt));
  if (e.time_domain) {
    const auto& td = *e.time_domain;
    const auto samples = comb::synthesize_time_domain(s.comb, td.duration, td.sample_rate, derive_seed(s.seed, "comb_model"));
    csv::write_spectrum(out("periodogram_both.csv"), comb::periodogram(samples, td.sample_rate, td.rbw));
  }
}

inline void write_psd(const fs::path& p, const spectral::WelchResult& w) {
  csv::Writer out(p);
  out.comment("rbw_hz=" + csv::num(w.bin_width()) + " segments=" + std::to_string(w.segments));
  out.header("freq_hz,psd_db_per_hz");
  for (std::size_t k = 1; k < w.freq.size(); ++k) out.row(w.freq[k], spectral::to_db(w.density(k)));
}

inline void run(const Scenario& s, const scenario::LockDemoExperiment& e, Artifacts& out) {
  const auto traj = noise::generate_trajectory(s.comb.nu_rep0, s.drift, s.jitter, e.duration, e.dt,
                                               derive_seed(s.seed, "drift_noise"));
  csv::write_trajectory(out("trajectory.csv"), traj);
  csv::write_series(out("tooth_n.csv"), traj.t, noise::tooth_frequency(traj, s.lock.n));
  const auto drive = lock::error_signal(traj, s.lock);
  csv::write_series(out("drive_tone.csv"), drive.t, drive.freq);
  const auto locked = lock::effective_beat(traj, drive, s.comb.nu_m2, s.lock.n);
  csv::write_series(out("beat_locked.csv"), locked.t, locked.freq);
  const auto frozen = lock::freeze(drive);
  const auto unlocked = lock::effective_beat(traj, frozen, s.comb.nu_m2, s.lock.n);
  csv::write_series(out("beat_unlocked.csv"), unlocked.t, unlocked.freq);
  for (int m : e.teeth) {
    csv::write_series(out("residual_m" + std::to_string(m) + ".csv"), traj.t,
                      lock::residual_at_tooth(traj, drive, s.comb.nu_m2, m, s.lock.n));
  }
  if (e.noise_psd) {
    const auto& np = *e.noise_psd;
    auto direct_cfg = s.lock;
    direct_cfg.mode = lock::DirectMode{};
    auto pll_cfg = s.lock;
    if (!std::holds_alternative<lock::PllMode>(pll_cfg.mode)) pll_cfg.mode = lock::PllMode{};
    const auto direct_noise = lock::error_signal(traj, direct_cfg).noise;
    const auto pll_noise = lock::error_signal(traj, pll_cfg).noise;
    const auto xd = noise::sample_fractional_noise(direct_noise, np.duration, np.sample_rate,
                                                   derive_seed(s.seed, "lock_chain.direct"));
    const auto xp = noise::sample_fractional_noise(pll_noise, np.duration, np.sample_rate,
                                                   derive_seed(s.seed, "lock_chain.pll"));
    write_psd(out("noise_psd_direct.csv"), spectral::welch(xd.samples, np.sample_rate, np.segment_length));
    write_psd(out("noise_psd_pll.csv"), spectral::welch(xp.samples, np.sample_rate, np.segment_length));
  }
}

inline void run(const Scenario& s, const scenario::RamanScanExperiment& e, Artifacts& out) {
  const double dt = std::min(1.0 / (2.0 * s.jitter.bandwidth), std::max(e.pulse_duration, 1e-9) / 16.0);
  const auto traj = noise::generate_trajectory(s.comb.nu_rep0, s.drift, s.jitter, std::max(e.pulse_duration, dt), dt,
                                               derive_seed(s.seed, "drift_noise"));
  const auto grid = e.grid();
  const std::uint64_t scan_seed = derive_seed(s.seed, "qubit_dynamics");
  const auto drive = lock::error_signal(traj, s.lock);
  csv::write_scan(out("raman_scan.csv"),
                  qubit::raman_scan(s.qubit, traj, drive, s.lock.n, grid, e.pulse_duration, e.trials, scan_seed));
  if (e.compare_modes) {
    auto direct_cfg = s.lock;
    direct_cfg.mode = lock::DirectMode{};
    csv::write_scan(out("raman_scan_direct.csv"),
                    qubit::raman_scan(s.qubit, traj, lock::error_signal(traj, direct_cfg), s.lock.n, grid,
                                      e.pulse_duration, e.trials, scan_seed));
    auto quiet = drive;
    quiet.noise = noise::NoiseSpec::off();
    csv::write_scan(out("raman_scan_noiseless.csv"),
                    qubit::raman_scan(s.qubit, traj, quiet, s.lock.n, grid, e.pulse_duration, 1, scan_seed));
  }
}

inline void run(const Scenario& s, const scenario::ErrorSweepExperiment& e, Artifacts& out) {
  csv::Writer w(out("error_sweep.csv"));
  w.comment("omega0_hz=" + csv::num(e.omega0) + " total_time_s=" + csv::num(e.total_time) +
            " trials=" + std::to_string(e.trials));
  w.header("alpha_db_per_hz,epsilon,stderr,formula");
  for (std::size_t i = 0; i < e.alpha_db.size(); ++i) {
    const auto est = qubit::error_probability_mc(e.alpha_db[i], e.omega0, e.total_time, e.trials,
                                                 derive_seed(s.seed, "qubit_dynamics.error_sweep", i));
    w.row(e.alpha_db[i], est.epsilon, est.std_error, est.formula);
  }
}

inline void run(const Scenario& s, const scenario::RamseyExperiment& e, Artifacts& out) {
  auto jitter = s.jitter;
  json summary;
  if (e.calibrate) {
    const auto& cal = *e.calibrate;
    ramsey::CalibrationSetup setup = ramsey::default_calibration_setup(s.lock.n, cal.target_tau);
    setup.qubit = s.qubit;
    setup.comb = s.comb;
    setup.lock = s.lock;
    setup.drift = s.drift;
    setup.jitter_bandwidth = s.jitter.bandwidth;
    setup.ramsey.trials_per_delay = cal.trials;
    setup.ramsey.trajectory_dt = e.config.trajectory_dt;
    const auto res = ramsey::calibrate_jitter(cal.target_tau, setup, {cal.lower, cal.upper},
                                              derive_seed(s.seed, "ramsey.calibrate"));
    jitter = res.jitter;
    summary["calibration"] = {{"target_tau_s", cal.target_tau},
                              {"achieved_unlocked_tau_s", res.tau},
                              {"white_freq_density_hz_per_rt_hz", res.jitter.white_freq_density},
                              {"bandwidth_hz", res.jitter.bandwidth},
                              {"iterations", res.iterations}};
  }
  const auto r = ramsey::run_ramsey(s.qubit, s.comb, s.lock, s.drift, jitter, e.config, derive_seed(s.seed, "ramsey"));
  csv::write_ramsey(out("ramsey.csv"), r);
  summary["tau_s"] = number_or_null(r.tau);
  summary["fit_error_s"] = number_or_null(r.fit_error);
  summary["lock_engaged"] = r.lock_engaged;
  summary["decay_resolved"] = r.decay_resolved;
  summary["fit_converged"] = r.fit_converged;
  summary["tau_lower_bound_s"] = number_or_null(r.tau_lower_bound);
  summary["white_freq_density_hz_per_rt_hz"] = jitter.white_freq_density;
  write_json(out("ramsey_summary.json"), summary);
}

}  // namespace detail

inline json to_json(const RunManifest& m) {
  json j{{"scenario", m.scenario_name},   {"scenario_hash", m.scenario_hash}, {"seed", m.seed},
         {"artifacts", m.artifacts},       {"versions", m.versions},          {"wall_clock_s", m.wall_clock_s},
         {"status", m.ok ? "ok" : "error"}};
  if (!m.ok) j["error"] = m.error;
  return j;
}

/// Runs the scenario and writes manifest.json next to the artifacts. On
/// failure the manifest records the partial artifact list, then the error is
/// rethrown.
inline RunManifest run_scenario(const Scenario& s) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.scenario_name = s.name;
  m.scenario_hash = scenario_hash(s);
  m.seed = s.seed;
  m.versions = versions();
  fs::create_directories(s.output_dir);
  detail::Artifacts out(s.output_dir, m);
  auto finish = [&] {
    m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(s.output_dir / "manifest.json", to_json(m));
  };
  try {
    std::visit([&](const auto& e) { detail::run(s, e, out); }, s.experiment);
  } catch (const std::exception& ex) {
    m.ok = false;
    m.error = ex.what();
    finish();
    throw;
  }
  for (const auto& a : m.artifacts) {
    const auto p = s.output_dir / a;
    if (!fs::exists(p) || fs::file_size(p) == 0) {
      m.ok = false;
      m.error = "artifact " + a + " missing or empty";
    }
  }
  finish();
  if (!m.ok) throw Error(m.error);
  return m;
}

}  // namespace beatlock::runner
