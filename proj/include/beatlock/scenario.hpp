#pragma once

// Scenario files: one JSON document per experiment, fully validated before
// anything runs. Every problem found is reported in a single ValidationError.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "beatlock/comb_model.hpp"
#include "beatlock/drift_noise.hpp"
#include "beatlock/errors.hpp"
#include "beatlock/lock_chain.hpp"
#include "beatlock/qubit_dynamics.hpp"
#include "beatlock/ramsey.hpp"

namespace beatlock::scenario {

using json = nlohmann::json;

struct TimeDomainCheck {
  double sample_rate = 0.0;
  double duration = 0.0;
  double rbw = 0.0;
};

struct SpectrumExperiment {
  double rbw = 110.0;
  std::optional<TimeDomainCheck> time_domain;
};

struct NoisePsd {
  double sample_rate = 1e6;
  double duration = 1.0;
  std::size_t segment_length = 8192;
};

struct LockDemoExperiment {
  double duration = 600.0;
  double dt = 1.0;
  std::vector<int> teeth;  // residual_at_tooth outputs
  std::optional<NoisePsd> noise_psd;
};

struct RamanScanExperiment {
  double start = 195e6;
  double stop = 215e6;
  double step = 100e3;
  double pulse_duration = 40e-6;
  int trials = 8;
  bool compare_modes = true;  // also run the direct-drive and noiseless scans

  std::vector<double> grid() const {
    std::vector<double> g;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= n; ++k) g.push_back(start + static_cast<double>(k) * step);
    return g;
  }
};

struct ErrorSweepExperiment {
  std::vector<double> alpha_db;
  double omega0 = 600e3;
  double total_time = 1e-3;
  int trials = 1000;
};

struct JitterCalibration {
  double target_tau = 3e-3;
  double lower = 1e-3;  // Hz/sqrt(Hz)
  double upper = 1.0;
  int trials = 400;
};

struct RamseyExperiment {
  ramsey::RamseyConfig config;
  std::optional<JitterCalibration> calibrate;
};

using Experiment =
    std::variant<SpectrumExperiment, LockDemoExperiment, RamanScanExperiment, ErrorSweepExperiment, RamseyExperiment>;

struct Scenario {
  std::string name;
  comb::CombSpec comb;
  noise::DriftProfile drift;
  noise::JitterProfile jitter;
  lock::LockConfig lock;
  qubit::QubitSpec qubit;
  Experiment experiment;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  json source;  // parsed document, for hashing and provenance
};

inline std::string experiment_type(const Experiment& e) {
  static constexpr const char* names[] = {"spectrum", "lock_demo", "raman_scan", "error_sweep", "ramsey"};
  return names[e.index()];
}

namespace detail {

// Walks one JSON object, recording missing or mistyped fields under a dotted path.
class Fields {
 public:
  Fields(const json* obj, std::string path, std::vector<std::string>& issues)
      : obj_(obj), path_(std::move(path)), issues_(&issues) {
    if (obj_ && !obj_->is_object()) {
      fail("", "expected an object");
      obj_ = nullptr;
    }
  }

  bool present() const { return obj_ != nullptr; }
  bool has(const char* key) const { return obj_ && obj_->contains(key); }

  Fields child(const char* key, bool required = true) const {
    if (!obj_ || !obj_->contains(key)) {
      if (required && obj_) fail(key, "missing required section");
      return Fields(nullptr, join(key), *issues_);
    }
    return Fields(&obj_->at(key), join(key), *issues_);
  }

  double number(const char* key, std::optional<double> fallback = std::nullopt) const {
    const json* v = get(key, !fallback.has_value());
    if (!v) return fallback.value_or(0.0);
    if (v->is_number()) return v->get<double>();
    fail(key, "expected a number");
    return fallback.value_or(0.0);
  }

  // Number that may also be null or "-inf" (disabled noise).
  double decibels(const char* key, std::optional<double> fallback = std::nullopt) const {
    const json* v = get(key, !fallback.has_value());
    if (!v) return fallback.value_or(0.0);
    if (v->is_number()) return v->get<double>();
    if (v->is_null() || (v->is_string() && (v->get<std::string>() == "-inf" || v->get<std::string>() == "off")))
      return -std::numeric_limits<double>::infinity();
    fail(key, "expected a number, null or \"-inf\"");
    return 0.0;
  }

  long long integer(const char* key, std::optional<long long> fallback = std::nullopt) const {
    const json* v = get(key, !fallback.has_value());
    if (!v) return fallback.value_or(0);
    if (v->is_number_integer()) return v->get<long long>();
    fail(key, "expected an integer");
    return fallback.value_or(0);
  }

  std::uint64_t unsigned_integer(const char* key) const {
    const json* v = get(key, true);
    if (!v) return 0;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<long long>() >= 0) return static_cast<std::uint64_t>(v->get<long long>());
    fail(key, "expected a non-negative integer");
    return 0;
  }

  bool boolean(const char* key, std::optional<bool> fallback = std::nullopt) const {
    const json* v = get(key, !fallback.has_value());
    if (!v) return fallback.value_or(false);
    if (v->is_boolean()) return v->get<bool>();
    fail(key, "expected true or false");
    return fallback.value_or(false);
  }

  std::string string(const char* key, std::optional<std::string> fallback = std::nullopt) const {
    const json* v = get(key, !fallback.has_value());
    if (!v) return fallback.value_or("");
    if (v->is_string()) return v->get<std::string>();
    fail(key, "expected a string");
    return fallback.value_or("");
  }

  std::vector<double> numbers(const char* key, bool required = true) const {
    std::vector<double> out;
    const json* v = get(key, required);
    if (!v) return out;
    if (!v->is_array()) {
      fail(key, "expected an array of numbers");
      return out;
    }
    for (const auto& e : *v) {
      if (!e.is_number()) {
        fail(key, "expected an array of numbers");
        return {};
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  const json* raw(const char* key) const { return obj_ && obj_->contains(key) ? &obj_->at(key) : nullptr; }

  void fail(const std::string& key, const std::string& msg) const { issues_->push_back(join(key) + ": " + msg); }
  void prefix_all(const std::vector<std::string>& found) const {
    for (const auto& f : found) issues_->push_back((path_.empty() ? "" : path_ + ": ") + f);
  }
  std::string join(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  const json* get(const char* key, bool required) const {
    if (!obj_) return nullptr;
    if (!obj_->contains(key)) {
      if (required) fail(key, "missing required field");
      return nullptr;
    }
    return &obj_->at(key);
  }

  const json* obj_;
  std::string path_;
  std::vector<std::string>* issues_;
};

inline noise::NoiseSpec read_noise(const Fields& f) {
  noise::NoiseSpec s;
  if (!f.present()) return s;
  s.alpha_db_per_hz = f.decibels("alpha_db_per_hz");
  const auto shape = f.string("shape", "flat");
  if (shape == "flat") {
    s.shape = noise::NoiseShape::flat;
  } else if (shape == "pll_shaped") {
    s.shape = noise::NoiseShape::pll_shaped;
    s.loop_bandwidth = f.number("loop_bandwidth_hz");
    s.floor_db_per_hz = f.decibels("floor_db_per_hz");
  } else {
    f.fail("shape", "unknown noise shape '" + shape + "' (expected flat or pll_shaped)");
  }
  return s;
}

inline bool filesystem_safe(const std::string& name) {
  if (name.empty() || name == "." || name == "..") return false;
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

inline Experiment read_experiment(const Fields& f) {
  const auto type = f.string("type");
  if (type == "spectrum") {
    SpectrumExperiment e;
    e.rbw = f.number("rbw_hz", 110.0);
    if (!(e.rbw > 0.0)) f.fail("rbw_hz", "must be positive");
    if (f.has("time_domain")) {
      auto td = f.child("time_domain");
      TimeDomainCheck c{td.number("sample_rate_hz"), td.number("duration_s"), td.number("rbw_hz")};
      if (!(c.sample_rate > 0.0)) td.fail("sample_rate_hz", "must be positive");
      if (!(c.duration > 0.0)) td.fail("duration_s", "must be positive");
      if (!(c.rbw > 0.0)) td.fail("rbw_hz", "must be positive");
      e.time_domain = c;
    }
    return e;
  }
  if (type == "lock_demo") {
    LockDemoExperiment e;
    e.duration = f.number("duration_s");
    e.dt = f.number("dt_s");
    if (!(e.dt > 0.0)) f.fail("dt_s", "must be positive");
    if (!(e.duration >= e.dt)) f.fail("duration_s", "must be >= dt_s");
    for (double m : f.numbers("residual_teeth", false)) {
      if (m < 1 || m != std::floor(m)) f.fail("residual_teeth", "tooth indices must be integers >= 1");
      e.teeth.push_back(static_cast<int>(m));
    }
    if (f.has("noise_psd")) {
      auto np = f.child("noise_psd");
      NoisePsd p;
      p.sample_rate = np.number("sample_rate_hz");
      p.duration = np.number("duration_s");
      const auto seg = np.integer("segment_length");
      if (!(p.sample_rate > 0.0)) np.fail("sample_rate_hz", "must be positive");
      if (seg < 16) np.fail("segment_length", "must be >= 16");
      p.segment_length = static_cast<std::size_t>(std::max<long long>(seg, 0));
      if (p.duration * p.sample_rate < static_cast<double>(p.segment_length))
        np.fail("duration_s", "shorter than one segment");
      e.noise_psd = p;
    }
    return e;
  }
  if (type == "raman_scan") {
    RamanScanExperiment e;
    e.start = f.number("nu_m2_start_hz");
    e.stop = f.number("nu_m2_stop_hz");
    e.step = f.number("nu_m2_step_hz");
    e.pulse_duration = f.number("pulse_duration_s");
    e.trials = static_cast<int>(f.integer("trials"));
    e.compare_modes = f.boolean("compare_modes", true);
    if (!(e.step > 0.0)) f.fail("nu_m2_step_hz", "must be positive");
    if (!(e.stop >= e.start)) f.fail("nu_m2_stop_hz", "must be >= nu_m2_start_hz");
    if (e.step > 0.0 && (e.stop - e.start) / e.step > 1e6) f.fail("nu_m2_step_hz", "grid too large");
    if (!(e.pulse_duration >= 0.0)) f.fail("pulse_duration_s", "must be >= 0");
    if (e.trials < 1) f.fail("trials", "must be >= 1");
    return e;
  }
  if (type == "error_sweep") {
    ErrorSweepExperiment e;
    e.alpha_db = f.numbers("alpha_db_per_hz");
    e.omega0 = f.number("omega0_hz");
    e.total_time = f.number("total_time_s");
    e.trials = static_cast<int>(f.integer("trials"));
    if (e.alpha_db.empty()) f.fail("alpha_db_per_hz", "grid must not be empty");
    if (!(e.omega0 > 0.0)) f.fail("omega0_hz", "must be positive");
    if (!(e.total_time > 0.0)) f.fail("total_time_s", "must be positive");
    if (e.trials < 100) f.fail("trials", "must be >= 100");
    return e;
  }
  if (type == "ramsey") {
    RamseyExperiment e;
    auto& c = e.config;
    c.delays = f.numbers("delays_s");
    c.trials_per_delay = static_cast<int>(f.integer("trials_per_delay"));
    c.lock_engaged = f.boolean("lock_engaged");
    c.phase_points = static_cast<int>(f.integer("phase_points", 8));
    c.trajectory_dt = f.number("trajectory_dt_s", 0.0);
    const auto analysis = f.string("analysis", "fit_exponential");
    if (analysis != "fit_exponential") f.fail("analysis", "only fit_exponential is supported");
    f.prefix_all(ramsey::validate(c));
    if (f.has("calibrate")) {
      auto cf = f.child("calibrate");
      JitterCalibration cal;
      cal.target_tau = cf.number("target_tau_s");
      const auto bounds = cf.numbers("bounds_hz_per_rt_hz");
      if (bounds.size() == 2) {
        cal.lower = bounds[0];
        cal.upper = bounds[1];
      } else {
        cf.fail("bounds_hz_per_rt_hz", "expected [lower, upper]");
      }
      cal.trials = static_cast<int>(cf.integer("trials", 400));
      if (!(cal.target_tau > 0.0)) cf.fail("target_tau_s", "must be positive");
      if (!(cal.lower > 0.0 && cal.upper > cal.lower)) cf.fail("bounds_hz_per_rt_hz", "need 0 < lower < upper");
      if (cal.trials < 1) cf.fail("trials", "must be >= 1");
      e.calibrate = cal;
    }
    return e;
  }
  if (!type.empty() || f.has("type"))
    f.fail("type", "unknown experiment '" + type + "' (expected spectrum, lock_demo, raman_scan, error_sweep or ramsey)");
  return SpectrumExperiment{};
}

// Preconditions that span sections (experiment vs comb/lock/qubit/jitter).
inline void cross_validate(const Scenario& s, std::vector<std::string>& issues) {
  const double nyquist_dt = 1.0 / (2.0 * s.jitter.bandwidth);
  if (const auto* e = std::get_if<SpectrumExperiment>(&s.experiment)) {
    if (s.comb.nu_m1 == s.comb.nu_m2)
      issues.push_back("comb: nu_m1_hz equals nu_m2_hz, both-arm spectrum is degenerate");
    if (e->time_domain) {
      const auto& td = *e->time_domain;
      const double f_top = s.comb.m_max * s.comb.nu_rep0 + comb::delta_nu_m(s.comb);
      if (!(td.sample_rate > 2.0 * f_top))
        issues.push_back("experiment.time_domain.sample_rate_hz: must exceed " + std::to_string(2.0 * f_top));
      if (td.duration * td.sample_rate > static_cast<double>(comb::SynthesisOptions{}.max_samples))
        issues.push_back("experiment.time_domain: sample budget exceeded");
      if (td.duration < 1.0 / td.rbw) issues.push_back("experiment.time_domain.duration_s: must be >= 1/rbw_hz");
    }
  } else if (const auto* e = std::get_if<LockDemoExperiment>(&s.experiment)) {
    if (s.jitter.white_freq_density > 0.0 && e->dt > nyquist_dt * (1.0 + 1e-12))
      issues.push_back("experiment.dt_s: aliases the jitter bandwidth (need dt <= 1/(2*jitter.bandwidth_hz))");
    if (e->noise_psd) {
      if (const auto* p = std::get_if<lock::PllMode>(&s.lock.mode))
        if (!(e->noise_psd->sample_rate > 2.0 * p->loop_bandwidth))
          issues.push_back("experiment.noise_psd.sample_rate_hz: must exceed twice the loop bandwidth");
      if (s.lock.error_noise.shape == noise::NoiseShape::pll_shaped &&
          !(e->noise_psd->sample_rate > 2.0 * s.lock.error_noise.loop_bandwidth))
        issues.push_back("experiment.noise_psd.sample_rate_hz: must exceed twice the error-noise loop bandwidth");
    }
  } else if (const auto* e = std::get_if<RamanScanExperiment>(&s.experiment)) {
    if (e->start <= 0.0) issues.push_back("experiment.nu_m2_start_hz: must be positive");
  } else if (const auto* e = std::get_if<RamseyExperiment>(&s.experiment)) {
    if (!(s.qubit.omega0 > 0.0)) issues.push_back("qubit.omega0_hz: must be positive for a Ramsey experiment");
    double min_pos = std::numeric_limits<double>::infinity();
    for (double d : e->config.delays)
      if (d > 0.0) min_pos = std::min(min_pos, d);
    if (s.qubit.omega0 > 0.0 && std::isfinite(min_pos) && !(1.0 / (4.0 * s.qubit.omega0) <= 0.1 * min_pos))
      issues.push_back("experiment.delays_s: pi/2 pulse must be much shorter than the shortest delay");
    const double dt = e->config.trajectory_dt > 0.0 ? e->config.trajectory_dt : nyquist_dt;
    if (dt > nyquist_dt * (1.0 + 1e-12)) issues.push_back("experiment.trajectory_dt_s: aliases the jitter bandwidth");
    if (!e->config.delays.empty() && (e->config.delays.back() / dt) > static_cast<double>(e->config.max_samples))
      issues.push_back("experiment.delays_s: trajectory sample budget exceeded");
  }
}

inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Builds a Scenario from a parsed document. Throws ValidationError listing
/// every issue found.
inline Scenario from_json(const json& doc) {
  std::vector<std::string> issues;
  detail::Fields root(&doc, "", issues);
  Scenario s;
  s.source = doc;

  s.name = root.string("name");
  if (root.has("name") && !detail::filesystem_safe(s.name))
    root.fail("name", "must be nonempty and use only letters, digits, '_', '-', '.'");
  s.seed = root.unsigned_integer("seed");
  s.output_dir = root.string("output_dir", "out/" + s.name);

  {
    const auto before = issues.size();
    auto c = root.child("comb");
    s.comb.nu_rep0 = c.number("nu_rep0_hz");
    s.comb.m_max = static_cast<int>(c.integer("m_max"));
    s.comb.power_arm1 = c.number("power_arm1");
    s.comb.power_arm2 = c.number("power_arm2");
    s.comb.nu_m1 = c.number("nu_m1_hz");
    s.comb.nu_m2 = c.number("nu_m2_hz");
    s.comb.pulse_sigma = c.number("pulse_sigma_s", 0.0);
    if (c.present() && issues.size() == before) c.prefix_all(comb::validate(s.comb));
  }
  {
    const auto before = issues.size();
    auto d = root.child("drift");
    s.drift.slope = d.number("slope_hz_per_s");
    s.drift.temp_amplitude = d.number("temp_amplitude_hz", 0.0);
    s.drift.temp_period = d.number("temp_period_s", 0.0);
    s.drift.random_walk_density = d.number("random_walk_density_hz_per_rt_s", 0.0);
    if (d.present() && issues.size() == before) d.prefix_all(noise::validate(s.drift));
  }
  {
    const auto before = issues.size();
    auto j = root.child("jitter");
    s.jitter.white_freq_density = j.number("white_freq_density_hz_per_rt_hz");
    s.jitter.bandwidth = j.number("bandwidth_hz");
    if (j.present() && issues.size() == before) j.prefix_all(noise::validate(s.jitter));
  }
  {
    const auto before = issues.size();
    auto l = root.child("lock");
    s.lock.n = static_cast<int>(l.integer("n"));
    s.lock.nu_lo = l.number("nu_lo_hz");
    s.lock.bpf_center = l.number("bpf_center_hz", 0.0);
    s.lock.bpf_width = l.number("bpf_width_hz", 0.0);
    s.lock.lpf_cutoff = l.number("lpf_cutoff_hz");
    auto m = l.child("mode");
    const auto type = m.string("type");
    if (type == "direct") {
      s.lock.mode = lock::DirectMode{};
    } else if (type == "pll") {
      s.lock.mode = lock::PllMode{m.number("loop_bandwidth_hz"), m.decibels("oscillator_floor_db_per_hz")};
    } else if (m.present() && m.has("type")) {
      m.fail("type", "unknown lock mode '" + type + "' (expected direct or pll)");
    }
    s.lock.error_noise = detail::read_noise(l.child("error_noise"));
    if (l.present() && issues.size() == before && s.comb.nu_rep0 > 0.0) l.prefix_all(lock::validate(s.lock, s.comb.nu_rep0));
  }
  {
    const auto before = issues.size();
    auto q = root.child("qubit");
    s.qubit.nu_ab = q.number("nu_ab_hz");
    s.qubit.omega0 = q.number("omega0_hz");
    const auto init = q.string("init_state", "a");
    if (init == "a") {
      s.qubit.init_state = qubit::Level::a;
    } else if (init == "b") {
      s.qubit.init_state = qubit::Level::b;
    } else {
      q.fail("init_state", "expected \"a\" or \"b\"");
    }
    if (const json* sb = q.raw("sidebands")) {
      if (!sb->is_array()) {
        q.fail("sidebands", "expected an array");
      } else {
        for (std::size_t i = 0; i < sb->size(); ++i) {
          detail::Fields e(&(*sb)[i], q.join("sidebands[" + std::to_string(i) + "]"), issues);
          s.qubit.sidebands.push_back({e.number("offset_hz"), e.number("strength")});
        }
      }
    }
    if (q.present() && issues.size() == before) q.prefix_all(qubit::validate(s.qubit));
  }
  s.experiment = detail::read_experiment(root.child("experiment"));
  if (issues.empty()) detail::cross_validate(s, issues);

  if (!issues.empty()) throw ValidationError(std::move(issues));
  return s;
}

inline Scenario parse(const std::string& text, const std::string& source_name = "<scenario>") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(source_name, line, col, e.what());
  }
  return from_json(doc);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

inline std::filesystem::path bundled_scenario_dir() {
  if (const char* env = std::getenv("BEATLOCK_SCENARIO_DIR")) return env;
#ifdef BEATLOCK_SCENARIO_DIR
  return BEATLOCK_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

/// Bundled scenario names (file stems), sorted.
inline std::vector<std::string> list_bundled() {
  std::vector<std::string> names;
  const auto dir = bundled_scenario_dir();
  if (!std::filesystem::is_directory(dir)) return names;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".scenario") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

/// A path to an existing file, or the name of a bundled scenario.
inline std::filesystem::path resolve(const std::string& arg) {
  if (std::filesystem::exists(arg)) return arg;
  const auto bundled = bundled_scenario_dir() / (arg + ".scenario");
  if (std::filesystem::exists(bundled)) return bundled;
  return arg;
}

}  // namespace beatlock::scenario
