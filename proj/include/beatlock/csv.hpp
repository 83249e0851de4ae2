#pragma once

// CSV exporters. Numbers use the shortest round-trip representation so
// identical inputs give byte-identical files.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "beatlock/comb_model.hpp"
#include "beatlock/drift_noise.hpp"
#include "beatlock/errors.hpp"
#include "beatlock/qubit_dynamics.hpp"
#include "beatlock/ramsey.hpp"

namespace beatlock::csv {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
  }
  Writer& comment(std::string_view text) {
    out_ << "# " << text << '\n';
    return *this;
  }
  Writer& header(std::string_view cols) {
    out_ << cols << '\n';
    return *this;
  }
  template <typename... Ts>
  Writer& row(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
    return *this;
  }
  ~Writer() { out_.flush(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }

  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_spectrum(const std::filesystem::path& p, const comb::RfSpectrum& s) {
  Writer w(p);
  w.comment("rbw_hz=" + num(s.rbw) + " noise_floor_db_per_hz=" + num(s.noise_floor));
  w.header("freq_hz,power_db");
  for (const auto& l : s.lines) w.row(l.freq, l.power);
}

inline void write_trajectory(const std::filesystem::path& p, const noise::RepRateTrajectory& t) {
  Writer w(p);
  w.header("t_s,nu_rep_hz");
  for (std::size_t k = 0; k < t.t.size(); ++k) w.row(t.t[k], t.nu_rep[k]);
}

inline void write_series(const std::filesystem::path& p, std::span<const double> t, std::span<const double> f) {
  Writer w(p);
  w.header("t_s,freq_hz");
  for (std::size_t k = 0; k < t.size(); ++k) w.row(t[k], f[k]);
}

inline void write_scan(const std::filesystem::path& p, const std::vector<qubit::ScanPoint>& scan) {
  Writer w(p);
  w.header("nu_m2_hz,p_b,stderr");
  for (const auto& s : scan) w.row(s.nu_m2, s.p_b, s.std_error);
}

inline void write_evolution(const std::filesystem::path& p, const qubit::EvolutionResult& r) {
  Writer w(p);
  w.header("t_s,p_b");
  for (const auto& [t, pb] : r.trajectory) w.row(t, pb);
}

inline void write_ramsey(const std::filesystem::path& p, const ramsey::CoherenceResult& r) {
  Writer w(p);
  w.header("delay_s,contrast,stderr");
  for (std::size_t i = 0; i < r.delays.size(); ++i) w.row(r.delays[i], r.contrast[i], r.std_error[i]);
}

}  // namespace beatlock::csv
