#pragma once

// Photodiode rf spectrum of two recombined, AOM-shifted copies of one
// mode-locked pulse train: analytic line list, a time-domain synthesis used
// as its oracle, and a flat-top Welch periodogram that turns samples back
// into a line list.

#include <algorithm>
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

namespace beatlock::comb {

struct CombSpec {
  double nu_rep0 = 80e6;     // Hz
  int m_max = 8;             // highest rf tooth index modeled
  double power_arm1 = 1.0;   // relative optical power
  double power_arm2 = 1.0;
  double nu_m1 = 210e6;      // AOM shift, arm 1 (Hz)
  double nu_m2 = 200e6;      // AOM shift, arm 2 (Hz)
  double pulse_sigma = 0.0;  // rms width of the intensity pulse (s); 0 selects the default
};

struct SpectralLine {
  double freq = 0.0;   // Hz
  double power = 0.0;  // dB relative to the strongest line
};

struct RfSpectrum {
  std::vector<SpectralLine> lines;  // ascending in freq
  double noise_floor = -std::numeric_limits<double>::infinity();  // dB/Hz rel. strongest line
  double rbw = 0.0;                                               // Hz
};

inline double delta_nu_m(const CombSpec& s) { return std::abs(s.nu_m1 - s.nu_m2); }

inline std::vector<std::string> validate(const CombSpec& s) {
  std::vector<std::string> issues;
  if (!(s.nu_rep0 > 0.0) || !std::isfinite(s.nu_rep0)) issues.push_back("nu_rep0 must be positive");
  if (s.m_max < 1) issues.push_back("m_max must be >= 1");
  if (!(s.power_arm1 >= 0.0)) issues.push_back("power_arm1 must be >= 0");
  if (!(s.power_arm2 >= 0.0)) issues.push_back("power_arm2 must be >= 0");
  if (!std::isfinite(s.nu_m1) || !std::isfinite(s.nu_m2)) issues.push_back("AOM shifts must be finite");
  if (s.nu_rep0 > 0.0 && !(delta_nu_m(s) < s.nu_rep0 / 2.0))
    issues.push_back("|nu_m1 - nu_m2| must be below nu_rep0/2");
  if (s.pulse_sigma < 0.0) issues.push_back("pulse_sigma must be >= 0");
  return issues;
}

inline void require_valid(const CombSpec& s) {
  if (auto issues = validate(s); !issues.empty()) throw ValidationError(std::move(issues));
}

/// Intensity-pulse rms width. The default puts tooth m_max 10 dB below DC, so
/// every modeled tooth carries appreciable power while harmonics far above
/// m_max die off fast enough not to alias back into a reasonably sampled band.
inline double pulse_sigma(const CombSpec& s) {
  if (s.pulse_sigma > 0.0) return s.pulse_sigma;
  const double x = std::sqrt(std::log(10.0));  // (2 pi m nu sigma)^2 / 2 = ln(10)/2
  return x / (2.0 * std::numbers::pi * s.m_max * s.nu_rep0);
}

/// Relative Fourier amplitude of harmonic m of the periodic Gaussian
/// intensity train (1 at DC).
inline double harmonic_weight(const CombSpec& s, int m) {
  const double a = 2.0 * std::numbers::pi * m * s.nu_rep0 * pulse_sigma(s);
  return std::exp(-0.5 * a * a);
}

struct LineSpectrumOptions {
  double max_frequency = 100e9;  // Hz
  double rbw = 110.0;            // Hz, lines closer than this are merged
};

namespace detail {

struct RawLine {
  double freq;
  double amplitude;
};

inline RfSpectrum finish_lines(std::vector<RawLine> raw, double rbw) {
  std::sort(raw.begin(), raw.end(), [](const RawLine& a, const RawLine& b) { return a.freq < b.freq; });
  // Merge unresolved lines incoherently, keeping the stronger line's position.
  std::vector<RawLine> merged;
  for (const auto& l : raw) {
    if (!merged.empty() && l.freq - merged.back().freq < rbw) {
      auto& m = merged.back();
      if (l.amplitude > m.amplitude) m.freq = l.freq;
      m.amplitude = std::sqrt(m.amplitude * m.amplitude + l.amplitude * l.amplitude);
    } else {
      merged.push_back(l);
    }
  }
  double peak = 0.0;
  for (const auto& l : merged) peak = std::max(peak, l.amplitude);
  RfSpectrum out;
  out.rbw = rbw;
  for (const auto& l : merged) {
    if (l.amplitude <= 0.0) continue;
    out.lines.push_back({l.freq, 20.0 * std::log10(l.amplitude / peak)});
  }
  return out;
}

}  // namespace detail

/// Lines at m*nu_rep0 (m = 1..m_max) and, with both arms, the interference
/// sidebands at m*nu_rep0 +- |nu_m1 - nu_m2|. The DC term and its own
/// sideband at |nu_m1 - nu_m2| are not part of the model.
inline RfSpectrum rf_line_spectrum(const CombSpec& spec, bool include_arm1, bool include_arm2,
                                   const LineSpectrumOptions& opt = {}) {
  require_valid(spec);
  if (!include_arm1 && !include_arm2) throw InvalidArgument("rf_line_spectrum: no arm included");
  if (spec.m_max * spec.nu_rep0 >= opt.max_frequency)
    throw InvalidArgument("rf_line_spectrum: m_max * nu_rep0 exceeds the configured max frequency");
  const bool both = include_arm1 && include_arm2;
  const double dnu = delta_nu_m(spec);
  if (both && dnu == 0.0)
    throw DegenerateSpectrum("rf_line_spectrum: nu_m1 == nu_m2 with both arms; perturb the AOM shifts");

  const double p1 = include_arm1 ? spec.power_arm1 : 0.0;
  const double p2 = include_arm2 ? spec.power_arm2 : 0.0;
  if (p1 + p2 <= 0.0) throw InvalidArgument("rf_line_spectrum: included arms carry no power");

  std::vector<detail::RawLine> raw;
  for (int m = 1; m <= spec.m_max; ++m) {
    const double w = harmonic_weight(spec, m);
    const double f = m * spec.nu_rep0;
    raw.push_back({f, (p1 + p2) * w});
    if (both) {
      const double side = std::sqrt(p1 * p2) * w;
      raw.push_back({f - dnu, side});
      raw.push_back({f + dnu, side});
    }
  }
  return detail::finish_lines(std::move(raw), opt.rbw);
}

struct SynthesisOptions {
  bool include_arm1 = true;
  bool include_arm2 = true;
  std::size_t max_samples = std::size_t{1} << 24;
};

/// Photodiode intensity |E1(t) + E2(t)|^2 for two copies of one Gaussian
/// pulse train, each carrying its AOM phase ramp. The seed picks the pulse
/// timing offset and the relative optical phase of the arms.
inline std::vector<double> synthesize_time_domain(const CombSpec& spec, double duration, double sample_rate,
                                                  std::uint64_t seed, const SynthesisOptions& opt = {}) {
  require_valid(spec);
  if (!(duration >= 0.0)) throw InvalidArgument("synthesize_time_domain: duration must be >= 0");
  const double f_top = spec.m_max * spec.nu_rep0 + delta_nu_m(spec);
  if (!(sample_rate > 2.0 * f_top))
    throw AliasingError("synthesize_time_domain: sample rate must exceed 2*(m_max*nu_rep0 + |dnu_M|) = " +
                        std::to_string(2.0 * f_top) + " Hz");
  const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  if (n > opt.max_samples) throw SampleBudgetExceeded(n, opt.max_samples);
  std::vector<double> out(n);
  if (n == 0) return out;

  Rng rng(derive_seed(seed, "comb.synthesize"));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double t_rep = 1.0 / spec.nu_rep0;
  const double t0 = uni(rng) * t_rep;
  const double phi = 2.0 * std::numbers::pi * uni(rng);

  const double sigma = pulse_sigma(spec);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const long reach = static_cast<long>(std::ceil(10.0 * sigma / t_rep)) + 1;
  const double a1 = opt.include_arm1 ? std::sqrt(spec.power_arm1) : 0.0;
  const double a2 = opt.include_arm2 ? std::sqrt(spec.power_arm2) : 0.0;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double u = (t - t0) / t_rep;
    const long j0 = static_cast<long>(std::floor(u));
    double train = 0.0;
    for (long j = j0 - reach; j <= j0 + reach; ++j) {
      const double dt = t - t0 - static_cast<double>(j) * t_rep;
      train += std::exp(-dt * dt * inv2s2);
    }
    const double env = std::sqrt(train);
    const std::complex<double> e1 = a1 * env * std::polar(1.0, two_pi * spec.nu_m1 * t);
    const std::complex<double> e2 = a2 * env * std::polar(1.0, two_pi * spec.nu_m2 * t + phi);
    out[i] = std::norm(e1 + e2);
  }
  return out;
}

struct PeriodogramOptions {
  double dynamic_range_db = 80.0;  // ignore peaks further below the strongest line
  double min_snr_db = 20.0;        // peak must clear the median bin by this much
  std::size_t dc_guard_bins = 6;   // bins at the bottom of the band excluded as DC
  std::size_t line_guard_bins = 6; // flat-top main lobe half width (+1)
};

/// Welch-averaged, flat-top-windowed spectrum reduced to a line list.
/// Segment length is ceil(sample_rate / rbw), so the reported rbw is the bin
/// spacing. Lines closer than line_guard_bins bins are not resolved.
inline RfSpectrum periodogram(std::span<const double> samples, double sample_rate, double rbw,
                              const PeriodogramOptions& opt = {}) {
  if (!(sample_rate > 0.0) || !(rbw > 0.0)) throw InvalidArgument("periodogram: rates must be positive");
  const auto seg = static_cast<std::size_t>(std::ceil(sample_rate / rbw - 1e-9));
  if (samples.size() < seg || seg < 4 * opt.line_guard_bins)
    throw InsufficientSamples(static_cast<double>(std::max(seg, 4 * opt.line_guard_bins)) / sample_rate);

  const auto w = spectral::welch(samples, sample_rate, seg, spectral::Window::flat_top);
  const std::size_t bins = w.power.size();
  std::vector<double> tone(bins);
  for (std::size_t k = 0; k < bins; ++k) tone[k] = w.tone_power(k);

  std::vector<double> sorted(tone.begin() + std::min(opt.dc_guard_bins, bins), tone.end());
  double median = 0.0;
  if (!sorted.empty()) {
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    median = sorted[sorted.size() / 2];
  }
  double strongest = 0.0;
  for (std::size_t k = opt.dc_guard_bins; k < bins; ++k) strongest = std::max(strongest, tone[k]);

  const double range_cut = strongest * spectral::from_db(-opt.dynamic_range_db);
  const double snr_cut = median * spectral::from_db(opt.min_snr_db);
  std::vector<std::size_t> candidates;
  for (std::size_t k = std::max<std::size_t>(opt.dc_guard_bins, 2); k + 2 < bins; ++k) {
    const double p = tone[k];
    if (!(p > range_cut) || !(p > snr_cut) || p <= 0.0) continue;
    if (p >= tone[k - 1] && p > tone[k + 1] && p >= tone[k - 2] && p > tone[k + 2]) candidates.push_back(k);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) { return tone[a] > tone[b]; });
  std::vector<std::size_t> accepted;
  for (auto k : candidates) {
    bool clear = true;
    for (auto a : accepted)
      if ((k > a ? k - a : a - k) < opt.line_guard_bins) clear = false;
    if (clear) accepted.push_back(k);
  }
  std::sort(accepted.begin(), accepted.end());

  const double df = w.bin_width();
  RfSpectrum out;
  out.rbw = df;
  for (auto k : accepted) {
    // Parabolic refinement on log power, clamped to half a bin.
    const double l = spectral::to_db(tone[k - 1]), c = spectral::to_db(tone[k]), r = spectral::to_db(tone[k + 1]);
    double shift = 0.0;
    const double denom = l - 2.0 * c + r;
    if (std::isfinite(denom) && denom < 0.0) shift = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
    out.lines.push_back({(static_cast<double>(k) + shift) * df, spectral::to_db(tone[k] / strongest)});
  }

  std::vector<bool> masked(bins, false);
  for (std::size_t k = 0; k < std::min(opt.dc_guard_bins, bins); ++k) masked[k] = true;
  for (auto k : accepted)
    for (std::size_t j = (k > opt.line_guard_bins ? k - opt.line_guard_bins : 0);
         j <= std::min(bins - 1, k + opt.line_guard_bins); ++j)
      masked[j] = true;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < bins; ++k) {
    if (masked[k]) continue;
    sum += w.density(k);
    ++count;
  }
  const double floor_density = count ? sum / static_cast<double>(count) : 0.0;
  out.noise_floor = accepted.empty() ? spectral::to_db(floor_density)
                                     : spectral::to_db(floor_density / strongest);
  return out;
}

}  // namespace beatlock::comb
