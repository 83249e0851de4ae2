#pragma once

// FFT plumbing, spectral windows, Welch averaging and Gaussian noise
// synthesis for a prescribed one-sided PSD.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "beatlock/errors.hpp"
#include "beatlock/seed.hpp"

namespace beatlock::spectral {

using cplx = std::complex<double>;

/// Smallest integer >= n whose only prime factors are 2, 3 and 5.
inline std::size_t next_fast_len(std::size_t n) {
  if (n <= 1) return 1;
  std::size_t best = SIZE_MAX;
  for (std::size_t p5 = 1; p5 < 2 * n; p5 *= 5) {
    for (std::size_t p35 = p5; p35 < 2 * n; p35 *= 3) {
      std::size_t v = p35;
      while (v < n) v *= 2;
      best = std::min(best, v);
    }
  }
  return best;
}

/// Half spectrum (n/2 + 1 bins) of a real sequence, unscaled.
inline std::vector<cplx> rfft(std::span<const double> x) {
  if (x.size() < 2) return std::vector<cplx>(x.begin(), x.end());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> in(x.begin(), x.end());
  std::vector<cplx> out;
  fft.fwd(out, in);
  return out;
}

/// Inverse of rfft for an n-point real sequence, scaled by 1/n.
inline std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t n) {
  if (n < 2) return std::vector<double>(n, spectrum.empty() ? 0.0 : spectrum.front().real());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cplx> in(spectrum.begin(), spectrum.end());
  std::vector<double> out;
  fft.inv(out, in, static_cast<Eigen::Index>(n));
  return out;
}

enum class Window { rectangular, hann, flat_top };

/// Periodic (DFT-even) window of length n.
inline std::vector<double> make_window(Window kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = two_pi * static_cast<double>(i) / static_cast<double>(n);
    switch (kind) {
      case Window::rectangular:
        break;
      case Window::hann:
        w[i] = 0.5 - 0.5 * std::cos(x);
        break;
      case Window::flat_top:
        // 5-term flat-top: < 0.01 dB scalloping, -93 dB sidelobes.
        w[i] = 0.21557895 - 0.41663158 * std::cos(x) + 0.277263158 * std::cos(2 * x) -
               0.083578947 * std::cos(3 * x) + 0.006947368 * std::cos(4 * x);
        break;
    }
  }
  return w;
}

struct WelchResult {
  std::vector<double> freq;   // Hz, bin centers
  std::vector<double> power;  // averaged |X_k|^2, unnormalized
  double sample_rate = 0.0;
  std::size_t segment_length = 0;
  std::size_t segments = 0;
  double window_sum = 0.0;     // sum w
  double window_sum_sq = 0.0;  // sum w^2

  double bin_width() const { return sample_rate / static_cast<double>(segment_length); }

  /// One-sided power spectral density (units^2 / Hz) of bin k.
  double density(std::size_t k) const {
    const double scale = (k == 0 || 2 * k == segment_length) ? 1.0 : 2.0;
    return scale * power[k] / (sample_rate * window_sum_sq);
  }

  /// Power of a pure tone centered on bin k (units^2), i.e. A^2/2 for A cos.
  double tone_power(std::size_t k) const {
    const double scale = (k == 0 || 2 * k == segment_length) ? 1.0 : 2.0;
    return scale * power[k] / (window_sum * window_sum);
  }
};

/// Welch average of windowed periodograms with 50 % overlap.
inline WelchResult welch(std::span<const double> x, double sample_rate, std::size_t segment_length,
                         Window window = Window::hann) {
  if (segment_length < 2) throw InvalidArgument("welch: segment length must be >= 2");
  if (!(sample_rate > 0.0)) throw InvalidArgument("welch: sample rate must be positive");
  if (x.size() < segment_length)
    throw InsufficientSamples(static_cast<double>(segment_length) / sample_rate);

  WelchResult r;
  r.sample_rate = sample_rate;
  r.segment_length = segment_length;
  const auto w = make_window(window, segment_length);
  for (double v : w) {
    r.window_sum += v;
    r.window_sum_sq += v * v;
  }
  const std::size_t bins = segment_length / 2 + 1;
  r.power.assign(bins, 0.0);
  r.freq.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) r.freq[k] = static_cast<double>(k) * r.bin_width();

  const std::size_t hop = std::max<std::size_t>(1, segment_length / 2);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> seg(segment_length);
  std::vector<cplx> spec;
  for (std::size_t start = 0; start + segment_length <= x.size(); start += hop) {
    for (std::size_t i = 0; i < segment_length; ++i) seg[i] = x[start + i] * w[i];
    fft.fwd(spec, seg);
    for (std::size_t k = 0; k < bins; ++k) r.power[k] += std::norm(spec[k]);
    ++r.segments;
  }
  for (double& p : r.power) p /= static_cast<double>(r.segments);
  return r;
}

/// Mean over [lo, hi] of a PSD that is `below` up to `edge` and `above`
/// beyond it.
inline double step_mean(double lo, double hi, double below, double edge, double above) {
  if (!(hi > lo)) return lo < edge ? below : above;
  const double cut = std::clamp(edge, lo, hi);
  return (below * (cut - lo) + above * (hi - cut)) / (hi - lo);
}

/// Zero-mean Gaussian sequence of n samples at sample_rate whose one-sided PSD
/// averaged over [lo, hi] is `band_mean(lo, hi)` (units^2/Hz). White Gaussian
/// samples are shaped in the frequency domain, each bin weighted by the mean
/// density over the band it covers, so short records keep the right variance
/// on either side of a sharp PSD edge. The working length is padded to an
/// FFT-friendly size and truncated.
inline std::vector<double> shaped_gaussian(const std::function<double(double, double)>& band_mean, std::size_t n,
                                           double sample_rate, std::uint64_t seed) {
  std::vector<double> out;
  if (n == 0) return out;
  const std::size_t m = next_fast_len(n);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(m);
  for (double& v : white) v = normal(rng);

  auto spec = rfft(white);
  const double df = sample_rate / static_cast<double>(m);
  const double nyquist = sample_rate / 2.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    const double s = std::max(0.0, band_mean(std::max(0.0, f - df / 2), std::min(nyquist, f + df / 2)));
    spec[k] *= std::sqrt(s * sample_rate / 2.0);
  }
  out = irfft(spec, m);
  out.resize(n);
  return out;
}

inline double to_db(double linear) {
  return linear > 0.0 ? 10.0 * std::log10(linear) : -std::numeric_limits<double>::infinity();
}

inline double from_db(double db) { return std::isinf(db) && db < 0 ? 0.0 : std::pow(10.0, db / 10.0); }

}  // namespace beatlock::spectral
