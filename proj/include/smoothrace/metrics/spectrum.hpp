#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace smoothrace::metrics {

inline constexpr double kDefaultSampleRate = 30.0;

/// One-sided amplitude spectrum of a real signal.
struct Spectrum {
  std::vector<double> freq_hz;
  std::vector<double> amplitude;
  std::size_t n = 0;  // samples in the source signal
  double sample_rate = kDefaultSampleRate;
};

/// M_0 = |X_0|/n, M_i = 2|X_i|/n for 0 < i < n/2, and |X_{n/2}|/n for even n;
/// f_i = i f_s / n. No windowing, padding or detrending.
Spectrum amplitude_spectrum(std::span<const double> signal, double sample_rate = kDefaultSampleRate);

/// S_m = 2/(n f_s) * sum_i M_i f_i.
double smoothness(const Spectrum& spectrum);
double smoothness(std::span<const double> signal, double sample_rate = kDefaultSampleRate);

/// `freq_hz,amplitude` rows preceded by a `# n=<n> sample_rate=<fs>` line.
void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum);
Spectrum read_spectrum_csv(std::istream& is);

}  // namespace smoothrace::metrics
