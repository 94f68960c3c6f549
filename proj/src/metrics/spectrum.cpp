#include "smoothrace/metrics/spectrum.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>

#include "smoothrace/error.hpp"

namespace smoothrace::metrics {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::complex<double>> real_dft(std::span<const double> signal) {
  const int n = static_cast<int>(signal.size());
  std::vector<double> in(signal.begin(), signal.end());
  std::vector<std::complex<double>> out(signal.size() / 2 + 1);
  auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(), out_ptr, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw NumericError("FFT planning failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
  return out;
}

}  // namespace

Spectrum amplitude_spectrum(std::span<const double> signal, double sample_rate) {
  if (signal.size() < 2) throw ParameterError("spectrum needs at least 2 samples");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw ParameterError("sample rate must be positive");
  for (double v : signal)
    if (!std::isfinite(v)) throw NumericError("signal contains non-finite values");

  const std::size_t n = signal.size();
  const auto x = real_dft(signal);
  Spectrum s;
  s.n = n;
  s.sample_rate = sample_rate;
  s.freq_hz.resize(x.size());
  s.amplitude.resize(x.size());
  const double dn = double(n);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool unpaired = i == 0 || (n % 2 == 0 && i == n / 2);
    s.amplitude[i] = (unpaired ? 1.0 : 2.0) * std::abs(x[i]) / dn;
    s.freq_hz[i] = double(i) * sample_rate / dn;
  }
  return s;
}

double smoothness(const Spectrum& s) {
  if (s.n < 2 || s.freq_hz.size() != s.amplitude.size()) throw ParameterError("malformed spectrum");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.amplitude.size(); ++i) sum += s.amplitude[i] * s.freq_hz[i];
  return 2.0 * sum / (double(s.n) * s.sample_rate);
}

double smoothness(std::span<const double> signal, double sample_rate) {
  return smoothness(amplitude_spectrum(signal, sample_rate));
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
  os << "# n=" << s.n << " sample_rate=" << std::setprecision(17) << s.sample_rate << '\n';
  os << "freq_hz,amplitude\n";
  for (std::size_t i = 0; i < s.amplitude.size(); ++i) os << s.freq_hz[i] << ',' << s.amplitude[i] << '\n';
}

Spectrum read_spectrum_csv(std::istream& is) {
  Spectrum s;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string tok;
      while (meta >> tok) {
        if (tok.rfind("n=", 0) == 0) s.n = std::stoul(tok.substr(2));
        else if (tok.rfind("sample_rate=", 0) == 0) s.sample_rate = std::stod(tok.substr(12));
      }
      continue;
    }
    if (!header) {
      if (line != "freq_hz,amplitude") throw FileError("spectrum CSV has an unexpected header: " + line);
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FileError("malformed spectrum row: " + line);
    s.freq_hz.push_back(std::stod(line.substr(0, comma)));
    s.amplitude.push_back(std::stod(line.substr(comma + 1)));
  }
  if (!header) throw FileError("spectrum CSV is missing its header");
  if (s.n == 0) s.n = s.amplitude.size() > 1 ? 2 * (s.amplitude.size() - 1) : 0;
  return s;
}

}  // namespace smoothrace::metrics
