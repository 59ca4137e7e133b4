#include "sic/dsp.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>

#include "sic/errors.hpp"

namespace sic {

double ComplexSignal::mean_power() const { return sic::mean_power(samples); }

ComplexSignal ComplexSignal::slice(std::size_t first, std::size_t count) const {
  if (first + count > samples.size()) throw InputError("slice out of range");
  return ComplexSignal(std::vector<cplx>(samples.begin() + static_cast<std::ptrdiff_t>(first),
                                         samples.begin() + static_cast<std::ptrdiff_t>(first + count)),
                       sample_rate);
}

bool all_finite(std::span<const cplx> v) {
  for (const auto& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

void validate(const ComplexSignal& x, const char* what) {
  if (x.empty()) throw InputError(std::string(what) + ": empty signal");
  if (!(x.sample_rate > 0.0) || !std::isfinite(x.sample_rate))
    throw InputError(std::string(what) + ": sample rate must be positive");
  if (!all_finite(x.samples)) throw InputError(std::string(what) + ": non-finite samples");
}

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

double lin_to_db(double lin) {
  if (lin <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(lin);
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return lin_to_db(watts) + 30.0; }
double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

double mean_power(std::span<const cplx> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& z : x) acc += std::norm(z);
  return acc / static_cast<double>(x.size());
}

std::vector<cplx> fir_filter(std::span<const cplx> h, std::span<const cplx> x) {
  std::vector<cplx> y(x.size());
  const std::size_t taps = h.size();
  for (std::size_t n = 0; n < x.size(); ++n) {
    cplx acc{0.0, 0.0};
    const std::size_t kmax = std::min(taps, n + 1);
    for (std::size_t k = 0; k < kmax; ++k) acc += h[k] * x[n - k];
    y[n] = acc;
  }
  return y;
}

namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<cplx> run_fft(std::span<const cplx> in, int sign) {
  const std::size_t n = in.size();
  if (n == 0) return {};
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (buf == nullptr) throw std::bad_alloc();
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE);
  }
  std::memcpy(buf, in.data(), sizeof(fftw_complex) * n);
  fftw_execute(plan);
  std::vector<cplx> out(n);
  std::memcpy(static_cast<void*>(out.data()), buf, sizeof(fftw_complex) * n);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

}  // namespace

std::vector<cplx> fft(std::span<const cplx> x) { return run_fft(x, FFTW_FORWARD); }

std::vector<cplx> ifft(std::span<const cplx> X) {
  auto out = run_fft(X, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(X.size());
  for (auto& z : out) z *= scale;
  return out;
}

double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  const double f = (2 * k < n) ? kk : kk - nn;
  return f * sample_rate / nn;
}

cplx frequency_response(std::span<const cplx> h, double omega, int lag0) {
  cplx acc{0.0, 0.0};
  for (std::size_t k = 0; k < h.size(); ++k)
    acc += h[k] * std::polar(1.0, -omega * (static_cast<double>(k) + lag0));
  return acc;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
  return splitmix64(master ^ splitmix64(stream_id));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * kPi * u2);
}

cplx Rng::complex_gaussian(double power) {
  const double s = std::sqrt(power / 2.0);
  const double re = gaussian();
  const double im = gaussian();
  return {s * re, s * im};
}

}  // namespace sic
