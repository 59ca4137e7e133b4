#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sic/signal.hpp"

namespace sic {

inline constexpr double kPi = 3.14159265358979323846;

// dB helpers. dBm values refer to 1 mW; watts are linear.
double db_to_lin(double db);            // power ratio
double lin_to_db(double lin);           // power ratio, -inf for 0
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_amplitude(double db);      // 10^(db/20)

double mean_power(std::span<const cplx> x);

/// Causal FIR filtering with the output truncated to the input length:
/// y[n] = sum_k h[k] x[n-k], x[n<0] = 0.
std::vector<cplx> fir_filter(std::span<const cplx> h, std::span<const cplx> x);

/// Unnormalized forward DFT and inverse DFT scaled by 1/N (FFTW backed;
/// safe to call concurrently).
std::vector<cplx> fft(std::span<const cplx> x);
std::vector<cplx> ifft(std::span<const cplx> X);

/// Signed frequency (Hz) of DFT bin k for an N-point transform.
double bin_frequency(std::size_t k, std::size_t n, double sample_rate);

/// Frequency response sum_k h[k] exp(-j omega (k + lag0)).
cplx frequency_response(std::span<const cplx> h, double omega, int lag0 = 0);

/// splitmix64 step; the seed splitting rule for all derived streams.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for stream `stream_id` derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id);

/// Deterministic random source. Built on std::mt19937_64, whose output is
/// fixed by the standard, with distribution code kept local so results do
/// not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                         // [0, 1)
  std::uint64_t uniform_int(std::uint64_t n);  // [0, n)
  double gaussian();                        // N(0, 1)
  /// Circular complex Gaussian with E|z|^2 = power.
  cplx complex_gaussian(double power);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sic
