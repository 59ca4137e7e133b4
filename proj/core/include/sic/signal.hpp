#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace sic {

using cplx = std::complex<double>;

/// Uniformly sampled complex baseband sequence.
///
/// Power convention used throughout the library: samples are volts across a
/// unit impedance, so |x[n]|^2 is instantaneous power in watts and
/// 0 dBm = 1 mW.
struct ComplexSignal {
  std::vector<cplx> samples;
  double sample_rate = 0.0;

  ComplexSignal() = default;
  ComplexSignal(std::vector<cplx> s, double fs) : samples(std::move(s)), sample_rate(fs) {}

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::span<const cplx> view() const noexcept { return samples; }

  /// Mean of |x|^2 in watts.
  double mean_power() const;

  /// Copy of samples [first, first + count).
  ComplexSignal slice(std::size_t first, std::size_t count) const;
};

/// Throws InputError unless the signal is non-empty, finite and has a
/// positive sample rate. `what` names the argument in the message.
void validate(const ComplexSignal& x, const char* what = "signal");

bool all_finite(std::span<const cplx> v);

}  // namespace sic
