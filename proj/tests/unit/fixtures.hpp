#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "sic/dsp.hpp"
#include "sic/signal.hpp"
#include "sic/signal_gen.hpp"

namespace fixtures {

using sic::cplx;

inline std::vector<cplx> random_vector(std::size_t n, std::uint64_t seed, double power = 1.0) {
  sic::Rng rng(seed);
  std::vector<cplx> v(n);
  for (auto& x : v) x = rng.complex_gaussian(power);
  return v;
}

inline sic::ComplexSignal random_signal(std::size_t n, std::uint64_t seed, double fs = 61.44e6) {
  return {random_vector(n, seed), fs};
}

inline Eigen::MatrixXcd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  sic::Rng rng(seed);
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_gaussian(1.0);
  return m;
}

// Direct convolution without truncation, for building reference responses.
inline std::vector<cplx> full_convolution(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> out(a.size() + b.size() - 1, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline cplx dtft(const std::vector<cplx>& h, double omega) {
  cplx s{0.0, 0.0};
  for (std::size_t k = 0; k < h.size(); ++k) s += h[k] * std::polar(1.0, -omega * static_cast<double>(k));
  return s;
}

inline double rel_error(const std::vector<cplx>& got, const std::vector<cplx>& want) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    num += std::norm(got[i] - want[i]);
    den += std::norm(want[i]);
  }
  return std::sqrt(num / den);
}

// Multicarrier waveform like the shipped scenarios, PAPR-reduced to 8 dB.
inline sic::ComplexSignal lte_like(std::size_t n, std::uint64_t seed, double bandwidth = 20e6) {
  sic::WaveformSpec spec;
  spec.bandwidth = bandwidth;
  spec.num_subcarriers = static_cast<int>(std::lround(bandwidth / 15e3 * 0.9));
  spec.num_samples = n;
  spec.seed = seed;
  return sic::reduce_papr(sic::generate_multicarrier(spec), spec.target_papr_db, 10, spec.bandwidth);
}

}  // namespace fixtures
