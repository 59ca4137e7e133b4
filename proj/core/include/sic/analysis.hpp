#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "sic/basis.hpp"
#include "sic/signal.hpp"

namespace sic {

/// Two-sided baseband PSD on an ascending grid from -fs/2.
struct PsdEstimate {
  std::vector<double> frequencies;  // Hz
  std::vector<double> density;      // dBm/Hz
  double resolution_bandwidth = 0.0;  // bin spacing, Hz
};

/// Welch estimate with a Hann window. Scaled so that summing density times
/// bin spacing over the grid returns the mean power of x.
PsdEstimate welch_psd(const ComplexSignal& x, std::size_t segment_length = 4096, double overlap_fraction = 0.5);

/// Power (dBm) in bins whose centre lies within [f_lo, f_hi].
double band_power(const PsdEstimate& psd, double f_lo, double f_hi);

/// band_power(before) - band_power(after) over the band, in dB.
double cancellation_gain(const ComplexSignal& before, const ComplexSignal& after, std::pair<double, double> band,
                         std::size_t segment_length = 4096, double overlap_fraction = 0.5);

/// Per-sample FLOP counts of the regeneration pipeline and learning totals.
struct ComplexityReport {
  std::int64_t basis_gen_flop_per_sample = 0;
  std::int64_t orth_flop_per_sample = 0;
  std::int64_t filtering_flop_per_sample = 0;
  std::int64_t regen_flop_per_sample = 0;  // sum of the three above
  std::int64_t learning_flop = 0;          // whole learning run
  double regen_gflops = 0.0;               // at the given sample rate
  double learning_mflop = 0.0;
};

ComplexityReport complexity_report(int max_order, int n, std::int64_t block_size, int num_blocks,
                                   double sample_rate, OrthMethod method);

/// freq_hz,dbm_per_hz
void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& psd);

}  // namespace sic
