#include "sic/analysis.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "sic/dsp.hpp"
#include "sic/errors.hpp"

namespace sic {

PsdEstimate welch_psd(const ComplexSignal& x, std::size_t segment_length, double overlap_fraction) {
  validate(x, "welch_psd input");
  if (segment_length < 2) throw ConfigError("welch_psd: segment length must be at least 2");
  if (!(overlap_fraction >= 0.0 && overlap_fraction <= 0.9)) throw ConfigError("welch_psd: overlap must lie in [0, 0.9]");
  if (segment_length > x.size()) throw InputError("welch_psd: signal shorter than one segment");

  const std::size_t len = segment_length;
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(len * (1.0 - overlap_fraction))));
  std::vector<double> window(len);
  double window_energy = 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    // Periodic Hann.
    window[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(len));
    window_energy += window[n] * window[n];
  }

  std::vector<double> acc(len, 0.0);
  std::size_t segments = 0;
  std::vector<cplx> buf(len);
  for (std::size_t start = 0; start + len <= x.size(); start += hop) {
    for (std::size_t n = 0; n < len; ++n) buf[n] = x.samples[start + n] * window[n];
    const auto spec = fft(buf);
    for (std::size_t k = 0; k < len; ++k) acc[k] += std::norm(spec[k]);
    ++segments;
  }

  PsdEstimate psd;
  psd.resolution_bandwidth = x.sample_rate / static_cast<double>(len);
  psd.frequencies.resize(len);
  psd.density.resize(len);
  const double scale = 1.0 / (static_cast<double>(segments) * x.sample_rate * window_energy);
  // Reorder so the grid runs from -fs/2 upwards.
  const std::size_t half = len / 2;
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t k = (i + len - half) % len;
    psd.frequencies[i] = bin_frequency(k, len, x.sample_rate);
    // W/Hz -> dBm/Hz; floor at the smallest normal double so the grid stays finite.
    psd.density[i] = watts_to_dbm(std::max(acc[k] * scale, std::numeric_limits<double>::min()));
  }
  return psd;
}

double band_power(const PsdEstimate& psd, double f_lo, double f_hi) {
  if (psd.frequencies.empty()) throw InputError("band_power: empty PSD");
  if (!(f_lo < f_hi)) throw InputError("band_power: need f_lo < f_hi");
  const double half_bin = 0.5 * psd.resolution_bandwidth;
  if (f_lo < psd.frequencies.front() - half_bin - 1e-9 || f_hi > psd.frequencies.back() + half_bin + 1e-9)
    throw InputError("band_power: band extends beyond the PSD grid");
  double watts = 0.0;
  for (std::size_t i = 0; i < psd.frequencies.size(); ++i)
    if (psd.frequencies[i] >= f_lo && psd.frequencies[i] <= f_hi) watts += dbm_to_watts(psd.density[i]);
  return watts_to_dbm(watts * psd.resolution_bandwidth);
}

double cancellation_gain(const ComplexSignal& before, const ComplexSignal& after, std::pair<double, double> band,
                         std::size_t segment_length, double overlap_fraction) {
  if (before.sample_rate != after.sample_rate) throw InputError("cancellation_gain: sample rates differ");
  const auto pb = welch_psd(before, segment_length, overlap_fraction);
  const auto pa = welch_psd(after, segment_length, overlap_fraction);
  return band_power(pb, band.first, band.second) - band_power(pa, band.first, band.second);
}

ComplexityReport complexity_report(int max_order, int n, std::int64_t block_size, int num_blocks, double sample_rate,
                                   OrthMethod method) {
  if (max_order < 1 || max_order % 2 == 0) throw ConfigError("complexity: P must be odd and positive");
  if (n < 0 || block_size < 1 || num_blocks < 1) throw ConfigError("complexity: sizes must be positive");
  if (!(sample_rate > 0.0)) throw ConfigError("complexity: sample rate must be positive");
  const std::int64_t p1 = max_order + 1;
  const std::int64_t taps = n + 1;
  ComplexityReport r;
  r.basis_gen_flop_per_sample = max_order + 2;
  r.orth_flop_per_sample = method == OrthMethod::QR ? p1 * p1 + 2 * p1 : 2 * p1 * p1;
  r.filtering_flop_per_sample = 4 * p1 * taps - 2;
  r.regen_flop_per_sample = r.basis_gen_flop_per_sample + r.orth_flop_per_sample + r.filtering_flop_per_sample;
  r.learning_flop = static_cast<std::int64_t>(num_blocks) * p1 * taps * (4 * block_size + 1);
  r.regen_gflops = static_cast<double>(r.regen_flop_per_sample) * sample_rate / 1e9;
  r.learning_mflop = static_cast<double>(r.learning_flop) / 1e6;
  return r;
}

void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& psd) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(10);
  out << "freq_hz,dbm_per_hz\n";
  for (std::size_t i = 0; i < psd.frequencies.size(); ++i) out << psd.frequencies[i] << ',' << psd.density[i] << '\n';
}

}  // namespace sic
