#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "sic/signal.hpp"

namespace sic {

enum class Constellation { QPSK, QAM16, QAM64 };

/// Multicarrier transmit waveform description.
///
/// Subcarrier spacing is bandwidth / num_subcarriers and the IFFT size is the
/// sample rate over that spacing, rounded; the active subcarriers sit
/// symmetrically around DC (which is left empty).
struct WaveformSpec {
  double bandwidth = 20e6;       // Hz, occupied
  double sample_rate = 61.44e6;  // Hz
  int num_subcarriers = 1200;
  Constellation constellation = Constellation::QAM16;
  double target_papr_db = 8.0;
  std::size_t num_samples = 13000;
  std::uint64_t seed = 1;
};

void validate(const WaveformSpec& spec);

/// IFFT length implied by the spec.
std::size_t fft_size(const WaveformSpec& spec);

/// Active subcarrier offsets (in bins, signed, ascending, DC excluded).
std::vector<int> active_subcarriers(const WaveformSpec& spec);

/// CP-free OFDM stream of spec.num_samples samples with unit mean power.
ComplexSignal generate_multicarrier(const WaveformSpec& spec);

/// PAPR in dB using the 99.9th percentile of |x|^2 as the peak.
double measure_papr_db(const ComplexSignal& x);

/// Iterative clipping and filtering: amplitude clip at the target level,
/// zero every DFT bin outside |f| <= bandwidth/2, restore the input mean
/// power, and repeat until the target is met or max_iterations runs out.
/// The lowest-PAPR iterate is returned; inputs already at or below the
/// target come back unchanged.
ComplexSignal reduce_papr(const ComplexSignal& x, double target_papr_db, int max_iterations,
                          double bandwidth);

/// Frequency-interleaved calibration probes.
struct ProbePair {
  ComplexSignal a;  // even-indexed active subcarriers
  ComplexSignal b;  // odd-indexed active subcarriers
  std::size_t period = 0;       // one OFDM symbol; both probes repeat it
  std::vector<int> subcarriers_a;
  std::vector<int> subcarriers_b;
};

/// Each probe is a single random OFDM symbol repeated to spec.num_samples,
/// normalized to unit power. Requires an even subcarrier count.
ProbePair generate_probe_pair(const WaveformSpec& spec);

enum class ProbeBranch { A, B };

/// Isolates one probe's subcarriers from a composite observation. The first
/// period is skipped as a transient; the result covers samples
/// [period, period * floor(size / period)) of the observation and lines up
/// with the same span of the (periodic) probe.
ComplexSignal separate_probe_branch(const ComplexSignal& observation, const ProbePair& pair,
                                    ProbeBranch branch);

}  // namespace sic
