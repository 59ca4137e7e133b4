#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sic/signal.hpp"

namespace sic {

/// Parallel-Hammerstein PA: order-p branch is x|x|^(p-1) followed by an FIR.
struct PHModel {
  int max_order = 1;
  std::map<int, std::vector<cplx>> branch_filters;  // keyed by odd order
};

void validate(const PHModel& model);

/// Sum over odd p of f_p * (x |x|^(p-1)), truncated to the input length.
ComplexSignal pa_apply(const PHModel& model, const ComplexSignal& x);

/// Passive coupling between the PA output and the receiver input.
struct CouplingChannel {
  std::vector<cplx> impulse_response;
  std::string description = "custom";  // duplexer | circulator | custom
};

void validate(const CouplingChannel& channel);

/// Exponentially decaying complex FIR (magnitude ratio `decay` per tap, fixed
/// phase pattern) preceded by `bulk_delay` zero taps, scaled so the total
/// energy equals 10^(-isolation_db/10).
CouplingChannel make_decaying_channel(double isolation_db, int num_taps, double decay,
                                      int bulk_delay, std::string description);

/// Energy of the channel expressed as an isolation in dB (positive = loss).
double channel_isolation_db(const CouplingChannel& channel);

ComplexSignal leakage(const CouplingChannel& channel, const ComplexSignal& pa_out);

/// Memoryless third-order LNA, y = a1 x + a3 x|x|^2 with a1 = 10^(gain/20),
/// a3 = -(4/3) a1 / A^2 and A^2 = 2 * 10^((iip3 - 30)/10) W.
///
/// The cubic folds over above |x|^2 = A^2/4, where its output amplitude peaks;
/// beyond that point the output amplitude is held at the peak value so the
/// model saturates instead of inverting. Set iip3_dbm to +inf for a linear
/// amplifier.
struct LNAModel {
  double gain_db = 0.0;
  double iip3_dbm = std::numeric_limits<double>::infinity();

  double linear_gain() const;      // a1
  double cubic_coefficient() const;  // a3, 0 for a linear model
  /// Input power (W) where the cubic output amplitude peaks; +inf if linear.
  double saturation_power() const;
};

void validate(const LNAModel& model);

ComplexSignal lna_apply(const LNAModel& model, const ComplexSignal& x);

/// LNA output divided by its linear gain, i.e. referred back to the input.
std::vector<cplx> lna_input_referred(const LNAModel& model, std::span<const cplx> x);

/// Auxiliary (cancellation) transmitter as seen at the combiner.
struct AuxChain {
  std::vector<cplx> impulse_response{cplx{1.0, 0.0}};
  double gain_db = 0.0;

  /// impulse_response scaled by 10^(gain_db/20).
  std::vector<cplx> effective_response() const;
};

void validate(const AuxChain& aux);

ComplexSignal aux_apply(const AuxChain& aux, const ComplexSignal& x);

/// Parameters of one transmitter's noise and of the receive side. A chain
/// only reads the fields relevant to it: passive_isolation_db from the main
/// TX (attenuation, positive dB) and coupler_factor_db from the auxiliary TX
/// (gain, usually negative; -inf disconnects it).
struct NoiseParams {
  double thermal_density_dbm_hz = -174.0;
  double tx_noise_figure_db = 0.0;
  double tx_gain_db = 0.0;
  int dac_bits = 14;
  double dac_avg_power_dbm = -6.0;
  double papr_db = 7.0;
  double dac_sample_rate_hz = 30.72e6;
  double rx_noise_figure_db = 0.0;
  double coupler_factor_db = 0.0;
  double passive_isolation_db = 0.0;
};

void validate(const NoiseParams& params);

/// DAC quantization noise density (dBm/Hz).
double quantization_noise_density(const NoiseParams& params);

/// Transmitter output noise density (dBm/Hz): thermal noise raised by the
/// noise figure plus DAC quantization noise, amplified by the TX gain.
double tx_noise_density(const NoiseParams& params);

struct NoiseBudget {
  double total_dbm_hz = 0.0;
  double main_dbm_hz = 0.0;  // main TX noise after passive isolation
  double aux_dbm_hz = 0.0;   // aux TX noise after the coupler
};

/// TX-induced noise at the receiver input from both transmitters.
NoiseBudget total_tx_induced_noise(const NoiseParams& main_tx, const NoiseParams& aux_tx);

/// Receiver noise figure penalty (dB) of injecting through a directional
/// coupler with the given coupling factor (positive dB, e.g. 10).
double coupler_nf_penalty(double coupling_db);

/// Receive-side composition: desired signal at a duplex offset plus leakage
/// plus white noise.
struct RxComposition {
  double duplex_offset = 0.0;  // normalized angular frequency, |w| <= pi
  std::optional<ComplexSignal> desired_signal;
};

void validate(const RxComposition& comp);

/// y[n] = x_D[n] e^{j w_D n} + leak[n] + v[n], with v circular white Gaussian
/// of the given density (dBm/Hz) over the full sample rate; -inf disables it.
ComplexSignal compose_rx(const ComplexSignal& leak, const RxComposition& comp,
                         double noise_density_dbm_hz, std::uint64_t seed);

/// White circular Gaussian noise of the given density over `sample_rate`.
std::vector<cplx> white_noise(std::size_t n, double density_dbm_hz, double sample_rate,
                              std::uint64_t seed);

/// Tap files: one complex tap per line as "re im"; blank lines and lines
/// starting with '#' are skipped.
std::vector<cplx> read_taps(const std::filesystem::path& path);
void write_taps(const std::filesystem::path& path, std::span<const cplx> taps);

}  // namespace sic
