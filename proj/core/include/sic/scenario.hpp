#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sic/analysis.hpp"
#include "sic/basis.hpp"
#include "sic/canceller.hpp"
#include "sic/learning.hpp"
#include "sic/rf_chain.hpp"
#include "sic/signal_gen.hpp"

namespace sic {

struct PaDrive {
  PHModel model;
  double nominal_power_dbm = 30.0;  // output power for a unit-power input at nominal drive
  double tx_power_dbm = 30.0;       // actual drive level
};

struct CancellerConfig {
  int max_order = 7;
  int filter_length = 13;  // N + 1
  OrthMethod orth_method = OrthMethod::CovarianceEigen;
  std::optional<int> delay_samples;  // skips probe calibration when set
  int precursor_taps = 2;            // taps reserved ahead of the estimated delay
  int max_lag = 64;
  int linear_filter_length = 0;      // P = 1 comparison canceller; 0 means same as filter_length
};

struct NoiseConfig {
  double thermal_density_dbm_hz = -174.0;
  double rx_noise_figure_db = 5.0;
  bool inject_tx_noise = false;  // adds the analytic TX-induced noise as white noise
  NoiseParams main_tx;
  NoiseParams aux_tx;
};

struct RxConfig {
  double duplex_offset_rad = 0.0;
  std::optional<double> desired_power_dbm;  // optional desired signal (multicarrier)
};

struct EvalConfig {
  std::size_t num_samples = 131072;
  std::size_t psd_segment_length = 4096;
  double psd_overlap = 0.5;
  bool ls_baseline = false;
};

struct ScenarioConfig {
  std::string name = "scenario";
  WaveformSpec waveform;  // num_samples and seed are derived per realization
  int papr_iterations = 10;
  PaDrive pa;
  CouplingChannel channel;
  LNAModel lna;
  AuxChain aux;
  NoiseConfig noise;
  RxConfig rx;
  CancellerConfig canceller;
  LearningConfig learning;
  EvalConfig eval;
  std::filesystem::path output_dir = "out";
  std::uint64_t master_seed = 1;
};

/// Parses a JSON scenario. Relative tap-file paths resolve against base_dir.
ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir = ".");
ScenarioConfig load_scenario(const std::filesystem::path& path);
void validate(const ScenarioConfig& cfg);

/// Reference noise-budget parameters: a 14-bit DAC at -6 dBm average power,
/// 7 dB PAPR and 30.72 MHz; main TX 29 dB gain / 10 dB NF behind 40 dB of
/// isolation; aux TX 5 dB gain / 9 dB NF through a -15 dB coupler.
NoiseParams reference_main_tx_noise();
NoiseParams reference_aux_tx_noise();

/// Per-component seed streams derived from the master seed.
enum class SeedStream : std::uint64_t {
  TrainWaveform = 1,
  EvalWaveform = 2,
  TrainNoise = 3,
  EvalNoise = 4,
  Probe = 5,
  ProbeNoise = 6,
  TrainTxNoise = 7,
  EvalTxNoise = 8,
  TrainDesired = 9,
  EvalDesired = 10,
};
std::uint64_t stream_seed(const ScenarioConfig& cfg, SeedStream stream);

/// One transmit realization and what reaches the LNA input without
/// cancellation. `noise` is the white part (RX thermal plus optional TX
/// noise); rx = leakage + noise (+ desired).
struct Realization {
  ComplexSignal tx;
  ComplexSignal leakage;
  ComplexSignal noise;
  ComplexSignal rx;
};

/// PA input drive and output scaling around the model.
ComplexSignal drive_pa(const PaDrive& pa, const ComplexSignal& x_unit);

Realization synthesize(const ScenarioConfig& cfg, bool evaluation, std::size_t num_samples);

/// Density (dBm/Hz) of the white noise added at the LNA input.
double rx_noise_density(const ScenarioConfig& cfg);

struct DelayCalibration {
  int main_delay = 0;
  int aux_delay = 0;
  int tau = 0;  // main - aux - precursor, clamped at zero
  bool from_config = false;
};

/// Sends frequency-interleaved probes through the main and aux paths at once
/// and estimates both delays from the LNA observation.
DelayCalibration calibrate_delay(const ScenarioConfig& cfg);

struct TrainedCanceller {
  CancellerState state;
  ConvergenceTrace trace;
};

/// Samples consumed before the first learning block (filter history).
std::size_t history_length(int delay, int filter_length);

/// Fits S on the training realization (past the filter history) and runs the
/// closed loop with the given order and filter length.
TrainedCanceller train_canceller(const ScenarioConfig& cfg, const Realization& train, int max_order,
                                 int filter_length, int delay);

/// LNA-input residual of a trained canceller on another realization; the
/// first `skip` samples are dropped.
ComplexSignal residual_signal(const CancellerState& state, const Realization& real, const AuxChain& aux,
                              std::size_t skip, bool subtractive = false);

struct SummaryRow {
  std::string canceller;
  int max_order = 0;
  int filter_length = 0;
  double band_power_dbm = 0.0;
  double cancellation_gain_db = 0.0;
  double total_isolation_db = 0.0;
  double noise_floor_dbm = 0.0;
  ComplexityReport complexity;
};

struct ScenarioResult {
  DelayCalibration delay;
  TrainedCanceller nonlinear;
  TrainedCanceller linear;
  std::optional<CancellerState> ls_baseline;
  PsdEstimate psd_before;
  PsdEstimate psd_after_linear;
  PsdEstimate psd_after_nonlinear;
  std::vector<SummaryRow> summary;  // none, linear, nonlinear[, ls_baseline]
  double noise_floor_dbm = 0.0;     // in-band white-noise power at the LNA input
  double passive_isolation_db = 0.0;
};

ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Writes convergence.csv, psd_*.csv, summary.csv and canceller_state.txt.
void write_artifacts(const ScenarioResult& result, const std::filesystem::path& out_dir);

/// Sweep over tx_power_dbm, bandwidth_hz (full scenario runs) or
/// passive_isolation_db (noise budget only). Returns the CSV file written.
std::filesystem::path sweep(const ScenarioConfig& cfg, const std::string& parameter, const std::vector<double>& values,
                            const std::filesystem::path& out_dir);

/// Exit statuses of the command-line runner.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitConfig = 2, kExitDivergence = 3, kExitDegeneracy = 4 };

}  // namespace sic
