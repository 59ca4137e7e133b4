#include "sic/rf_chain.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sic/dsp.hpp"
#include "sic/errors.hpp"

namespace sic {

namespace {

void require_finite_taps(std::span<const cplx> taps, const std::string& what) {
  if (taps.empty()) throw ConfigError(what + ": impulse response is empty");
  if (!all_finite(taps)) throw ConfigError(what + ": impulse response has non-finite taps");
}

double energy(std::span<const cplx> taps) {
  double e = 0.0;
  for (const auto& t : taps) e += std::norm(t);
  return e;
}

}  // namespace

void validate(const PHModel& model) {
  if (model.max_order < 1 || model.max_order % 2 == 0)
    throw ConfigError("PA model: max order must be odd and positive");
  if (!model.branch_filters.contains(1)) throw ConfigError("PA model: order-1 branch missing");
  for (const auto& [p, f] : model.branch_filters) {
    if (p < 1 || p % 2 == 0 || p > model.max_order)
      throw ConfigError("PA model: branch order " + std::to_string(p) + " is not an odd order <= P");
    require_finite_taps(f, "PA model order " + std::to_string(p));
  }
}

ComplexSignal pa_apply(const PHModel& model, const ComplexSignal& x) {
  validate(model);
  validate(x, "pa_apply input");
  std::vector<cplx> out(x.size(), cplx{0.0, 0.0});
  std::vector<cplx> psi(x.size());
  for (const auto& [p, f] : model.branch_filters) {
    for (std::size_t n = 0; n < x.size(); ++n)
      psi[n] = x.samples[n] * std::pow(std::abs(x.samples[n]), p - 1);
    const auto branch = fir_filter(f, psi);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += branch[n];
  }
  return ComplexSignal(std::move(out), x.sample_rate);
}

void validate(const CouplingChannel& channel) {
  require_finite_taps(channel.impulse_response, "coupling channel");
  if (energy(channel.impulse_response) > 1.0 + 1e-12)
    throw ConfigError("coupling channel: energy exceeds 1, a passive path cannot amplify");
}

CouplingChannel make_decaying_channel(double isolation_db, int num_taps, double decay,
                                      int bulk_delay, std::string description) {
  if (num_taps < 1) throw ConfigError("coupling channel: need at least one tap");
  if (bulk_delay < 0) throw ConfigError("coupling channel: negative bulk delay");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("coupling channel: decay must lie in (0, 1]");
  if (!std::isfinite(isolation_db) || isolation_db < 0.0)
    throw ConfigError("coupling channel: isolation must be a finite non-negative dB value");

  static constexpr std::array<double, 5> kPhases{0.0, 0.7, -1.1, 1.9, 2.5};
  std::vector<cplx> taps(static_cast<std::size_t>(bulk_delay), cplx{0.0, 0.0});
  for (int k = 0; k < num_taps; ++k)
    taps.push_back(std::polar(std::pow(decay, k), kPhases[static_cast<std::size_t>(k) % kPhases.size()]));
  const double scale = std::sqrt(db_to_lin(-isolation_db) / energy(taps));
  for (auto& t : taps) t *= scale;
  return CouplingChannel{std::move(taps), std::move(description)};
}

double channel_isolation_db(const CouplingChannel& channel) {
  return -lin_to_db(energy(channel.impulse_response));
}

ComplexSignal leakage(const CouplingChannel& channel, const ComplexSignal& pa_out) {
  validate(channel);
  validate(pa_out, "leakage input");
  return ComplexSignal(fir_filter(channel.impulse_response, pa_out.samples), pa_out.sample_rate);
}

double LNAModel::linear_gain() const { return db_to_amplitude(gain_db); }

double LNAModel::cubic_coefficient() const {
  if (std::isinf(iip3_dbm) && iip3_dbm > 0) return 0.0;
  const double a_sq = 2.0 * dbm_to_watts(iip3_dbm);
  return -(4.0 / 3.0) * linear_gain() / a_sq;
}

double LNAModel::saturation_power() const {
  if (std::isinf(iip3_dbm) && iip3_dbm > 0) return std::numeric_limits<double>::infinity();
  return 0.5 * dbm_to_watts(iip3_dbm);  // A^2 / 4
}

void validate(const LNAModel& model) {
  if (!std::isfinite(model.gain_db)) throw ConfigError("LNA: gain must be finite");
  if (std::isnan(model.iip3_dbm) || (std::isinf(model.iip3_dbm) && model.iip3_dbm < 0))
    throw ConfigError("LNA: IIP3 must be finite or +inf");
}

std::vector<cplx> lna_input_referred(const LNAModel& model, std::span<const cplx> x) {
  validate(model);
  const double a1 = model.linear_gain();
  const double k3 = model.cubic_coefficient() / a1;
  const double r_sat = model.saturation_power();
  std::vector<cplx> y(x.size());
  if (k3 == 0.0) {
    std::copy(x.begin(), x.end(), y.begin());
    return y;
  }
  const double peak = std::sqrt(r_sat) * (1.0 + k3 * r_sat);  // output amplitude at the fold
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double r2 = std::norm(x[n]);
    if (r2 <= r_sat)
      y[n] = x[n] * (1.0 + k3 * r2);
    else
      y[n] = x[n] * (peak / std::sqrt(r2));
  }
  return y;
}

ComplexSignal lna_apply(const LNAModel& model, const ComplexSignal& x) {
  validate(x, "lna_apply input");
  auto y = lna_input_referred(model, x.samples);
  const double a1 = model.linear_gain();
  for (auto& v : y) v *= a1;
  return ComplexSignal(std::move(y), x.sample_rate);
}

std::vector<cplx> AuxChain::effective_response() const {
  std::vector<cplx> h = impulse_response;
  const double g = db_to_amplitude(gain_db);
  for (auto& t : h) t *= g;
  return h;
}

void validate(const AuxChain& aux) {
  require_finite_taps(aux.impulse_response, "aux chain");
  if (!std::isfinite(aux.gain_db)) throw ConfigError("aux chain: gain must be finite");
}

ComplexSignal aux_apply(const AuxChain& aux, const ComplexSignal& x) {
  validate(aux);
  validate(x, "aux input");
  return ComplexSignal(fir_filter(aux.effective_response(), x.samples), x.sample_rate);
}

void validate(const NoiseParams& p) {
  if (p.dac_bits < 4 || p.dac_bits > 24) throw ConfigError("noise: DAC bits must lie in [4, 24]");
  if (!(p.dac_sample_rate_hz > 0.0)) throw ConfigError("noise: DAC sample rate must be positive");
  for (double v : {p.thermal_density_dbm_hz, p.tx_noise_figure_db, p.tx_gain_db, p.dac_avg_power_dbm,
                   p.papr_db, p.rx_noise_figure_db, p.passive_isolation_db})
    if (!std::isfinite(v)) throw ConfigError("noise: dB quantities must be finite");
  if (std::isnan(p.coupler_factor_db) || p.coupler_factor_db == std::numeric_limits<double>::infinity())
    throw ConfigError("noise: coupler factor must be finite or -inf");
}

double quantization_noise_density(const NoiseParams& p) {
  if (!(p.dac_sample_rate_hz > 0.0)) throw ConfigError("noise: DAC sample rate must be positive");
  return p.dac_avg_power_dbm -
         (6.02 * p.dac_bits + 4.76 - p.papr_db + 10.0 * std::log10(p.dac_sample_rate_hz / 2.0));
}

double tx_noise_density(const NoiseParams& p) {
  validate(p);
  const double thermal = db_to_lin(p.thermal_density_dbm_hz);  // mW/Hz
  const double quant = db_to_lin(quantization_noise_density(p));
  return lin_to_db(db_to_lin(p.tx_gain_db) * (db_to_lin(p.tx_noise_figure_db) * thermal + quant));
}

NoiseBudget total_tx_induced_noise(const NoiseParams& main_tx, const NoiseParams& aux_tx) {
  NoiseBudget b;
  b.main_dbm_hz = tx_noise_density(main_tx) - main_tx.passive_isolation_db;
  b.aux_dbm_hz = tx_noise_density(aux_tx) + aux_tx.coupler_factor_db;
  b.total_dbm_hz = lin_to_db(db_to_lin(b.main_dbm_hz) + db_to_lin(b.aux_dbm_hz));
  return b;
}

double coupler_nf_penalty(double coupling_db) {
  if (!(coupling_db > 0.0)) throw ConfigError("coupler: coupling factor must be positive dB");
  return -lin_to_db(1.0 - db_to_lin(-coupling_db));
}

void validate(const RxComposition& comp) {
  if (!std::isfinite(comp.duplex_offset) || std::abs(comp.duplex_offset) > kPi)
    throw ConfigError("rx composition: duplex offset must lie in [-pi, pi]");
  if (comp.desired_signal) validate(*comp.desired_signal, "desired signal");
}

std::vector<cplx> white_noise(std::size_t n, double density_dbm_hz, double sample_rate,
                              std::uint64_t seed) {
  std::vector<cplx> v(n, cplx{0.0, 0.0});
  if (std::isinf(density_dbm_hz) && density_dbm_hz < 0) return v;
  if (std::isnan(density_dbm_hz)) throw ConfigError("noise density is NaN");
  const double power = dbm_to_watts(density_dbm_hz) * sample_rate;
  Rng rng(seed);
  for (auto& z : v) z = rng.complex_gaussian(power);
  return v;
}

ComplexSignal compose_rx(const ComplexSignal& leak, const RxComposition& comp,
                         double noise_density_dbm_hz, std::uint64_t seed) {
  validate(leak, "leakage");
  validate(comp);
  std::vector<cplx> y = leak.samples;
  if (comp.desired_signal) {
    const auto& d = *comp.desired_signal;
    if (d.sample_rate != leak.sample_rate)
      throw InputError("compose_rx: desired signal and leakage sample rates differ");
    const std::size_t n_max = std::min(d.size(), y.size());
    for (std::size_t n = 0; n < n_max; ++n)
      y[n] += d.samples[n] * std::polar(1.0, comp.duplex_offset * static_cast<double>(n));
  }
  const auto noise = white_noise(y.size(), noise_density_dbm_hz, leak.sample_rate, seed);
  for (std::size_t n = 0; n < y.size(); ++n) y[n] += noise[n];
  return ComplexSignal(std::move(y), leak.sample_rate);
}

std::vector<cplx> read_taps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tap file " + path.string());
  std::vector<cplx> taps;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double re = 0.0;
    double im = 0.0;
    if (!(ss >> re >> im))
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected \"re im\"");
    taps.emplace_back(re, im);
  }
  if (taps.empty()) throw ConfigError("tap file " + path.string() + " holds no taps");
  return taps;
}

void write_taps(const std::filesystem::path& path, std::span<const cplx> taps) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write tap file " + path.string());
  out.precision(17);
  for (const auto& t : taps) out << t.real() << ' ' << t.imag() << '\n';
}

}  // namespace sic
