#include "sic/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sic/dsp.hpp"
#include "sic/errors.hpp"

namespace sic {

namespace {

using nlohmann::json;

// Typed access to one JSON object that remembers which keys were read, so
// typos surface as configuration errors instead of silently using defaults.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(path_ + "." + key + ": missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) { return has(key) ? integer(key) : fallback; }

  std::string text(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected true or false");
    return v.get<bool>();
  }

  // Numbers, or null / "inf" / "-inf" strings for infinite values.
  double extended(const std::string& key, double fallback, double null_value) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (v.is_null()) return null_value;
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw ConfigError(path_ + "." + key + ": expected a number, null or \"inf\"/\"-inf\"");
  }

  Section child(const std::string& key) { return Section(raw(key), path_ + "." + key); }
  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError(path_ + "." + it.key() + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<cplx> parse_taps(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty array of [re, im] pairs");
  std::vector<cplx> taps;
  for (const auto& t : v) {
    if (t.is_number()) {
      taps.emplace_back(t.get<double>(), 0.0);
    } else if (t.is_array() && t.size() == 2 && t[0].is_number() && t[1].is_number()) {
      taps.emplace_back(t[0].get<double>(), t[1].get<double>());
    } else {
      throw ConfigError(where + ": each tap must be a number or an [re, im] pair");
    }
  }
  return taps;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

Constellation parse_constellation(const std::string& s) {
  if (s == "qpsk") return Constellation::QPSK;
  if (s == "qam16") return Constellation::QAM16;
  if (s == "qam64") return Constellation::QAM64;
  throw ConfigError("waveform.constellation: expected qpsk, qam16 or qam64, got '" + s + "'");
}

NoiseParams parse_noise_params(Section s, NoiseParams d) {
  d.thermal_density_dbm_hz = s.number("thermal_density_dbm_hz", d.thermal_density_dbm_hz);
  d.tx_noise_figure_db = s.number("tx_noise_figure_db", d.tx_noise_figure_db);
  d.tx_gain_db = s.number("tx_gain_db", d.tx_gain_db);
  d.dac_bits = static_cast<int>(s.integer("dac_bits", d.dac_bits));
  d.dac_avg_power_dbm = s.number("dac_avg_power_dbm", d.dac_avg_power_dbm);
  d.papr_db = s.number("papr_db", d.papr_db);
  d.dac_sample_rate_hz = s.number("dac_sample_rate_hz", d.dac_sample_rate_hz);
  d.rx_noise_figure_db = s.number("rx_noise_figure_db", d.rx_noise_figure_db);
  d.passive_isolation_db = s.number("passive_isolation_db", d.passive_isolation_db);
  d.coupler_factor_db =
      s.extended("coupler_factor_db", d.coupler_factor_db, -std::numeric_limits<double>::infinity());
  s.finish();
  return d;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(10);
  out << "canceller,max_order,filter_length,band_power_dbm,cancellation_gain_db,total_isolation_db,"
         "noise_floor_dbm,regen_flop_per_sample,regen_gflops,learning_mflop\n";
  for (const auto& r : rows)
    out << r.canceller << ',' << r.max_order << ',' << r.filter_length << ',' << r.band_power_dbm << ','
        << r.cancellation_gain_db << ',' << r.total_isolation_db << ',' << r.noise_floor_dbm << ','
        << r.complexity.regen_flop_per_sample << ',' << r.complexity.regen_gflops << ','
        << r.complexity.learning_mflop << '\n';
}

const SummaryRow& find_row(const ScenarioResult& r, const std::string& name) {
  for (const auto& row : r.summary)
    if (row.canceller == name) return row;
  throw Error("summary row '" + name + "' missing");
}

}  // namespace

NoiseParams reference_main_tx_noise() {
  NoiseParams p;
  p.tx_noise_figure_db = 10.0;
  p.tx_gain_db = 29.0;
  p.passive_isolation_db = 40.0;
  return p;
}

NoiseParams reference_aux_tx_noise() {
  NoiseParams p;
  p.tx_noise_figure_db = 9.0;
  p.tx_gain_db = 5.0;
  p.coupler_factor_db = -15.0;
  return p;
}

ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Section top(root, "scenario");
  ScenarioConfig cfg;
  cfg.name = top.text("name", cfg.name);
  if (top.has("master_seed")) {
    const auto& v = top.raw("master_seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError("scenario.master_seed: expected a non-negative integer");
    cfg.master_seed = v.get<std::uint64_t>();
  }
  cfg.output_dir = resolve(base_dir, top.text("output_dir", "out/" + cfg.name));

  {
    auto s = top.child("waveform");
    auto& w = cfg.waveform;
    w.bandwidth = s.number("bandwidth_hz");
    w.sample_rate = s.number("sample_rate_hz");
    w.num_subcarriers = static_cast<int>(s.integer("num_subcarriers"));
    w.constellation = parse_constellation(s.text("constellation", "qam16"));
    w.target_papr_db = s.number("target_papr_db", w.target_papr_db);
    cfg.papr_iterations = static_cast<int>(s.integer("papr_iterations", cfg.papr_iterations));
    s.finish();
  }
  {
    auto s = top.child("pa");
    cfg.pa.nominal_power_dbm = s.number("nominal_power_dbm");
    cfg.pa.tx_power_dbm = s.number("tx_power_dbm", cfg.pa.nominal_power_dbm);
    cfg.pa.model.max_order = static_cast<int>(s.integer("max_order"));
    if (s.has("branches")) {
      Section b = s.child("branches");
      for (auto it = s.raw("branches").begin(); it != s.raw("branches").end(); ++it) {
        int p = 0;
        try {
          p = std::stoi(it.key());
        } catch (const std::exception&) {
          throw ConfigError("pa.branches: keys must be odd orders, got '" + it.key() + "'");
        }
        cfg.pa.model.branch_filters[p] = parse_taps(b.raw(it.key()), "pa.branches." + it.key());
      }
    }
    if (s.has("branch_files")) {
      Section b = s.child("branch_files");
      for (auto it = s.raw("branch_files").begin(); it != s.raw("branch_files").end(); ++it) {
        const int p = std::atoi(it.key().c_str());
        if (cfg.pa.model.branch_filters.contains(p))
          throw ConfigError("pa: order " + it.key() + " given both inline and as a file");
        cfg.pa.model.branch_filters[p] = read_taps(resolve(base_dir, b.text(it.key())));
      }
    }
    if (cfg.pa.model.branch_filters.empty()) throw ConfigError("pa: needs branches or branch_files");
    s.finish();
  }
  {
    auto s = top.child("channel");
    const std::string description = s.text("description", "custom");
    if (s.has("taps")) {
      cfg.channel = CouplingChannel{parse_taps(s.raw("taps"), "channel.taps"), description};
    } else if (s.has("taps_file")) {
      cfg.channel = CouplingChannel{read_taps(resolve(base_dir, s.text("taps_file"))), description};
    } else {
      cfg.channel = make_decaying_channel(s.number("isolation_db"), static_cast<int>(s.integer("num_taps", 5)),
                                          s.number("decay", 0.3), static_cast<int>(s.integer("bulk_delay_samples", 0)),
                                          description);
    }
    s.finish();
  }
  {
    auto s = top.child("lna");
    cfg.lna.gain_db = s.number("gain_db");
    cfg.lna.iip3_dbm = s.extended("iip3_dbm", std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity());
    s.finish();
  }
  if (top.has("aux")) {
    auto s = top.child("aux");
    cfg.aux.gain_db = s.number("gain_db", 0.0);
    if (s.has("taps")) cfg.aux.impulse_response = parse_taps(s.raw("taps"), "aux.taps");
    if (s.has("taps_file")) cfg.aux.impulse_response = read_taps(resolve(base_dir, s.text("taps_file")));
    s.finish();
  }
  cfg.noise.main_tx = reference_main_tx_noise();
  cfg.noise.aux_tx = reference_aux_tx_noise();
  if (top.has("noise")) {
    auto s = top.child("noise");
    cfg.noise.thermal_density_dbm_hz = s.number("thermal_density_dbm_hz", cfg.noise.thermal_density_dbm_hz);
    cfg.noise.rx_noise_figure_db = s.number("rx_noise_figure_db", cfg.noise.rx_noise_figure_db);
    cfg.noise.inject_tx_noise = s.flag("inject_tx_noise", false);
    cfg.noise.main_tx.thermal_density_dbm_hz = cfg.noise.thermal_density_dbm_hz;
    cfg.noise.aux_tx.thermal_density_dbm_hz = cfg.noise.thermal_density_dbm_hz;
    if (s.has("main_tx")) cfg.noise.main_tx = parse_noise_params(s.child("main_tx"), cfg.noise.main_tx);
    if (s.has("aux_tx")) cfg.noise.aux_tx = parse_noise_params(s.child("aux_tx"), cfg.noise.aux_tx);
    s.finish();
  }
  if (top.has("rx")) {
    auto s = top.child("rx");
    cfg.rx.duplex_offset_rad = s.number("duplex_offset_rad", 0.0);
    if (s.has("desired_power_dbm")) cfg.rx.desired_power_dbm = s.number("desired_power_dbm");
    s.finish();
  }
  {
    auto s = top.child("canceller");
    auto& c = cfg.canceller;
    c.max_order = static_cast<int>(s.integer("max_order"));
    c.filter_length = static_cast<int>(s.integer("filter_length"));
    c.orth_method = parse_orth_method(s.text("orth_method", "covariance_eigen"));
    if (s.has("delay_samples")) c.delay_samples = static_cast<int>(s.integer("delay_samples"));
    c.precursor_taps = static_cast<int>(s.integer("precursor_taps", c.precursor_taps));
    c.max_lag = static_cast<int>(s.integer("max_lag", c.max_lag));
    c.linear_filter_length = static_cast<int>(s.integer("linear_filter_length", 0));
    s.finish();
  }
  {
    auto s = top.child("learning");
    auto& l = cfg.learning;
    const auto m = s.integer("block_size");
    if (m <= 0) throw ConfigError("learning.block_size: must be positive");
    l.block_size = static_cast<std::size_t>(m);
    l.num_blocks = static_cast<int>(s.integer("num_blocks"));
    if (s.has("step_size")) {
      const auto& v = s.raw("step_size");
      if (v.is_string() && v.get<std::string>() == "auto")
        l.step_size.reset();
      else if (v.is_number())
        l.step_size = v.get<double>();
      else
        throw ConfigError("learning.step_size: expected a number or \"auto\"");
    }
    l.auto_fraction = s.number("auto_fraction", l.auto_fraction);
    if (s.has("order_step_scale")) {
      const auto& v = s.raw("order_step_scale");
      if (!v.is_array()) throw ConfigError("learning.order_step_scale: expected an array");
      for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError("learning.order_step_scale: expected numbers");
        l.order_step_scale.push_back(x.get<double>());
      }
    }
    const auto nl = s.text("error_nonlinearity", "none");
    if (nl == "none")
      l.error_nonlinearity = ErrorNonlinearity::None;
    else if (nl == "sign")
      l.error_nonlinearity = ErrorNonlinearity::Sign;
    else
      throw ConfigError("learning.error_nonlinearity: expected none or sign");
    const auto comb = s.text("combining", "additive");
    if (comb == "additive")
      l.combining = Combining::Additive;
    else if (comb == "subtractive")
      l.combining = Combining::Subtractive;
    else
      throw ConfigError("learning.combining: expected additive or subtractive");
    s.finish();
  }
  if (top.has("eval")) {
    auto s = top.child("eval");
    auto& e = cfg.eval;
    const auto n = s.integer("num_samples", static_cast<long long>(e.num_samples));
    const auto seg = s.integer("psd_segment_length", static_cast<long long>(e.psd_segment_length));
    if (n <= 0 || seg <= 0) throw ConfigError("eval: lengths must be positive");
    e.num_samples = static_cast<std::size_t>(n);
    e.psd_segment_length = static_cast<std::size_t>(seg);
    e.psd_overlap = s.number("psd_overlap", e.psd_overlap);
    e.ls_baseline = s.flag("ls_baseline", e.ls_baseline);
    s.finish();
  }
  top.finish();
  validate(cfg);
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

void validate(const ScenarioConfig& cfg) {
  WaveformSpec w = cfg.waveform;
  w.num_samples = 1;
  validate(w);
  if (cfg.papr_iterations < 0) throw ConfigError("waveform.papr_iterations: must be non-negative");
  validate(cfg.pa.model);
  if (!std::isfinite(cfg.pa.nominal_power_dbm) || !std::isfinite(cfg.pa.tx_power_dbm))
    throw ConfigError("pa: power levels must be finite");
  validate(cfg.channel);
  validate(cfg.lna);
  validate(cfg.aux);
  validate(cfg.noise.main_tx);
  validate(cfg.noise.aux_tx);
  if (!std::isfinite(cfg.noise.thermal_density_dbm_hz) || !std::isfinite(cfg.noise.rx_noise_figure_db))
    throw ConfigError("noise: densities must be finite");
  if (!std::isfinite(cfg.rx.duplex_offset_rad) || std::abs(cfg.rx.duplex_offset_rad) > kPi)
    throw ConfigError("rx.duplex_offset_rad: must lie in [-pi, pi]");
  if (cfg.rx.desired_power_dbm && !std::isfinite(*cfg.rx.desired_power_dbm))
    throw ConfigError("rx.desired_power_dbm: must be finite");

  const auto& c = cfg.canceller;
  if (c.max_order < 1 || c.max_order % 2 == 0) throw ConfigError("canceller.max_order: must be odd and positive");
  if (c.filter_length < 1) throw ConfigError("canceller.filter_length: must be positive");
  if (c.linear_filter_length < 0) throw ConfigError("canceller.linear_filter_length: must be non-negative");
  if (c.delay_samples && *c.delay_samples < 0) throw ConfigError("canceller.delay_samples: must be non-negative");
  if (c.precursor_taps < 0) throw ConfigError("canceller.precursor_taps: must be non-negative");
  if (c.max_lag < 1) throw ConfigError("canceller.max_lag: must be positive");
  if (!c.delay_samples && cfg.waveform.num_subcarriers % 2 != 0)
    throw ConfigError("delay calibration needs an even subcarrier count (or set canceller.delay_samples)");
  validate(cfg.learning, (c.max_order + 1) / 2, c.filter_length);

  if (cfg.eval.psd_segment_length > cfg.eval.num_samples)
    throw ConfigError("eval: PSD segment longer than the evaluation signal");
  if (!(cfg.eval.psd_overlap >= 0.0 && cfg.eval.psd_overlap <= 0.9))
    throw ConfigError("eval.psd_overlap: must lie in [0, 0.9]");
  if (stream_seed(cfg, SeedStream::TrainWaveform) == stream_seed(cfg, SeedStream::EvalWaveform))
    throw ConfigError("training and evaluation seeds coincide");
}

std::uint64_t stream_seed(const ScenarioConfig& cfg, SeedStream stream) {
  return derive_seed(cfg.master_seed, static_cast<std::uint64_t>(stream));
}

ComplexSignal drive_pa(const PaDrive& pa, const ComplexSignal& x_unit) {
  const double drive = db_to_amplitude(pa.tx_power_dbm - pa.nominal_power_dbm);
  ComplexSignal in = x_unit;
  for (auto& v : in.samples) v *= drive;
  auto out = pa_apply(pa.model, in);
  const double scale = std::sqrt(dbm_to_watts(pa.nominal_power_dbm));
  for (auto& v : out.samples) v *= scale;
  return out;
}

double rx_noise_density(const ScenarioConfig& cfg) {
  return cfg.noise.thermal_density_dbm_hz + cfg.noise.rx_noise_figure_db;
}

Realization synthesize(const ScenarioConfig& cfg, bool evaluation, std::size_t num_samples) {
  WaveformSpec spec = cfg.waveform;
  spec.num_samples = num_samples;
  spec.seed = stream_seed(cfg, evaluation ? SeedStream::EvalWaveform : SeedStream::TrainWaveform);
  auto x = generate_multicarrier(spec);
  x = reduce_papr(x, spec.target_papr_db, cfg.papr_iterations, spec.bandwidth);

  Realization r;
  r.leakage = leakage(cfg.channel, drive_pa(cfg.pa, x));
  r.tx = std::move(x);

  const double fs = spec.sample_rate;
  auto noise = white_noise(num_samples, rx_noise_density(cfg), fs,
                           stream_seed(cfg, evaluation ? SeedStream::EvalNoise : SeedStream::TrainNoise));
  if (cfg.noise.inject_tx_noise) {
    const auto budget = total_tx_induced_noise(cfg.noise.main_tx, cfg.noise.aux_tx);
    const auto tx_noise = white_noise(num_samples, budget.total_dbm_hz, fs,
                                      stream_seed(cfg, evaluation ? SeedStream::EvalTxNoise : SeedStream::TrainTxNoise));
    for (std::size_t n = 0; n < num_samples; ++n) noise[n] += tx_noise[n];
  }
  r.noise = ComplexSignal(std::move(noise), fs);

  RxComposition comp;
  comp.duplex_offset = cfg.rx.duplex_offset_rad;
  if (cfg.rx.desired_power_dbm) {
    WaveformSpec ds = spec;
    ds.seed = stream_seed(cfg, evaluation ? SeedStream::EvalDesired : SeedStream::TrainDesired);
    auto d = generate_multicarrier(ds);
    const double g = std::sqrt(dbm_to_watts(*cfg.rx.desired_power_dbm));
    for (auto& v : d.samples) v *= g;
    comp.desired_signal = std::move(d);
  }
  r.rx = compose_rx(r.leakage, comp, -std::numeric_limits<double>::infinity(), 0);
  for (std::size_t n = 0; n < num_samples; ++n) r.rx.samples[n] += r.noise.samples[n];
  return r;
}

DelayCalibration calibrate_delay(const ScenarioConfig& cfg) {
  DelayCalibration cal;
  if (cfg.canceller.delay_samples) {
    cal.tau = *cfg.canceller.delay_samples;
    cal.from_config = true;
    return cal;
  }
  WaveformSpec spec = cfg.waveform;
  spec.seed = stream_seed(cfg, SeedStream::Probe);
  const std::size_t period = fft_size(spec);
  const std::size_t periods =
      std::max<std::size_t>(3, (8 * static_cast<std::size_t>(cfg.canceller.max_lag)) / period + 2);
  spec.num_samples = period * periods;
  const auto probes = generate_probe_pair(spec);

  const auto leak = leakage(cfg.channel, drive_pa(cfg.pa, probes.a));
  double aux_energy = 0.0;
  for (const auto& t : cfg.aux.effective_response()) aux_energy += std::norm(t);
  ComplexSignal aux_in = probes.b;
  const double g = std::sqrt(leak.mean_power() / aux_energy);
  for (auto& v : aux_in.samples) v *= g;
  const auto injected = aux_apply(cfg.aux, aux_in);
  const auto noise = white_noise(leak.size(), rx_noise_density(cfg), spec.sample_rate,
                                 stream_seed(cfg, SeedStream::ProbeNoise));

  std::vector<cplx> at_lna(leak.size());
  for (std::size_t n = 0; n < at_lna.size(); ++n) at_lna[n] = leak.samples[n] + injected.samples[n] + noise[n];
  const ComplexSignal observed(lna_input_referred(cfg.lna, at_lna), spec.sample_rate);

  const auto obs_a = separate_probe_branch(observed, probes, ProbeBranch::A);
  const auto obs_b = separate_probe_branch(observed, probes, ProbeBranch::B);
  const auto ref_a = probes.a.slice(period, obs_a.size());
  const auto ref_b = probes.b.slice(period, obs_b.size());
  cal.main_delay = estimate_delay(obs_a, ref_a, cfg.canceller.max_lag);
  cal.aux_delay = estimate_delay(obs_b, ref_b, cfg.canceller.max_lag);
  cal.tau = std::max(0, cal.main_delay - cal.aux_delay - cfg.canceller.precursor_taps);
  return cal;
}

std::size_t history_length(int delay, int filter_length) {
  return static_cast<std::size_t>(delay) + static_cast<std::size_t>(filter_length) - 1;
}

TrainedCanceller train_canceller(const ScenarioConfig& cfg, const Realization& train, int max_order,
                                 int filter_length, int delay) {
  const auto basis = basis_functions(train.tx, max_order);
  const std::size_t first = history_length(delay, filter_length);
  const auto m = static_cast<Eigen::Index>(cfg.learning.block_size);
  if (static_cast<Eigen::Index>(first) + m > basis.data.rows())
    throw InputError("train_canceller: training realization shorter than one block");
  // S depends only on the waveform statistics, so it is fitted on the whole
  // training record; a single block leaves high-order moments noisy.
  const BasisMatrix fit_block{basis.data.bottomRows(basis.data.rows() - static_cast<Eigen::Index>(first)),
                              basis.sample_rate};
  auto orth = std::make_shared<const Orthogonalizer>(fit_orthogonalizer(fit_block, cfg.canceller.orth_method));
  const auto orth_basis = apply_orthogonalizer(*orth, basis);

  auto state = CancellerState::zeros(max_order, filter_length, delay, orth);
  auto loop = run_closed_loop(cfg.learning, std::move(state), orth_basis, train.rx, cfg.aux, cfg.lna, first);
  return TrainedCanceller{std::move(loop.state), std::move(loop.trace)};
}

ComplexSignal residual_signal(const CancellerState& state, const Realization& real, const AuxChain& aux,
                              std::size_t skip, bool subtractive) {
  if (!state.orthogonalizer) throw InputError("residual_signal: state has no orthogonalizer");
  if (skip >= real.rx.size()) throw InputError("residual_signal: nothing left after the transient");
  const auto orth_basis = apply_orthogonalizer(*state.orthogonalizer, basis_functions(real.tx, state.max_order));
  const auto c = combine(real.rx, regenerate(state, orth_basis), aux, subtractive);
  return c.slice(skip, c.size() - skip);
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  ScenarioResult result;
  result.delay = calibrate_delay(cfg);
  const int tau = result.delay.tau;
  const auto& cc = cfg.canceller;
  const int linear_length = cc.linear_filter_length > 0 ? cc.linear_filter_length : cc.filter_length;
  const std::size_t history = history_length(tau, std::max(cc.filter_length, linear_length));
  const std::size_t train_len = history + cfg.learning.block_size * static_cast<std::size_t>(cfg.learning.num_blocks);

  const auto train = synthesize(cfg, false, train_len);
  result.nonlinear = train_canceller(cfg, train, cc.max_order, cc.filter_length, tau);
  result.linear = train_canceller(cfg, train, 1, linear_length, tau);
  if (cfg.eval.ls_baseline) {
    const std::size_t first = history_length(tau, cc.filter_length) + cfg.aux.impulse_response.size() - 1;
    const ComplexSignal observed(lna_input_referred(cfg.lna, train.rx.samples), train.rx.sample_rate);
    const auto basis = apply_orthogonalizer(*result.nonlinear.state.orthogonalizer,
                                            basis_functions(train.tx, cc.max_order));
    result.ls_baseline = ls_baseline_fit(result.nonlinear.state, basis, observed, cfg.aux, first,
                                         std::min(cfg.learning.block_size, train_len - first));
  }

  // Held-out realization for every reported number.
  const std::size_t skip = history + cfg.aux.impulse_response.size();
  const auto eval = synthesize(cfg, true, cfg.eval.num_samples + skip);
  const bool subtractive = cfg.learning.combining == Combining::Subtractive;
  const auto before = eval.rx.slice(skip, cfg.eval.num_samples);
  const auto after_nl = residual_signal(result.nonlinear.state, eval, cfg.aux, skip, subtractive);
  const auto after_lin = residual_signal(result.linear.state, eval, cfg.aux, skip, subtractive);
  const auto noise = eval.noise.slice(skip, cfg.eval.num_samples);

  const auto seg = cfg.eval.psd_segment_length;
  const auto ovl = cfg.eval.psd_overlap;
  result.psd_before = welch_psd(before, seg, ovl);
  result.psd_after_linear = welch_psd(after_lin, seg, ovl);
  result.psd_after_nonlinear = welch_psd(after_nl, seg, ovl);
  const double f_hi = 0.5 * cfg.waveform.bandwidth;
  result.noise_floor_dbm = band_power(welch_psd(noise, seg, ovl), -f_hi, f_hi);
  result.passive_isolation_db = channel_isolation_db(cfg.channel);

  const double p_before = band_power(result.psd_before, -f_hi, f_hi);
  auto row = [&](std::string name, int order, int length, double power) {
    SummaryRow r;
    r.canceller = std::move(name);
    r.max_order = order;
    r.filter_length = length;
    r.band_power_dbm = power;
    r.cancellation_gain_db = p_before - power;
    r.total_isolation_db = result.passive_isolation_db + r.cancellation_gain_db;
    r.noise_floor_dbm = result.noise_floor_dbm;
    if (order > 0)
      r.complexity = complexity_report(order, length - 1, static_cast<std::int64_t>(cfg.learning.block_size),
                                       cfg.learning.num_blocks, cfg.waveform.sample_rate, cc.orth_method);
    return r;
  };
  result.summary.push_back(row("none", 0, 0, p_before));
  result.summary.push_back(row("linear", 1, linear_length, band_power(result.psd_after_linear, -f_hi, f_hi)));
  result.summary.push_back(
      row("nonlinear", cc.max_order, cc.filter_length, band_power(result.psd_after_nonlinear, -f_hi, f_hi)));
  if (result.ls_baseline) {
    const auto after_ls = residual_signal(*result.ls_baseline, eval, cfg.aux, skip, false);
    result.summary.push_back(
        row("ls_baseline", cc.max_order, cc.filter_length, band_power(welch_psd(after_ls, seg, ovl), -f_hi, f_hi)));
  }
  return result;
}

void write_artifacts(const ScenarioResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_trace_csv(out_dir / "convergence.csv", result.nonlinear.trace);
  write_trace_csv(out_dir / "convergence_linear.csv", result.linear.trace);
  write_psd_csv(out_dir / "psd_before.csv", result.psd_before);
  write_psd_csv(out_dir / "psd_after_linear.csv", result.psd_after_linear);
  write_psd_csv(out_dir / "psd_after_nonlinear.csv", result.psd_after_nonlinear);
  write_summary_csv(out_dir / "summary.csv", result.summary);
  save_state(out_dir / "canceller_state.txt", result.nonlinear.state);
}

std::filesystem::path sweep(const ScenarioConfig& cfg, const std::string& parameter, const std::vector<double>& values,
                            const std::filesystem::path& out_dir) {
  if (parameter != "tx_power_dbm" && parameter != "passive_isolation_db" && parameter != "bandwidth_hz")
    throw ConfigError("sweep: unknown parameter '" + parameter +
                      "' (expected tx_power_dbm, passive_isolation_db or bandwidth_hz)");
  if (values.empty()) throw ConfigError("sweep: no values given");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("sweep: values must be finite");
  validate(cfg);

  std::ostringstream csv;
  csv.precision(10);
  std::filesystem::path file;
  if (parameter == "passive_isolation_db") {
    file = "noise_vs_isolation.csv";
    csv << "passive_isolation_db,aux_gain_db,main_tx_dbm_hz,aux_tx_dbm_hz,total_dbm_hz\n";
    for (double iso : values) {
      NoiseParams main = cfg.noise.main_tx;
      NoiseParams aux = cfg.noise.aux_tx;
      main.passive_isolation_db = iso;
      // Aux output scaled to match the leakage it has to cancel.
      aux.tx_gain_db = main.tx_gain_db - iso - aux.coupler_factor_db;
      const auto b = total_tx_induced_noise(main, aux);
      csv << iso << ',' << aux.tx_gain_db << ',' << b.main_dbm_hz << ',' << b.aux_dbm_hz << ',' << b.total_dbm_hz
          << '\n';
    }
  } else {
    const bool power = parameter == "tx_power_dbm";
    file = power ? "isolation_vs_power.csv" : "isolation_vs_bandwidth.csv";
    csv << parameter
        << ",leakage_dbm,linear_gain_db,nonlinear_gain_db,linear_total_isolation_db,"
           "nonlinear_total_isolation_db,noise_floor_dbm\n";
    for (double v : values) {
      ScenarioConfig point = cfg;
      if (power)
        point.pa.tx_power_dbm = v;
      else
        point.waveform.bandwidth = v;
      const auto r = run_scenario(point);
      const auto& none = find_row(r, "none");
      const auto& lin = find_row(r, "linear");
      const auto& nl = find_row(r, "nonlinear");
      csv << v << ',' << none.band_power_dbm << ',' << lin.cancellation_gain_db << ',' << nl.cancellation_gain_db
          << ',' << lin.total_isolation_db << ',' << nl.total_isolation_db << ',' << r.noise_floor_dbm << '\n';
    }
  }
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / file;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << csv.str();
  return path;
}

}  // namespace sic
