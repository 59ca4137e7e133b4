#include "sic/canceller.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sic/dsp.hpp"
#include "sic/errors.hpp"

namespace sic {

CancellerState CancellerState::zeros(int max_order, int filter_length, int delay,
                                     std::shared_ptr<const Orthogonalizer> orth) {
  CancellerState s;
  s.max_order = max_order;
  s.filter_length = filter_length;
  s.delay = delay;
  s.orthogonalizer = std::move(orth);
  if (max_order >= 1 && filter_length >= 1)
    s.coefficients = Eigen::VectorXcd::Zero(s.num_coefficients());
  validate(s);
  return s;
}

void validate(const CancellerState& s) {
  if (s.max_order < 1 || s.max_order % 2 == 0) throw ConfigError("canceller: max order must be odd and positive");
  if (s.filter_length < 1) throw ConfigError("canceller: filter length must be positive");
  if (s.delay < 0) throw ConfigError("canceller: delay must be non-negative");
  if (s.coefficients.size() != s.num_coefficients())
    throw InputError("canceller: expected " + std::to_string(s.num_coefficients()) + " coefficients, have " +
                     std::to_string(s.coefficients.size()));
  if (s.orthogonalizer && s.orthogonalizer->transform.rows() != s.num_orders())
    throw InputError("canceller: orthogonalizer dimension does not match the order count");
}

ComplexSignal regenerate(const CancellerState& state, const BasisMatrix& orth_basis) {
  validate(state);
  if (orth_basis.num_orders() != state.num_orders())
    throw InputError("regenerate: basis has " + std::to_string(orth_basis.num_orders()) + " orders, state has " +
                     std::to_string(state.num_orders()));
  const auto len = static_cast<Eigen::Index>(orth_basis.block_length());
  std::vector<cplx> out(static_cast<std::size_t>(len), cplx{0.0, 0.0});
  for (int q = 0; q < state.num_orders(); ++q) {
    for (int k = 0; k < state.filter_length; ++k) {
      const cplx w = state.coefficients(q * state.filter_length + k);
      if (w == cplx{0.0, 0.0}) continue;
      const Eigen::Index lag = state.delay + k;
      for (Eigen::Index n = lag; n < len; ++n) out[static_cast<std::size_t>(n)] += w * orth_basis.data(n - lag, q);
    }
  }
  return ComplexSignal(std::move(out), orth_basis.sample_rate);
}

ComplexSignal combine(const ComplexSignal& rx, const ComplexSignal& canc, const AuxChain& aux, bool subtractive) {
  validate(rx, "combine rx");
  validate(canc, "combine canc");
  if (rx.size() != canc.size()) throw InputError("combine: rx and cancellation lengths differ");
  if (rx.sample_rate != canc.sample_rate) throw InputError("combine: sample rates differ");
  const auto injected = aux_apply(aux, canc);
  std::vector<cplx> c = rx.samples;
  const double sign = subtractive ? -1.0 : 1.0;
  for (std::size_t n = 0; n < c.size(); ++n) c[n] += sign * injected.samples[n];
  return ComplexSignal(std::move(c), rx.sample_rate);
}

OptimumFilters optimum_filters(const PHModel& pa, const CouplingChannel& channel, const AuxChain& aux,
                               int num_freq) {
  validate(pa);
  validate(channel);
  validate(aux);
  if (num_freq < 1) throw ConfigError("optimum_filters: need at least one frequency");
  const auto h_aux = aux.effective_response();
  OptimumFilters out;
  out.omega.resize(static_cast<std::size_t>(num_freq));
  for (int k = 0; k < num_freq; ++k) out.omega[static_cast<std::size_t>(k)] = -kPi + 2.0 * kPi * k / num_freq;

  std::vector<cplx> aux_resp(out.omega.size());
  for (std::size_t k = 0; k < out.omega.size(); ++k) {
    aux_resp[k] = frequency_response(h_aux, out.omega[k]);
    if (std::abs(aux_resp[k]) < 1e-9) {
      std::ostringstream msg;
      msg << "optimum_filters: aux response vanishes at omega = " << out.omega[k];
      throw SingularityError(msg.str(), out.omega[k]);
    }
  }
  for (const auto& [p, f] : pa.branch_filters) {
    auto& resp = out.response[p];
    resp.resize(out.omega.size());
    for (std::size_t k = 0; k < out.omega.size(); ++k) {
      const double w = out.omega[k];
      const cplx hp = frequency_response(channel.impulse_response, w) * frequency_response(f, w);
      resp[k] = -hp / aux_resp[k];
    }
  }
  return out;
}

Eigen::MatrixXcd to_raw_filters(const CancellerState& state) {
  validate(state);
  const Eigen::Index k = state.num_orders();
  Eigen::MatrixXcd w(k, state.filter_length);
  for (Eigen::Index q = 0; q < k; ++q)
    w.row(q) = state.coefficients.segment(q * state.filter_length, state.filter_length).transpose();
  if (!state.orthogonalizer) return w;
  return state.orthogonalizer->transform.transpose() * w;
}

std::map<int, std::vector<cplx>> learned_responses(const CancellerState& state, const std::vector<double>& omega) {
  const Eigen::MatrixXcd raw = to_raw_filters(state);
  std::map<int, std::vector<cplx>> out;
  for (Eigen::Index q = 0; q < raw.rows(); ++q) {
    std::vector<cplx> taps(raw.cols());
    for (Eigen::Index j = 0; j < raw.cols(); ++j) taps[static_cast<std::size_t>(j)] = raw(q, j);
    auto& resp = out[static_cast<int>(2 * q + 1)];
    resp.reserve(omega.size());
    for (double w : omega) resp.push_back(frequency_response(taps, w, state.delay));
  }
  return out;
}

int estimate_delay(const ComplexSignal& rx, const ComplexSignal& ref, int max_lag) {
  validate(rx, "estimate_delay observation");
  validate(ref, "estimate_delay reference");
  if (max_lag < 0) throw ConfigError("estimate_delay: max lag must be non-negative");
  const std::size_t len = std::min(rx.size(), ref.size());
  if (2 * static_cast<std::size_t>(max_lag) >= len)
    throw InputError("estimate_delay: max lag must be below half the signal length");
  if (mean_power(rx.view()) == 0.0 || mean_power(ref.view()) == 0.0)
    throw EstimationError("estimate_delay: an input is identically zero");

  auto correlation = [&](int lag) {
    cplx acc{0.0, 0.0};
    const long lo = std::max<long>(0, lag);
    const long hi = std::min<long>(static_cast<long>(len), static_cast<long>(len) + lag);
    for (long n = lo; n < hi; ++n)
      acc += rx.samples[static_cast<std::size_t>(n)] * std::conj(ref.samples[static_cast<std::size_t>(n - lag)]);
    return std::abs(acc);
  };

  // Visit lags by increasing magnitude so a strict comparison keeps the
  // smallest lag on ties.
  int best_lag = 0;
  double best = correlation(0);
  for (int m = 1; m <= max_lag; ++m) {
    for (int lag : {-m, m}) {
      const double c = correlation(lag);
      if (c > best) {
        best = c;
        best_lag = lag;
      }
    }
  }
  if (!(best > 0.0)) throw EstimationError("estimate_delay: cross-correlation is zero at every lag");
  return best_lag;
}

void save_state(const std::filesystem::path& path, const CancellerState& state) {
  validate(state);
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "max_order " << state.max_order << '\n'
      << "filter_length " << state.filter_length << '\n'
      << "delay " << state.delay << '\n'
      << "coefficients " << state.coefficients.size() << '\n';
  for (Eigen::Index i = 0; i < state.coefficients.size(); ++i)
    out << state.coefficients(i).real() << ' ' << state.coefficients(i).imag() << '\n';
  if (state.orthogonalizer) write_orthogonalizer(out, *state.orthogonalizer);
}

CancellerState load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  auto expect = [&](const char* key) {
    std::string k;
    long v = 0;
    if (!(in >> k >> v) || k != key) throw ConfigError(path.string() + ": expected '" + key + "'");
    return v;
  };
  CancellerState s;
  s.max_order = static_cast<int>(expect("max_order"));
  s.filter_length = static_cast<int>(expect("filter_length"));
  s.delay = static_cast<int>(expect("delay"));
  const long count = expect("coefficients");
  if (count < 0) throw ConfigError(path.string() + ": negative coefficient count");
  s.coefficients.resize(count);
  for (long i = 0; i < count; ++i) {
    double re = 0.0;
    double im = 0.0;
    if (!(in >> re >> im)) throw ConfigError(path.string() + ": truncated coefficients");
    s.coefficients(i) = {re, im};
  }
  in >> std::ws;
  if (!in.eof()) s.orthogonalizer = std::make_shared<const Orthogonalizer>(read_orthogonalizer(in));
  validate(s);
  return s;
}

}  // namespace sic
