#include "sic/learning.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sic/dsp.hpp"
#include "sic/errors.hpp"

namespace sic {

void validate(const LearningConfig& cfg, int num_orders, int filter_length) {
  if (cfg.num_blocks < 1) throw ConfigError("learning: need at least one block");
  if (cfg.block_size < static_cast<std::size_t>(num_orders) * static_cast<std::size_t>(filter_length))
    throw ConfigError("learning: block size must be at least the coefficient count");
  if (cfg.step_size && !(*cfg.step_size > 0.0 && std::isfinite(*cfg.step_size)))
    throw ConfigError("learning: explicit step size must be positive");
  if (!(cfg.auto_fraction > 0.0 && cfg.auto_fraction <= 1.0))
    throw ConfigError("learning: auto_fraction must lie in (0, 1]");
  if (!cfg.order_step_scale.empty()) {
    if (cfg.order_step_scale.size() != static_cast<std::size_t>(num_orders))
      throw ConfigError("learning: per-order step scales must cover every order");
    for (double s : cfg.order_step_scale)
      if (!(s > 0.0 && std::isfinite(s))) throw ConfigError("learning: per-order step scales must be positive");
  }
}

Eigen::MatrixXcd build_data_matrix(const BasisMatrix& orth_basis, const CancellerState& state,
                                   std::size_t block_start, std::size_t block_size) {
  validate(state);
  if (orth_basis.num_orders() != state.num_orders())
    throw InputError("build_data_matrix: basis order count does not match the state");
  const auto history = static_cast<std::size_t>(state.delay) + static_cast<std::size_t>(state.filter_length) - 1;
  if (block_start < history)
    throw InputError("build_data_matrix: block starts before the filter history is available");
  if (block_start + block_size > orth_basis.block_length())
    throw InputError("build_data_matrix: block runs past the end of the basis");

  const auto m = static_cast<Eigen::Index>(block_size);
  const Eigen::Index taps = state.filter_length;
  Eigen::MatrixXcd u(m, state.num_orders() * taps);
  for (Eigen::Index q = 0; q < state.num_orders(); ++q) {
    for (Eigen::Index j = 0; j < taps; ++j) {
      const auto first = static_cast<Eigen::Index>(block_start) - state.delay - j;
      u.col(q * taps + j) = orth_basis.data.col(q).segment(first, m);
    }
  }
  return u;
}

CancellerState decorrelation_update(const CancellerState& state, const Eigen::MatrixXcd& u,
                                    const Eigen::VectorXcd& e, double step_size, Combining combining,
                                    const std::vector<double>& order_step_scale) {
  validate(state);
  if (u.cols() != state.num_coefficients()) throw InputError("decorrelation_update: U has the wrong column count");
  if (u.rows() != e.size()) throw InputError("decorrelation_update: error block length does not match U");
  if (!e.allFinite()) throw NumericError("decorrelation_update: error block has non-finite entries");
  if (!order_step_scale.empty() && order_step_scale.size() != static_cast<std::size_t>(state.num_orders()))
    throw InputError("decorrelation_update: per-order step scales do not match the order count");

  Eigen::VectorXcd step = step_size * (u.adjoint() * e);
  if (!order_step_scale.empty())
    for (int q = 0; q < state.num_orders(); ++q)
      step.segment(q * state.filter_length, state.filter_length) *= order_step_scale[static_cast<std::size_t>(q)];

  CancellerState next = state;
  if (combining == Combining::Additive)
    next.coefficients -= step;
  else
    next.coefficients += step;
  return next;
}

Eigen::MatrixXcd input_correlation(const BasisMatrix& orth_basis, int filter_length) {
  if (filter_length < 1) throw ConfigError("input_correlation: filter length must be positive");
  const Eigen::Index taps = filter_length;
  const Eigen::Index rows = orth_basis.data.rows() - (taps - 1);
  if (rows <= 0) throw InputError("input_correlation: basis shorter than the filter");
  const Eigen::Index k = orth_basis.data.cols();
  Eigen::MatrixXcd u(rows, k * taps);
  for (Eigen::Index q = 0; q < k; ++q)
    for (Eigen::Index j = 0; j < taps; ++j) u.col(q * taps + j) = orth_basis.data.col(q).segment(taps - 1 - j, rows);
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(k * taps, k * taps);
  r.selfadjointView<Eigen::Lower>().rankUpdate(u.adjoint());
  r = r.selfadjointView<Eigen::Lower>();
  return r / static_cast<double>(rows);
}

double power_iteration_max_eigenvalue(const Eigen::MatrixXcd& r) {
  if (r.rows() != r.cols() || r.rows() == 0) throw InputError("power iteration: matrix must be square");
  const Eigen::Index n = r.rows();
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx{1.0 + 0.01 * static_cast<double>(i), 0.003 * static_cast<double>(i)};
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXcd w = r * v;
    const double nrm = w.norm();
    if (!(nrm > 0.0)) return 0.0;
    const double next = v.dot(w).real();
    v = w / nrm;
    if (it > 0 && std::abs(next - lambda) <= 1e-10 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  // Final Rayleigh quotient on the converged vector.
  return v.dot(r * v).real();
}

double stability_bound(const BasisMatrix& orth_basis, int max_order, int filter_length, std::size_t block_size) {
  if (orth_basis.max_order() != max_order) throw InputError("stability_bound: basis order does not match P");
  if (block_size == 0) throw ConfigError("stability_bound: block size must be positive");
  const auto r = input_correlation(orth_basis, filter_length);
  const double lmax = power_iteration_max_eigenvalue(r);
  if (!(lmax > 0.0) || !std::isfinite(lmax)) throw EstimationError("stability_bound: basis carries no power");
  return 2.0 / (static_cast<double>(block_size) * lmax);
}

double resolve_step_size(const LearningConfig& cfg, double bound, const AuxChain& aux) {
  if (cfg.step_size) return *cfg.step_size;
  double aux_energy = 0.0;
  for (const auto& t : aux.effective_response()) aux_energy += std::norm(t);
  return cfg.auto_fraction * bound / std::sqrt(aux_energy);
}

LoopResult run_closed_loop(const LearningConfig& cfg, CancellerState initial, const BasisMatrix& orth_basis,
                           const ComplexSignal& rx, const AuxChain& aux, const LNAModel& lna,
                           std::size_t first_sample) {
  validate(initial);
  validate(cfg, initial.num_orders(), initial.filter_length);
  validate(aux);
  validate(lna);
  validate(rx, "closed-loop rx");
  if (rx.size() != orth_basis.block_length()) throw InputError("run_closed_loop: rx and basis lengths differ");
  const std::size_t m_len = cfg.block_size;
  const std::size_t end = first_sample + m_len * static_cast<std::size_t>(cfg.num_blocks);
  if (end > rx.size()) throw InputError("run_closed_loop: signals too short for the requested blocks");
  const auto history = static_cast<std::size_t>(initial.delay + initial.filter_length - 1);
  if (first_sample < history) throw InputError("run_closed_loop: first block lacks filter history");

  LoopResult result{std::move(initial), {}};
  auto& state = result.state;
  auto& trace = result.trace;

  const BasisMatrix first_block{
      orth_basis.data.middleRows(static_cast<Eigen::Index>(first_sample - history),
                                 static_cast<Eigen::Index>(m_len + history)),
      orth_basis.sample_rate};
  trace.stability_bound = stability_bound(first_block, state.max_order, state.filter_length, m_len);
  trace.step_size = resolve_step_size(cfg, trace.stability_bound, aux);
  const double mu = trace.step_size;

  const auto h_aux = aux.effective_response();
  const double sign = cfg.combining == Combining::Additive ? 1.0 : -1.0;
  std::vector<cplx> canc(rx.size(), cplx{0.0, 0.0});  // full history for aux memory
  Eigen::VectorXcd c(static_cast<Eigen::Index>(m_len));

  for (int m = 0; m < cfg.num_blocks; ++m) {
    const std::size_t n0 = first_sample + static_cast<std::size_t>(m) * m_len;
    const Eigen::MatrixXcd u = build_data_matrix(orth_basis, state, n0, m_len);
    const Eigen::VectorXcd xc = u * state.coefficients;
    for (std::size_t k = 0; k < m_len; ++k) canc[n0 + k] = xc(static_cast<Eigen::Index>(k));

    double power = 0.0;
    for (std::size_t k = 0; k < m_len; ++k) {
      const std::size_t n = n0 + k;
      cplx inj{0.0, 0.0};
      for (std::size_t j = 0; j < h_aux.size() && j <= n; ++j) inj += h_aux[j] * canc[n - j];
      const cplx v = rx.samples[n] + sign * inj;
      c(static_cast<Eigen::Index>(k)) = v;
      power += std::norm(v);
    }
    power /= static_cast<double>(m_len);
    const double residual_dbm = watts_to_dbm(power);

    if (!std::isfinite(power)) {
      std::ostringstream msg;
      msg << "closed loop diverged at block " << m + 1 << ": residual is not finite (mu = " << mu
          << ", bound = " << trace.stability_bound << ")";
      throw DivergenceError(msg.str(), mu, trace.stability_bound);
    }
    trace.blocks.push_back({m + 1, residual_dbm, 0.0});
    const std::size_t window_start = trace.blocks.size() >= 5 ? trace.blocks.size() - 5 : 0;
    for (std::size_t i = window_start; i + 1 < trace.blocks.size(); ++i) {
      if (residual_dbm - trace.blocks[i].residual_dbm > 10.0) {
        std::ostringstream msg;
        msg << "closed loop diverged at block " << m + 1 << ": residual rose "
            << residual_dbm - trace.blocks[i].residual_dbm << " dB within five blocks (mu = " << mu
            << ", bound = " << trace.stability_bound << ")";
        throw DivergenceError(msg.str(), mu, trace.stability_bound);
      }
    }

    auto referred = lna_input_referred(lna, std::span<const cplx>(c.data(), m_len));
    Eigen::VectorXcd e(static_cast<Eigen::Index>(m_len));
    for (std::size_t k = 0; k < m_len; ++k) {
      cplx v = referred[k];
      if (cfg.error_nonlinearity == ErrorNonlinearity::Sign)
        v = {v.real() > 0 ? 1.0 : (v.real() < 0 ? -1.0 : 0.0), v.imag() > 0 ? 1.0 : (v.imag() < 0 ? -1.0 : 0.0)};
      e(static_cast<Eigen::Index>(k)) = v;
      if (cfg.record_sample_error) trace.sample_error_power.push_back(std::norm(v));
    }

    auto next = decorrelation_update(state, u, e, mu, cfg.combining, cfg.order_step_scale);
    trace.blocks.back().update_norm = (next.coefficients - state.coefficients).norm();
    state = std::move(next);
  }
  return result;
}

CancellerState ls_baseline_fit(const CancellerState& like, const BasisMatrix& orth_basis,
                               const ComplexSignal& observation, const AuxChain& aux, std::size_t block_start,
                               std::size_t block_size) {
  validate(like);
  validate(aux);
  validate(observation, "LS observation");
  const auto h_aux = aux.effective_response();
  const std::size_t extra = h_aux.size() - 1;
  if (block_start < extra) throw InputError("ls_baseline_fit: block starts before the aux history is available");
  if (block_start + block_size > observation.size()) throw InputError("ls_baseline_fit: block past observation end");

  // Aux-filtered data matrix: column (q, j) carries aux * psi_t_q[n - tau - j].
  const Eigen::MatrixXcd u_ext = build_data_matrix(orth_basis, like, block_start - extra, block_size + extra);
  const auto m = static_cast<Eigen::Index>(block_size);
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(m, u_ext.cols());
  for (std::size_t j = 0; j < h_aux.size(); ++j)
    u += h_aux[j] * u_ext.middleRows(static_cast<Eigen::Index>(extra - j), m);

  Eigen::VectorXcd y(m);
  for (Eigen::Index k = 0; k < m; ++k) y(k) = observation.samples[block_start + static_cast<std::size_t>(k)];

  CancellerState out = like;
  out.coefficients = -u.colPivHouseholderQr().solve(y);
  if (!out.coefficients.allFinite()) throw NumericError("ls_baseline_fit: solution is not finite");
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const ConvergenceTrace& trace) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(10);
  out << "block_index,residual_dbm,update_norm\n";
  for (const auto& b : trace.blocks) out << b.block_index << ',' << b.residual_dbm << ',' << b.update_norm << '\n';
}

}  // namespace sic
