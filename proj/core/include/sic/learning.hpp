#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <vector>

#include "sic/basis.hpp"
#include "sic/canceller.hpp"
#include "sic/rf_chain.hpp"

namespace sic {

enum class ErrorNonlinearity { None, Sign };
enum class Combining { Additive, Subtractive };

struct LearningConfig {
  std::size_t block_size = 13000;      // M
  int num_blocks = 25;                 // B
  std::optional<double> step_size;     // unset: AUTO
  double auto_fraction = 0.1;          // AUTO step as a fraction of the stability bound
  // Experimental per-order multipliers on the step size; empty means equal.
  std::vector<double> order_step_scale;
  ErrorNonlinearity error_nonlinearity = ErrorNonlinearity::None;
  // Subtractive combining flips the sign of the update as well, which leaves
  // the residual trajectory unchanged.
  Combining combining = Combining::Additive;
  bool record_sample_error = false;
};

void validate(const LearningConfig& cfg, int num_orders, int filter_length);

struct BlockRecord {
  int block_index = 0;       // 1-based
  double residual_dbm = 0.0;  // LNA-input residual power during the block
  double update_norm = 0.0;   // ||w[m+1] - w[m]||
};

struct ConvergenceTrace {
  std::vector<BlockRecord> blocks;
  std::vector<double> sample_error_power;  // |e[n]|^2, only when requested
  double step_size = 0.0;
  double stability_bound = 0.0;
};

/// M x K(N+1) matrix whose row k stacks, order by order,
/// [psi_t_q[s+k-tau], psi_t_q[s+k-tau-1], ..., psi_t_q[s+k-tau-N]].
Eigen::MatrixXcd build_data_matrix(const BasisMatrix& orth_basis, const CancellerState& state,
                                   std::size_t block_start, std::size_t block_size);

/// w <- w - mu U^H e (or plus, for subtractive combining). U^H e is the
/// gradient of sum |e|^2 with respect to conj(w) under additive combining.
CancellerState decorrelation_update(const CancellerState& state, const Eigen::MatrixXcd& u,
                                    const Eigen::VectorXcd& e, double step_size,
                                    Combining combining = Combining::Additive,
                                    const std::vector<double>& order_step_scale = {});

/// Sample correlation (1/L) U^H U of the aggregate filter input vector over
/// every sample of the basis that has a full N-tap history.
Eigen::MatrixXcd input_correlation(const BasisMatrix& orth_basis, int filter_length);

/// Largest eigenvalue of a Hermitian positive semidefinite matrix by power
/// iteration (relative tolerance 1e-10, at most 10^4 iterations).
double power_iteration_max_eigenvalue(const Eigen::MatrixXcd& r);

/// 2 / (M lambda_max(R)).
double stability_bound(const BasisMatrix& orth_basis, int max_order, int filter_length, std::size_t block_size);

struct LoopResult {
  CancellerState state;
  ConvergenceTrace trace;
};

/// Closed-loop block learning. Block m (0-based) covers samples
/// [first_sample + m M, first_sample + (m + 1) M) of `rx`, the received
/// signal at the LNA input with no cancellation applied. The cancellation
/// signal is regenerated from `orth_basis` with the current coefficients,
/// injected through the aux chain, and the combined signal is observed
/// through the LNA and referred back to its input to form the error block.
///
/// first_sample must be at least delay + filter_length - 1. Throws
/// DivergenceError when the residual grows by more than 10 dB within five
/// consecutive blocks or turns non-finite.
LoopResult run_closed_loop(const LearningConfig& cfg, CancellerState initial, const BasisMatrix& orth_basis,
                           const ComplexSignal& rx, const AuxChain& aux, const LNAModel& lna,
                           std::size_t first_sample);

/// Step size used by run_closed_loop: the explicit value, or auto_fraction
/// times the stability bound referred through the aux chain's amplitude
/// gain (the root energy of its effective response).
double resolve_step_size(const LearningConfig& cfg, double bound, const AuxChain& aux);

/// One-shot least-squares comparison fit: coefficients minimizing
/// ||observation + aux * (U w)||^2 over one block, where observation is the
/// LNA output referred to its input with no cancellation applied.
CancellerState ls_baseline_fit(const CancellerState& like, const BasisMatrix& orth_basis,
                               const ComplexSignal& observation, const AuxChain& aux, std::size_t block_start,
                               std::size_t block_size);

/// block_index,residual_dbm,update_norm
void write_trace_csv(const std::filesystem::path& path, const ConvergenceTrace& trace);

}  // namespace sic
