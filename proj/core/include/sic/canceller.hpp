#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <memory>
#include <vector>

#include "sic/basis.hpp"
#include "sic/rf_chain.hpp"
#include "sic/signal.hpp"

namespace sic {

/// Cancellation filter coefficients for all orders, stacked order by order:
/// index q * filter_length + k holds tap k of the q-th (orthogonalized) order.
struct CancellerState {
  Eigen::VectorXcd coefficients;
  int filter_length = 1;  // N + 1
  int max_order = 1;      // P
  int delay = 0;          // tau, samples
  std::shared_ptr<const Orthogonalizer> orthogonalizer;

  int num_orders() const noexcept { return (max_order + 1) / 2; }
  Eigen::Index num_coefficients() const noexcept {
    return static_cast<Eigen::Index>(num_orders()) * filter_length;
  }

  /// All-zero coefficients.
  static CancellerState zeros(int max_order, int filter_length, int delay,
                              std::shared_ptr<const Orthogonalizer> orth);
};

void validate(const CancellerState& state);

/// x_canc[n] = sum_q sum_k w[q, k] psi_t_q[n - tau - k], where psi_t is the
/// orthogonalized basis; samples before the start of the block count as zero.
ComplexSignal regenerate(const CancellerState& state, const BasisMatrix& orth_basis);

/// Combiner output rx + aux * canc (additive), or rx - aux * canc when
/// `subtractive` is set.
ComplexSignal combine(const ComplexSignal& rx, const ComplexSignal& canc, const AuxChain& aux,
                      bool subtractive = false);

struct OptimumFilters {
  std::vector<double> omega;                   // -pi + 2 pi k / num_freq
  std::map<int, std::vector<cplx>> response;   // per odd order, -H_p / H_aux
};

/// Per-order optimum cancellation responses on a uniform frequency grid.
/// Throws SingularityError if the aux response drops below 1e-9 anywhere.
OptimumFilters optimum_filters(const PHModel& pa, const CouplingChannel& channel, const AuxChain& aux,
                               int num_freq);

/// Learned filters mapped back to raw basis orders: row p holds the taps
/// applied to psi_p (lag tau + k for column k).
Eigen::MatrixXcd to_raw_filters(const CancellerState& state);

/// Frequency response of each raw-order filter at the given frequencies,
/// including the tau bulk delay.
std::map<int, std::vector<cplx>> learned_responses(const CancellerState& state,
                                                   const std::vector<double>& omega);

/// Integer lag maximizing |sum_n rx[n] conj(ref[n - lag])| over
/// |lag| <= max_lag; equal peaks resolve to the lag nearest zero.
int estimate_delay(const ComplexSignal& rx_observation, const ComplexSignal& reference, int max_lag);

void save_state(const std::filesystem::path& path, const CancellerState& state);
CancellerState load_state(const std::filesystem::path& path);

}  // namespace sic
