// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sic/analysis.hpp"
#include "sic/basis.hpp"
#include "sic/canceller.hpp"
#include "sic/dsp.hpp"
#include "sic/errors.hpp"
#include "sic/learning.hpp"
#include "sic/rf_chain.hpp"
#include "sic/scenario.hpp"
#include "sic/signal_gen.hpp"

#ifndef SIC_CONFIG_DIR
#define SIC_CONFIG_DIR "configs"
#endif

using namespace sic;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[192];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ScenarioConfig shipped(const char* name) { return load_scenario(std::string(SIC_CONFIG_DIR) + "/" + name); }

const SummaryRow& row(const ScenarioResult& r, const std::string& name) {
  for (const auto& x : r.summary)
    if (x.canceller == name) return x;
  throw Error("missing summary row " + name);
}

double wrap_deg(double rad) {
  double d = rad * 180.0 / kPi;
  while (d > 180.0) d -= 360.0;
  while (d < -180.0) d += 360.0;
  return d;
}

Outcome noise_budget() {
  Outcome o;
  const auto main = reference_main_tx_noise();
  const auto aux = reference_aux_tx_noise();
  const auto b = total_tx_induced_noise(main, aux);
  o.check(std::abs(b.main_dbm_hz + 169.5) <= 0.2, fmt("main %.2f dBm/Hz", b.main_dbm_hz));
  o.check(std::abs(b.aux_dbm_hz + 168.7) <= 0.2, fmt("aux %.2f dBm/Hz", b.aux_dbm_hz));
  o.check(std::abs(b.total_dbm_hz + 166.0) <= 0.2, fmt("total %.2f dBm/Hz", b.total_dbm_hz));
  return o;
}

Outcome complexity() {
  Outcome o;
  struct Case {
    int p, n;
    OrthMethod method;
    std::int64_t flop;
    long gflops, mflop;
  };
  const Case cases[] = {
      {7, 12, OrthMethod::QR, 503, 31, 135},
      {1, 12, OrthMethod::QR, 113, 7, 34},
      {9, 10, OrthMethod::CovarianceEigen, 649, 40, 143},
      {1, 10, OrthMethod::QR, 97, 6, 29},
  };
  for (const auto& c : cases) {
    const auto r = complexity_report(c.p, c.n, 13000, 25, 61.44e6, c.method);
    const bool ok = r.regen_flop_per_sample == c.flop && std::lround(r.regen_gflops) == c.gflops &&
                    std::lround(r.learning_mflop) == c.mflop;
    o.check(ok, "P" + std::to_string(c.p) + "/N" + std::to_string(c.n) + " " +
                    std::to_string(r.regen_flop_per_sample) + " FLOP/sample " +
                    fmt("%.1f GFLOP/s %.1f MFLOP", r.regen_gflops, r.learning_mflop));
  }
  return o;
}

// Noise-free, linear PA with memory, linear LNA, scaled-impulse aux. The
// excitation fills 95% of the sample rate so every response mode the
// 13-tap filter needs is excited.
Outcome optimum_oracle() {
  Outcome o;
  ScenarioConfig cfg;
  cfg.waveform.sample_rate = 61.44e6;
  cfg.waveform.bandwidth = 0.95 * 61.44e6;
  cfg.waveform.num_subcarriers = 1140;
  cfg.pa.model.max_order = 1;
  cfg.pa.model.branch_filters[1] = {cplx{1.0, 0.0}, cplx{0.1, 0.05}};
  cfg.pa.nominal_power_dbm = 30.0;
  cfg.pa.tx_power_dbm = 30.0;
  cfg.channel = make_decaying_channel(40.0, 5, 0.3, 3, "custom");
  cfg.aux.gain_db = -6.0;
  cfg.learning.auto_fraction = 0.5;
  const int length = 13;
  const int tau = 0;
  const std::size_t history = history_length(tau, length);

  auto realize = [&](bool evaluation, std::size_t n) {
    WaveformSpec spec = cfg.waveform;
    spec.num_samples = n;
    spec.seed = stream_seed(cfg, evaluation ? SeedStream::EvalWaveform : SeedStream::TrainWaveform);
    Realization r;
    r.tx = generate_multicarrier(spec);
    r.leakage = leakage(cfg.channel, drive_pa(cfg.pa, r.tx));
    r.noise = ComplexSignal(std::vector<cplx>(n), spec.sample_rate);
    r.rx = r.leakage;
    return r;
  };
  const auto train = realize(false, history + cfg.learning.block_size * cfg.learning.num_blocks);
  const auto trained = train_canceller(cfg, train, 1, length, tau);

  const std::size_t eval_len = 131072;
  const auto eval = realize(true, eval_len + history + 1);
  const auto after = residual_signal(trained.state, eval, cfg.aux, history + 1);
  const auto before = eval.rx.slice(history + 1, after.size());
  const double half = 0.5 * cfg.waveform.bandwidth;
  const double gain = cancellation_gain(before, after, {-half, half});
  o.check(gain >= 80.0, fmt("suppression %.1f dB", gain));

  // Band interior: 20% of the occupied band kept clear of the edges.
  std::vector<double> omega;
  const auto opt = optimum_filters(cfg.pa.model, cfg.channel, cfg.aux, 512);
  for (double w : opt.omega)
    if (std::abs(w) * cfg.waveform.sample_rate / (2.0 * kPi) <= 0.8 * half) omega.push_back(w);
  const auto learned = learned_responses(trained.state, omega);
  double worst_db = 0.0;
  double worst_deg = 0.0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < opt.omega.size(); ++k) {
    if (j >= omega.size() || opt.omega[k] != omega[j]) continue;
    const cplx ref = opt.response.at(1)[k];
    const cplx got = learned.at(1)[j++];
    worst_db = std::max(worst_db, std::abs(20.0 * std::log10(std::abs(got) / std::abs(ref))));
    worst_deg = std::max(worst_deg, std::abs(wrap_deg(std::arg(got / ref))));
  }
  o.check(worst_db <= 0.5 && worst_deg <= 5.0,
          fmt("filter mismatch %.2e dB / %.2e deg over %.0f bins", worst_db, worst_deg, static_cast<double>(j)));
  return o;
}

Outcome power_separation() {
  Outcome o;
  auto cfg = shipped("fdd_duplexer.json");
  const double high = cfg.pa.tx_power_dbm;
  const double low = high - 20.0;

  auto hi_cfg = cfg;
  hi_cfg.pa.tx_power_dbm = high;
  const auto hi = run_scenario(hi_cfg);
  const double imd_margin = row(hi, "linear").band_power_dbm - hi.noise_floor_dbm;
  o.check(imd_margin >= 25.0, fmt("IMD %.1f dB above floor at %.0f dBm", imd_margin, high));
  const double sep = row(hi, "nonlinear").cancellation_gain_db - row(hi, "linear").cancellation_gain_db;
  o.check(sep >= 15.0, fmt("P%.0f beats P1 by %.2f dB at %.0f dBm", cfg.canceller.max_order, sep, high));

  auto lo_cfg = cfg;
  lo_cfg.pa.tx_power_dbm = low;
  const auto lo = run_scenario(lo_cfg);
  const double diff = row(lo, "nonlinear").cancellation_gain_db - row(lo, "linear").cancellation_gain_db;
  o.check(std::abs(diff) <= 3.0, fmt("difference %.2f dB at %.0f dBm", diff, low));
  return o;
}

Outcome lna_robustness() {
  Outcome o;
  auto cfg = shipped("ibfd_circulator.json");
  cfg.eval.ls_baseline = true;
  o.check(std::abs(cfg.lna.iip3_dbm + 7.0) < 1e-9, fmt("LNA IIP3 %.1f dBm", cfg.lna.iip3_dbm));
  const auto r = run_scenario(cfg);
  const double loop = row(r, "nonlinear").band_power_dbm;
  const double ls = row(r, "ls_baseline").band_power_dbm;
  o.check(ls - loop >= 20.0, fmt("closed loop %.1f dBm vs LS %.1f dBm (%.1f dB better)", loop, ls, ls - loop));
  return o;
}

Outcome stability() {
  Outcome o;
  auto cfg = shipped("ibfd_circulator.json");
  const auto cal = calibrate_delay(cfg);
  const auto& cc = cfg.canceller;
  const auto train = synthesize(cfg, false,
                                history_length(cal.tau, cc.filter_length) +
                                    cfg.learning.block_size * static_cast<std::size_t>(cfg.learning.num_blocks));

  auto base = cfg;
  base.learning.step_size.reset();
  base.learning.auto_fraction = 0.1;
  const auto slow = train_canceller(base, train, cc.max_order, cc.filter_length, cal.tau);
  double worst_rise = -std::numeric_limits<double>::infinity();
  const auto& blocks = slow.trace.blocks;
  for (std::size_t m = 3; m + 1 < blocks.size(); ++m)
    worst_rise = std::max(worst_rise, blocks[m + 1].residual_dbm - blocks[m].residual_dbm);
  o.check(worst_rise <= 1.0, fmt("0.1x bound: largest block-to-block rise after block 3 %.2f dB (%.1f -> %.1f dBm)",
                                 worst_rise, blocks.front().residual_dbm, blocks.back().residual_dbm));

  auto fast = cfg;
  fast.learning.step_size = 10.0 * slow.trace.stability_bound;
  bool diverged = false;
  try {
    train_canceller(fast, train, cc.max_order, cc.filter_length, cal.tau);
  } catch (const DivergenceError&) {
    diverged = true;
  }
  o.check(diverged, diverged ? "10x bound: divergence detected" : "10x bound: no divergence reported");

  // Sign errors have magnitude sqrt(2) per sample; scale the step by the
  // initial error rms over that, then halve it.
  auto sign = cfg;
  const double rms0 = std::sqrt(dbm_to_watts(blocks.front().residual_dbm));
  sign.learning.step_size = 0.5 * slow.trace.step_size * rms0 / std::sqrt(2.0);
  sign.learning.error_nonlinearity = ErrorNonlinearity::Sign;
  const auto s = train_canceller(sign, train, cc.max_order, cc.filter_length, cal.tau);
  const double drop = s.trace.blocks.front().residual_dbm - s.trace.blocks.back().residual_dbm;
  o.check(drop >= 20.0, fmt("sign error (mu %.2e): residual down %.1f dB", *sign.learning.step_size, drop));
  return o;
}

Outcome convergence_speed() {
  Outcome o;
  const auto cfg = shipped("ibfd_circulator.json");
  const auto r = run_scenario(cfg);
  const auto& blocks = r.nonlinear.trace.blocks;
  const double final_dbm = blocks.back().residual_dbm;
  int reached = 0;
  for (const auto& b : blocks)
    if (b.residual_dbm <= final_dbm + 3.0) {
      reached = b.block_index;
      break;
    }
  o.check(cfg.learning.block_size == 13000, "M = 13000");
  o.check(reached >= 1 && reached <= 30,
          fmt("within 3 dB of final %.1f dBm at block %.0f of %.0f", final_dbm, static_cast<double>(reached),
              static_cast<double>(blocks.size())));
  return o;
}

// S is fitted on a shipped scenario's training record and checked on its
// held-out evaluation realization. Single 13000-sample blocks are not used
// for the held-out side: with 7th and 9th-order terms their cross-covariance
// estimates scatter by about 0.1 on their own.
Outcome whiteness() {
  Outcome o;
  for (const char* name : {"fdd_duplexer.json", "ibfd_circulator.json"}) {
    const auto cfg = shipped(name);
    const int order = cfg.canceller.max_order;
    const std::size_t first = history_length(0, cfg.canceller.filter_length);
    const auto train = synthesize(cfg, false, first + cfg.learning.block_size * cfg.learning.num_blocks);
    const auto eval = synthesize(cfg, true, cfg.eval.num_samples);

    const auto raw = basis_functions(train.tx, order);
    const BasisMatrix fit_basis{raw.data.bottomRows(raw.data.rows() - static_cast<Eigen::Index>(first)),
                                raw.sample_rate};
    const auto orth = fit_orthogonalizer(fit_basis, OrthMethod::CovarianceEigen);
    const Eigen::MatrixXcd c = sample_covariance(fit_basis);
    const Eigen::MatrixXcd s = orth.transform;
    const Eigen::Index k = c.rows();
    const double err = (s * c * s.adjoint() - Eigen::MatrixXcd::Identity(k, k)).cwiseAbs().maxCoeff();

    Eigen::MatrixXcd ch = sample_covariance(apply_orthogonalizer(orth, basis_functions(eval.tx, order)));
    ch.diagonal().setZero();
    const double off = ch.cwiseAbs().maxCoeff();
    o.check(err < 1e-6 && off <= 0.05,
            std::string(name) + fmt(": P%.0f |SCS^H - I| %.1e, held-out off-diagonal %.4f",
                                    static_cast<double>(order), err, off));
  }
  return o;
}

Outcome micro_oracles() {
  Outcome o;
  Rng rng(424242);

  // regenerate against a direct double sum.
  {
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const int orders = 3;
      const int length = 4;
      const int tau = trial % 3;
      const Eigen::Index n = 500;
      BasisMatrix basis{Eigen::MatrixXcd(n, orders), 1.0};
      for (Eigen::Index r = 0; r < n; ++r)
        for (int q = 0; q < orders; ++q) basis.data(r, q) = rng.complex_gaussian(1.0);
      auto orth = std::make_shared<const Orthogonalizer>(Orthogonalizer{Eigen::MatrixXcd::Identity(orders, orders),
                                                                        OrthMethod::CovarianceEigen, {}});
      auto state = CancellerState::zeros(2 * orders - 1, length, tau, orth);
      for (Eigen::Index i = 0; i < state.coefficients.size(); ++i) state.coefficients(i) = rng.complex_gaussian(1.0);
      const auto out = regenerate(state, basis);
      for (Eigen::Index t = 0; t < n; ++t) {
        cplx ref{0.0, 0.0};
        for (int q = 0; q < orders; ++q)
          for (int k = 0; k < length; ++k) {
            const Eigen::Index src = t - tau - k;
            if (src >= 0) ref += state.coefficients(q * length + k) * basis.data(src, q);
          }
        worst = std::max(worst, std::abs(out.samples[static_cast<std::size_t>(t)] - ref) / std::max(1.0, std::abs(ref)));
      }
    }
    o.check(worst <= 1e-12, fmt("regenerate vs double sum %.1e", worst));
  }

  // Update direction against finite differences of sum |rx + U w|^2.
  {
    const Eigen::Index m = 20;
    const int orders = 2;
    const int length = 2;
    const Eigen::Index dim = orders * length;
    Eigen::MatrixXcd u(m, dim);
    Eigen::VectorXcd rx(m), w(dim);
    for (Eigen::Index i = 0; i < m; ++i) {
      rx(i) = rng.complex_gaussian(1.0);
      for (Eigen::Index j = 0; j < dim; ++j) u(i, j) = rng.complex_gaussian(1.0);
    }
    for (Eigen::Index j = 0; j < dim; ++j) w(j) = rng.complex_gaussian(1.0);
    auto cost = [&](const Eigen::VectorXcd& v) { return (rx + u * v).squaredNorm(); };

    auto state = CancellerState::zeros(2 * orders - 1, length, 0, nullptr);
    state.coefficients = w;
    const Eigen::VectorXcd e = rx + u * w;
    const double mu = 1e-3;
    const auto next = decorrelation_update(state, u, e, mu);
    const Eigen::VectorXcd step = (state.coefficients - next.coefficients) / mu;  // U^H e

    // d cost / d conj(w_j) = (d/dRe + j d/dIm) / 2
    const double h = 1e-6;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      Eigen::VectorXcd a = w, b = w, c = w, d = w;
      a(j) += h;
      b(j) -= h;
      c(j) += cplx{0.0, h};
      d(j) -= cplx{0.0, h};
      const double dre = (cost(a) - cost(b)) / (2.0 * h);
      const double dim_ = (cost(c) - cost(d)) / (2.0 * h);
      const cplx grad{0.5 * dre, 0.5 * dim_};
      worst = std::max(worst, std::abs(step(j) - grad) / std::abs(grad));
    }
    o.check(worst <= 1e-6, fmt("update vs finite-difference gradient %.1e", worst));
  }

  // Stability bound against a dense eigensolver on a correlated 2-order, N=1 instance.
  {
    const Eigen::Index n = 4000;
    BasisMatrix basis{Eigen::MatrixXcd(n, 2), 1.0};
    cplx prev{0.0, 0.0};
    for (Eigen::Index r = 0; r < n; ++r) {
      const cplx a = rng.complex_gaussian(1.0);
      const cplx x = a + 0.6 * prev;
      prev = a;
      basis.data(r, 0) = x;
      basis.data(r, 1) = 0.7 * x + 0.4 * rng.complex_gaussian(1.0);
    }
    const std::size_t m = 13000;
    const double bound = stability_bound(basis, 3, 2, m);
    const Eigen::MatrixXcd r = input_correlation(basis, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    const double lmax = es.eigenvalues().maxCoeff();
    const double ref = 2.0 / (static_cast<double>(m) * lmax);
    const double rel = std::abs(bound - ref) / ref;
    o.check(rel <= 1e-8, fmt("stability bound vs dense eigensolver %.1e", rel));
  }

  // Integer delay recovery at 20 dB SNR.
  {
    WaveformSpec spec;
    spec.num_samples = 20000;
    spec.seed = 99;
    const auto ref = generate_multicarrier(spec);
    bool all = true;
    std::string got;
    for (int lag : {0, 3, 7, 11, 29}) {
      std::vector<cplx> y(ref.size(), cplx{0.0, 0.0});
      for (std::size_t t = static_cast<std::size_t>(lag); t < y.size(); ++t)
        y[t] = ref.samples[t - static_cast<std::size_t>(lag)];
      const auto noise = white_noise(y.size(), watts_to_dbm(0.01) - 10.0 * std::log10(spec.sample_rate),
                                     spec.sample_rate, 1000 + static_cast<std::uint64_t>(lag));
      for (std::size_t t = 0; t < y.size(); ++t) y[t] += noise[t];
      const int est = estimate_delay(ComplexSignal(y, spec.sample_rate), ref, 64);
      all = all && est == lag;
      got += (got.empty() ? "" : ",") + std::to_string(est);
    }
    o.check(all, "delays 0,3,7,11,29 estimated as " + got);
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "noise budget", noise_budget},
      {2, "complexity tables", complexity},
      {3, "optimum-filter equivalence", optimum_oracle},
      {4, "nonlinear vs linear separation", power_separation},
      {5, "LNA-distortion robustness", lna_robustness},
      {6, "stability", stability},
      {7, "convergence speed", convergence_speed},
      {8, "orthogonalization whiteness", whiteness},
      {9, "micro-oracles", micro_oracles},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %d %s (%.2f s): %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, secs, out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
