#include <benchmark/benchmark.h>

#include "sic/analysis.hpp"
#include "sic/basis.hpp"
#include "sic/canceller.hpp"
#include "sic/learning.hpp"
#include "sic/signal_gen.hpp"

namespace {

constexpr std::size_t kBlock = 13000;

const sic::ComplexSignal& waveform() {
  static const sic::ComplexSignal x = [] {
    sic::WaveformSpec spec;
    spec.num_samples = 4 * kBlock;
    spec.seed = 1;
    return sic::reduce_papr(sic::generate_multicarrier(spec), spec.target_papr_db, 10, spec.bandwidth);
  }();
  return x;
}

void BM_BasisFunctions(benchmark::State& state) {
  const int order = static_cast<int>(state.range(0));
  const auto& x = waveform();
  for (auto _ : state) benchmark::DoNotOptimize(sic::basis_functions(x, order));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(waveform().size()));
}
BENCHMARK(BM_BasisFunctions)->Arg(1)->Arg(7)->Arg(9);

void BM_FitOrthogonalizer(benchmark::State& state) {
  const auto basis = sic::basis_functions(waveform(), static_cast<int>(state.range(0)));
  const auto method = state.range(1) == 0 ? sic::OrthMethod::CovarianceEigen : sic::OrthMethod::QR;
  for (auto _ : state) benchmark::DoNotOptimize(sic::fit_orthogonalizer(basis, method));
}
BENCHMARK(BM_FitOrthogonalizer)->Args({7, 0})->Args({7, 1})->Args({9, 0});

void BM_Regenerate(benchmark::State& state) {
  const int order = static_cast<int>(state.range(0));
  const int taps = static_cast<int>(state.range(1));
  const auto raw = sic::basis_functions(waveform(), order);
  const auto orth = sic::fit_orthogonalizer(raw, sic::OrthMethod::CovarianceEigen);
  const auto basis = sic::apply_orthogonalizer(orth, raw);
  auto s = sic::CancellerState::zeros(order, taps, 4, nullptr);
  s.coefficients.setConstant(sic::cplx{1e-3, -2e-3});
  for (auto _ : state) benchmark::DoNotOptimize(sic::regenerate(s, basis));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(waveform().size()));
}
BENCHMARK(BM_Regenerate)->Args({1, 13})->Args({7, 13})->Args({9, 11});

void BM_BlockUpdate(benchmark::State& state) {
  const int order = static_cast<int>(state.range(0));
  const int taps = static_cast<int>(state.range(1));
  const auto basis = sic::basis_functions(waveform(), order);
  const auto s = sic::CancellerState::zeros(order, taps, 0, nullptr);
  const Eigen::VectorXcd e = basis.data.col(0).segment(100, static_cast<Eigen::Index>(kBlock));
  for (auto _ : state) {
    const auto u = sic::build_data_matrix(basis, s, 100, kBlock);
    benchmark::DoNotOptimize(sic::decorrelation_update(s, u, e, 1e-6));
  }
}
BENCHMARK(BM_BlockUpdate)->Args({1, 13})->Args({7, 13})->Args({9, 11});

void BM_WelchPsd(benchmark::State& state) {
  const auto segment = static_cast<std::size_t>(state.range(0));
  const auto& x = waveform();
  for (auto _ : state) benchmark::DoNotOptimize(sic::welch_psd(x, segment, 0.5));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(waveform().size()));
}
BENCHMARK(BM_WelchPsd)->Arg(1024)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
