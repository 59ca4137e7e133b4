#include "sic/signal_gen.hpp"

#include <algorithm>
#include <cmath>

#include "sic/dsp.hpp"
#include "sic/errors.hpp"

namespace sic {

namespace {

std::vector<double> levels(Constellation c) {
  switch (c) {
    case Constellation::QPSK:
      return {-1.0, 1.0};
    case Constellation::QAM16:
      return {-3.0, -1.0, 1.0, 3.0};
    case Constellation::QAM64:
      return {-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0};
  }
  return {};
}

class SymbolSource {
 public:
  SymbolSource(Constellation c, std::uint64_t seed) : levels_(levels(c)), rng_(seed) {
    double e = 0.0;
    for (double l : levels_) e += l * l;
    // Mean energy per complex point is 2 * mean(level^2).
    scale_ = 1.0 / std::sqrt(2.0 * e / static_cast<double>(levels_.size()));
  }

  cplx next() {
    const auto n = levels_.size();
    const double re = levels_[rng_.uniform_int(n)];
    const double im = levels_[rng_.uniform_int(n)];
    return {re * scale_, im * scale_};
  }

 private:
  std::vector<double> levels_;
  Rng rng_;
  double scale_ = 1.0;
};

std::size_t bin_index(int offset, std::size_t nfft) {
  const auto n = static_cast<long long>(nfft);
  return static_cast<std::size_t>(((offset % n) + n) % n);
}

void normalize_power(std::vector<cplx>& v, double target) {
  const double p = mean_power(v);
  if (p <= 0.0) return;
  const double g = std::sqrt(target / p);
  for (auto& z : v) z *= g;
}

std::vector<cplx> ofdm_symbol(std::span<const int> subcarriers, std::size_t nfft, SymbolSource& src) {
  std::vector<cplx> freq(nfft, cplx{0.0, 0.0});
  for (int k : subcarriers) freq[bin_index(k, nfft)] = src.next();
  return ifft(freq);
}

}  // namespace

void validate(const WaveformSpec& spec) {
  if (!(spec.sample_rate > 0.0)) throw ConfigError("waveform: sample rate must be positive");
  if (!(spec.bandwidth > 0.0)) throw ConfigError("waveform: bandwidth must be positive");
  if (spec.bandwidth >= spec.sample_rate)
    throw ConfigError("waveform: bandwidth must be below the sample rate");
  if (spec.num_subcarriers < 2) throw ConfigError("waveform: need at least two subcarriers");
  if (!(spec.target_papr_db > 0.0)) throw ConfigError("waveform: target PAPR must be positive");
  if (spec.num_samples == 0) throw ConfigError("waveform: num_samples must be positive");
  if (fft_size(spec) < static_cast<std::size_t>(spec.num_subcarriers) + 1)
    throw ConfigError("waveform: subcarriers do not fit within the sample rate");
}

std::size_t fft_size(const WaveformSpec& spec) {
  const double spacing = spec.bandwidth / spec.num_subcarriers;
  return static_cast<std::size_t>(std::llround(spec.sample_rate / spacing));
}

std::vector<int> active_subcarriers(const WaveformSpec& spec) {
  const int neg = spec.num_subcarriers / 2;
  const int pos = spec.num_subcarriers - neg;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(spec.num_subcarriers));
  for (int k = -neg; k <= -1; ++k) out.push_back(k);
  for (int k = 1; k <= pos; ++k) out.push_back(k);
  return out;
}

ComplexSignal generate_multicarrier(const WaveformSpec& spec) {
  validate(spec);
  const std::size_t nfft = fft_size(spec);
  const auto subcarriers = active_subcarriers(spec);
  SymbolSource src(spec.constellation, spec.seed);

  std::vector<cplx> out;
  out.reserve(spec.num_samples + nfft);
  while (out.size() < spec.num_samples) {
    auto sym = ofdm_symbol(subcarriers, nfft, src);
    out.insert(out.end(), sym.begin(), sym.end());
  }
  out.resize(spec.num_samples);
  normalize_power(out, 1.0);
  return ComplexSignal(std::move(out), spec.sample_rate);
}

double measure_papr_db(const ComplexSignal& x) {
  validate(x, "measure_papr_db");
  std::vector<double> p(x.size());
  double mean = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    p[n] = std::norm(x.samples[n]);
    mean += p[n];
  }
  mean /= static_cast<double>(x.size());
  if (mean <= 0.0) return 0.0;
  // Nearest-rank 99.9th percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.999 * static_cast<double>(p.size())));
  const std::size_t idx = std::clamp<std::size_t>(rank, 1, p.size()) - 1;
  std::nth_element(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(idx), p.end());
  return lin_to_db(p[idx] / mean);
}

ComplexSignal reduce_papr(const ComplexSignal& x, double target_papr_db, int max_iterations,
                          double bandwidth) {
  if (!(target_papr_db > 0.0)) throw ConfigError("reduce_papr: target PAPR must be positive");
  validate(x, "reduce_papr");
  if (!(bandwidth > 0.0)) throw ConfigError("reduce_papr: bandwidth must be positive");

  double best_papr = measure_papr_db(x);
  if (best_papr <= target_papr_db) return x;

  const std::size_t n = x.size();
  const double mean_in = x.mean_power();
  const double clip = std::sqrt(db_to_lin(target_papr_db) * mean_in);
  std::vector<bool> keep(n);
  for (std::size_t k = 0; k < n; ++k)
    keep[k] = std::abs(bin_frequency(k, n, x.sample_rate)) <= 0.5 * bandwidth * (1.0 + 1e-12);

  ComplexSignal best = x;
  std::vector<cplx> y = x.samples;
  for (int it = 0; it < max_iterations; ++it) {
    for (auto& z : y) {
      const double a = std::abs(z);
      if (a > clip) z *= clip / a;
    }
    auto spectrum = fft(y);
    for (std::size_t k = 0; k < n; ++k)
      if (!keep[k]) spectrum[k] = cplx{0.0, 0.0};
    y = ifft(spectrum);
    normalize_power(y, mean_in);

    ComplexSignal candidate(y, x.sample_rate);
    const double p = measure_papr_db(candidate);
    if (p < best_papr) {
      best_papr = p;
      best = std::move(candidate);
    }
    if (best_papr <= target_papr_db) break;
  }
  return best;
}

ProbePair generate_probe_pair(const WaveformSpec& spec) {
  validate(spec);
  if (spec.num_subcarriers % 2 != 0)
    throw ConfigError("generate_probe_pair: subcarrier count must be even");
  const std::size_t nfft = fft_size(spec);
  const auto active = active_subcarriers(spec);

  ProbePair pair;
  pair.period = nfft;
  for (std::size_t i = 0; i < active.size(); ++i)
    (i % 2 == 0 ? pair.subcarriers_a : pair.subcarriers_b).push_back(active[i]);

  auto make = [&](const std::vector<int>& subcarriers, std::uint64_t stream) {
    SymbolSource src(spec.constellation, derive_seed(spec.seed, stream));
    const auto sym = ofdm_symbol(subcarriers, nfft, src);
    std::vector<cplx> out(spec.num_samples);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = sym[t % nfft];
    normalize_power(out, 1.0);
    return ComplexSignal(std::move(out), spec.sample_rate);
  };
  pair.a = make(pair.subcarriers_a, 0xA);
  pair.b = make(pair.subcarriers_b, 0xB);
  return pair;
}

ComplexSignal separate_probe_branch(const ComplexSignal& observation, const ProbePair& pair,
                                    ProbeBranch branch) {
  validate(observation, "separate_probe_branch");
  if (pair.period == 0) throw InputError("separate_probe_branch: empty probe pair");
  const std::size_t periods = observation.size() / pair.period;
  if (periods < 2) throw InputError("separate_probe_branch: need at least two probe periods");

  const std::size_t len = (periods - 1) * pair.period;
  std::vector<cplx> window(observation.samples.begin() + static_cast<std::ptrdiff_t>(pair.period),
                           observation.samples.begin() + static_cast<std::ptrdiff_t>(pair.period + len));
  const auto spectrum = fft(window);
  std::vector<cplx> masked(len, cplx{0.0, 0.0});
  const auto& subcarriers = branch == ProbeBranch::A ? pair.subcarriers_a : pair.subcarriers_b;
  for (int k : subcarriers) {
    const std::size_t bin = bin_index(k * static_cast<int>(periods - 1), len);
    masked[bin] = spectrum[bin];
  }
  return ComplexSignal(ifft(masked), observation.sample_rate);
}

}  // namespace sic
