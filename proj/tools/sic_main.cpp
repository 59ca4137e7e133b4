// sic: scenario runner, sweeps and the two closed-form calculators.

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sic/errors.hpp"
#include "sic/scenario.hpp"

namespace {

sic::ScenarioConfig load(const std::string& path, const std::optional<std::uint64_t>& seed,
                         const std::string& out) {
  auto cfg = sic::load_scenario(path);
  if (seed) cfg.master_seed = *seed;
  if (!out.empty()) cfg.output_dir = out;
  return cfg;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw sic::ConfigError("sweep: cannot parse value '" + item + "'");
    v.push_back(x);
  }
  return v;
}

void print_summary(const sic::ScenarioResult& r) {
  std::printf("delay: tau = %d samples (main %d, aux %d%s)\n", r.delay.tau, r.delay.main_delay, r.delay.aux_delay,
              r.delay.from_config ? ", from config" : "");
  std::printf("passive isolation %.1f dB, in-band noise floor %.1f dBm\n", r.passive_isolation_db, r.noise_floor_dbm);
  std::printf("%-12s %5s %5s %12s %10s %14s %10s\n", "canceller", "P", "taps", "power[dBm]", "gain[dB]",
              "isolation[dB]", "GFLOP/s");
  for (const auto& row : r.summary)
    std::printf("%-12s %5d %5d %12.2f %10.2f %14.2f %10.2f\n", row.canceller.c_str(), row.max_order,
                row.filter_length, row.band_power_dbm, row.cancellation_gain_db, row.total_isolation_db,
                row.complexity.regen_gflops);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive nonlinear RF self-interference cancellation simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Calibrate, train and evaluate one scenario");
  run->add_option("--config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides output_dir)");
  run->add_option("--seed-override", seed, "Replace master_seed");

  std::string parameter;
  std::string values;
  auto* sw = app.add_subcommand("sweep", "Repeat a scenario over one parameter");
  sw->add_option("--config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  sw->add_option("--out", out, "Output directory (overrides output_dir)");
  sw->add_option("--seed-override", seed, "Replace master_seed");
  sw->add_option("--param", parameter, "tx_power_dbm | passive_isolation_db | bandwidth_hz")->required();
  sw->add_option("--values", values, "Comma-separated values")->required();

  int order = 7;
  int memory = 12;
  std::int64_t block = 13000;
  int blocks = 25;
  double rate = 61.44e6;
  std::string method = "qr";
  auto* cx = app.add_subcommand("complexity", "FLOP counts of regeneration and learning");
  cx->add_option("--order", order, "Highest nonlinearity order P (odd)");
  cx->add_option("--memory", memory, "Filter memory N (taps minus one)");
  cx->add_option("--block-size", block, "Learning block size M");
  cx->add_option("--blocks", blocks, "Number of learning blocks B");
  cx->add_option("--sample-rate", rate, "Sample rate in Hz");
  cx->add_option("--method", method, "qr | covariance_eigen");

  auto* nb = app.add_subcommand("noise-budget", "TX-induced noise at the receiver input");
  nb->add_option("--config", config, "Take the noise section from a scenario file")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? sic::kExitOk : sic::kExitConfig;
  }

  try {
    if (*run) {
      const auto cfg = load(config, seed, out);
      const auto result = sic::run_scenario(cfg);
      sic::write_artifacts(result, cfg.output_dir);
      print_summary(result);
      std::printf("artifacts written to %s\n", cfg.output_dir.string().c_str());
    } else if (*sw) {
      const auto cfg = load(config, seed, out);
      const auto path = sic::sweep(cfg, parameter, parse_values(values), cfg.output_dir);
      std::printf("wrote %s\n", path.string().c_str());
    } else if (*cx) {
      const auto r = sic::complexity_report(order, memory, block, blocks, rate, sic::parse_orth_method(method));
      std::printf("basis generation   %lld FLOP/sample\n", static_cast<long long>(r.basis_gen_flop_per_sample));
      std::printf("orthogonalization  %lld FLOP/sample\n", static_cast<long long>(r.orth_flop_per_sample));
      std::printf("filtering          %lld FLOP/sample\n", static_cast<long long>(r.filtering_flop_per_sample));
      std::printf("regeneration       %lld FLOP/sample = %.2f GFLOP/s\n",
                  static_cast<long long>(r.regen_flop_per_sample), r.regen_gflops);
      std::printf("learning           %.2f MFLOP\n", r.learning_mflop);
    } else if (*nb) {
      sic::NoiseParams main_tx = sic::reference_main_tx_noise();
      sic::NoiseParams aux_tx = sic::reference_aux_tx_noise();
      if (!config.empty()) {
        const auto cfg = sic::load_scenario(config);
        main_tx = cfg.noise.main_tx;
        aux_tx = cfg.noise.aux_tx;
      }
      const auto b = sic::total_tx_induced_noise(main_tx, aux_tx);
      std::printf("quantization noise  %8.2f dBm/Hz (main DAC)\n", sic::quantization_noise_density(main_tx));
      std::printf("main TX output      %8.2f dBm/Hz\n", sic::tx_noise_density(main_tx));
      std::printf("aux TX output       %8.2f dBm/Hz\n", sic::tx_noise_density(aux_tx));
      std::printf("main TX at RX input %8.2f dBm/Hz\n", b.main_dbm_hz);
      std::printf("aux TX at RX input  %8.2f dBm/Hz\n", b.aux_dbm_hz);
      std::printf("total               %8.2f dBm/Hz\n", b.total_dbm_hz);
    }
  } catch (const sic::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return sic::kExitConfig;
  } catch (const sic::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return sic::kExitDivergence;
  } catch (const sic::DegeneracyError& e) {
    std::cerr << "degenerate basis: " << e.what() << '\n';
    return sic::kExitDegeneracy;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sic::kExitError;
  }
  return sic::kExitOk;
}
