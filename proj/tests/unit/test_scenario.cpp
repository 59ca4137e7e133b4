#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "sic/errors.hpp"
#include "sic/scenario.hpp"

using namespace sic;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs{SIC_CONFIG_DIR};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sic_test_" + name);
  fs::remove_all(dir);
  return dir;
}

// Runs the command-line tool and returns its exit status; stdout and stderr
// go to `log`.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + SIC_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::vector<double>> read_summary(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string name;
    std::getline(ss, name, ',');
    std::string cell;
    while (std::getline(ss, cell, ',')) rows[name].push_back(std::stod(cell));
  }
  return rows;
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    rows.emplace_back();
    while (std::getline(ss, cell, ',')) rows.back().push_back(std::stod(cell));
  }
  return rows;
}

nlohmann::json shipped_json(const std::string& name) { return nlohmann::json::parse(read_file(kConfigs / name)); }

// Summary columns after the name.
constexpr std::size_t kBandPower = 2;
constexpr std::size_t kGain = 3;
constexpr std::size_t kNoiseFloor = 5;

const std::vector<std::string> kArtifacts{"convergence.csv",         "convergence_linear.csv", "psd_before.csv",
                                          "psd_after_linear.csv",    "psd_after_nonlinear.csv", "summary.csv",
                                          "canceller_state.txt"};

}  // namespace

TEST_CASE("shipped configs parse and validate") {
  for (const char* name : {"fdd_duplexer.json", "ibfd_circulator.json"}) {
    const auto cfg = load_scenario(kConfigs / name);
    CHECK_NOTHROW(validate(cfg));
    CHECK(stream_seed(cfg, SeedStream::TrainWaveform) != stream_seed(cfg, SeedStream::EvalWaveform));
    CHECK(stream_seed(cfg, SeedStream::TrainNoise) != stream_seed(cfg, SeedStream::EvalNoise));
  }
  const auto fdd = load_scenario(kConfigs / "fdd_duplexer.json");
  CHECK(fdd.canceller.max_order == 7);
  CHECK(fdd.canceller.filter_length == 13);
  CHECK(channel_isolation_db(fdd.channel) == doctest::Approx(70.0));
  const auto ibfd = load_scenario(kConfigs / "ibfd_circulator.json");
  CHECK(ibfd.canceller.max_order == 9);
  CHECK(ibfd.canceller.filter_length == 11);
  CHECK(channel_isolation_db(ibfd.channel) == doctest::Approx(40.0));
}

TEST_CASE("config parse errors") {
  auto j = shipped_json("fdd_duplexer.json");
  j.erase("pa");
  CHECK_THROWS_AS(parse_scenario(j.dump(), kConfigs), ConfigError);

  j = shipped_json("fdd_duplexer.json");
  j["lna"]["gain_dbm"] = 3.0;
  CHECK_THROWS_AS(parse_scenario(j.dump(), kConfigs), ConfigError);

  j = shipped_json("fdd_duplexer.json");
  j["canceller"]["max_order"] = 6;
  CHECK_THROWS_AS(parse_scenario(j.dump(), kConfigs), ConfigError);

  CHECK_THROWS_AS(parse_scenario("{ not json", kConfigs), ConfigError);
}

TEST_CASE("training and evaluation realizations differ") {
  const auto cfg = load_scenario(kConfigs / "fdd_duplexer.json");
  const auto train = synthesize(cfg, false, 20000);
  const auto eval = synthesize(cfg, true, 20000);
  CHECK(train.tx.samples != eval.tx.samples);
  CHECK(train.noise.samples != eval.noise.samples);
  CHECK(synthesize(cfg, false, 20000).rx.samples == train.rx.samples);
}

TEST_CASE("running the FDD example writes every artifact") {
  const auto out = fresh_dir("fdd_run");
  const auto log = fs::temp_directory_path() / "sic_test_fdd_run.log";
  REQUIRE(run_cli("run --config \"" + (kConfigs / "fdd_duplexer.json").string() + "\" --out \"" + out.string() + "\"",
                  log) == kExitOk);
  for (const auto& name : kArtifacts) CHECK_MESSAGE(fs::exists(out / name), name);
  const auto rows = read_summary(out / "summary.csv");
  REQUIRE(rows.count("linear") == 1);
  REQUIRE(rows.count("nonlinear") == 1);
  CHECK(rows.at("nonlinear")[kGain] >= rows.at("linear")[kGain]);
  CHECK(read_numeric_csv(out / "convergence.csv").size() == 25);
}

TEST_CASE("the IBFD example cancels to within 10 dB of the noise floor") {
  const auto out = fresh_dir("ibfd_run");
  const auto log = fs::temp_directory_path() / "sic_test_ibfd_run.log";
  REQUIRE(run_cli("run --config \"" + (kConfigs / "ibfd_circulator.json").string() + "\" --out \"" + out.string() +
                      "\"",
                  log) == kExitOk);
  const auto rows = read_summary(out / "summary.csv");
  const auto& nl = rows.at("nonlinear");
  INFO("nonlinear residual " << nl[kBandPower] << " dBm, noise floor " << nl[kNoiseFloor] << " dBm");
  CHECK(nl[kBandPower] - nl[kNoiseFloor] <= 10.0);
}

TEST_CASE("a malformed config exits with the config status and writes nothing") {
  auto j = shipped_json("fdd_duplexer.json");
  j.erase("pa");
  const auto out = fresh_dir("malformed_out");
  j["output_dir"] = out.string();
  const auto cfg_path = fs::temp_directory_path() / "sic_test_malformed.json";
  std::ofstream(cfg_path) << j.dump(2);
  const auto log = fs::temp_directory_path() / "sic_test_malformed.log";
  CHECK(run_cli("run --config \"" + cfg_path.string() + "\"", log) == kExitConfig);
  CHECK_FALSE(fs::exists(out));
  CHECK(read_file(log).find("pa") != std::string::npos);
  fs::remove(cfg_path);
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
  const auto cfg = kConfigs / "fdd_duplexer.json";
  const auto a = fresh_dir("repro_a");
  const auto b = fresh_dir("repro_b");
  const auto c = fresh_dir("repro_c");
  const auto log = fs::temp_directory_path() / "sic_test_repro.log";
  REQUIRE(run_cli("run --config \"" + cfg.string() + "\" --out \"" + a.string() + "\"", log) == kExitOk);
  REQUIRE(run_cli("run --config \"" + cfg.string() + "\" --out \"" + b.string() + "\"", log) == kExitOk);
  for (const auto& name : kArtifacts) CHECK_MESSAGE(read_file(a / name) == read_file(b / name), name);

  REQUIRE(run_cli("run --config \"" + cfg.string() + "\" --out \"" + c.string() + "\" --seed-override 7", log) ==
          kExitOk);
  CHECK(read_file(a / "summary.csv") != read_file(c / "summary.csv"));
}

TEST_CASE("transmit power sweep separates the cancellers only at high power") {
  const auto cfg = load_scenario(kConfigs / "fdd_duplexer.json");
  const auto out = fresh_dir("power_sweep");
  const auto path = sweep(cfg, "tx_power_dbm", {15.0, 35.0}, out);
  CHECK(path.filename() == "isolation_vs_power.csv");
  const auto rows = read_numeric_csv(path);
  REQUIRE(rows.size() == 2);
  // Columns: tx_power_dbm, leakage, linear gain, nonlinear gain, ...
  CHECK(std::abs(rows[0][3] - rows[0][2]) <= 3.0);
  CHECK(rows[1][3] - rows[1][2] >= 15.0);
}

TEST_CASE("passive isolation sweep lowers main TX noise 1 dB per dB") {
  const auto cfg = load_scenario(kConfigs / "fdd_duplexer.json");
  const auto out = fresh_dir("iso_sweep");
  const auto path = sweep(cfg, "passive_isolation_db", {20.0, 30.0, 40.0, 50.0}, out);
  CHECK(path.filename() == "noise_vs_isolation.csv");
  const auto rows = read_numeric_csv(path);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i][2] - rows[i - 1][2] == doctest::Approx(-(rows[i][0] - rows[i - 1][0])).epsilon(1e-9));
}

TEST_CASE("sweep argument errors") {
  const auto cfg = load_scenario(kConfigs / "fdd_duplexer.json");
  const auto out = fresh_dir("bad_sweep");
  CHECK_THROWS_AS(sweep(cfg, "tx_power_dbm", {}, out), ConfigError);
  CHECK_THROWS_AS(sweep(cfg, "lna_gain_db", {1.0}, out), ConfigError);
  CHECK_FALSE(fs::exists(out));

  const auto log = fs::temp_directory_path() / "sic_test_bad_sweep.log";
  CHECK(run_cli("sweep --config \"" + (kConfigs / "fdd_duplexer.json").string() + "\" --out \"" + out.string() +
                    "\" --param nonsense --values 1,2",
                log) == kExitConfig);
}

TEST_CASE("calculator subcommands") {
  const auto log = fs::temp_directory_path() / "sic_test_calc.log";
  REQUIRE(run_cli("complexity --order 7 --memory 12 --block-size 13000 --blocks 25 --sample-rate 61.44e6 --method qr",
                  log) == kExitOk);
  const auto cx = read_file(log);
  CHECK(cx.find("503 FLOP/sample") != std::string::npos);
  CHECK(cx.find("135.20 MFLOP") != std::string::npos);

  REQUIRE(run_cli("noise-budget", log) == kExitOk);
  const auto nb = read_file(log);
  CHECK(nb.find("-166.08") != std::string::npos);

  CHECK(run_cli("complexity --order 4", log) == kExitConfig);
  CHECK(run_cli("frobnicate", log) == kExitConfig);
}
