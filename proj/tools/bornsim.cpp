// bornsim: command-line harness for the unitary measurement simulator.
// Every subcommand is deterministic: identical configuration produces a
// byte-identical results payload (sampling runs take an explicit seed and
// trials use derived seeds seed + trial index).

#include <chrono>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bornsim/device.hpp"
#include "bornsim/estimation.hpp"
#include "bornsim/hilbert.hpp"
#include "bornsim/measurement.hpp"
#include "bornsim/selftest.hpp"
#include "bornsim/serialize.hpp"
#include "bornsim/typeclass.hpp"

namespace {

using bornsim::cplx;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitGuard = 3;

// Effective option lookup: command-line flag if given, else the --config
// JSON document, else the built-in default. Flags override file values.
struct OptionSource {
  CLI::App* sub = nullptr;
  json file;

  bool has(const std::string& flag, const std::string& key) const {
    return sub->count(flag) > 0 || file.contains(key);
  }

  template <typename T>
  T get(const std::string& flag, const std::string& key, const T& cli_value, const T& fallback) const {
    if (sub->count(flag) > 0) return cli_value;
    if (file.contains(key)) return file.at(key).get<T>();
    return fallback;
  }

  template <typename T>
  T require(const std::string& flag, const std::string& key, const T& cli_value) const {
    if (sub->count(flag) > 0) return cli_value;
    if (file.contains(key)) return file.at(key).get<T>();
    throw std::invalid_argument("missing required parameter '" + key + "' (flag " + flag + ")");
  }

  cplx get_cplx(const std::string& flag, const std::string& key,
                const std::vector<double>& cli_value, cplx fallback) const {
    if (sub->count(flag) > 0) {
      if (cli_value.size() != 2) throw std::invalid_argument(flag + " needs two values: re im");
      return cplx{cli_value[0], cli_value[1]};
    }
    if (file.contains(key)) {
      auto pair = file.at(key).get<std::vector<double>>();
      if (pair.size() != 2) throw std::invalid_argument("config key '" + key + "' needs [re, im]");
      return cplx{pair[0], pair[1]};
    }
    return fallback;
  }
};

json cplx_json(cplx v) { return json::array({v.real(), v.imag()}); }

std::string resolve_output_path(const std::string& out) {
  std::filesystem::path p(out);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("BORNSIM_OUTPUT_DIR")) p = std::filesystem::path(dir) / p;
  }
  return p.string();
}

void write_file(const std::string& path, const std::string& bytes) {
  const std::string resolved = resolve_output_path(path);
  std::ofstream f(resolved, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output path '" + resolved + "'");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Report: config echo, results payload, version, wall time. The payload and
// config echo are deterministic; wall time rides along outside them.
struct Report {
  std::string command;
  json config;
  json results;
  std::string csv;  // payload for --format csv
  bool is_csv = false;

  std::string payload_bytes() const { return is_csv ? csv : results.dump(2) + "\n"; }

  json full(double wall_ms) const {
    return json{{"command", command},
                {"config", config},
                {"results", is_csv ? json(csv) : results},
                {"version", bornsim::kVersion},
                {"wall_ms", wall_ms}};
  }
};

int emit(const Report& report, const std::string& out_path,
         std::chrono::steady_clock::time_point started) {
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  if (!out_path.empty()) write_file(out_path, report.payload_bytes());
  std::cout << report.full(wall_ms).dump(2) << "\n";
  return kExitOk;
}

int print_checks(const std::vector<bornsim::selftest::Check>& checks) {
  bool all_pass = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name;
    if (!c.pass && !c.detail.empty()) std::cout << " | " << c.detail;
    std::cout << "\n";
    all_pass = all_pass && c.pass;
  }
  return all_pass ? kExitOk : kExitInvariant;
}

// Normalized (c0, c1) from --c0/--c1 pairs or the real shorthand --p.
std::pair<cplx, cplx> resolve_coefficients(const OptionSource& src,
                                           const std::vector<double>& c0_flag,
                                           const std::vector<double>& c1_flag, double p_flag) {
  if (src.has("--p", "p")) {
    const double p = src.get("--p", "p", p_flag, 0.5);
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("parameter 'p' must lie in [0, 1]");
    return {cplx{std::sqrt(p), 0.0}, cplx{std::sqrt(1.0 - p), 0.0}};
  }
  if (!src.has("--c0", "c0") || !src.has("--c1", "c1"))
    throw std::invalid_argument("missing required parameter 'p' (or 'c0' and 'c1')");
  const cplx c0 = src.get_cplx("--c0", "c0", c0_flag, cplx{1, 0});
  const cplx c1 = src.get_cplx("--c1", "c1", c1_flag, cplx{0, 0});
  if (std::abs(std::norm(c0) + std::norm(c1) - 1.0) > bornsim::hilbert::kTol)
    throw std::invalid_argument("parameters 'c0'/'c1' must satisfy |c0|^2 + |c1|^2 = 1");
  return {c0, c1};
}

std::array<cplx, 2> parse_pair(const std::string& name, const std::vector<double>& v) {
  if (v.size() != 4)
    throw std::invalid_argument(name + " needs four values: c0re c0im c1re c1im");
  return {cplx{v[0], v[1]}, cplx{v[2], v[3]}};
}

json tail_table(std::size_t n, double p, const std::vector<double>& eps_values) {
  json table = json::array();
  for (double eps : eps_values) {
    const double log_tail = bornsim::typeclass::log_tail_mass(n, p, eps);
    json row{{"eps", eps}, {"log_tail_mass", log_tail},
             {"tail_mass", bornsim::typeclass::tail_mass(n, p, eps)}};
    if (p - eps > 0.0 && p + eps < 1.0) {
      const double dstar = std::min(bornsim::typeclass::binary_kl(p - eps, p),
                                    bornsim::typeclass::binary_kl(p + eps, p));
      row["chernoff_log_bound"] = std::log(2.0) - static_cast<double>(n) * dstar;
    }
    table.push_back(row);
  }
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{"bornsim: unitary measurement simulator (states, types, counts)"};
  app.require_subcommand(1);
  app.fallthrough();  // --config may follow the subcommand name

  std::string config_path, out_path, format = "json";
  app.add_option("--config", config_path, "JSON file with parameter defaults (flags override)");

  // Shared per-subcommand state; CLI11 writes flags here, handlers resolve
  // against the config file afterwards.
  std::vector<double> c0_flag, c1_flag, cprime_flag, cdprime_flag, hat_flag, state_flag;
  double p_flag = 0.5, eps_flag = 0.01, level_flag = 0.95;
  std::size_t n_flag = 0, trials_flag = 1, throws_flag = 3, sites_flag = 0, failures_flag = 0;
  std::uint64_t seed_flag = 0;
  std::string input_path;
  bool emit_trajectory = false, verify = false, selftest_only = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_path, "write the results payload to this path");
    sub->add_option("--format", format, "payload format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--selftest", selftest_only, "run this module's invariant suite and exit");
    return sub;
  };

  auto* expand = add_common(app.add_subcommand("expand", "type-basis expansion of the N-fold product"));
  expand->add_option("--c0", c0_flag, "c0 as re im")->expected(2);
  expand->add_option("--c1", c1_flag, "c1 as re im")->expected(2);
  expand->add_option("--p", p_flag, "shorthand for real c0 = sqrt(p)");
  expand->add_option("--N", n_flag, "repetition count");
  expand->add_option("--eps", eps_flag, "tail half-width for the concentration table");

  auto* born = add_common(app.add_subcommand("born", "dominant-type frequency against the Born value"));
  born->add_option("--c0", c0_flag, "c0 as re im")->expected(2);
  born->add_option("--c1", c1_flag, "c1 as re im")->expected(2);
  born->add_option("--p", p_flag, "shorthand for real c0 = sqrt(p)");
  born->add_option("--N", n_flag, "repetition count");
  born->add_option("--eps", eps_flag, "tail half-width");

  auto* estimate = add_common(app.add_subcommand("estimate", "coefficient estimates from counts or sampled worlds"));
  estimate->add_option("--c0", c0_flag, "c0 as re im")->expected(2);
  estimate->add_option("--c1", c1_flag, "c1 as re im")->expected(2);
  estimate->add_option("--p", p_flag, "shorthand for real c0 = sqrt(p)");
  estimate->add_option("--N", n_flag, "runs per trial");
  estimate->add_option("--seed", seed_flag, "base seed (trial i uses seed + i)");
  estimate->add_option("--trials", trials_flag, "number of sampled worlds");
  estimate->add_option("--input", input_path, "CSV of outcome bits or JSON {\"m0\":..,\"m1\":..}");

  auto* cascade = add_common(app.add_subcommand("cascade", "two-stage measurement: branches, counts, equivalence"));
  cascade->add_option("--c", c0_flag, "first coupling: c0re c0im c1re c1im")->expected(4);
  cascade->add_option("--cprime", cprime_flag, "second coupling, A=0 branch")->expected(4);
  cascade->add_option("--cdprime", cdprime_flag, "second coupling, A=1 branch")->expected(4);
  cascade->add_option("--N", n_flag, "runs for the equivalence record");

  auto* test = add_common(app.add_subcommand("test", "hypothesis test coupling and confidence bound"));
  test->add_option("--hat", hat_flag, "hypothesis state: re im re im")->expected(4);
  test->add_option("--state", state_flag, "true state: re im re im")->expected(4);
  test->add_option("--failures", failures_flag, "observed flag-1 count");
  test->add_option("--n", n_flag, "test repetitions");
  test->add_option("--level", level_flag, "confidence level in (0,1)");

  auto* device = add_common(app.add_subcommand("device", "stable-device spin chain cycle"));
  device->add_option("--L", sites_flag, "chain length (even)");
  device->add_flag("--emit-trajectory", emit_trajectory, "payload is the trajectory CSV");
  device->add_flag("--verify", verify, "run the device invariant suite");

  auto* cat = add_common(app.add_subcommand("cat", "self-referencing cat scenario"));
  auto* dice = add_common(app.add_subcommand("dice", "sequential dice-throw branching"));
  dice->add_option("--throws", throws_flag, "number of throws (<= 8)");

  app.add_subcommand("selftest", "run every module's invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    json file_config = json::object();
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw std::invalid_argument("cannot read config file '" + config_path + "'");
      f >> file_config;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->get_name() == "selftest") return print_checks(bornsim::selftest::run_all());

    OptionSource src{sub, file_config};
    out_path = src.get("--out", "out", out_path, std::string{});
    format = src.get("--format", "format", format, std::string{"json"});

    Report report;
    report.command = sub->get_name();
    report.is_csv = (format == "csv");

    if (sub == expand || sub == born) {
      if (selftest_only) return print_checks(bornsim::selftest::run_typeclass());
      auto [c0, c1] = resolve_coefficients(src, c0_flag, c1_flag, p_flag);
      const std::size_t n = src.require("--N", "N", n_flag);
      const double eps = src.get("--eps", "eps", eps_flag, 0.01);
      const double p = std::norm(c0);
      report.config = {{"c0", cplx_json(c0)}, {"c1", cplx_json(c1)}, {"N", n},
                       {"eps", eps}, {"format", format}};

      auto dist = bornsim::typeclass::symmetric_expand(c0, c1, n);
      const auto dominant = bornsim::typeclass::dominant_type(n, p);
      json dom{{"m_star", dominant.m_star},
               {"fraction", static_cast<double>(dominant.m_star) / static_cast<double>(n)},
               {"tie", dominant.tie},
               {"tie_with", dominant.tie_with},
               {"shifted_from_floor", dominant.shifted_from_floor}};

      if (sub == expand) {
        report.csv = bornsim::serialize::type_distribution_csv(dist);
        report.results = {{"p", p},
                          {"N", n},
                          {"dominant", dom},
                          {"tails", tail_table(n, p, {eps, 0.05, 0.1})},
                          {"weight_at_m_star",
                           dist.weight_squared(static_cast<std::size_t>(dominant.m_star))}};
      } else {
        // Born value read off an explicitly premeasured pair, compared with
        // the dominant-type relative frequency.
        auto pair_state = apply(bornsim::hilbert::UnitaryOp::permutation({"S", "A"}, {0, 1, 3, 2}),
                                tensor(bornsim::hilbert::qubit_state("S", c0, c1),
                                       bornsim::hilbert::qubit_state("A", 1.0, 0.0)));
        const double born_value = bornsim::hilbert::born_probability(pair_state, "S", 0);
        const double fraction = static_cast<double>(dominant.m_star) / static_cast<double>(n);
        report.results = {{"born_value", born_value},
                          {"dominant", dom},
                          {"difference", std::abs(fraction - born_value)},
                          {"tail", tail_table(n, p, {eps})[0]}};
      }
    } else if (sub == estimate) {
      if (selftest_only) return print_checks(bornsim::selftest::run_estimation());
      if (src.has("--input", "input")) {
        const std::string path = src.get("--input", "input", input_path, std::string{});
        std::ifstream f(path);
        if (!f) throw std::invalid_argument("cannot read input file '" + path + "'");
        bornsim::estimation::CountRecord record;
        if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
          json doc;
          f >> doc;
          record.m0 = doc.at("m0").get<std::size_t>();
          record.m1 = doc.at("m1").get<std::size_t>();
        } else {
          std::vector<std::uint8_t> bits;
          std::string token;
          while (std::getline(f, token)) {
            std::stringstream line(token);
            std::string cell;
            while (std::getline(line, cell, ','))
              if (!cell.empty()) bits.push_back(static_cast<std::uint8_t>(std::stoi(cell)));
          }
          record = bornsim::estimation::count_bits(bits);
        }
        report.config = {{"input", path}, {"format", format}};
        report.results = {{"counts", {{"m0", record.m0}, {"m1", record.m1}}},
                          {"estimate", bornsim::serialize::to_json(
                                           bornsim::estimation::estimate_coefficients(record))}};
      } else {
        auto [c0, c1] = resolve_coefficients(src, c0_flag, c1_flag, p_flag);
        const std::size_t n = src.require("--N", "N", n_flag);
        const std::uint64_t seed = src.require("--seed", "seed", seed_flag);
        const std::size_t trials = src.get("--trials", "trials", trials_flag, std::size_t{1});
        if (trials == 0) throw std::invalid_argument("parameter 'trials' must be >= 1");
        const double p = std::norm(c0);
        report.config = {{"c0", cplx_json(c0)}, {"c1", cplx_json(c1)}, {"N", n},
                         {"seed", seed}, {"trials", trials}, {"format", format}};

        json rows = json::array();
        double sum_p_hat = 0.0, sum_sq_err = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
          const std::uint64_t trial_seed = bornsim::random::derive_seed(seed, t);
          auto world = bornsim::typeclass::sample_world(n, p, trial_seed);
          auto est = bornsim::estimation::estimate_coefficients(
              {world.m0, static_cast<std::size_t>(n) - world.m0});
          const double p_hat = est.c0_hat * est.c0_hat;
          sum_p_hat += p_hat;
          sum_sq_err += (p_hat - p) * (p_hat - p);
          rows.push_back({{"trial", t}, {"seed", trial_seed}, {"m0", world.m0},
                          {"estimate", bornsim::serialize::to_json(est)}});
        }
        report.results = {{"p", p},
                          {"trials", rows},
                          {"mean_p_hat", sum_p_hat / static_cast<double>(trials)},
                          {"rmse_p_hat", std::sqrt(sum_sq_err / static_cast<double>(trials))},
                          {"sampling_sd", std::sqrt(p * (1.0 - p) / static_cast<double>(n))}};
      }
    } else if (sub == cascade) {
      if (selftest_only) return print_checks(bornsim::selftest::run_measurement());
      auto get4 = [&](const char* flag, const char* key, const std::vector<double>& v) {
        if (sub->count(flag) > 0) return parse_pair(flag, v);
        if (file_config.contains(key)) return parse_pair(key, file_config.at(key).get<std::vector<double>>());
        throw std::invalid_argument(std::string("missing required parameter '") + key + "'");
      };
      bornsim::measurement::CascadeSpec spec{get4("--c", "c", c0_flag),
                                             get4("--cprime", "cprime", cprime_flag),
                                             get4("--cdprime", "cdprime", cdprime_flag)};
      const std::size_t n = src.get("--N", "N", n_flag, std::size_t{10000});
      report.config = {{"c", {cplx_json(spec.c[0]), cplx_json(spec.c[1])}},
                       {"cprime", {cplx_json(spec.c_prime[0]), cplx_json(spec.c_prime[1])}},
                       {"cdprime", {cplx_json(spec.c_dprime[0]), cplx_json(spec.c_dprime[1])}},
                       {"N", n}, {"format", format}};

      auto evo = bornsim::measurement::cascade_evolve(spec);
      auto probs = bornsim::measurement::branch_probabilities(spec);
      const double dn = static_cast<double>(n);
      auto est = bornsim::estimation::cascade_estimates(dn * probs[0], dn * probs[1],
                                                        dn * probs[2], dn * probs[3]);
      auto rec = bornsim::measurement::intermediate_readout_equivalence(spec, n);
      report.results = {
          {"branch_probabilities", {probs[0], probs[1], probs[2], probs[3]}},
          {"expected_counts", {dn * probs[0], dn * probs[1], dn * probs[2], dn * probs[3]}},
          {"estimates_from_expected_counts", bornsim::serialize::to_json(est)},
          {"final_state", bornsim::serialize::to_json(evo.stages[2].state)},
          {"intermediate_readout",
           {{"expected_m00", rec.expected_m00},
            {"expected_m01", rec.expected_m01},
            {"M0", rec.m0_selected},
            {"expected_m0_given_0", rec.expected_m0_given_0},
            {"expected_m1_given_0", rec.expected_m1_given_0},
            {"discrepancy_00", rec.discrepancy_00},
            {"discrepancy_01", rec.discrepancy_01}}}};
    } else if (sub == test) {
      if (selftest_only) return print_checks(bornsim::selftest::run_measurement());
      json results;
      report.config = {{"format", format}};
      if (src.has("--hat", "hat") || src.has("--state", "state")) {
        auto hat_pair = sub->count("--hat") ? parse_pair("--hat", hat_flag)
                                            : parse_pair("hat", file_config.at("hat").get<std::vector<double>>());
        auto state_pair = sub->count("--state")
                              ? parse_pair("--state", state_flag)
                              : parse_pair("state", file_config.at("state").get<std::vector<double>>());
        auto hat = bornsim::hilbert::qubit_state("S", hat_pair[0], hat_pair[1]);
        auto truth = bornsim::hilbert::qubit_state("S", state_pair[0], state_pair[1]);
        report.config["hat"] = {cplx_json(hat_pair[0]), cplx_json(hat_pair[1])};
        report.config["state"] = {cplx_json(state_pair[0]), cplx_json(state_pair[1])};
        results["flag1_probability"] = bornsim::measurement::test_protocol(hat, truth);
      }
      const std::size_t n = src.get("--n", "n", n_flag, std::size_t{100});
      const std::size_t failures = src.get("--failures", "failures", failures_flag, std::size_t{0});
      const double level = src.get("--level", "level", level_flag, 0.95);
      report.config["n"] = n;
      report.config["failures"] = failures;
      report.config["level"] = level;
      results["confidence"] = {{"failures", failures},
                               {"n", n},
                               {"level", level},
                               {"upper_bound", bornsim::estimation::test_confidence(failures, n, level)}};
      report.results = std::move(results);
    } else if (sub == device) {
      if (selftest_only || verify) {
        const int code = print_checks(bornsim::selftest::run_device());
        if (selftest_only || code != kExitOk) return code;
      }
      const std::size_t sites = src.require("--L", "L", sites_flag);
      report.config = {{"L", sites}, {"format", format},
                       {"emit_trajectory", emit_trajectory}, {"verify", verify}};
      auto t = bornsim::device::run_cycle(sites);
      std::size_t exchanges = 0;
      for (const auto& m : t.moves) exchanges += (m.kind == bornsim::device::MoveKind::Exchange);
      bool absorbed_stable = true;
      for (std::size_t i = 2; i + 1 < t.configs.size(); ++i)
        absorbed_stable = absorbed_stable && (bornsim::device::coarse_grain(t.configs[i]) == 1);
      report.results = {{"L", sites},
                        {"cycle_length", bornsim::device::cycle_length(sites)},
                        {"configs", t.configs.size()},
                        {"exchanges", exchanges},
                        {"closed_on_post_emission", t.configs.back() == t.configs[1]},
                        {"absorbed_label_stable", absorbed_stable}};
      if (emit_trajectory) {
        report.is_csv = true;
        report.csv = bornsim::serialize::trajectory_csv(t);
      }
    } else if (sub == cat) {
      if (selftest_only) return print_checks(bornsim::selftest::run_measurement());
      report.config = {{"format", format}};
      auto scenario = bornsim::measurement::cat_scenario();
      report.results = {{"final_state", bornsim::serialize::to_json(scenario.final_state)},
                        {"relative_alive", bornsim::serialize::to_json(scenario.relative_alive)},
                        {"relative_omega", bornsim::serialize::to_json(scenario.relative_omega)},
                        {"p_alive", scenario.p_alive},
                        {"levels", {{"C", {"L", "D"}}, {"Cm", {"omega", "alive"}}}}};
    } else if (sub == dice) {
      if (selftest_only) return print_checks(bornsim::selftest::run_measurement());
      const std::size_t throws = src.get("--throws", "throws", throws_flag, std::size_t{3});
      report.config = {{"throws", throws}, {"format", format}};
      auto scenario = bornsim::measurement::dice_scenario(throws);
      report.results = {{"branch_count", scenario.branch_count},
                        {"expected_amplitude", scenario.expected_amplitude},
                        {"max_branch_deviation", scenario.max_branch_deviation},
                        {"max_off_support_amplitude", scenario.max_off_support_amplitude},
                        {"stage_branch_counts", scenario.stage_branch_counts}};
    }

    return emit(report, out_path, started);
  } catch (const bornsim::ResourceLimitError& e) {
    std::cerr << "resource guard: " << e.what() << "\n";
    return kExitGuard;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return kExitInvariant;
  }
}
