// Command-line front end: rebuild the runtime/language matrices, run attack
// scenarios against a chosen policy and defense, emit JSON reports.

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sigsim/harness.hpp"

namespace {

using sigsim::DefenseConfig;
using sigsim::ScenarioConfig;

// --defense none|exit-info|ledger|whitelist=SIGHUP,SIGTERM (repeatable)
DefenseConfig parse_defense_flags(const std::vector<std::string>& specs) {
  DefenseConfig d;
  for (const std::string& spec : specs) {
    if (spec == "none") {
      d = DefenseConfig{};
    } else if (spec == "exit-info") {
      d.exit_info_filter = true;
    } else if (spec == "ledger") {
      d.inter_thread_ledger = true;
    } else if (spec.rfind("whitelist=", 0) == 0 || spec == "whitelist") {
      std::set<int> allow;
      const std::string list =
          spec == "whitelist" ? "" : spec.substr(std::string("whitelist=").size());
      std::istringstream ss(list);
      std::string name;
      while (std::getline(ss, name, ',')) {
        if (name.empty()) continue;
        allow.insert(sigsim::signal_by_name(name).number);
      }
      d.signal_whitelist = std::move(allow);
    } else {
      throw CLI::ValidationError("--defense", "unknown defense: " + spec);
    }
  }
  return d;
}

void apply_config_file(const std::string& path, ScenarioConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.contains("name")) cfg.name = sigsim::scenario_from_name(j["name"].get<std::string>());
  if (j.contains("policy")) cfg.policy = sigsim::policy_from_name(j["policy"].get<std::string>());
  if (j.contains("language")) cfg.language = sigsim::language_from_name(j["language"].get<std::string>()).id;
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint32_t>();
  if (j.contains("fast")) cfg.fast = j["fast"].get<bool>();
  if (j.contains("attack")) cfg.attack = j["attack"].get<bool>();
  if (j.contains("attack_signal")) cfg.attack_signal = j["attack_signal"].get<int>();
  if (j.contains("attack_max_count")) cfg.attack_max_count = j["attack_max_count"].get<std::int64_t>();
  if (j.contains("oracle_period")) cfg.oracle_period = j["oracle_period"].get<std::uint64_t>();
  if (j.contains("dataset")) cfg.dataset_path = j["dataset"].get<std::string>();
  if (j.contains("fixtures")) cfg.fixtures_dir = j["fixtures"].get<std::string>();
  if (j.contains("defense")) {
    const auto& jd = j["defense"];
    DefenseConfig d;
    if (jd.contains("exit_info_filter")) d.exit_info_filter = jd["exit_info_filter"].get<bool>();
    if (jd.contains("inter_thread_ledger")) d.inter_thread_ledger = jd["inter_thread_ledger"].get<bool>();
    if (jd.contains("signal_whitelist") && !jd["signal_whitelist"].is_null()) {
      std::set<int> allow;
      for (const auto& n : jd["signal_whitelist"]) allow.insert(n.get<int>());
      d.signal_whitelist = std::move(allow);
    }
    cfg.defense = d;
  }
}

std::pair<int, int> parse_signal_range(const std::string& range) {
  const auto pos = range.find("..");
  if (pos == std::string::npos) {
    const int n = std::stoi(range);
    return {n, n};
  }
  return {std::stoi(range.substr(0, pos)), std::stoi(range.substr(pos + 2))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SGX signal-delivery simulator"};
  app.require_subcommand(1);

  // matrix ------------------------------------------------------------------
  auto* matrix = app.add_subcommand(
      "matrix", "rebuild the per-runtime signal matrix and diff the fixture");
  std::vector<std::string> runtimes;
  std::string signal_range;
  std::string fixtures_dir;
  matrix->add_option("--runtime", runtimes,
                     "runtime to include (repeatable; default: all seven)");
  matrix->add_option("--signal", signal_range, "signal number or N..M range");
  matrix->add_option("--fixtures", fixtures_dir, "fixtures directory");

  // languages ---------------------------------------------------------------
  auto* languages = app.add_subcommand(
      "languages", "rebuild the per-language grids and diff the fixtures");
  std::string lang_fixtures_dir;
  languages->add_option("--fixtures", lang_fixtures_dir, "fixtures directory");

  // scenario ----------------------------------------------------------------
  auto* scenario =
      app.add_subcommand("scenario", "run one end-to-end attack scenario");
  std::string name;
  std::string policy_str;
  std::string language_str;
  std::vector<std::string> defense_specs;
  std::string out_path;
  std::string dataset;
  std::string config_path;
  std::string scen_fixtures;
  std::uint32_t seed = 42;
  bool fast = false;
  bool no_attack = false;
  int attack_signal = 10;
  std::int64_t max_count = -1;
  std::uint64_t oracle_period = 0;
  scenario->add_option("--name", name, "nginx|nodejs|jsat|mlp|custom");
  scenario->add_option("--policy", policy_str, "runtime policy id");
  scenario->add_option("--language", language_str,
                       "language (custom scenario only)");
  scenario->add_option("--defense", defense_specs,
                       "none|exit-info|ledger|whitelist=SIG,... (repeatable)");
  scenario->add_option("--seed", seed, "deterministic run seed");
  scenario->add_option("--out", out_path, "write the JSON report here");
  scenario->add_option("--dataset", dataset, "banknote CSV path (mlp)");
  scenario->add_option("--config", config_path, "JSON config mirroring flags");
  scenario->add_option("--fixtures", scen_fixtures, "fixtures directory");
  scenario->add_flag("--fast", fast, "reduced-epoch mlp run for CI");
  scenario->add_flag("--no-attack", no_attack, "run the benign schedule only");
  scenario->add_option("--signal", attack_signal,
                       "signal to inject (custom scenario)");
  scenario->add_option("--max-count", max_count,
                       "bound the number of injections (mlp; 0 disables)");
  scenario->add_option("--oracle-period", oracle_period,
                       "timer-sampled window oracle period (default exact)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (matrix->parsed()) {
      sigsim::MatrixOptions opt;
      opt.fixtures_dir = fixtures_dir;
      if (!runtimes.empty()) {
        opt.runtimes.clear();
        for (const auto& r : runtimes) {
          opt.runtimes.push_back(sigsim::policy_from_name(r));
        }
      }
      if (!signal_range.empty()) {
        std::tie(opt.sig_lo, opt.sig_hi) = parse_signal_range(signal_range);
      }
      return sigsim::cmd_matrix(opt);
    }

    if (languages->parsed()) {
      return sigsim::cmd_languages(lang_fixtures_dir);
    }

    ScenarioConfig cfg;
    if (!config_path.empty()) apply_config_file(config_path, cfg);
    if (!name.empty()) cfg.name = sigsim::scenario_from_name(name);
    if (name.empty() && config_path.empty()) {
      std::cerr << "error: scenario needs --name or --config\n";
      return sigsim::kExitConfigError;
    }
    if (scenario->count("--policy") > 0) {
      cfg.policy = sigsim::policy_from_name(policy_str);
    } else if (config_path.empty()) {
      cfg.policy = sigsim::default_policy_for(cfg.name);
    }
    cfg.language = sigsim::required_language_for(
        cfg.name, scenario->count("--language") > 0
                      ? sigsim::language_from_name(language_str).id
                      : cfg.language);
    if (scenario->count("--seed") > 0 || config_path.empty()) cfg.seed = seed;
    if (scenario->count("--fast") > 0) cfg.fast = fast;
    if (no_attack) cfg.attack = false;
    if (scenario->count("--signal") > 0) cfg.attack_signal = attack_signal;
    if (max_count >= 0) cfg.attack_max_count = max_count;
    if (oracle_period > 0) cfg.oracle_period = oracle_period;
    if (!dataset.empty()) cfg.dataset_path = dataset;
    if (!scen_fixtures.empty()) cfg.fixtures_dir = scen_fixtures;
    if (!defense_specs.empty()) cfg.defense = parse_defense_flags(defense_specs);
    return sigsim::cmd_scenario(cfg, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sigsim::kExitConfigError;
  }
}
