#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "sigsim/executor.hpp"
#include "sigsim/fixtures.hpp"
#include "sigsim/scenario.hpp"

namespace sigsim {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;          // simulation matched expectations
inline constexpr int kExitDiverged = 1;    // ran fine, results diverged
inline constexpr int kExitConfigError = 2; // bad config or missing fixture

/// Resolves an input path: explicit value wins, then the relative location,
/// then the same location under the build-time project root.
inline std::filesystem::path resolve_input(const std::string& given,
                                           const std::string& fallback_rel) {
  if (!given.empty()) return given;
  if (std::filesystem::exists(fallback_rel)) return fallback_rel;
#ifdef SIGSIM_PROJECT_ROOT
  return std::filesystem::path(SIGSIM_PROJECT_ROOT) / fallback_rel;
#else
  return fallback_rel;
#endif
}

/// One cell of the runtime matrix: register a handler for the signal, inject
/// it from the runtime-appropriate source, and classify what happened.
inline Cell simulate_matrix_cell(PolicyId id, int signal_number) {
  EnclaveProcess proc = make_enclave_process(id);
  EnclaveThread& t = proc.main_thread();
  const SignalSpec s = signal_by_number(signal_number);
  t.register_handler(s, 1);  // refused for SIGKILL/SIGSTOP
  if (id == PolicyId::OpenEnclave) t.enable_host_signal(s);

  InjectionEvent ev(s, SigInfo(s, SigOriginCode::user_kill, kAttackerActor),
                    matrix_source(id), t.tid());
  const DeliveryTrace trace = deliver(policy(id), ev, proc);
  switch (trace.outcome().kind()) {
    case OutcomeKind::HandlerExecuted: return Cell::H;
    case OutcomeKind::Crash: return Cell::C;
    case OutcomeKind::NoEffect: return Cell::N;
    default:
      throw std::logic_error("unexpected outcome in an undefended matrix run");
  }
}

/// Per-signal behavior of a language under a plain OS when the test program
/// (tries to) register handlers for everything.
inline Cell simulate_language_cell(const LanguageModel& lang,
                                   int signal_number) {
  switch (lang.mode) {
    case SignalMode::None:
      return Cell::C;  // any delivery kills the program
    case SignalMode::Explicit:
      if (signal_number == 9 || signal_number == 19) {
        return Cell::C;  // kernel refuses the registration
      }
      if (lang.id == LanguageId::Go && signal_number == 27) {
        return Cell::N;  // runtime keeps the profiling signal
      }
      return Cell::H;
    case SignalMode::Implicit:
      // No registration construct; behavior is whatever the runtime's own
      // handlers and exception conversion produce (measured, not derivable).
      return lang.behavior(signal_number);
  }
  return Cell::C;
}

struct MatrixOptions {
  std::vector<PolicyId> runtimes{kVulnerablePolicies.begin(),
                                 kVulnerablePolicies.end()};
  int sig_lo = kMinSignal;
  int sig_hi = kMaxSignal;
  std::string fixtures_dir;
};

namespace detail {

inline void print_grid_header(std::ostream& os, int lo, int hi) {
  os << std::left << std::setw(13) << "runtime";
  for (int n = lo; n <= hi; ++n) os << std::right << std::setw(3) << n;
  os << '\n';
}

inline void print_diffs(std::ostream& os, const std::vector<CellDiff>& diffs) {
  for (const auto& d : diffs) {
    os << "diff: " << d.row << " signal " << d.signal << " expected "
       << d.expected << " got " << d.actual << '\n';
  }
}

}  // namespace detail

/// Recomputes the runtime matrix and diffs it against the shipped fixture.
inline int cmd_matrix(const MatrixOptions& opt, std::ostream& os = std::cout) {
  if (opt.sig_lo < kMinSignal || opt.sig_hi > kMaxSignal ||
      opt.sig_lo > opt.sig_hi) {
    os << "error: signal range must lie within 1..31\n";
    return kExitConfigError;
  }
  CellGrid fixture;
  try {
    fixture = load_cell_grid(
        resolve_input(opt.fixtures_dir, "fixtures") / "table2.csv");
  } catch (const FixtureError& e) {
    os << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  CellGrid actual;
  for (PolicyId id : opt.runtimes) {
    SignalRowCells row{};
    for (int n = kMinSignal; n <= kMaxSignal; ++n) {
      row[static_cast<std::size_t>(n - 1)] = simulate_matrix_cell(id, n);
    }
    actual.row_names.emplace_back(policy_name(id));
    actual.rows.push_back(row);
  }

  detail::print_grid_header(os, opt.sig_lo, opt.sig_hi);
  for (std::size_t i = 0; i < actual.row_names.size(); ++i) {
    os << std::left << std::setw(13) << actual.row_names[i];
    for (int n = opt.sig_lo; n <= opt.sig_hi; ++n) {
      os << std::right << std::setw(3)
         << cell_char(actual.rows[i][static_cast<std::size_t>(n - 1)]);
    }
    os << '\n';
  }

  std::vector<CellDiff> diffs;
  try {
    diffs = diff_grids(fixture, actual, opt.sig_lo, opt.sig_hi);
  } catch (const std::out_of_range& e) {
    os << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  const std::size_t cells =
      actual.row_names.size() * static_cast<std::size_t>(opt.sig_hi - opt.sig_lo + 1);
  os << (cells - diffs.size()) << '/' << cells << " cells match table2.csv\n";
  detail::print_diffs(os, diffs);
  return diffs.empty() ? kExitOk : kExitDiverged;
}

/// Recomputes the per-language behavior and default-handler grids and diffs
/// them against their fixtures.
inline int cmd_languages(const std::string& fixtures_dir,
                         std::ostream& os = std::cout) {
  CellGrid behavior_fixture;
  FlagGrid defaults_fixture;
  std::vector<ModeRow> mode_fixture;
  try {
    const std::filesystem::path dir = resolve_input(fixtures_dir, "fixtures");
    behavior_fixture = load_cell_grid(dir / "table4.csv");
    defaults_fixture = load_flag_grid(dir / "table5.csv");
    mode_fixture = load_mode_table(dir / "table6.csv");
  } catch (const FixtureError& e) {
    os << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  CellGrid behavior;
  FlagGrid defaults;
  for (const LanguageModel& lang : all_languages()) {
    SignalRowCells row{};
    for (int n = kMinSignal; n <= kMaxSignal; ++n) {
      row[static_cast<std::size_t>(n - 1)] = simulate_language_cell(lang, n);
    }
    behavior.row_names.emplace_back(lang.name);
    behavior.rows.push_back(row);
    defaults.row_names.emplace_back(lang.name);
    defaults.rows.push_back(lang.default_handlers);
  }

  os << "signal behavior by language:\n";
  detail::print_grid_header(os, kMinSignal, kMaxSignal);
  for (std::size_t i = 0; i < behavior.row_names.size(); ++i) {
    os << std::left << std::setw(13) << behavior.row_names[i];
    for (const Cell c : behavior.rows[i]) {
      os << std::right << std::setw(3) << cell_char(c);
    }
    os << '\n';
  }
  os << "default runtime handlers:\n";
  detail::print_grid_header(os, kMinSignal, kMaxSignal);
  for (std::size_t i = 0; i < defaults.row_names.size(); ++i) {
    os << std::left << std::setw(13) << defaults.row_names[i];
    for (const bool b : defaults.rows[i]) {
      os << std::right << std::setw(3) << (b ? 'Y' : 'N');
    }
    os << '\n';
  }

  std::vector<CellDiff> diffs = diff_grids(behavior_fixture, behavior);
  std::vector<CellDiff> flag_diffs = diff_flag_grids(defaults_fixture, defaults);
  diffs.insert(diffs.end(), flag_diffs.begin(), flag_diffs.end());

  // Registration-mode table, checked cell-for-cell as well.
  for (const auto& row : mode_fixture) {
    const LanguageModel& lang = language_from_name(row.name);
    const bool implicit = lang.mode == SignalMode::Implicit;
    const bool explicit_ = lang.mode == SignalMode::Explicit;
    if (implicit != row.implicit) {
      diffs.push_back(CellDiff{row.name, 0, row.implicit ? 'Y' : 'N',
                               implicit ? 'Y' : 'N'});
    }
    if (explicit_ != row.explicit_) {
      diffs.push_back(CellDiff{row.name, 0, row.explicit_ ? 'Y' : 'N',
                               explicit_ ? 'Y' : 'N'});
    }
  }

  const std::size_t cells = 2 * 9 * 31 + 18;
  os << (cells - diffs.size()) << '/' << cells
     << " cells match table4.csv + table5.csv + table6.csv\n";
  detail::print_diffs(os, diffs);
  return diffs.empty() ? kExitOk : kExitDiverged;
}

/// Runs a scenario, writes the JSON report when requested, prints a summary.
inline int cmd_scenario(ScenarioConfig cfg, const std::string& out_path,
                        std::ostream& os = std::cout) {
  cfg.fixtures_dir = resolve_input(cfg.fixtures_dir, "fixtures").string();
  if (cfg.name == ScenarioName::mlp) {
    cfg.dataset_path =
        resolve_input(cfg.dataset_path, "data/banknote_synth.csv").string();
  }

  json report;
  try {
    report = run_scenario(cfg);
  } catch (const ScenarioConfigError& e) {
    os << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const FixtureError& e) {
    os << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::runtime_error& e) {
    os << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      os << "error: cannot write report to " << out_path << '\n';
      return kExitConfigError;
    }
    out << report.dump(2) << '\n';
  }

  os << "scenario " << report["scenario"].get<std::string>() << " policy "
     << policy_name(cfg.policy) << ": "
     << (report["pass"].get<bool>() ? "pass" : "FAIL") << '\n';
  return report["pass"].get<bool>() ? kExitOk : kExitDiverged;
}

}  // namespace sigsim
