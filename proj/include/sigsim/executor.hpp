#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "sigsim/attacker.hpp"
#include "sigsim/defenses.hpp"
#include "sigsim/enclave.hpp"
#include "sigsim/languages.hpp"
#include "sigsim/policies.hpp"
#include "sigsim/trace.hpp"

namespace sigsim {

inline EnclaveProcess make_enclave_process(PolicyId id, ActorId pid = 1,
                                           int threads = 1) {
  const bool ssa_supported = id != PolicyId::IntelSdkV1;
  const bool co_resident = id == PolicyId::Occlum;
  return EnclaveProcess(pid, threads, ssa_supported, co_resident);
}

/// The injection source the matrix harness uses for a runtime: Occlum is
/// attacked from a co-resident process inside the enclave, everything else
/// straight from the OS.
inline EventSource matrix_source(PolicyId id) {
  return id == PolicyId::Occlum ? EventSource::coresident_enclave_process
                                : EventSource::os_kill;
}

/// Drives one workload run: owns the enclave, serializes every delivery,
/// keeps the simulated instruction clock, and lets an attached attacker fire
/// at instrumented windows. Handler actions registered by the workload are
/// dispatched back through std::function callbacks.
class ScenarioRun {
 public:
  ScenarioRun(PolicyId policy_id, LanguageId language_id,
              DefenseConfig defense = {})
      : policy_(policy(policy_id)),
        language_(language(language_id)),
        defense_ctx_{std::move(defense), &ledger_},
        process_(make_enclave_process(policy_id)) {
    // The language runtime's own handlers exist before any app code runs.
    install_language_defaults();
  }

  EnclaveProcess& process() { return process_; }
  EnclaveThread& main_thread() { return process_.main_thread(); }
  const LanguageModel& language_model() const { return language_; }
  const RuntimePolicy& runtime_policy() const { return policy_; }
  SignalLedger& ledger() { return ledger_; }
  const DefenseConfig& defense() const { return defense_ctx_.config; }

  /// Deploys (or replaces) the defense configuration; scenarios use this to
  /// model a mitigation rolled out while the enclave keeps running.
  void set_defense(DefenseConfig d) { defense_ctx_.config = std::move(d); }

  // -- workload wiring ------------------------------------------------------

  /// Registers an application handler and the callback it stands for.
  /// Refused registrations (kernel- or language-level) leave no entry.
  RegisterResult register_app_handler(const SignalSpec& s, HandlerActionId id,
                                      std::function<void()> action) {
    if (!app_can_register(language_, s)) {
      return RegisterResult::BlockedByKernel;
    }
    const RegisterResult r = main_thread().register_handler(s, id);
    if (r == RegisterResult::Ok) {
      actions_[id] = std::move(action);
      if (policy_.id == PolicyId::OpenEnclave) {
        main_thread().enable_host_signal(s);
      }
    }
    return r;
  }

  /// Installs the language runtime's own default handlers, resolved through
  /// default_handler_effect at delivery time.
  void install_language_defaults() {
    for (int n = 1; n <= 31; ++n) {
      if (language_.default_handler(n)) {
        main_thread().register_handler(signal_by_number(n),
                                       kDefaultHandlerAction,
                                       RegisteredVia::language_default);
        if (policy_.id == PolicyId::OpenEnclave) {
          main_thread().enable_host_signal(signal_by_number(n));
        }
      }
    }
  }

  void export_window(const std::string& label) { window_labels_.insert(label); }

  void on_default_effect(std::function<void(DefaultEffect)> f) {
    default_effect_sink_ = std::move(f);
  }

  // -- attacker wiring ------------------------------------------------------

  void attach_attacker(InjectionStrategy strategy, StepOracle oracle) {
    if (strategy.window().has_value() &&
        window_labels_.count(strategy.window()->workload_site) == 0) {
      throw std::invalid_argument(
          "injection window does not name an exported instrumentation point: " +
          strategy.window()->workload_site);
    }
    strategy_.emplace(std::move(strategy));
    oracle_.emplace(oracle);
    log_ = InjectionLog{};
    log_.strategy = strategy_->kind();
    log_.signal_number = strategy_->signal().number;
    fired_ = 0;
    cached_landing_.reset();
  }

  /// One-shot injection fired at the point the scenario script chooses
  /// (no window involved). Returns the full trace.
  DeliveryTrace inject_now() {
    if (!strategy_.has_value()) {
      throw std::logic_error("inject_now: no attacker attached");
    }
    ++log_.count;
    ++fired_;
    DeliveryTrace trace = deliver_signal(strategy_->signal(),
                                         strategy_->siginfo(),
                                         EventSource::os_kill);
    if (trace.outcome().kind() == OutcomeKind::HandlerExecuted) {
      ++log_.delivered;
    } else if (trace.outcome().kind() == OutcomeKind::FilteredByRuntime) {
      ++log_.filtered;
    }
    return trace;
  }

  /// Instrumentation point: the workload announces it is entering the
  /// labelled region for `span` simulated instructions. Returns true when an
  /// injected handler fired inside the window (the workload then takes its
  /// handler branch). The injection is only ever delivered after the oracle's
  /// exit has resumed, never while the untrusted side is handling the exit.
  bool window(const std::string& label, std::uint64_t span) {
    if (window_labels_.count(label) == 0) {
      throw std::invalid_argument("window label was never exported: " + label);
    }
    const std::uint64_t start = clock_;
    clock_ += span;

    if (!strategy_.has_value() || !strategy_->window().has_value() ||
        strategy_->window()->workload_site != label) {
      return false;
    }
    ++log_.windows_seen;
    if (!oracle_->detects(start, span)) {
      ++log_.missed_windows;
      return false;
    }
    if (!wants_fire()) return false;

    if (oracle_->mode() == StepOracle::Mode::exact) {
      ++oracle_exits_;  // the step interrupt that flagged this window
    }
    ++fired_;
    ++log_.count;
    return landed();
  }

  /// Raises a genuine in-enclave hardware exception on the main thread and
  /// runs it through the policy pipeline.
  DeliveryTrace raise_genuine(HwVector v) {
    const SignalSpec s = hw_vector_to_signal(v);
    InjectionEvent ev(s, SigInfo(s, SigOriginCode::kernel_fault, main_thread().tid()),
                      EventSource::genuine_hw_exception, main_thread().tid());
    return deliver(policy_, ev, process_, &defense_ctx_);
  }

  /// External (admin or attacker) signal via the OS.
  DeliveryTrace deliver_signal(const SignalSpec& s, const SigInfo& info,
                               EventSource source) {
    InjectionEvent ev(s, info, source, main_thread().tid());
    DeliveryTrace trace = deliver(policy_, ev, process_, &defense_ctx_);
    dispatch_effects(trace, info);
    return trace;
  }

  std::uint64_t clock() const { return clock_; }

  /// Final counters; timer-mode oracles pay one exit per tick over the whole
  /// run, exact ones only per detected window, plus one exit per attempt.
  InjectionLog injection_log() const {
    InjectionLog out = log_;
    std::uint64_t oracle_exits = oracle_exits_;
    if (oracle_.has_value() &&
        oracle_->mode() == StepOracle::Mode::timer_sampled) {
      oracle_exits = clock_ / oracle_->timer_period();
    }
    out.aex_count = oracle_exits + out.count;
    return out;
  }

  static constexpr HandlerActionId kDefaultHandlerAction = 0xD0D0;

 private:
  bool wants_fire() const {
    switch (strategy_->kind()) {
      case StrategyKind::OneShot:
        return fired_ == 0;
      case StrategyKind::EveryWindow:
        return true;
      case StrategyKind::CountBounded:
        return fired_ < static_cast<std::uint64_t>(*strategy_->max_count());
    }
    return false;
  }

  enum class LandResult { delivered, filtered, dead };

  /// Whether a windowed injection reaches the handler. The policy decision
  /// depends only on (policy, defense, signal, siginfo); it is resolved once
  /// per run and reused so million-injection attacks stay cheap. Deliveries
  /// that consume ledger entries cannot be cached and take the full path.
  bool landed() {
    LandResult r;
    if (defense_ctx_.config.inter_thread_ledger) {
      r = resolve_delivery();
    } else {
      if (!cached_landing_.has_value()) cached_landing_ = resolve_delivery();
      r = *cached_landing_;
    }
    if (r == LandResult::delivered) ++log_.delivered;
    if (r == LandResult::filtered) ++log_.filtered;
    return r == LandResult::delivered;
  }

  LandResult resolve_delivery() {
    InjectionEvent ev(strategy_->signal(), strategy_->siginfo(),
                      EventSource::os_kill, main_thread().tid());
    DeliveryTrace trace = deliver(policy_, ev, process_, &defense_ctx_);
    if (trace.outcome().kind() == OutcomeKind::FilteredByRuntime) {
      return LandResult::filtered;
    }
    if (trace.outcome().kind() != OutcomeKind::HandlerExecuted) {
      return LandResult::dead;
    }
    // Language layer: only a direct handler or a catch block gives the
    // workload a branch to take.
    const HandlerInvocation inv = translate(language_, strategy_->siginfo());
    return inv.kind == InvocationKind::CrashDefault ? LandResult::dead
                                                    : LandResult::delivered;
  }

  /// Runs workload callbacks / language default effects for an executed
  /// handler.
  void dispatch_effects(const DeliveryTrace& trace, const SigInfo& info) {
    if (trace.outcome().kind() != OutcomeKind::HandlerExecuted) return;
    const HandlerActionId id = *trace.outcome().handler_id();
    if (id == kDefaultHandlerAction) {
      if (default_effect_sink_) {
        default_effect_sink_(default_handler_effect(language_, info.signal()));
      }
      return;
    }
    auto it = actions_.find(id);
    if (it != actions_.end()) {
      const HandlerInvocation inv = translate(language_, info);
      if (inv.kind != InvocationKind::CrashDefault) it->second();
    }
  }

  RuntimePolicy policy_;
  LanguageModel language_;
  SignalLedger ledger_;
  DefenseContext defense_ctx_;
  EnclaveProcess process_;

  std::map<HandlerActionId, std::function<void()>> actions_;
  std::function<void(DefaultEffect)> default_effect_sink_;
  std::set<std::string> window_labels_;

  std::optional<InjectionStrategy> strategy_;
  std::optional<StepOracle> oracle_;
  InjectionLog log_;
  std::uint64_t fired_ = 0;
  std::uint64_t clock_ = 0;
  std::uint64_t oracle_exits_ = 0;
  std::optional<LandResult> cached_landing_;
};

}  // namespace sigsim
