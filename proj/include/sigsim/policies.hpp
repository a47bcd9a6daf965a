#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sigsim/defenses.hpp"
#include "sigsim/enclave.hpp"
#include "sigsim/signals.hpp"
#include "sigsim/trace.hpp"

namespace sigsim {

enum class PolicyId {
  IntelSdkV1,
  IntelSdkV2,
  OpenEnclave,
  Teaclave,
  Asylo,
  Gramine,
  Scone,
  EnclaveOS,
  Occlum,
  Mystikos,
  NoSignalSupport,
};

/// A runtime/libOS delivery policy plus its interface surface: whether it
/// forwards hardware exceptions to the application, and whether it exposes a
/// separate interface for ordinary signals.
struct RuntimePolicy {
  PolicyId id;
  bool hw_exception_interface;
  bool other_signal_interface;
};

inline constexpr std::array<RuntimePolicy, 11> kPolicies{{
    {PolicyId::IntelSdkV1, true, false},
    {PolicyId::IntelSdkV2, true, false},
    {PolicyId::OpenEnclave, true, true},
    {PolicyId::Teaclave, true, true},
    {PolicyId::Asylo, true, true},
    {PolicyId::Gramine, true, true},
    // Scone and EnclaveOS are closed source; flags reflect observed behavior.
    {PolicyId::Scone, true, true},
    {PolicyId::EnclaveOS, true, true},
    {PolicyId::Occlum, true, true},
    {PolicyId::Mystikos, false, true},
    // GoTEE, Enarx, EGo, EdgelessRT and Rust EDP collapse into one id: none
    // of them deliver signals to enclave code at all.
    {PolicyId::NoSignalSupport, false, false},
}};

inline const RuntimePolicy& policy(PolicyId id) {
  for (const auto& p : kPolicies) {
    if (p.id == id) return p;
  }
  throw std::domain_error("unknown policy id");
}

inline std::string_view policy_name(PolicyId id) {
  switch (id) {
    case PolicyId::IntelSdkV1: return "IntelSdkV1";
    case PolicyId::IntelSdkV2: return "IntelSdkV2";
    case PolicyId::OpenEnclave: return "OpenEnclave";
    case PolicyId::Teaclave: return "Teaclave";
    case PolicyId::Asylo: return "Asylo";
    case PolicyId::Gramine: return "Gramine";
    case PolicyId::Scone: return "Scone";
    case PolicyId::EnclaveOS: return "EnclaveOS";
    case PolicyId::Occlum: return "Occlum";
    case PolicyId::Mystikos: return "Mystikos";
    case PolicyId::NoSignalSupport: return "NoSignalSupport";
  }
  return "?";
}

inline PolicyId policy_from_name(std::string_view name) {
  for (const auto& p : kPolicies) {
    if (policy_name(p.id) == name) return p.id;
  }
  throw std::domain_error("unknown policy name: " + std::string(name));
}

/// The seven runtimes whose per-signal injection behavior the matrix
/// harness reproduces.
inline constexpr std::array<PolicyId, 7> kVulnerablePolicies{
    PolicyId::OpenEnclave, PolicyId::Teaclave,  PolicyId::Asylo,
    PolicyId::Gramine,     PolicyId::Scone,     PolicyId::EnclaveOS,
    PolicyId::Occlum,
};

enum class EventSource {
  os_kill,
  os_tkill_thread,
  untrusted_runtime_ecall,
  enclave_thread_ocall,
  coresident_enclave_process,
  genuine_hw_exception,
};

inline std::string_view event_source_name(EventSource s) {
  switch (s) {
    case EventSource::os_kill: return "os_kill";
    case EventSource::os_tkill_thread: return "os_tkill_thread";
    case EventSource::untrusted_runtime_ecall: return "untrusted_runtime_ecall";
    case EventSource::enclave_thread_ocall: return "enclave_thread_ocall";
    case EventSource::coresident_enclave_process: return "coresident_enclave_process";
    case EventSource::genuine_hw_exception: return "genuine_hw_exception";
  }
  return "?";
}

/// One notification in flight toward an enclave thread.
class InjectionEvent {
 public:
  InjectionEvent(SignalSpec signal, SigInfo siginfo, EventSource source,
                 ActorId target)
      : signal_(signal),
        siginfo_(std::move(siginfo)),
        source_(source),
        target_(target) {
    if (signal_.number != siginfo_.signal().number) {
      throw std::domain_error("siginfo does not match the event signal");
    }
    if (source_ == EventSource::genuine_hw_exception &&
        !signal_.is_hw_exception) {
      throw std::domain_error(
          "genuine hardware exceptions exist only for hardware-exception "
          "signals");
    }
  }

  const SignalSpec& signal() const { return signal_; }
  const SigInfo& siginfo() const { return siginfo_; }
  EventSource source() const { return source_; }
  ActorId target() const { return target_; }

  bool os_sourced() const {
    return source_ == EventSource::os_kill ||
           source_ == EventSource::os_tkill_thread;
  }

 private:
  SignalSpec signal_;
  SigInfo siginfo_;
  EventSource source_;
  ActorId target_;
};

namespace detail {

// Signal numbers each runtime's signal interface forwards to a registered
// handler, swallows silently, or refuses. Everything here is per-runtime
// measured behavior, not POSIX defaults.
inline constexpr std::array<int, 6> kOpenEnclaveHostSignals{1, 6, 10, 12, 13, 14};
inline constexpr std::array<int, 8> kOpenEnclaveSwallowed{17, 18, 20, 21, 22, 23, 28, 29};
// The signal ecall refuses the signals the runtime expects from hardware
// exceptions; those must arrive through the exception interface.
inline constexpr std::array<int, 5> kTeaclaveHwReserved{4, 5, 7, 8, 11};
inline constexpr std::array<int, 4> kAsyloSwallowed{4, 7, 17, 29};
// Signals the untrusted PAL maps to PAL events; nothing else enters.
inline constexpr std::array<int, 4> kGraminePalSignals{4, 7, 8, 11};
inline constexpr std::array<int, 10> kGramineSwallowed{12, 13, 15, 17, 18, 20, 21, 22, 23, 28};
inline constexpr int kEnclaveOsReservedSignal = 12;  // used for libOS control

template <std::size_t N>
constexpr bool contains(const std::array<int, N>& a, int v) {
  for (int x : a) {
    if (x == v) return true;
  }
  return false;
}

inline std::string_view gramine_pal_event(int signal_number) {
  switch (signal_number) {
    case 8: return "pal_event_arithmetic_error";
    case 11: return "pal_event_memfault";
    case 7: return "pal_event_memfault";
    case 4: return "pal_event_illegal";
    default: return "pal_event_none";
  }
}

inline std::string_view gramine_pal_event(HwVector v) {
  switch (v) {
    case HwVector::DivideError:
    case HwVector::FpError:
      return "pal_event_arithmetic_error";
    case HwVector::PageFault:
    case HwVector::BusError:
      return "pal_event_memfault";
    case HwVector::InvalidOpcode:
      return "pal_event_illegal";
    case HwVector::Debug:
    case HwVector::Breakpoint:
      return "pal_event_debug_break";
    case HwVector::BadSyscall:
      return "pal_event_bad_syscall";
  }
  return "pal_event_none";
}

inline bool kernel_reserved(int signal_number) {
  return signal_number == 9 || signal_number == 19;
}

inline DeliveryOutcome finish_handler_lookup(DeliveryTrace& trace,
                                             const EnclaveThread& t,
                                             int signal_number) {
  const HandlerSpec* h = t.handler_for(signal_number);
  trace.step(StepKind::handler_lookup, h ? "handler found" : "no handler", h != nullptr);
  if (h == nullptr) {
    return DeliveryOutcome::of(OutcomeKind::Crash);
  }
  trace.step(StepKind::app_handler);
  return DeliveryOutcome::handler_executed(h->action);
}

// ---- injected-signal pipelines, one per runtime family -------------------

inline DeliveryOutcome inject_intel_sdk(DeliveryTrace& trace,
                                        const InjectionEvent& ev,
                                        EnclaveThread& t,
                                        const DefenseContext* defense) {
  trace.step(StepKind::untrusted_handler);
  t.async_exit_injected();
  trace.step(StepKind::ecall_enter);
  if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
    return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
  }
  // The trusted runtime validates every asynchronous exit against the exit
  // record. Threads without a record predate the mechanism: the check is
  // skipped and the exit accepted as-is.
  if (t.ssa().has_value()) {
    const bool valid = t.ssa()->valid == 1;
    trace.step(StepKind::exit_info_check,
               valid ? "exit record valid" : "exit record invalid", valid);
    if (!valid) {
      return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
    }
  } else {
    trace.step(StepKind::exit_info_check, "no exit record; check skipped", true);
  }
  const bool has_vector = ev.signal().is_hw_exception;
  trace.step(StepKind::signal_to_vector,
             has_vector ? std::string(hw_vector_name(vector_of(ev.signal())))
                        : "no exception vector for this signal",
             has_vector);
  if (!has_vector) {
    return DeliveryOutcome::of(OutcomeKind::Crash);
  }
  return finish_handler_lookup(trace, t, ev.signal().number);
}

inline DeliveryOutcome inject_open_enclave(DeliveryTrace& trace,
                                           const InjectionEvent& ev,
                                           EnclaveThread& t,
                                           const DefenseContext* defense) {
  const int n = ev.signal().number;
  trace.step(StepKind::untrusted_handler);
  if (ev.signal().is_hw_exception) {
    // Hardware-exception class signals go down the exception path, where the
    // invalid exit record is detected and the runtime aborts.
    t.async_exit_injected();
    trace.step(StepKind::ecall_enter);
    if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
      return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
    }
    trace.step(StepKind::exit_info_check, "exit record invalid", false);
    return DeliveryOutcome::of(OutcomeKind::Crash);
  }
  if (contains(kOpenEnclaveSwallowed, n)) {
    trace.step(StepKind::runtime_ignore);
    return DeliveryOutcome::of(OutcomeKind::NoEffect);
  }
  if (!contains(kOpenEnclaveHostSignals, n)) {
    trace.step(StepKind::kernel_default, "signal unsupported by the host-signal interface");
    return DeliveryOutcome::of(OutcomeKind::Crash);
  }
  t.async_exit_injected();
  trace.step(StepKind::ecall_enter);
  if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
    return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
  }
  const bool enabled = t.host_signal_enabled(n);
  trace.step(StepKind::registration_check,
             enabled ? "host signal enabled for thread"
                     : "host signal not enabled for thread",
             enabled);
  if (!enabled) {
    return DeliveryOutcome::of(OutcomeKind::Crash);
  }
  return finish_handler_lookup(trace, t, n);
}

inline DeliveryOutcome inject_teaclave(DeliveryTrace& trace,
                                       const InjectionEvent& ev,
                                       EnclaveThread& t,
                                       const DefenseContext* defense) {
  const int n = ev.signal().number;
  if (ev.os_sourced()) {
    trace.step(StepKind::untrusted_handler);
  }
  t.async_exit_injected();
  trace.step(StepKind::ecall_enter, "signal-handler ecall (public root ecall)");
  if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
    return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
  }
  const bool reserved = contains(kTeaclaveHwReserved, n);
  trace.step(StepKind::registration_check,
             reserved ? "hardware-exception signals refused on this interface"
                      : "accepted without legitimacy check",
             !reserved);
  if (reserved) {
    return DeliveryOutcome::of(OutcomeKind::Crash);
  }
  return finish_handler_lookup(trace, t, n);
}

inline DeliveryOutcome inject_asylo(DeliveryTrace& trace,
                                    const InjectionEvent& ev, EnclaveThread& t,
                                    const DefenseContext* defense) {
  const int n = ev.signal().number;
  trace.step(StepKind::untrusted_handler);
  if (contains(kAsyloSwallowed, n)) {
    trace.step(StepKind::runtime_ignore);
    return DeliveryOutcome::of(OutcomeKind::NoEffect);
  }
  t.async_exit_injected();
  trace.step(StepKind::ecall_enter, "deliver-signal ecall (public root ecall)");
  if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
    return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
  }
  // No exit-record or origin check on this path.
  return finish_handler_lookup(trace, t, n);
}

inline DeliveryOutcome inject_gramine(DeliveryTrace& trace,
                                      const InjectionEvent& ev,
                                      EnclaveThread& t,
                                      const DefenseContext* defense) {
  const int n = ev.signal().number;
  trace.step(StepKind::untrusted_handler, "handle_sync_signal");
  if (contains(kGraminePalSignals, n)) {
    t.async_exit_injected();
    trace.step(StepKind::pal_event_map, std::string(gramine_pal_event(n)));
    trace.step(StepKind::sgx_raise);
    if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
      return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
    }
    trace.step(StepKind::libos_dispatch, "construct siginfo");
    return finish_handler_lookup(trace, t, n);
  }
  if (contains(kGramineSwallowed, n)) {
    trace.step(StepKind::runtime_ignore);
    return DeliveryOutcome::of(OutcomeKind::NoEffect);
  }
  trace.step(StepKind::kernel_default, "no PAL event mapping; process dies");
  return DeliveryOutcome::of(OutcomeKind::Crash);
}

inline DeliveryOutcome inject_passthrough(DeliveryTrace& trace,
                                          const InjectionEvent& ev,
                                          EnclaveThread& t,
                                          const DefenseContext* defense,
                                          bool enclave_os) {
  const int n = ev.signal().number;
  trace.step(StepKind::untrusted_handler);
  t.async_exit_injected();
  trace.step(StepKind::ecall_enter);
  if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
    return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
  }
  if (enclave_os && n == kEnclaveOsReservedSignal) {
    trace.step(StepKind::registration_check, "signal reserved for libOS operations",
               false);
    return DeliveryOutcome::of(OutcomeKind::Crash);
  }
  return finish_handler_lookup(trace, t, n);
}

inline DeliveryOutcome inject_occlum(DeliveryTrace& trace,
                                     const InjectionEvent& ev,
                                     EnclaveProcess& proc, EnclaveThread& t,
                                     const DefenseContext* defense) {
  const int n = ev.signal().number;
  if (ev.source() == EventSource::coresident_enclave_process) {
    if (!proc.co_resident()) {
      throw std::logic_error(
          "coresident delivery requires a co-resident enclave process");
    }
    // Routed entirely inside the enclave by the libOS.
    trace.step(StepKind::intra_enclave_route);
    if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
      return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
    }
    if (kernel_reserved(n)) {
      trace.step(StepKind::libos_default, "unblockable signal; default disposition");
      return DeliveryOutcome::of(OutcomeKind::Crash);
    }
    trace.step(StepKind::libos_dispatch);
    return finish_handler_lookup(trace, t, n);
  }
  // Signals from the host never reach application handlers: the libOS falls
  // back to default handling, which kills the process.
  t.async_exit_injected();
  trace.step(StepKind::ecall_enter);
  if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
    return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
  }
  trace.step(StepKind::libos_dispatch);
  trace.step(StepKind::libos_default, "external signal; default disposition");
  return DeliveryOutcome::of(OutcomeKind::Crash);
}

inline DeliveryOutcome inject_mystikos(DeliveryTrace& trace,
                                       const InjectionEvent& ev,
                                       EnclaveThread& t,
                                       const DefenseContext* defense) {
  const int n = ev.signal().number;
  if (ev.source() == EventSource::coresident_enclave_process ||
      ev.source() == EventSource::enclave_thread_ocall) {
    trace.step(StepKind::intra_enclave_route);
    if (defense_gate(trace, defense, ev.signal(), t) == GateResult::filtered) {
      return DeliveryOutcome::of(OutcomeKind::FilteredByRuntime);
    }
    if (kernel_reserved(n)) {
      trace.step(StepKind::libos_default);
      return DeliveryOutcome::of(OutcomeKind::Crash);
    }
    trace.step(StepKind::libos_dispatch);
    return finish_handler_lookup(trace, t, n);
  }
  trace.step(StepKind::runtime_ignore, "no interface for signals from the host");
  return DeliveryOutcome::of(OutcomeKind::NoEffect);
}

// ---- genuine hardware exceptions -----------------------------------------

inline DeliveryOutcome deliver_genuine(DeliveryTrace& trace,
                                       const RuntimePolicy& p,
                                       const InjectionEvent& ev,
                                       EnclaveThread& t,
                                       const DefenseContext* defense) {
  if (!p.hw_exception_interface) {
    if (p.id == PolicyId::NoSignalSupport) {
      return DeliveryOutcome::of(OutcomeKind::NoEffect);
    }
    trace.step(StepKind::kernel_default, "no exception interface");
    return DeliveryOutcome::of(OutcomeKind::Crash);
  }

  const HwVector vec = vector_of(ev.signal());
  t.raise_genuine_hw_exception(vec);

  switch (p.id) {
    case PolicyId::Gramine: {
      trace.step(StepKind::os_signal);
      trace.step(StepKind::untrusted_handler, "handle_sync_signal");
      trace.step(StepKind::pal_event_map, std::string(gramine_pal_event(vec)));
      trace.step(StepKind::sgx_raise);
      if (defense != nullptr && defense->config.exit_info_filter) {
        trace.step(StepKind::exit_info_check, "exit record valid", true);
      }
      trace.step(StepKind::libos_dispatch, "construct siginfo");
      break;
    }
    case PolicyId::Occlum: {
      // Handled by the in-enclave libOS after the exception re-enters.
      trace.step(StepKind::libos_dispatch);
      break;
    }
    default: {
      trace.step(StepKind::os_signal);
      trace.step(StepKind::untrusted_handler);
      trace.step(StepKind::ecall_enter);
      if (t.ssa().has_value()) {
        trace.step(StepKind::exit_info_check, "exit record valid", true);
      } else {
        trace.step(StepKind::exit_info_check, "no exit record; check skipped",
                   true);
      }
      trace.step(StepKind::signal_to_vector,
                 std::string(hw_vector_name(vec)));
      break;
    }
  }
  return finish_handler_lookup(trace, t, ev.signal().number);
}

}  // namespace detail

/// Runs one notification through a runtime's delivery pipeline and reports
/// the ordered stages plus the terminal outcome. The target thread must be
/// executing inside the enclave; callers serialize deliveries per process.
inline DeliveryTrace deliver(const RuntimePolicy& p, const InjectionEvent& ev,
                             EnclaveProcess& proc,
                             const DefenseContext* defense = nullptr) {
  EnclaveThread& t = proc.thread(ev.target());
  if (t.mode() != ThreadMode::InEnclave) {
    throw std::logic_error(
        "deliver: target thread is handling an exit; delivery must wait for "
        "resume");
  }

  DeliveryTrace trace;

  if (p.id == PolicyId::NoSignalSupport) {
    trace.finish(DeliveryOutcome::of(OutcomeKind::NoEffect));
    return trace;
  }

  DeliveryOutcome outcome = DeliveryOutcome::of(OutcomeKind::NoEffect);
  if (ev.source() == EventSource::genuine_hw_exception) {
    outcome = detail::deliver_genuine(trace, p, ev, t, defense);
  } else {
    const int n = ev.signal().number;
    if (ev.source() == EventSource::enclave_thread_ocall) {
      trace.step(StepKind::ocall_exit);
    }
    if (ev.source() != EventSource::coresident_enclave_process &&
        ev.source() != EventSource::untrusted_runtime_ecall) {
      trace.step(StepKind::os_signal);
    }
    if (detail::kernel_reserved(n) &&
        ev.source() != EventSource::coresident_enclave_process) {
      // Unblockable signals never reach any runtime interface.
      trace.step(StepKind::kernel_default, "unblockable signal");
      outcome = DeliveryOutcome::of(OutcomeKind::Crash);
    } else {
      switch (p.id) {
        case PolicyId::IntelSdkV1:
        case PolicyId::IntelSdkV2:
          outcome = detail::inject_intel_sdk(trace, ev, t, defense);
          break;
        case PolicyId::OpenEnclave:
          outcome = detail::inject_open_enclave(trace, ev, t, defense);
          break;
        case PolicyId::Teaclave:
          outcome = detail::inject_teaclave(trace, ev, t, defense);
          break;
        case PolicyId::Asylo:
          outcome = detail::inject_asylo(trace, ev, t, defense);
          break;
        case PolicyId::Gramine:
          outcome = detail::inject_gramine(trace, ev, t, defense);
          break;
        case PolicyId::Scone:
          outcome = detail::inject_passthrough(trace, ev, t, defense, false);
          break;
        case PolicyId::EnclaveOS:
          outcome = detail::inject_passthrough(trace, ev, t, defense, true);
          break;
        case PolicyId::Occlum:
          outcome = detail::inject_occlum(trace, ev, proc, t, defense);
          break;
        case PolicyId::Mystikos:
          outcome = detail::inject_mystikos(trace, ev, t, defense);
          break;
        case PolicyId::NoSignalSupport:
          break;  // handled above
      }
    }
  }

  if (t.mode() != ThreadMode::InEnclave) {
    t.resume();  // the delivery cycle ends with the thread back in the enclave
  }
  trace.finish(outcome);
  return trace;
}

/// Exit-record validation as a standalone operation (the guard the SDK-family
/// trusted runtimes run on every asynchronous exit).
enum class ExitInfoDecision { accept, reject };

inline ExitInfoDecision exit_info_check(const EnclaveThread& t) {
  if (t.mode() != ThreadMode::ExitedAsync) {
    throw std::logic_error("exit_info_check: thread has not exited asynchronously");
  }
  if (!t.ssa().has_value()) {
    return ExitInfoDecision::accept;  // nothing to check against
  }
  return t.ssa()->valid == 1 ? ExitInfoDecision::accept
                             : ExitInfoDecision::reject;
}

}  // namespace sigsim
