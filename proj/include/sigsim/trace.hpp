#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "sigsim/signals.hpp"

namespace sigsim {

/// Named stages a notification passes through on its way to (or past) an
/// enclave handler. Traces record which side of the enclave boundary each
/// stage ran on so routing claims can be checked.
enum class StepKind {
  os_signal,            // kernel queues the signal for the host process
  kernel_default,       // kernel default disposition applied
  untrusted_handler,    // untrusted runtime's host signal handler
  signal_to_vector,     // signal mapped back to an exception vector
  ecall_enter,          // control enters the trusted runtime
  exit_info_check,      // trusted runtime validates the SSA exit record
  registration_check,   // per-signal interface/registration gate
  whitelist_check,      // configured signal whitelist gate
  ledger_check,         // inter-thread signal ledger lookup
  ledger_record,        // in-enclave sender records intent before the ocall
  pal_event_map,        // signal translated to a PAL event
  sgx_raise,            // untrusted PAL raises the event into the enclave
  libos_dispatch,       // in-enclave libOS builds siginfo and routes it
  libos_default,        // in-enclave libOS applies default disposition
  intra_enclave_route,  // process-to-process routing that never leaves the enclave
  runtime_ignore,       // runtime swallows the signal, nothing observable
  handler_lookup,       // handler table consulted
  app_handler,          // application handler body runs
  ocall_exit,           // sender thread leaves the enclave to raise the signal
};

inline std::string_view step_name(StepKind k) {
  switch (k) {
    case StepKind::os_signal: return "os_signal";
    case StepKind::kernel_default: return "kernel_default";
    case StepKind::untrusted_handler: return "untrusted_handler";
    case StepKind::signal_to_vector: return "signal_to_vector";
    case StepKind::ecall_enter: return "ecall_enter";
    case StepKind::exit_info_check: return "exit_info_check";
    case StepKind::registration_check: return "registration_check";
    case StepKind::whitelist_check: return "whitelist_check";
    case StepKind::ledger_check: return "ledger_check";
    case StepKind::ledger_record: return "ledger_record";
    case StepKind::pal_event_map: return "pal_event_map";
    case StepKind::sgx_raise: return "sgx_raise";
    case StepKind::libos_dispatch: return "libos_dispatch";
    case StepKind::libos_default: return "libos_default";
    case StepKind::intra_enclave_route: return "intra_enclave_route";
    case StepKind::runtime_ignore: return "runtime_ignore";
    case StepKind::handler_lookup: return "handler_lookup";
    case StepKind::app_handler: return "app_handler";
    case StepKind::ocall_exit: return "ocall_exit";
  }
  return "?";
}

/// Default boundary side for a stage; os/untrusted-runtime stages run outside.
inline bool step_runs_in_enclave(StepKind k) {
  switch (k) {
    case StepKind::os_signal:
    case StepKind::kernel_default:
    case StepKind::untrusted_handler:
    case StepKind::signal_to_vector:
    case StepKind::pal_event_map:
    case StepKind::runtime_ignore:
    case StepKind::ocall_exit:
      return false;
    default:
      return true;
  }
}

struct PipelineStep {
  StepKind kind;
  std::string detail;
  bool in_enclave;
  bool passed = true;  // only meaningful for *_check stages
};

inline bool is_check_step(StepKind k) {
  return k == StepKind::exit_info_check || k == StepKind::registration_check ||
         k == StepKind::whitelist_check || k == StepKind::ledger_check;
}

class DeliveryTrace {
 public:
  explicit DeliveryTrace(DeliveryOutcome outcome =
                             DeliveryOutcome::of(OutcomeKind::NoEffect))
      : outcome_(outcome) {}

  void step(StepKind k, std::string detail = {}, bool passed = true) {
    steps_.push_back(
        PipelineStep{k, std::move(detail), step_runs_in_enclave(k), passed});
  }

  void step_at(StepKind k, bool in_enclave, std::string detail = {},
               bool passed = true) {
    steps_.push_back(PipelineStep{k, std::move(detail), in_enclave, passed});
  }

  void finish(DeliveryOutcome outcome) { outcome_ = outcome; }

  const std::vector<PipelineStep>& steps() const { return steps_; }
  const DeliveryOutcome& outcome() const { return outcome_; }

  bool has_step(StepKind k) const {
    return std::any_of(steps_.begin(), steps_.end(),
                       [k](const PipelineStep& s) { return s.kind == k; });
  }

  bool has_failed_check() const {
    return std::any_of(steps_.begin(), steps_.end(), [](const PipelineStep& s) {
      return is_check_step(s.kind) && !s.passed;
    });
  }

  bool stays_inside_enclave() const {
    return std::all_of(steps_.begin(), steps_.end(),
                       [](const PipelineStep& s) { return s.in_enclave; });
  }

 private:
  std::vector<PipelineStep> steps_;
  DeliveryOutcome outcome_;
};

}  // namespace sigsim
