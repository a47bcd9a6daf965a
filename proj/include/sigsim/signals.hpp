#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sigsim {

using ActorId = std::uint32_t;

inline constexpr int kMinSignal = 1;
inline constexpr int kMaxSignal = 31;

/// One POSIX signal in the classic 1..31 range. Signals flagged as hardware
/// exceptions are the ones the CPU can raise from inside an enclave.
struct SignalSpec {
  int number = 0;
  std::string_view name;
  bool is_hw_exception = false;

  friend bool operator==(const SignalSpec&, const SignalSpec&) = default;
};

namespace detail {

struct SignalRow {
  int number;
  std::string_view name;
  bool hw;
  std::string_view alias;  // accepted on input, never reported
};

inline constexpr std::array<SignalRow, 31> kSignalTable{{
    {1, "SIGHUP", false, {}},    {2, "SIGINT", false, {}},
    {3, "SIGQUIT", false, {}},   {4, "SIGILL", true, {}},
    {5, "SIGTRAP", true, {}},    {6, "SIGABRT", false, "SIGIOT"},
    {7, "SIGBUS", true, {}},     {8, "SIGFPE", true, {}},
    {9, "SIGKILL", false, {}},   {10, "SIGUSR1", false, {}},
    {11, "SIGSEGV", true, {}},   {12, "SIGUSR2", false, {}},
    {13, "SIGPIPE", false, {}},  {14, "SIGALRM", false, {}},
    {15, "SIGTERM", false, {}},  {16, "SIGSTKFLT", false, {}},
    {17, "SIGCHLD", false, {}},  {18, "SIGCONT", false, {}},
    {19, "SIGSTOP", false, {}},  {20, "SIGTSTP", false, {}},
    {21, "SIGTTIN", false, {}},  {22, "SIGTTOU", false, {}},
    {23, "SIGURG", false, {}},   {24, "SIGXCPU", false, {}},
    {25, "SIGXFSZ", false, {}},  {26, "SIGVTALRM", false, {}},
    {27, "SIGPROF", false, {}},  {28, "SIGWINCH", false, {}},
    {29, "SIGIO", false, {}},    {30, "SIGPWR", false, {}},
    {31, "SIGSYS", true, "SIGUNUSED"},
}};

}  // namespace detail

inline SignalSpec signal_by_number(int n) {
  if (n < kMinSignal || n > kMaxSignal) {
    throw std::domain_error("signal number out of range 1..31: " +
                            std::to_string(n));
  }
  const auto& row = detail::kSignalTable[static_cast<std::size_t>(n - 1)];
  return SignalSpec{row.number, row.name, row.hw};
}

inline SignalSpec signal_by_name(std::string_view name) {
  for (const auto& row : detail::kSignalTable) {
    if (row.name == name || (!row.alias.empty() && row.alias == name)) {
      return SignalSpec{row.number, row.name, row.hw};
    }
  }
  throw std::domain_error("unknown signal name: " + std::string(name));
}

/// Exception vectors an enclave can trap on. `Breakpoint` and `Debug` both
/// surface as SIGTRAP; `FpError` and `DivideError` both surface as SIGFPE.
enum class HwVector {
  DivideError,
  Debug,
  Breakpoint,
  InvalidOpcode,
  BusError,
  PageFault,
  FpError,
  BadSyscall,
};

enum class HwExceptionSource { genuine_in_enclave, injected };

struct HwExceptionVector {
  HwVector vector;
  HwExceptionSource source = HwExceptionSource::genuine_in_enclave;
};

inline SignalSpec hw_vector_to_signal(HwVector v) {
  switch (v) {
    case HwVector::DivideError:
    case HwVector::FpError:
      return signal_by_number(8);
    case HwVector::Debug:
    case HwVector::Breakpoint:
      return signal_by_number(5);
    case HwVector::InvalidOpcode:
      return signal_by_number(4);
    case HwVector::BusError:
      return signal_by_number(7);
    case HwVector::PageFault:
      return signal_by_number(11);
    case HwVector::BadSyscall:
      return signal_by_number(31);
  }
  throw std::domain_error("undefined hardware exception vector");
}

/// Canonical vector for a hardware-exception signal (inverse of
/// hw_vector_to_signal up to the Debug/Breakpoint and FpError aliases).
inline HwVector vector_of(const SignalSpec& s) {
  switch (s.number) {
    case 4:
      return HwVector::InvalidOpcode;
    case 5:
      return HwVector::Debug;
    case 7:
      return HwVector::BusError;
    case 8:
      return HwVector::DivideError;
    case 11:
      return HwVector::PageFault;
    case 31:
      return HwVector::BadSyscall;
    default:
      throw std::domain_error("signal " + std::string(s.name) +
                              " is not raised by a hardware exception");
  }
}

inline std::string_view hw_vector_name(HwVector v) {
  switch (v) {
    case HwVector::DivideError:
      return "DivideError";
    case HwVector::Debug:
      return "Debug";
    case HwVector::Breakpoint:
      return "Breakpoint";
    case HwVector::InvalidOpcode:
      return "InvalidOpcode";
    case HwVector::BusError:
      return "BusError";
    case HwVector::PageFault:
      return "PageFault";
    case HwVector::FpError:
      return "FpError";
    case HwVector::BadSyscall:
      return "BadSyscall";
  }
  return "?";
}

/// si_code analog carried with a delivered signal. The fpe_* codes are what a
/// kernel fills in for real arithmetic faults; runtimes that convert signals
/// to software exceptions look at them.
enum class SigOriginCode { user_kill, kernel_fault, fpe_intdiv, fpe_fltovf };

class SigInfo {
 public:
  SigInfo(SignalSpec signal, SigOriginCode code, ActorId sender)
      : signal_(signal), origin_code_(code), sender_(sender) {
    const bool fpe_code =
        code == SigOriginCode::fpe_intdiv || code == SigOriginCode::fpe_fltovf;
    if (fpe_code && signal.number != 8) {
      throw std::domain_error("fpe origin codes are only valid for SIGFPE");
    }
  }

  const SignalSpec& signal() const { return signal_; }
  SigOriginCode origin_code() const { return origin_code_; }
  ActorId sender() const { return sender_; }

  /// True when the code is one a kernel would set for a real hardware fault.
  bool hardware_plausible() const {
    return origin_code_ != SigOriginCode::user_kill;
  }

 private:
  SignalSpec signal_;
  SigOriginCode origin_code_;
  ActorId sender_;
};

enum class OutcomeKind {
  HandlerExecuted,
  Crash,
  NoEffect,
  FilteredByRuntime,
  BlockedByKernel,
};

inline std::string_view outcome_name(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::HandlerExecuted:
      return "HandlerExecuted";
    case OutcomeKind::Crash:
      return "Crash";
    case OutcomeKind::NoEffect:
      return "NoEffect";
    case OutcomeKind::FilteredByRuntime:
      return "FilteredByRuntime";
    case OutcomeKind::BlockedByKernel:
      return "BlockedByKernel";
  }
  return "?";
}

using HandlerActionId = std::uint32_t;

/// Terminal result of a delivery attempt. handler_id is present exactly when
/// a handler ran.
class DeliveryOutcome {
 public:
  static DeliveryOutcome handler_executed(HandlerActionId id) {
    DeliveryOutcome o;
    o.kind_ = OutcomeKind::HandlerExecuted;
    o.handler_id_ = id;
    return o;
  }

  static DeliveryOutcome of(OutcomeKind k) {
    if (k == OutcomeKind::HandlerExecuted) {
      throw std::logic_error("HandlerExecuted outcomes need a handler id");
    }
    DeliveryOutcome o;
    o.kind_ = k;
    return o;
  }

  OutcomeKind kind() const { return kind_; }
  const std::optional<HandlerActionId>& handler_id() const {
    return handler_id_;
  }

  friend bool operator==(const DeliveryOutcome&, const DeliveryOutcome&) =
      default;

 private:
  DeliveryOutcome() = default;
  OutcomeKind kind_ = OutcomeKind::NoEffect;
  std::optional<HandlerActionId> handler_id_;
};

}  // namespace sigsim
