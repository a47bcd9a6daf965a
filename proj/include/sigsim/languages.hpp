#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sigsim/signals.hpp"

namespace sigsim {

/// Observable per-signal behavior cells used by the published grids:
/// H = a handler (or catch block) runs, C = the program crashes,
/// N = nothing observable happens.
enum class Cell : char { H = 'H', C = 'C', N = 'N' };

inline char cell_char(Cell c) { return static_cast<char>(c); }

inline Cell cell_from_char(char c) {
  switch (c) {
    case 'H': return Cell::H;
    case 'C': return Cell::C;
    case 'N': return Cell::N;
    default:
      throw std::domain_error(std::string("invalid grid cell: ") + c);
  }
}

enum class LanguageId { C, Cpp, Java, Python, Go, JS, Rust, Wasm, Julia };

/// How a language surfaces signals to programs: explicit per-signal handler
/// registration, implicit conversion to software exceptions by the runtime,
/// or no signal support at all.
enum class SignalMode { Explicit, Implicit, None };

enum class SwExceptionName { ArithmeticException, DivideError };

inline std::string_view sw_exception_name(SwExceptionName n) {
  switch (n) {
    case SwExceptionName::ArithmeticException: return "ArithmeticException";
    case SwExceptionName::DivideError: return "DivideError";
  }
  return "?";
}

struct SoftwareException {
  SwExceptionName name;
  SignalSpec origin_signal;
};

using SignalRowCells = std::array<Cell, 31>;
using SignalRowFlags = std::array<bool, 31>;

struct LanguageModel {
  LanguageId id;
  std::string_view name;
  SignalMode mode;
  SignalRowCells behavior_row;     // measured per-signal behavior
  SignalRowFlags default_handlers; // handlers the runtime installs itself

  Cell behavior(int signal_number) const {
    return behavior_row[static_cast<std::size_t>(signal_number - 1)];
  }

  bool default_handler(int signal_number) const {
    return default_handlers[static_cast<std::size_t>(signal_number - 1)];
  }

  /// Software exception the runtime raises for a signal (implicit mode only).
  std::optional<SwExceptionName> exception_for(int signal_number) const {
    if (mode != SignalMode::Implicit || signal_number != 8) return std::nullopt;
    return id == LanguageId::Julia ? SwExceptionName::DivideError
                                   : SwExceptionName::ArithmeticException;
  }
};

namespace detail {

constexpr SignalRowCells explicit_row(int no_effect_signal = 0) {
  SignalRowCells row{};
  for (int n = 1; n <= 31; ++n) {
    Cell c = Cell::H;
    if (n == 9 || n == 19) c = Cell::C;      // kernel refuses the registration
    if (n == no_effect_signal) c = Cell::N;  // runtime keeps it for itself
    row[static_cast<std::size_t>(n - 1)] = c;
  }
  return row;
}

constexpr SignalRowCells uniform_row(Cell c) {
  SignalRowCells row{};
  row.fill(c);
  return row;
}

constexpr SignalRowCells java_row() {
  SignalRowCells row = uniform_row(Cell::C);
  row[7] = Cell::H;  // only SIGFPE becomes a catchable exception
  return row;
}

constexpr SignalRowCells julia_row() {
  SignalRowCells row = uniform_row(Cell::C);
  for (int n : {2, 8, 10, 20, 21, 22, 23}) row[n - 1] = Cell::H;
  for (int n : {5, 12, 13, 17, 18, 28}) row[n - 1] = Cell::N;
  return row;
}

constexpr SignalRowFlags flags_of(std::initializer_list<int> signals) {
  SignalRowFlags f{};
  for (int n : signals) f[static_cast<std::size_t>(n - 1)] = true;
  return f;
}

inline const std::array<LanguageModel, 9>& language_table() {
  static const std::array<LanguageModel, 9> table{{
      {LanguageId::C, "C", SignalMode::Explicit, explicit_row(), flags_of({})},
      {LanguageId::Cpp, "C++", SignalMode::Explicit, explicit_row(), flags_of({})},
      {LanguageId::Java, "Java", SignalMode::Implicit, java_row(),
       flags_of({1, 2, 3, 4, 7, 8, 11, 12, 13, 15, 25})},
      {LanguageId::Python, "Python", SignalMode::Explicit, explicit_row(),
       flags_of({2})},
      // The Go runtime keeps SIGPROF for its own CPU profiling.
      {LanguageId::Go, "Go", SignalMode::Explicit, explicit_row(27),
       flags_of({1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 16, 17, 23,
                 24, 25, 26, 27, 28, 29, 30, 31})},
      {LanguageId::JS, "JS", SignalMode::Explicit, explicit_row(),
       flags_of({2, 10, 11, 15, 28})},
      {LanguageId::Rust, "Rust", SignalMode::Explicit, explicit_row(),
       flags_of({7, 11})},
      // No signal support in the system interface: every delivery kills it.
      {LanguageId::Wasm, "Wasm", SignalMode::None, uniform_row(Cell::C),
       flags_of({4, 7, 8, 11})},
      {LanguageId::Julia, "Julia", SignalMode::Implicit, julia_row(),
       flags_of({2, 4, 6, 7, 8, 10, 11, 12, 31})},
  }};
  return table;
}

}  // namespace detail

inline const LanguageModel& language(LanguageId id) {
  for (const auto& m : detail::language_table()) {
    if (m.id == id) return m;
  }
  throw std::domain_error("unknown language id");
}

inline const std::array<LanguageModel, 9>& all_languages() {
  return detail::language_table();
}

inline const LanguageModel& language_from_name(std::string_view name) {
  for (const auto& m : detail::language_table()) {
    if (m.name == name) return m;
  }
  throw std::domain_error("unknown language name: " + std::string(name));
}

/// Whether a program in this language can install its own handler for the
/// signal and have it run.
inline bool app_can_register(const LanguageModel& lang, const SignalSpec& s) {
  if (lang.mode != SignalMode::Explicit) return false;
  return lang.behavior(s.number) == Cell::H;
}

enum class InvocationKind { DirectHandler, CatchBlock, CrashDefault };

struct HandlerInvocation {
  InvocationKind kind;
  std::optional<SignalSpec> signal;             // DirectHandler
  std::optional<SoftwareException> exception;   // CatchBlock
};

/// What a delivered signal turns into at the language layer. Implicit
/// runtimes inspect the siginfo origin code: a fault code they recognize
/// becomes a catchable exception, anything else is fatal.
inline HandlerInvocation translate(const LanguageModel& lang,
                                   const SigInfo& info) {
  const SignalSpec& s = info.signal();
  switch (lang.mode) {
    case SignalMode::Explicit:
      return HandlerInvocation{InvocationKind::DirectHandler, s, std::nullopt};
    case SignalMode::Implicit: {
      auto exc = lang.exception_for(s.number);
      if (exc.has_value() && info.hardware_plausible()) {
        return HandlerInvocation{InvocationKind::CatchBlock, std::nullopt,
                                 SoftwareException{*exc, s}};
      }
      return HandlerInvocation{InvocationKind::CrashDefault, std::nullopt,
                               std::nullopt};
    }
    case SignalMode::None:
      break;
  }
  return HandlerInvocation{InvocationKind::CrashDefault, std::nullopt,
                           std::nullopt};
}

/// Signal-only overload; assumes a fault-plausible origin.
inline HandlerInvocation translate(const LanguageModel& lang,
                                   const SignalSpec& s) {
  return translate(lang, SigInfo(s, SigOriginCode::kernel_fault, 0));
}

enum class DefaultEffect {
  DebugLogToStdio,
  StartProfiling,
  StartDebugServer,
  CrashDefault,
  None,
};

inline std::string_view default_effect_name(DefaultEffect e) {
  switch (e) {
    case DefaultEffect::DebugLogToStdio: return "DebugLogToStdio";
    case DefaultEffect::StartProfiling: return "StartProfiling";
    case DefaultEffect::StartDebugServer: return "StartDebugServer";
    case DefaultEffect::CrashDefault: return "CrashDefault";
    case DefaultEffect::None: return "None";
  }
  return "?";
}

/// Layered composition: the runtime stage filters first, the language stage
/// second; whichever is more restrictive wins.
inline Cell compose_outcomes(Cell runtime_stage, Cell language_stage) {
  if (runtime_stage != Cell::H) return runtime_stage;
  return language_stage;
}

/// Effect of a delivered signal when the program itself installed nothing
/// and only the runtime's own default handler is present.
inline DefaultEffect default_handler_effect(const LanguageModel& lang,
                                            const SignalSpec& s) {
  if (!lang.default_handler(s.number)) return DefaultEffect::None;
  if (lang.id == LanguageId::Julia && s.number == 10) {
    return DefaultEffect::DebugLogToStdio;  // dumps debug logs to stderr
  }
  if (lang.id == LanguageId::Java && s.number == 3) {
    return DefaultEffect::DebugLogToStdio;  // thread dump to stdout
  }
  if (lang.id == LanguageId::Go && s.number == 27) {
    return DefaultEffect::StartProfiling;
  }
  if (lang.id == LanguageId::JS && s.number == 10) {
    return DefaultEffect::StartDebugServer;  // debug socket, even without --inspect
  }
  return DefaultEffect::CrashDefault;
}

}  // namespace sigsim
