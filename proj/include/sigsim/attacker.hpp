#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigsim/filestore.hpp"
#include "sigsim/signals.hpp"

namespace sigsim {

inline constexpr ActorId kAttackerActor = 666;

/// Builds the siginfo an injected signal carries. The interesting cases are
/// the fault codes a kernel module can forge so that runtimes which inspect
/// si_code treat the signal as a real arithmetic fault.
inline SigInfo craft_siginfo(const SignalSpec& signal, SigOriginCode code,
                             ActorId sender = kAttackerActor) {
  return SigInfo(signal, code, sender);  // the ctor enforces (signal, code) pairs
}

/// Label of an instrumentation point exported by a workload; the timing
/// oracle fires when the victim enters the labelled region.
struct WindowPredicate {
  std::string workload_site;
};

enum class StrategyKind { OneShot, EveryWindow, CountBounded };

inline std::string_view strategy_kind_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::OneShot: return "OneShot";
    case StrategyKind::EveryWindow: return "EveryWindow";
    case StrategyKind::CountBounded: return "CountBounded";
  }
  return "?";
}

/// When and how often to inject one signal.
class InjectionStrategy {
 public:
  static InjectionStrategy one_shot(SignalSpec signal, SigInfo siginfo,
                                    std::optional<WindowPredicate> window =
                                        std::nullopt) {
    return InjectionStrategy(StrategyKind::OneShot, signal, std::move(siginfo),
                             std::move(window), std::nullopt);
  }

  static InjectionStrategy every_window(SignalSpec signal, SigInfo siginfo,
                                        WindowPredicate window) {
    return InjectionStrategy(StrategyKind::EveryWindow, signal,
                             std::move(siginfo), std::move(window),
                             std::nullopt);
  }

  static InjectionStrategy count_bounded(SignalSpec signal, SigInfo siginfo,
                                         WindowPredicate window,
                                         std::int64_t max_count) {
    if (max_count < 1) {
      throw std::domain_error("count-bounded strategies need max_count >= 1");
    }
    return InjectionStrategy(StrategyKind::CountBounded, signal,
                             std::move(siginfo), std::move(window), max_count);
  }

  StrategyKind kind() const { return kind_; }
  const SignalSpec& signal() const { return signal_; }
  const SigInfo& siginfo() const { return siginfo_; }
  const std::optional<WindowPredicate>& window() const { return window_; }
  std::optional<std::int64_t> max_count() const { return max_count_; }

 private:
  InjectionStrategy(StrategyKind kind, SignalSpec signal, SigInfo siginfo,
                    std::optional<WindowPredicate> window,
                    std::optional<std::int64_t> max_count)
      : kind_(kind),
        signal_(signal),
        siginfo_(std::move(siginfo)),
        window_(std::move(window)),
        max_count_(max_count) {
    if (kind_ == StrategyKind::EveryWindow && !window_.has_value()) {
      throw std::domain_error("every-window strategies need a window");
    }
  }

  StrategyKind kind_;
  SignalSpec signal_;
  SigInfo siginfo_;
  std::optional<WindowPredicate> window_;
  std::optional<std::int64_t> max_count_;
};

/// Stand-in for the single-stepping framework: detects when the victim is in
/// a labelled window. `exact` sees every window; `timer_sampled` only sees
/// windows that contain a timer tick, with the tick period chosen by the
/// attacker (the OS controls interrupt frequency).
class StepOracle {
 public:
  enum class Mode { exact, timer_sampled };

  static StepOracle exact() { return StepOracle(Mode::exact, 0); }

  static StepOracle timer_sampled(std::uint64_t period) {
    if (period < 1) {
      throw std::domain_error("timer-sampled oracles need period >= 1");
    }
    return StepOracle(Mode::timer_sampled, period);
  }

  Mode mode() const { return mode_; }
  std::uint64_t timer_period() const { return period_; }

  /// Window occupies simulated instructions [start, start+len).
  bool detects(std::uint64_t window_start, std::uint64_t window_len) const {
    if (mode_ == Mode::exact) return true;
    if (window_len == 0) return false;
    // first tick at or after window_start; ticks at period, 2*period, ...
    std::uint64_t k = window_start / period_;
    if (k * period_ < window_start) ++k;
    if (k == 0) k = 1;
    return k * period_ < window_start + window_len;
  }

 private:
  StepOracle(Mode m, std::uint64_t p) : mode_(m), period_(p) {}
  Mode mode_;
  std::uint64_t period_;
};

/// Counters for one attack run, serialized into the scenario report.
/// aex_count is the simulated asynchronous-exit cost: one exit per oracle
/// interrupt plus one per injection attempt.
struct InjectionLog {
  StrategyKind strategy = StrategyKind::OneShot;
  int signal_number = 0;
  std::uint64_t count = 0;           // injection attempts made
  std::uint64_t delivered = 0;       // attempts that reached a handler
  std::uint64_t filtered = 0;        // attempts stopped by a defense/runtime
  std::uint64_t missed_windows = 0;  // windows the oracle never saw
  std::uint64_t windows_seen = 0;    // windows entered by the workload
  std::uint64_t aex_count = 0;
};

/// The attacker's stash of captured ciphertext blobs, keyed by path.
class BlobStore {
 public:
  BlobToken capture(const SecureFileStore& fs, const std::string& path) {
    BlobToken t = fs.capture(path);
    captured_[path].push_back(t);
    return t;
  }

  void replay(SecureFileStore& fs, const std::string& path,
              const BlobToken& token) const {
    auto it = captured_.find(path);
    const bool known =
        it != captured_.end() &&
        std::find(it->second.begin(), it->second.end(), token) != it->second.end();
    if (!known) {
      throw std::invalid_argument("replay of a token that was never captured");
    }
    fs.replay(path, token);
  }

  /// Oldest captured blob for a path, if any.
  std::optional<BlobToken> first_captured(const std::string& path) const {
    auto it = captured_.find(path);
    if (it == captured_.end() || it->second.empty()) return std::nullopt;
    return it->second.front();
  }

 private:
  std::map<std::string, std::vector<BlobToken>> captured_;
};

}  // namespace sigsim
