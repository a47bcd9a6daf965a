#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigsim/enclave.hpp"
#include "sigsim/signals.hpp"
#include "sigsim/trace.hpp"

namespace sigsim {

/// Pluggable delivery-time mitigations. They compose in a fixed order:
/// whitelist, then exit-info validation, then the inter-thread ledger.
struct DefenseConfig {
  bool exit_info_filter = false;
  bool inter_thread_ledger = false;
  std::optional<std::set<int>> signal_whitelist;

  bool any_enabled() const {
    return exit_info_filter || inter_thread_ledger ||
           signal_whitelist.has_value();
  }
};

struct LedgerEntry {
  int signal_number;
  ActorId target_tid;
  bool consumed = false;
};

/// Shared-memory record of signals raised by enclave threads. A sender
/// records (signal, target) before leaving the enclave; the receiving side
/// consumes a matching entry on delivery. Each entry pays for exactly one
/// delivery. The same structure is reused keyed by process id for libOSes
/// that route process-to-process signals.
class SignalLedger {
 public:
  /// pre: the recording thread belongs to the process and is in the enclave.
  void record(const EnclaveThread& recorder, const SignalSpec& s,
              ActorId target_tid) {
    if (recorder.mode() != ThreadMode::InEnclave) {
      throw std::logic_error(
          "ledger record: only an in-enclave thread may record");
    }
    entries_.push_back(LedgerEntry{s.number, target_tid, false});
  }

  /// Consumes one unconsumed matching entry. Returns false when none exists
  /// (the delivery must then be treated as forged).
  bool consume(int signal_number, ActorId target_tid) {
    for (auto& e : entries_) {
      if (!e.consumed && e.signal_number == signal_number &&
          e.target_tid == target_tid) {
        e.consumed = true;
        return true;
      }
    }
    return false;
  }

  /// Entries die with their thread.
  void purge_thread(ActorId tid) {
    std::erase_if(entries_,
                  [tid](const LedgerEntry& e) { return e.target_tid == tid; });
  }

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::vector<LedgerEntry> entries_;
};

struct DefenseContext {
  DefenseConfig config;
  SignalLedger* ledger = nullptr;
};

enum class GateResult { pass, filtered };

/// Runs the configured stages against a signal-interface delivery, appending
/// check steps to the trace. Genuine exception delivery does not go through
/// here; it is validated by the exit record itself.
inline GateResult defense_gate(DeliveryTrace& trace, const DefenseContext* ctx,
                               const SignalSpec& signal,
                               const EnclaveThread& target) {
  if (ctx == nullptr || !ctx->config.any_enabled()) return GateResult::pass;

  if (ctx->config.signal_whitelist) {
    const bool ok = ctx->config.signal_whitelist->count(signal.number) != 0;
    trace.step_at(StepKind::whitelist_check, /*in_enclave=*/true,
                  std::string(signal.name), ok);
    if (!ok) return GateResult::filtered;
  }

  if (ctx->config.exit_info_filter && signal.is_hw_exception) {
    // A signal of hardware-exception class must be backed by a valid exit
    // record; anything else was faked from outside.
    const bool ok = target.ssa().has_value() && target.ssa()->valid == 1;
    trace.step_at(StepKind::exit_info_check, /*in_enclave=*/true,
                  ok ? "exit record valid" : "no valid exit record", ok);
    if (!ok) return GateResult::filtered;
  }

  if (ctx->config.inter_thread_ledger) {
    if (ctx->ledger == nullptr) {
      throw std::logic_error("ledger defense enabled without a ledger");
    }
    const bool ok = ctx->ledger->consume(signal.number, target.tid());
    trace.step_at(StepKind::ledger_check, /*in_enclave=*/true,
                  ok ? "matching entry consumed" : "no matching entry", ok);
    if (!ok) return GateResult::filtered;
  }

  return GateResult::pass;
}

/// True when the configured stages would stop this signal even for a
/// legitimate sender outside the enclave (the functionality cost of turning
/// the defense on).
inline bool would_filter_external(const DefenseConfig& cfg,
                                  const SignalSpec& signal) {
  if (cfg.signal_whitelist && cfg.signal_whitelist->count(signal.number) == 0) {
    return true;
  }
  if (cfg.exit_info_filter && signal.is_hw_exception) return true;
  if (cfg.inter_thread_ledger) return true;  // external senders cannot record
  return false;
}

}  // namespace sigsim
