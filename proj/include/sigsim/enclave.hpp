#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigsim/signals.hpp"

namespace sigsim {

enum class RegisteredVia { app_explicit, language_default, runtime_internal };

struct HandlerSpec {
  SignalSpec signal;
  HandlerActionId action;
  RegisteredVia registered_via;
};

enum class ExitType { hw, sw };

/// Exit record the CPU writes into the state save area on an asynchronous
/// exit. valid=1 only for a genuine in-enclave hardware exception; an exit
/// forced from outside leaves valid=0 and no vector.
struct ExitInfo {
  std::optional<HwVector> vector;
  ExitType exit_type = ExitType::hw;
  int valid = 0;
};

enum class ThreadMode { InEnclave, ExitedAsync, ExitedOcall };

enum class RegisterResult { Ok, BlockedByKernel };

/// One enclave thread: handler table, lifecycle mode, and the SSA exit
/// record. Threads built with ssa_supported=false model first-generation
/// hardware that never writes an exit record; runtime checks must branch on
/// record presence, not on a version flag.
class EnclaveThread {
 public:
  EnclaveThread(ActorId tid, bool ssa_supported)
      : tid_(tid), ssa_supported_(ssa_supported) {}

  ActorId tid() const { return tid_; }
  bool ssa_supported() const { return ssa_supported_; }
  ThreadMode mode() const { return mode_; }
  const std::optional<ExitInfo>& ssa() const { return ssa_; }

  /// Registers a handler. The kernel refuses SIGKILL and SIGSTOP outright,
  /// so those never enter the table.
  RegisterResult register_handler(const SignalSpec& s, HandlerActionId action,
                                  RegisteredVia via = RegisteredVia::app_explicit) {
    if (s.number == 9 || s.number == 19) {
      return RegisterResult::BlockedByKernel;
    }
    handlers_[s.number] = HandlerSpec{s, action, via};
    return RegisterResult::Ok;
  }

  const HandlerSpec* handler_for(int signal_number) const {
    auto it = handlers_.find(signal_number);
    return it == handlers_.end() ? nullptr : &it->second;
  }

  const std::map<int, HandlerSpec>& handlers() const { return handlers_; }

  /// Per-thread host-signal enablement (the explicit opt-in some trusted
  /// runtimes require before forwarding a non-exception signal).
  RegisterResult enable_host_signal(const SignalSpec& s) {
    if (s.number == 9 || s.number == 19) {
      return RegisterResult::BlockedByKernel;
    }
    host_signals_.insert(s.number);
    return RegisterResult::Ok;
  }

  bool host_signal_enabled(int signal_number) const {
    return host_signals_.count(signal_number) != 0;
  }

  /// A faulting instruction inside the enclave: asynchronous exit with a
  /// valid exit record (when the hardware stores one).
  ExitInfo raise_genuine_hw_exception(HwVector v) {
    require_mode(ThreadMode::InEnclave, "raise_genuine_hw_exception");
    mode_ = ThreadMode::ExitedAsync;
    if (ssa_supported_) {
      ssa_ = ExitInfo{v, ExitType::hw, 1};
      return *ssa_;
    }
    ssa_.reset();
    return ExitInfo{v, ExitType::hw, 0};
  }

  /// An exit forced from outside the enclave (interrupt, injected signal).
  /// The hardware marks the record invalid; on first-generation hardware
  /// there is no record at all.
  ExitInfo async_exit_injected() {
    require_mode(ThreadMode::InEnclave, "async_exit_injected");
    mode_ = ThreadMode::ExitedAsync;
    if (ssa_supported_) {
      ssa_ = ExitInfo{std::nullopt, ExitType::hw, 0};
      return *ssa_;
    }
    ssa_.reset();
    return ExitInfo{std::nullopt, ExitType::hw, 0};
  }

  /// Thread leaves the enclave voluntarily (ocall context).
  void exit_ocall() {
    require_mode(ThreadMode::InEnclave, "exit_ocall");
    mode_ = ThreadMode::ExitedOcall;
    ssa_.reset();
  }

  void resume() {
    if (mode_ == ThreadMode::InEnclave) {
      throw std::logic_error("resume: thread is already in the enclave");
    }
    mode_ = ThreadMode::InEnclave;
    ssa_.reset();
  }

 private:
  void require_mode(ThreadMode m, const char* op) const {
    if (mode_ != m) {
      throw std::logic_error(std::string(op) +
                             ": thread is not in the required mode");
    }
  }

  ActorId tid_;
  bool ssa_supported_;
  ThreadMode mode_ = ThreadMode::InEnclave;
  std::optional<ExitInfo> ssa_;
  std::map<int, HandlerSpec> handlers_;
  std::set<int> host_signals_;
};

class EnclaveProcess {
 public:
  EnclaveProcess(ActorId pid, int thread_count, bool ssa_supported,
                 bool co_resident = false)
      : pid_(pid), co_resident_(co_resident) {
    if (thread_count < 1) {
      throw std::invalid_argument("an enclave process needs at least one thread");
    }
    threads_.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) {
      threads_.emplace_back(pid * 100 + static_cast<ActorId>(i), ssa_supported);
    }
  }

  ActorId pid() const { return pid_; }
  bool co_resident() const { return co_resident_; }

  std::vector<EnclaveThread>& threads() { return threads_; }
  const std::vector<EnclaveThread>& threads() const { return threads_; }

  EnclaveThread& thread(ActorId tid) {
    for (auto& t : threads_) {
      if (t.tid() == tid) return t;
    }
    throw std::out_of_range("no such thread in enclave process: " +
                            std::to_string(tid));
  }

  EnclaveThread& main_thread() { return threads_.front(); }

 private:
  ActorId pid_;
  bool co_resident_;
  std::vector<EnclaveThread> threads_;
};

}  // namespace sigsim
