#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sigsim/enclave.hpp"

using namespace sigsim;

TEST_CASE("handler registration refuses SIGKILL and SIGSTOP") {
  EnclaveThread t(1, /*ssa_supported=*/true);
  CHECK(t.register_handler(signal_by_number(10), 1) == RegisterResult::Ok);
  CHECK(t.register_handler(signal_by_number(9), 1) ==
        RegisterResult::BlockedByKernel);
  CHECK(t.register_handler(signal_by_number(19), 1) ==
        RegisterResult::BlockedByKernel);
  CHECK(t.handler_for(10) != nullptr);
  CHECK(t.handler_for(9) == nullptr);
  CHECK(t.handler_for(19) == nullptr);
}

TEST_CASE("handler table never holds 9 or 19 under random registration") {
  std::mt19937 rng(2024);
  for (int round = 0; round < 50; ++round) {
    EnclaveThread t(1, true);
    for (int i = 0; i < 100; ++i) {
      const int n = 1 + static_cast<int>(rng() % 31);
      t.register_handler(signal_by_number(n), static_cast<HandlerActionId>(i));
      t.enable_host_signal(signal_by_number(n));
    }
    CHECK(t.handler_for(9) == nullptr);
    CHECK(t.handler_for(19) == nullptr);
    CHECK_FALSE(t.host_signal_enabled(9));
    CHECK_FALSE(t.host_signal_enabled(19));
  }
}

TEST_CASE("genuine exception stores a valid exit record") {
  EnclaveThread t(1, true);
  const ExitInfo info = t.raise_genuine_hw_exception(HwVector::DivideError);
  CHECK(info.valid == 1);
  REQUIRE(info.vector.has_value());
  CHECK(*info.vector == HwVector::DivideError);
  CHECK(t.mode() == ThreadMode::ExitedAsync);
  REQUIRE(t.ssa().has_value());
  CHECK(t.ssa()->valid == 1);

  CHECK_THROWS_AS(t.raise_genuine_hw_exception(HwVector::PageFault),
                  std::logic_error);  // raising twice without resume
}

TEST_CASE("a page fault stores its own vector") {
  EnclaveThread t(1, true);
  const ExitInfo info = t.raise_genuine_hw_exception(HwVector::PageFault);
  CHECK(info.valid == 1);
  CHECK(*info.vector == HwVector::PageFault);
}

TEST_CASE("injected exits leave an invalid record") {
  EnclaveThread t(1, true);
  const ExitInfo info = t.async_exit_injected();
  CHECK(info.valid == 0);
  CHECK_FALSE(info.vector.has_value());
  REQUIRE(t.ssa().has_value());
  CHECK(t.ssa()->valid == 0);

  // valid=1 implies a vector is present
  t.resume();
  const ExitInfo again = t.async_exit_injected();
  CHECK(again.valid == 0);  // idempotent per exit
}

TEST_CASE("first-generation threads never have an exit record") {
  EnclaveThread t(1, /*ssa_supported=*/false);
  t.raise_genuine_hw_exception(HwVector::DivideError);
  CHECK_FALSE(t.ssa().has_value());
  t.resume();
  t.async_exit_injected();
  CHECK_FALSE(t.ssa().has_value());
}

TEST_CASE("resume lifecycle") {
  EnclaveThread t(1, true);
  CHECK_THROWS_AS(t.resume(), std::logic_error);  // already inside
  t.async_exit_injected();
  t.resume();
  CHECK(t.mode() == ThreadMode::InEnclave);
  CHECK_FALSE(t.ssa().has_value());  // record cleared on resume

  t.exit_ocall();
  CHECK(t.mode() == ThreadMode::ExitedOcall);
  CHECK_THROWS_AS(t.async_exit_injected(), std::logic_error);
  t.resume();
}

TEST_CASE("valid=1 occurs only immediately after a genuine exception") {
  std::mt19937 rng(7);
  for (int round = 0; round < 200; ++round) {
    EnclaveThread t(1, true);
    bool last_was_genuine = false;
    for (int step = 0; step < 24; ++step) {
      if (t.mode() == ThreadMode::InEnclave) {
        if (rng() % 2 == 0) {
          t.raise_genuine_hw_exception(HwVector::DivideError);
          last_was_genuine = true;
        } else {
          t.async_exit_injected();
          last_was_genuine = false;
        }
      } else {
        t.resume();
        continue;
      }
      const bool valid_one = t.ssa().has_value() && t.ssa()->valid == 1;
      CHECK(valid_one == last_was_genuine);
    }
  }
}

TEST_CASE("a process needs at least one thread") {
  CHECK_THROWS_AS(EnclaveProcess(1, 0, true), std::invalid_argument);
  EnclaveProcess p(1, 2, true);
  CHECK(p.threads().size() == 2);
  CHECK_THROWS_AS(p.thread(999), std::out_of_range);
}
