#include <catch2/catch_amalgamated.hpp>

#include "sigsim/signals.hpp"

using namespace sigsim;

TEST_CASE("signal numbers map to canonical names") {
  CHECK(signal_by_number(8).name == "SIGFPE");
  CHECK(signal_by_number(8).is_hw_exception);
  CHECK(signal_by_number(1).name == "SIGHUP");
  CHECK_FALSE(signal_by_number(1).is_hw_exception);
  CHECK(signal_by_number(31).name == "SIGSYS");
  CHECK(signal_by_number(31).is_hw_exception);
  CHECK(signal_by_number(9).name == "SIGKILL");
  CHECK(signal_by_number(19).name == "SIGSTOP");
}

TEST_CASE("out-of-range numbers are rejected") {
  CHECK_THROWS_AS(signal_by_number(0), std::domain_error);
  CHECK_THROWS_AS(signal_by_number(32), std::domain_error);
  CHECK_THROWS_AS(signal_by_number(-3), std::domain_error);
}

TEST_CASE("names round-trip and aliases are accepted on input") {
  for (int n = 1; n <= 31; ++n) {
    const SignalSpec s = signal_by_number(n);
    CHECK(signal_by_name(s.name).number == n);
  }
  CHECK(signal_by_name("SIGIOT").number == 6);
  CHECK(signal_by_name("SIGIOT").name == "SIGABRT");
  CHECK(signal_by_name("SIGUNUSED").number == 31);
  CHECK(signal_by_name("SIGUNUSED").name == "SIGSYS");
  CHECK_THROWS_AS(signal_by_name("SIGNOPE"), std::domain_error);
}

TEST_CASE("exactly six signals come from hardware exceptions") {
  int hw = 0;
  for (int n = 1; n <= 31; ++n) {
    if (signal_by_number(n).is_hw_exception) ++hw;
  }
  CHECK(hw == 6);
  for (int n : {4, 5, 7, 8, 11, 31}) {
    CHECK(signal_by_number(n).is_hw_exception);
  }
}

TEST_CASE("vectors map to their signals") {
  CHECK(hw_vector_to_signal(HwVector::DivideError).number == 8);
  CHECK(hw_vector_to_signal(HwVector::PageFault).name == "SIGSEGV");
  CHECK(hw_vector_to_signal(HwVector::InvalidOpcode).name == "SIGILL");
  CHECK(hw_vector_to_signal(HwVector::BusError).number == 7);
  CHECK(hw_vector_to_signal(HwVector::Debug).number == 5);
  CHECK(hw_vector_to_signal(HwVector::BadSyscall).number == 31);
  // aliases collapse onto the same signals
  CHECK(hw_vector_to_signal(HwVector::FpError).number == 8);
  CHECK(hw_vector_to_signal(HwVector::Breakpoint).number == 5);
}

TEST_CASE("vector/signal round trip over every hardware-exception signal") {
  for (int n = 1; n <= 31; ++n) {
    const SignalSpec s = signal_by_number(n);
    if (!s.is_hw_exception) {
      CHECK_THROWS_AS(vector_of(s), std::domain_error);
      continue;
    }
    CHECK(hw_vector_to_signal(vector_of(s)).number == s.number);
  }
}

TEST_CASE("fpe origin codes are unconstructible off SIGFPE") {
  CHECK_NOTHROW(SigInfo(signal_by_number(8), SigOriginCode::fpe_intdiv, 1));
  CHECK_NOTHROW(SigInfo(signal_by_number(8), SigOriginCode::fpe_fltovf, 1));
  CHECK_THROWS_AS(SigInfo(signal_by_number(1), SigOriginCode::fpe_intdiv, 1),
                  std::domain_error);
  CHECK_THROWS_AS(SigInfo(signal_by_number(11), SigOriginCode::fpe_fltovf, 1),
                  std::domain_error);
  CHECK_NOTHROW(SigInfo(signal_by_number(11), SigOriginCode::kernel_fault, 1));
}

TEST_CASE("outcome carries a handler id exactly when a handler ran") {
  const DeliveryOutcome ok = DeliveryOutcome::handler_executed(7);
  CHECK(ok.kind() == OutcomeKind::HandlerExecuted);
  REQUIRE(ok.handler_id().has_value());
  CHECK(*ok.handler_id() == 7);

  const DeliveryOutcome crash = DeliveryOutcome::of(OutcomeKind::Crash);
  CHECK_FALSE(crash.handler_id().has_value());
  CHECK_THROWS_AS(DeliveryOutcome::of(OutcomeKind::HandlerExecuted),
                  std::logic_error);
}
