#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bodegen/errors.hpp"

namespace bodegen {

enum class TestKind { IoPair, Assertion };

/// One developer-provided test. For io_pair, `input` is a JSON array of call arguments and
/// `expected` the JSON-encoded return value; for assertion, `assertion_source` is code run
/// after the program.
struct TestCase {
  std::string id;
  TestKind kind = TestKind::IoPair;
  std::string input;
  std::string expected;
  std::string assertion_source;

  static TestCase io_pair(std::string id, std::string input, std::string expected);
  static TestCase assertion(std::string id, std::string source);
};

struct TestSuite {
  std::vector<TestCase> cases;
  std::string entry_point;

  /// Throws ValidationError when empty, when ids repeat, or when a case mixes kinds.
  void validate() const;
};

struct ExecutionLimits {
  std::chrono::milliseconds wall_time_per_case{5000};
  std::size_t memory_cap = std::size_t{512} << 20;
  /// Interpreter used to run the driver; resolved against PATH.
  std::string runtime = "python3";
  /// Cases run concurrently, at most this many at a time.
  int workers = 1;
};

enum class ExecutionStatus { Pass, Fail, Timeout, RuntimeError, CompileError };

std::string_view to_string(ExecutionStatus status);

struct ExecutionResult {
  ExecutionStatus status = ExecutionStatus::Fail;
  std::string stdout_text;
  std::string stderr_text;
  std::chrono::milliseconds duration{0};
};

/// Runs `program` against one case in a fresh child process: own temp directory, no network,
/// wall-clock and address-space caps, and a driver that refuses writes outside the directory.
/// Throws SandboxSetupError only when the sandbox itself cannot be prepared.
ExecutionResult sandbox_run(const std::string& program, const TestCase& test, const std::string& entry_point,
                            const ExecutionLimits& limits);

/// Per-case results in suite order.
std::vector<ExecutionResult> run_suite(const std::string& program, const TestSuite& suite,
                                       const ExecutionLimits& limits);

/// Fraction of cases that pass.
double evaluate_code(const std::string& program, const TestSuite& suite, const ExecutionLimits& limits);

/// 1 - C(n-c, 1) / C(n, 1) for one task. Throws InvalidArgument unless 0 <= c <= n and n >= 1.
double pass_at_1(int n, int c);

/// Structural JSON equality; numbers compare with tolerance 1e-6 (scaled by magnitude above 1).
bool json_values_match(std::string_view actual, std::string_view expected);

}  // namespace bodegen
