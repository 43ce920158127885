#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "bodegen/evaluator.hpp"

namespace bodegen {

/// A coding problem. The JSON layout follows HumanEval+ records:
///   {"name", "prompt" (or "initial_prompt"), "entry_point", "tests": [...], "source"?}
/// with tests as {"id", "kind": "io_pair", "input": [args...], "expected": value}
/// or {"id", "kind": "assertion", "source": "assert ..."}.
struct TaskFile {
  std::string name;
  std::string initial_prompt;
  std::string entry_point;
  TestSuite tests;
  std::optional<std::string> source;
};

/// Throws ParseError (with line and column) on malformed JSON and ValidationError listing
/// every violated field constraint.
TaskFile parse_task(const std::string& text, const std::string& origin = "<task>");
TaskFile load_task(const std::filesystem::path& path);

std::string serialize_task(const TaskFile& task);

}  // namespace bodegen
