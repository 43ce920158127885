#include "bodegen/task.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "bodegen/errors.hpp"

namespace bodegen {

using nlohmann::json;

namespace {

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string string_field(const json& j, const char* name, std::vector<std::string>& problems) {
  auto it = j.find(name);
  if (it == j.end()) {
    problems.push_back("missing field '" + std::string(name) + "'");
    return {};
  }
  if (!it->is_string()) {
    problems.push_back("field '" + std::string(name) + "' must be a string");
    return {};
  }
  return it->get<std::string>();
}

}  // namespace

TaskFile parse_task(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + line_col(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
  if (!j.is_object()) throw ParseError(origin + ": line 1", "task file must be a JSON object");

  std::vector<std::string> problems;
  TaskFile task;
  task.name = string_field(j, "name", problems);
  if (j.contains("initial_prompt")) task.initial_prompt = string_field(j, "initial_prompt", problems);
  else task.initial_prompt = string_field(j, "prompt", problems);
  task.entry_point = string_field(j, "entry_point", problems);
  if (j.contains("source") && j["source"].is_string()) task.source = j["source"].get<std::string>();

  if (task.name.empty() && j.contains("name")) problems.push_back("field 'name' is empty");
  if (task.initial_prompt.empty() && (j.contains("prompt") || j.contains("initial_prompt")))
    problems.push_back("field 'prompt' is empty");
  if (task.entry_point.empty() && j.contains("entry_point")) problems.push_back("field 'entry_point' is empty");

  task.tests.entry_point = task.entry_point;
  auto tests = j.find("tests");
  if (tests == j.end() || !tests->is_array()) {
    problems.push_back("field 'tests' must be an array");
  } else {
    for (std::size_t i = 0; i < tests->size(); ++i) {
      const json& t = (*tests)[i];
      const std::string where = "tests[" + std::to_string(i) + "]";
      if (!t.is_object()) {
        problems.push_back(where + " must be an object");
        continue;
      }
      const std::string id = t.contains("id") && t["id"].is_string() ? t["id"].get<std::string>() : "";
      if (id.empty()) problems.push_back(where + ".id must be a non-empty string");
      const std::string kind = t.value("kind", "io_pair");
      if (kind == "io_pair") {
        if (!t.contains("input") || !t["input"].is_array()) problems.push_back(where + ".input must be an array");
        if (!t.contains("expected")) problems.push_back(where + ".expected is missing");
        if (t.contains("input") && t["input"].is_array() && t.contains("expected"))
          task.tests.cases.push_back(TestCase::io_pair(id, t["input"].dump(), t["expected"].dump()));
      } else if (kind == "assertion") {
        if (!t.contains("source") || !t["source"].is_string() || t["source"].get<std::string>().empty())
          problems.push_back(where + ".source must be a non-empty string");
        else
          task.tests.cases.push_back(TestCase::assertion(id, t["source"].get<std::string>()));
      } else {
        problems.push_back(where + ".kind must be 'io_pair' or 'assertion'");
      }
    }
    if (tests->empty()) problems.push_back("field 'tests' is empty");
  }

  if (problems.empty()) {
    try {
      task.tests.validate();
    } catch (const ValidationError& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = origin + ": " + problems.front();
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw ValidationError(msg);
  }
  return task;
}

TaskFile load_task(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open task file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_task(buf.str(), path.string());
}

std::string serialize_task(const TaskFile& task) {
  json tests = json::array();
  for (const TestCase& c : task.tests.cases) {
    if (c.kind == TestKind::IoPair)
      tests.push_back({{"id", c.id}, {"kind", "io_pair"}, {"input", json::parse(c.input)},
                       {"expected", json::parse(c.expected)}});
    else
      tests.push_back({{"id", c.id}, {"kind", "assertion"}, {"source", c.assertion_source}});
  }
  json j = {{"name", task.name}, {"prompt", task.initial_prompt}, {"entry_point", task.entry_point},
            {"tests", std::move(tests)}};
  if (task.source) j["source"] = *task.source;
  return j.dump(2) + "\n";
}

}  // namespace bodegen
