#include "bodegen/run_log.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bodegen {

using nlohmann::json;

namespace {

json config_to_json(const RunConfig& c) {
  return {{"m", c.m},
          {"d", c.d},
          {"k", c.k},
          {"n_init", c.n_init},
          {"t_max", c.t_max},
          {"n_candidates", c.n_candidates},
          {"n_code_samples", c.n_code_samples},
          {"seed", c.seed},
          {"kernel", std::string(to_string(c.kernel))},
          {"restarts", c.restarts},
          {"backend", c.backend == BackendKind::Remote ? "remote" : "sim"},
          {"endpoint", c.endpoint},
          {"box_policy", c.box_policy == BoxPolicy::TableStats ? "table-stats" : "fixed"},
          {"box_lower", c.box_lower},
          {"box_upper", c.box_upper},
          {"per_slot_projection", c.per_slot_projection},
          {"instruction", c.instruction},
          {"timeout_per_case_ms", c.limits.wall_time_per_case.count()},
          {"memory_cap", c.limits.memory_cap},
          {"workers", c.limits.workers}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.m = j.at("m").get<int>();
  c.d = j.at("d").get<int>();
  c.k = j.at("k").get<int>();
  c.n_init = j.at("n_init").get<int>();
  c.t_max = j.at("t_max").get<int>();
  c.n_candidates = j.at("n_candidates").get<int>();
  c.n_code_samples = j.at("n_code_samples").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.kernel = kernel_family_from_string(j.at("kernel").get<std::string>());
  c.restarts = j.at("restarts").get<int>();
  c.backend = j.at("backend").get<std::string>() == "remote" ? BackendKind::Remote : BackendKind::Simulator;
  c.endpoint = j.value("endpoint", "");
  c.box_policy = j.value("box_policy", "fixed") == "table-stats" ? BoxPolicy::TableStats : BoxPolicy::Fixed;
  c.box_lower = j.value("box_lower", -1.0);
  c.box_upper = j.value("box_upper", 1.0);
  c.per_slot_projection = j.value("per_slot_projection", false);
  c.instruction = j.value("instruction", std::string(kDefaultInstruction));
  c.limits.wall_time_per_case = std::chrono::milliseconds(j.value("timeout_per_case_ms", 5000));
  c.limits.memory_cap = j.value("memory_cap", c.limits.memory_cap);
  c.limits.workers = j.value("workers", 1);
  return c;
}

json trial_to_json(const TrialRecord& t) {
  json j = {{"type", "trial"}, {"iteration", t.iteration}};
  if (t.candidate) {
    const auto& x = t.candidate->matrix();
    j["candidate"] = {{"m", x.rows()}, {"d", x.cols()}, {"values", std::vector<double>(x.data(), x.data() + x.size())}};
  } else {
    j["candidate"] = nullptr;
  }
  if (t.search_point)
    j["search_point"] = std::vector<double>(t.search_point->data(), t.search_point->data() + t.search_point->size());
  else
    j["search_point"] = nullptr;
  j["prompt"] = t.prompt_text;
  j["code_samples"] = t.code_samples;
  j["per_sample_accuracy"] = t.per_sample_accuracy;
  j["objective"] = t.objective;
  j["pass_at_1"] = t.pass_at_1;
  j["status"] = t.status;
  j["wall_time_ms"] = t.wall_time_ms;
  return j;
}

TrialRecord trial_from_json(const json& j) {
  TrialRecord t;
  t.iteration = j.at("iteration").get<int>();
  if (const json& c = j.at("candidate"); !c.is_null()) {
    const auto m = c.at("m").get<Eigen::Index>();
    const auto d = c.at("d").get<Eigen::Index>();
    const auto values = c.at("values").get<std::vector<double>>();
    if (m < 1 || d < 1 || static_cast<Eigen::Index>(values.size()) != m * d)
      throw InvalidArgument("candidate has " + std::to_string(values.size()) + " values for shape " +
                            std::to_string(m) + "x" + std::to_string(d));
    t.candidate = EmbeddingBlock(EmbeddingSequence(Eigen::Map<const EmbeddingSequence>(values.data(), m, d)));
  }
  if (auto it = j.find("search_point"); it != j.end() && !it->is_null()) {
    const auto v = it->get<std::vector<double>>();
    t.search_point = Eigen::Map<const SearchPoint>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  t.prompt_text = j.at("prompt").get<std::string>();
  t.code_samples = j.at("code_samples").get<std::vector<std::string>>();
  t.per_sample_accuracy = j.at("per_sample_accuracy").get<std::vector<double>>();
  t.objective = j.at("objective").get<double>();
  t.pass_at_1 = j.at("pass_at_1").get<double>();
  t.status = j.value("status", "ok");
  t.wall_time_ms = j.value("wall_time_ms", 0.0);
  return t;
}

}  // namespace

std::string serialize_run_log(const RunLog& log) {
  std::string out;
  const json header = {{"type", "header"},
                       {"schema_version", kRunLogSchemaVersion},
                       {"mode", log.mode},
                       {"task", log.task_name},
                       {"projection_seed", log.projection_seed},
                       {"config", config_to_json(log.config)}};
  out += header.dump() + "\n";
  for (const TrialRecord& t : log.trials) out += trial_to_json(t).dump() + "\n";
  const json summary = {{"type", "summary"},
                        {"best_index", log.best_index},
                        {"stop_reason", std::string(to_string(log.stop_reason))},
                        {"error", log.error}};
  out += summary.dump() + "\n";
  return out;
}

void write_run_log(const RunLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << serialize_run_log(log);
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

RunLog parse_run_log(const std::string& text, const std::string& origin) {
  RunLog log;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false, have_summary = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ": line " + std::to_string(lineno);
    if (have_summary) throw ParseError(where, "record after the summary");
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(where, "not a JSON object");
    const std::string type = j.value("type", "");
    try {
      if (type == "header") {
        if (have_header) throw ParseError(where, "second header");
        const int version = j.at("schema_version").get<int>();
        if (version != kRunLogSchemaVersion)
          throw ParseError(where, "unsupported schema_version " + std::to_string(version));
        log.mode = j.at("mode").get<std::string>();
        log.task_name = j.at("task").get<std::string>();
        log.projection_seed = j.at("projection_seed").get<std::uint64_t>();
        log.config = config_from_json(j.at("config"));
        have_header = true;
      } else if (!have_header) {
        throw ParseError(where, "expected the header record first");
      } else if (type == "trial") {
        log.trials.push_back(trial_from_json(j));
      } else if (type == "summary") {
        log.best_index = j.at("best_index").get<int>();
        log.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
        log.error = j.value("error", "");
        if (log.best_index >= static_cast<int>(log.trials.size()))
          throw ParseError(where, "best_index out of range");
        have_summary = true;
      } else {
        throw ParseError(where, "unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(where, e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError(where, e.what());
    }
  }
  if (!have_header) throw ParseError(origin + ": line " + std::to_string(lineno + 1), "missing header record");
  if (!have_summary) throw ParseError(origin + ": line " + std::to_string(lineno + 1), "missing summary record");
  return log;
}

RunLog load_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_log(buf.str(), path.string());
}

RunLog without_timings(RunLog log) {
  for (TrialRecord& t : log.trials) t.wall_time_ms = 0.0;
  return log;
}

}  // namespace bodegen
