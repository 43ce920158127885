#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "bodegen/bo_loop.hpp"

namespace bodegen {

inline constexpr int kRunLogSchemaVersion = 1;

/// JSON Lines: a header record, one record per trial, then a summary record.
///   {"type":"header","schema_version":1,"mode":..,"task":..,"projection_seed":..,"config":{..}}
///   {"type":"trial","iteration":..,"candidate":{"m","d","values"}|null,"prompt":..,...}
///   {"type":"summary","best_index":..,"stop_reason":..,"error":..}
/// Doubles are written with round-trip precision.
std::string serialize_run_log(const RunLog& log);
void write_run_log(const RunLog& log, const std::filesystem::path& path);

/// Throws ParseError naming the offending line.
RunLog parse_run_log(const std::string& text, const std::string& origin = "<log>");
RunLog load_run_log(const std::filesystem::path& path);

/// Copy with timing fields zeroed, for comparing two runs of the same seed.
RunLog without_timings(RunLog log);

}  // namespace bodegen
