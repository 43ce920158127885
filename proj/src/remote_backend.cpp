#include "bodegen/backend.hpp"

#include <thread>

// After Eigen: httplib pulls in <resolv.h>, whose _res macro collides with Eigen parameter names.
#include <httplib.h>
#include <json.hpp>

namespace bodegen {

using nlohmann::json;

namespace {

json parse_body(const std::string& body, const std::string& path) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError(path + ": response is not a JSON object");
  return j;
}

template <typename T>
T field(const json& j, const char* name, const std::string& path) {
  auto it = j.find(name);
  if (it == j.end()) throw ProtocolError(path + ": response lacks '" + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(path + ": field '" + name + "' has the wrong type");
  }
}

Eigen::VectorXd to_vector(const json& arr, Eigen::Index expected, const std::string& path, const char* what) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != expected)
    throw ProtocolError(path + ": " + what + " must be an array of " + std::to_string(expected) + " numbers");
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    const json& x = arr[static_cast<std::size_t>(i)];
    if (!x.is_number()) throw ProtocolError(path + ": " + what + " contains a non-number");
    v[i] = x.get<double>();
  }
  return v;
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw InvalidArgument("remote backend needs an endpoint");
  if (options_.dim < 1) throw InvalidArgument("embedding dimension must be positive");
}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::post(const std::string& path, const std::string& body) {
  httplib::Client client(options_.endpoint);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.backoff_base * (1LL << (attempt - 1)));
    ++attempts_;
    const httplib::Result res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    const json err = json::parse(res->body, nullptr, false);
    if (!err.is_discarded() && err.is_object() && err.contains("error") && err["error"].is_object()) {
      throw BackendError(err["error"].value("code", "unknown"), err["error"].value("message", ""));
    }
    throw ProtocolError(path + ": HTTP " + std::to_string(res->status) + " without an error record");
  }
  throw TransportError(path + ": " + last_error + " after " + std::to_string(options_.retries + 1) + " attempts");
}

EmbeddingSequence RemoteBackend::embed(const std::string& text) {
  const std::string path = "/embed";
  const json reply = parse_body(post(path, json{{"text", text}}.dump()), path);
  const auto dim = field<Eigen::Index>(reply, "dim", path);
  if (dim != options_.dim)
    throw ProtocolError(path + ": bridge reports dimension " + std::to_string(dim) + ", expected " +
                        std::to_string(options_.dim));
  const json& rows = reply.contains("embeddings") ? reply["embeddings"] : json();
  if (!rows.is_array()) throw ProtocolError(path + ": 'embeddings' must be an array");
  EmbeddingSequence out(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = to_vector(rows[r], dim, path, "embedding").transpose();
  return out;
}

std::string RemoteBackend::generate_prompt(const EmbeddingSequence& embeddings) {
  if (embeddings.cols() != options_.dim)
    throw ProtocolError("/generate_prompt: embeddings have width " + std::to_string(embeddings.cols()) +
                        ", bridge dimension is " + std::to_string(options_.dim));
  json rows = json::array();
  for (Eigen::Index r = 0; r < embeddings.rows(); ++r)
    rows.push_back(std::vector<double>(embeddings.row(r).data(), embeddings.row(r).data() + embeddings.cols()));
  const json request = {{"embeddings", std::move(rows)}, {"max_new_tokens", options_.max_new_tokens}, {"temperature", 0}};
  const std::string path = "/generate_prompt";
  std::lock_guard lock(prompt_mutex_);
  return field<std::string>(parse_body(post(path, request.dump()), path), "prompt", path);
}

std::vector<std::string> RemoteBackend::generate_code(const std::string& prompt, int count) {
  if (count < 1) throw InvalidArgument("sample count must be positive");
  const json request = {{"prompt", prompt},
                        {"n", count},
                        {"temperature", options_.code_temperature},
                        {"max_new_tokens", options_.max_new_tokens}};
  const std::string path = "/generate_code";
  auto samples = field<std::vector<std::string>>(parse_body(post(path, request.dump()), path), "samples", path);
  if (static_cast<int>(samples.size()) != count)
    throw ProtocolError(path + ": asked for " + std::to_string(count) + " samples, got " +
                        std::to_string(samples.size()));
  return samples;
}

std::optional<EmbeddingStats> RemoteBackend::stats() {
  const std::string path = "/stats";
  const json reply = parse_body(post(path, "{}"), path);
  EmbeddingStats s;
  s.dim = field<Eigen::Index>(reply, "dim", path);
  if (s.dim != options_.dim)
    throw ProtocolError(path + ": bridge reports dimension " + std::to_string(s.dim) + ", expected " +
                        std::to_string(options_.dim));
  s.mean = to_vector(reply.value("embed_mean", json()), s.dim, path, "embed_mean");
  s.stddev = to_vector(reply.value("embed_std", json()), s.dim, path, "embed_std");
  return s;
}

}  // namespace bodegen
