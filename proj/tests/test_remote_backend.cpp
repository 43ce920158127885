#include <gtest/gtest.h>

#include "bodegen/backend.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

using namespace bodegen;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

// In-process stand-in for the bridge speaking the same wire protocol.
class MockBridge {
 public:
  explicit MockBridge(int dim) : dim_(dim) {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      const json body = json::parse(req.body);
      const std::string text = body.at("text");
      if (text.empty()) return error(res, 400, "empty_text", "text is empty");
      json rows = json::array();
      std::size_t tokens = 0;
      for (std::size_t i = 0; i < text.size(); ++i)
        if (text[i] != ' ' && (i == 0 || text[i - 1] == ' ')) ++tokens;
      for (std::size_t t = 0; t < tokens; ++t) rows.push_back(std::vector<double>(static_cast<std::size_t>(dim_), 0.5 * t));
      res.set_content(json{{"embeddings", rows}, {"dim", reported_dim.load() ? reported_dim.load() : dim_}}.dump(),
                      "application/json");
    });
    server_.Post("/generate_prompt", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      const json body = json::parse(req.body);
      last_prompt_request = body;
      res.set_content(json{{"prompt", "rows=" + std::to_string(body.at("embeddings").size())}}.dump(),
                      "application/json");
    });
    server_.Post("/generate_code", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      const json body = json::parse(req.body);
      if (fail_code) return error(res, 503, "overloaded", "try later");
      if (bare_500) {
        res.status = 500;
        res.set_content("oops", "text/plain");
        return;
      }
      int n = body.at("n");
      if (short_samples) --n;
      res.set_content(json{{"samples", std::vector<std::string>(static_cast<std::size_t>(n), "def f(x): return x")}}.dump(),
                      "application/json");
    });
    server_.Post("/stats", [this](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.set_content(json{{"dim", dim_},
                           {"embed_mean", std::vector<double>(static_cast<std::size_t>(dim_), 0.0)},
                           {"embed_std", std::vector<double>(static_cast<std::size_t>(dim_), 0.02)}}
                          .dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockBridge() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> hits{0};
  std::atomic<int> reported_dim{0};
  std::atomic<bool> fail_code{false}, bare_500{false}, short_samples{false};
  json last_prompt_request;

 private:
  static void error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
    res.status = status;
    res.set_content(json{{"error", {{"code", code}, {"message", msg}}}}.dump(), "application/json");
  }

  int dim_;
  int port_ = 0;
  httplib::Server server_;
  std::thread thread_;
};

RemoteOptions options_for(const MockBridge& bridge, Eigen::Index dim) {
  RemoteOptions o;
  o.endpoint = bridge.url();
  o.dim = dim;
  o.backoff_base = 1ms;
  o.timeout = 5s;
  return o;
}

}  // namespace

TEST(RemoteBackend, EmbedReturnsOneVectorPerToken) {
  MockBridge bridge(16);
  RemoteBackend remote(options_for(bridge, 16));
  const auto e = remote.embed("one two three");
  EXPECT_EQ(e.rows(), 3);
  EXPECT_EQ(e.cols(), 16);
  EXPECT_EQ(e(2, 5), 1.0);
}

TEST(RemoteBackend, EmptyTextSurfacesBridgeError) {
  MockBridge bridge(16);
  RemoteBackend remote(options_for(bridge, 16));
  try {
    remote.embed("");
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.code(), "empty_text");
  }
  EXPECT_EQ(remote.attempts(), 1);
}

TEST(RemoteBackend, DimensionDisagreementIsProtocolError) {
  MockBridge bridge(16);
  RemoteBackend remote(options_for(bridge, 16));
  EXPECT_THROW(remote.generate_prompt(EmbeddingSequence::Zero(3, 8)), ProtocolError);
  bridge.reported_dim = 32;
  EXPECT_THROW(remote.embed("a b"), ProtocolError);
}

TEST(RemoteBackend, GeneratePromptSendsGreedyRequest) {
  MockBridge bridge(4);
  RemoteBackend remote(options_for(bridge, 4));
  EXPECT_EQ(remote.generate_prompt(EmbeddingSequence::Ones(5, 4)), "rows=5");
  EXPECT_EQ(bridge.last_prompt_request.at("temperature"), 0);
  EXPECT_EQ(bridge.last_prompt_request.at("embeddings")[4][3], 1.0);
  EXPECT_TRUE(bridge.last_prompt_request.contains("max_new_tokens"));
}

TEST(RemoteBackend, GenerateCodeChecksSampleCount) {
  MockBridge bridge(4);
  RemoteBackend remote(options_for(bridge, 4));
  EXPECT_EQ(remote.generate_code("p", 3).size(), 3u);
  bridge.short_samples = true;
  EXPECT_THROW(remote.generate_code("p", 3), ProtocolError);
}

TEST(RemoteBackend, BridgeErrorsAreNotRetried) {
  MockBridge bridge(4);
  RemoteBackend remote(options_for(bridge, 4));
  bridge.fail_code = true;
  EXPECT_THROW(remote.generate_code("p", 1), BackendError);
  EXPECT_EQ(bridge.hits.load(), 1);
  bridge.fail_code = false;
  bridge.bare_500 = true;
  EXPECT_THROW(remote.generate_code("p", 1), ProtocolError);
}

TEST(RemoteBackend, StatsFeedTheSearchBox) {
  MockBridge bridge(6);
  RemoteBackend remote(options_for(bridge, 6));
  const auto stats = remote.stats();
  ASSERT_TRUE(stats.has_value());
  EXPECT_EQ(stats->dim, 6);
  const auto box = SearchBox::from_table_stats(stats->mean, stats->stddev);
  EXPECT_NEAR(box.upper[0], 0.06, 1e-15);
}

TEST(RemoteBackend, TransportFailureRetriesThenGivesUp) {
  // Reserve an ephemeral port and release it so nothing listens there.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  ::close(fd);
  RemoteOptions o;
  o.endpoint = "http://127.0.0.1:" + std::to_string(port);
  o.dim = 4;
  o.backoff_base = 1ms;
  RemoteBackend remote(o);
  EXPECT_THROW(remote.embed("x"), TransportError);
  EXPECT_EQ(remote.attempts(), 4);
}

TEST(RemoteBackend, NeedsEndpoint) {
  RemoteOptions o;
  o.endpoint.clear();
  EXPECT_THROW(RemoteBackend{o}, InvalidArgument);
}
