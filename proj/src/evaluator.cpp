#include "bodegen/evaluator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "bodegen/errors.hpp"

namespace bodegen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one JSON request on stdin and prints one JSON verdict as the last stdout line.
// The audit hook rejects sockets, process spawning and filesystem writes outside the
// working directory; any attempt is reported as a sandbox violation even if the program
// swallows the exception.
constexpr const char* kDriverSource = R"PY(import io, json, os, sys

_root = os.path.realpath(os.getcwd())
_violations = []
_out = sys.stdout

def _inside(path):
    try:
        p = os.path.realpath(os.fsdecode(path))
    except Exception:
        return False
    return p == _root or p.startswith(_root + os.sep)

_WRITE_FLAGS = os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_APPEND | os.O_TRUNC
_PATH_EVENTS = {"os.remove", "os.rename", "os.rmdir", "os.mkdir", "os.chmod", "os.chown",
                "os.truncate", "os.symlink", "os.link", "os.utime", "shutil.rmtree",
                "shutil.copyfile", "shutil.move"}
_DENIED = ("socket.", "subprocess.", "os.system", "os.exec", "os.posix_spawn", "os.fork",
           "os.forkpty", "os.kill", "os.killpg", "pty.spawn", "ctypes.")

def _deny(what):
    _violations.append(what)
    raise PermissionError("sandbox: " + what + " is not permitted")

def _audit(event, args):
    if event.startswith(_DENIED):
        _deny(event)
    if event == "open":
        path, mode, flags = args
        if isinstance(path, int) or path is None:
            return
        writing = (mode is not None and any(c in mode for c in "wax+")) or bool((flags or 0) & _WRITE_FLAGS)
        if writing and not _inside(path):
            _deny("write to " + os.fsdecode(path))
    elif event in _PATH_EVENTS:
        for p in args[:2]:
            if isinstance(p, (str, bytes, os.PathLike)) and not _inside(p):
                _deny(event + " on " + os.fsdecode(p))

def _plain(v):
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (set, frozenset)):
        return sorted((_plain(x) for x in v), key=repr)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return v

def _emit(ok, phase, value=None, error=""):
    if _violations:
        ok, phase, error = False, "sandbox", "; ".join(_violations)
    try:
        text = json.dumps({"ok": ok, "phase": phase, "value": _plain(value), "error": error}, allow_nan=False)
    except (TypeError, ValueError) as e:
        text = json.dumps({"ok": False, "phase": "run", "value": None, "error": "unserializable result: " + str(e)})
    if isinstance(sys.stdout, io.StringIO):
        _out.write(sys.stdout.getvalue())
    _out.write("\n" + text + "\n")
    _out.flush()

def main():
    request = json.loads(sys.stdin.read())
    with open("solution.py", "r", encoding="utf-8") as f:
        source = f.read()
    try:
        code = compile(source, "solution.py", "exec")
    except (SyntaxError, ValueError) as e:
        _emit(False, "compile", error=type(e).__name__ + ": " + str(e))
        return
    sys.addaudithook(_audit)
    sys.stdout = io.StringIO()
    namespace = {"__name__": "solution"}
    try:
        exec(code, namespace)
        if request["kind"] == "assertion":
            try:
                exec(compile(request["source"], "test_case.py", "exec"), namespace)
            except AssertionError as e:
                _emit(False, "check", error="AssertionError: " + str(e))
                return
            _emit(True, "run")
        else:
            fn = namespace.get(request["entry_point"])
            if not callable(fn):
                _emit(False, "run", error="entry point " + request["entry_point"] + " is not defined")
                return
            _emit(True, "run", value=fn(*request["args"]))
    except BaseException as e:
        _emit(False, "run", error=type(e).__name__ + ": " + str(e))

main()
)PY";

constexpr std::size_t kOutputCap = std::size_t{1} << 20;

std::string resolve_runtime(const std::string& runtime) {
  if (runtime.find('/') != std::string::npos) {
    if (::access(runtime.c_str(), X_OK) == 0) return runtime;
    throw SandboxSetupError("runtime '" + runtime + "' is not executable");
  }
  const char* path = std::getenv("PATH");
  std::string dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
  std::size_t start = 0;
  while (start <= dirs.size()) {
    const std::size_t end = std::min(dirs.find(':', start), dirs.size());
    const std::string candidate = dirs.substr(start, end - start) + "/" + runtime;
    if (end > start && ::access(candidate.c_str(), X_OK) == 0) return candidate;
    start = end + 1;
  }
  throw SandboxSetupError("runtime '" + runtime + "' not found on PATH");
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "bodegen-sandbox-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr)
      throw SandboxSetupError(std::string("cannot create sandbox directory: ") + std::strerror(errno));
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary);
  out << contents;
  if (!out) throw SandboxSetupError("cannot write " + p.string());
}

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) throw SandboxSetupError(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fd[0] >= 0) ::close(fd[0]);
    fd[0] = -1;
  }
  void close_write() {
    if (fd[1] >= 0) ::close(fd[1]);
    fd[1] = -1;
  }
};

struct ChildOutcome {
  bool timed_out = false;
  int wait_status = 0;
  std::string out;
  std::string err;
  std::chrono::milliseconds duration{0};
};

// Only async-signal-safe calls between fork and exec.
[[noreturn]] void exec_child(const Pipe& in, const Pipe& out, const Pipe& err, const char* dir, const char* exe,
                             char* const argv[], char* const envp[], rlim_t memory_cap) {
  ::setpgid(0, 0);
  ::dup2(in.fd[0], STDIN_FILENO);
  ::dup2(out.fd[1], STDOUT_FILENO);
  ::dup2(err.fd[1], STDERR_FILENO);
  if (::unshare(CLONE_NEWNET) != 0) ::unshare(CLONE_NEWUSER | CLONE_NEWNET);
  if (::chdir(dir) != 0) ::_exit(126);
  const rlimit as{memory_cap, memory_cap};
  ::setrlimit(RLIMIT_AS, &as);
  const rlimit fsize{rlim_t{16} << 20, rlim_t{16} << 20};
  ::setrlimit(RLIMIT_FSIZE, &fsize);
  const rlimit core{0, 0};
  ::setrlimit(RLIMIT_CORE, &core);
  ::execve(exe, argv, envp);
  ::_exit(127);
}

ChildOutcome run_child(const std::string& exe, const fs::path& dir, const std::string& stdin_text,
                       const ExecutionLimits& limits) {
  Pipe in, out, err;
  std::vector<std::string> args = {exe, "-I", "-S", "-B", "driver.py"};
  std::vector<std::string> env = {"PATH=/usr/local/bin:/usr/bin:/bin", "PYTHONHASHSEED=0",
                                  "PYTHONIOENCODING=utf-8", "HOME=" + dir.string(), "LANG=C.UTF-8"};
  std::vector<char*> argv, envp;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  for (auto& e : env) envp.push_back(e.data());
  envp.push_back(nullptr);
  const std::string dir_str = dir.string();

  const auto started = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw SandboxSetupError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0)
    exec_child(in, out, err, dir_str.c_str(), exe.c_str(), argv.data(), envp.data(),
               static_cast<rlim_t>(limits.memory_cap));

  in.close_read();
  out.close_write();
  err.close_write();
  ::fcntl(in.fd[1], F_SETFL, O_NONBLOCK);

  ChildOutcome outcome;
  const auto deadline = started + limits.wall_time_per_case;
  std::size_t written = 0;
  if (stdin_text.empty()) in.close_write();
  char buf[65536];
  while (out.fd[0] >= 0 || err.fd[0] >= 0) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      outcome.timed_out = true;
      break;
    }
    pollfd fds[3];
    int nfds = 0;
    int idx_in = -1, idx_out = -1, idx_err = -1;
    if (in.fd[1] >= 0) fds[idx_in = nfds++] = {in.fd[1], POLLOUT, 0};
    if (out.fd[0] >= 0) fds[idx_out = nfds++] = {out.fd[0], POLLIN, 0};
    if (err.fd[0] >= 0) fds[idx_err = nfds++] = {err.fd[0], POLLIN, 0};
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    const int ready = ::poll(fds, static_cast<nfds_t>(nfds), static_cast<int>(std::max<long long>(1, remaining)));
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) continue;
    if (idx_in >= 0 && fds[idx_in].revents) {
      const ssize_t n = ::write(in.fd[1], stdin_text.data() + written, stdin_text.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN) in.close_write();
      if (written == stdin_text.size()) in.close_write();
    }
    auto drain = [&](int idx, Pipe& p, std::string& sink) {
      if (idx < 0 || !fds[idx].revents) return;
      const ssize_t n = ::read(p.fd[0], buf, sizeof buf);
      if (n > 0) {
        if (sink.size() < kOutputCap) sink.append(buf, std::min(static_cast<std::size_t>(n), kOutputCap - sink.size()));
      } else if (n == 0 || errno != EAGAIN) {
        p.close_read();
      }
    };
    drain(idx_out, out, outcome.out);
    drain(idx_err, err, outcome.err);
  }
  // The driver may have exited while a grandchild keeps the pipes open; kill the group.
  ::kill(-pid, SIGKILL);
  while (::waitpid(pid, &outcome.wait_status, 0) < 0 && errno == EINTR) {
  }
  outcome.duration =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  return outcome;
}

std::string last_line(const std::string& text) {
  std::size_t end = text.find_last_not_of("\r\n");
  if (end == std::string::npos) return {};
  const std::size_t start = text.rfind('\n', end);
  return text.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

bool numbers_close(double a, double b) {
  return std::fabs(a - b) <= 1e-6 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

bool values_match(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_number_integer() && b.is_number_integer()) {
      if (a.is_number_unsigned() || b.is_number_unsigned()) return a.dump() == b.dump();
      return a.get<std::int64_t>() == b.get<std::int64_t>();
    }
    return numbers_close(a.get<double>(), b.get<double>());
  }
  if (a.type() != b.type()) return false;
  if (a.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!values_match(a[i], b[i])) return false;
    return true;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) return false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      auto jt = b.find(it.key());
      if (jt == b.end() || !values_match(it.value(), *jt)) return false;
    }
    return true;
  }
  return a == b;
}

}  // namespace

TestCase TestCase::io_pair(std::string id, std::string input, std::string expected) {
  TestCase t;
  t.id = std::move(id);
  t.kind = TestKind::IoPair;
  t.input = std::move(input);
  t.expected = std::move(expected);
  return t;
}

TestCase TestCase::assertion(std::string id, std::string source) {
  TestCase t;
  t.id = std::move(id);
  t.kind = TestKind::Assertion;
  t.assertion_source = std::move(source);
  return t;
}

void TestSuite::validate() const {
  std::vector<std::string> problems;
  if (cases.empty()) problems.push_back("test suite is empty");
  if (entry_point.empty()) problems.push_back("entry_point is empty");
  std::set<std::string> seen;
  for (const TestCase& c : cases) {
    if (!seen.insert(c.id).second) problems.push_back("duplicate test id '" + c.id + "'");
    if (c.kind == TestKind::IoPair && (c.input.empty() || c.expected.empty() || !c.assertion_source.empty()))
      problems.push_back("io_pair case '" + c.id + "' needs input and expected only");
    if (c.kind == TestKind::Assertion && (c.assertion_source.empty() || !c.input.empty() || !c.expected.empty()))
      problems.push_back("assertion case '" + c.id + "' needs assertion_source only");
  }
  if (problems.empty()) return;
  std::string msg = problems.front();
  for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
  throw ValidationError(msg);
}

std::string_view to_string(ExecutionStatus status) {
  switch (status) {
    case ExecutionStatus::Pass: return "pass";
    case ExecutionStatus::Fail: return "fail";
    case ExecutionStatus::Timeout: return "timeout";
    case ExecutionStatus::RuntimeError: return "runtime_error";
    case ExecutionStatus::CompileError: return "compile_error";
  }
  return "fail";
}

bool json_values_match(std::string_view actual, std::string_view expected) {
  const json a = json::parse(actual, nullptr, false);
  const json b = json::parse(expected, nullptr, false);
  if (a.is_discarded() || b.is_discarded()) return false;
  return values_match(a, b);
}

ExecutionResult sandbox_run(const std::string& program, const TestCase& test, const std::string& entry_point,
                            const ExecutionLimits& limits) {
  if (limits.wall_time_per_case.count() <= 0) throw InvalidArgument("wall time per case must be positive");
  const std::string exe = resolve_runtime(limits.runtime);

  json request;
  if (test.kind == TestKind::IoPair) {
    json args = json::parse(test.input, nullptr, false);
    if (args.is_discarded() || !args.is_array())
      throw InvalidArgument("test case '" + test.id + "' input is not a JSON array of arguments");
    request = {{"kind", "io_pair"}, {"entry_point", entry_point}, {"args", std::move(args)}};
  } else {
    request = {{"kind", "assertion"}, {"entry_point", entry_point}, {"source", test.assertion_source}};
  }

  TempDir dir;
  write_file(dir.path() / "driver.py", kDriverSource);
  write_file(dir.path() / "solution.py", program);
  const ChildOutcome child = run_child(exe, dir.path(), request.dump(), limits);

  ExecutionResult result;
  result.duration = child.duration;
  result.stderr_text = child.err;
  result.stdout_text = child.out;
  if (child.timed_out) {
    result.status = ExecutionStatus::Timeout;
    return result;
  }
  if (WIFEXITED(child.wait_status) && WEXITSTATUS(child.wait_status) == 127)
    throw SandboxSetupError("could not execute runtime " + exe);

  const json verdict = json::parse(last_line(child.out), nullptr, false);
  if (verdict.is_discarded() || !verdict.is_object() || !verdict.contains("ok")) {
    result.status = ExecutionStatus::RuntimeError;
    return result;
  }
  const std::string phase = verdict.value("phase", "run");
  if (!verdict["ok"].get<bool>()) {
    if (phase == "compile") result.status = ExecutionStatus::CompileError;
    else if (phase == "check") result.status = ExecutionStatus::Fail;
    else result.status = ExecutionStatus::RuntimeError;
    if (result.stderr_text.empty()) result.stderr_text = verdict.value("error", "");
    return result;
  }
  if (test.kind == TestKind::Assertion) {
    result.status = ExecutionStatus::Pass;
    return result;
  }
  const json expected = json::parse(test.expected, nullptr, false);
  if (expected.is_discarded())
    throw InvalidArgument("test case '" + test.id + "' expected value is not valid JSON");
  result.status = values_match(verdict["value"], expected) ? ExecutionStatus::Pass : ExecutionStatus::Fail;
  return result;
}

std::vector<ExecutionResult> run_suite(const std::string& program, const TestSuite& suite,
                                       const ExecutionLimits& limits) {
  std::vector<ExecutionResult> results(suite.cases.size());
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, limits.workers)), 1, suite.cases.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < suite.cases.size(); ++i)
      results[i] = sandbox_run(program, suite.cases[i], suite.entry_point, limits);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < suite.cases.size() && !failed; i = next++) {
          try {
            results[i] = sandbox_run(program, suite.cases[i], suite.entry_point, limits);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

double evaluate_code(const std::string& program, const TestSuite& suite, const ExecutionLimits& limits) {
  if (suite.cases.empty()) throw InvalidArgument("test suite is empty");
  const auto results = run_suite(program, suite, limits);
  const auto passed = std::count_if(results.begin(), results.end(),
                                    [](const ExecutionResult& r) { return r.status == ExecutionStatus::Pass; });
  return static_cast<double>(passed) / static_cast<double>(results.size());
}

double pass_at_1(int n, int c) {
  if (n < 1) throw InvalidArgument("pass@1 needs at least one sample");
  if (c < 0 || c > n) throw InvalidArgument("pass@1 correct count must lie in [0, n]");
  // 1 - C(n-c, 1) / C(n, 1) = 1 - (n-c)/n, evaluated as c/n so the result is exact.
  return static_cast<double>(c) / static_cast<double>(n);
}

}  // namespace bodegen
