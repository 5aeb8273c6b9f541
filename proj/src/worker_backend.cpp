#include "crossfuzz/worker_backend.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace crossfuzz {
namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

WorkerBackend::WorkerBackend(std::string id, std::vector<std::string> argv,
                             std::chrono::milliseconds handshake_timeout)
    : id_(std::move(id)), argv_(std::move(argv)), handshake_timeout_(handshake_timeout) {
  if (argv_.empty()) throw WorkerStartError("worker command is empty");
  ignore_sigpipe();
  spawn();
}

WorkerBackend::~WorkerBackend() { terminate(); }

bool WorkerBackend::supports(std::string_view api) const {
  return std::find(hello_.manifest.begin(), hello_.manifest.end(), api) != hello_.manifest.end();
}

std::string WorkerBackend::version() const {
  std::string v = hello_.backend + " protocol " + std::to_string(hello_.protocol);
  if (!hello_.version.empty()) v += " " + hello_.version;
  return v;
}

void WorkerBackend::spawn() {
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw WorkerStartError(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw WorkerStartError(std::string("pipe: ") + std::strerror(errno));
  }

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw WorkerStartError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::signal(SIGPIPE, SIG_DFL);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }

  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  buffer_.clear();
  ++spawns_;

  std::string line;
  const auto status = read_line(line, std::chrono::steady_clock::now() + handshake_timeout_);
  if (status != ReadStatus::Line) {
    const std::string why = status == ReadStatus::Timeout ? "timed out" : reap_description();
    terminate();
    throw WorkerStartError("worker '" + argv_[0] + "' handshake failed: " + why);
  }
  try {
    hello_ = wire::parse_hello(nlohmann::json::parse(line));
  } catch (const std::exception& e) {
    terminate();
    throw WorkerStartError("worker '" + argv_[0] + "' sent a bad hello: " + e.what());
  }
  if (hello_.protocol != wire::kProtocolVersion) {
    terminate();
    throw WorkerStartError("worker '" + argv_[0] + "' speaks protocol " + std::to_string(hello_.protocol));
  }
}

void WorkerBackend::terminate() {
  close_fd(to_child_);
  close_fd(from_child_);
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
  pid_ = -1;
  buffer_.clear();
}

// Waits for an exiting child and describes how it ended.
std::string WorkerBackend::reap_description() {
  if (pid_ <= 0) return "worker not running";
  int status = 0;
  pid_t r;
  for (int attempt = 0; attempt < 200; ++attempt) {
    r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      pid_ = -1;
      if (WIFSIGNALED(status)) return "worker terminated by signal " + std::to_string(WTERMSIG(status));
      if (WIFEXITED(status)) return "worker exited with status " + std::to_string(WEXITSTATUS(status));
      return "worker ended";
    }
    ::usleep(5000);
  }
  return "worker closed its output";
}

bool WorkerBackend::write_line(const std::string& line) {
  std::string payload = line + '\n';
  const char* p = payload.data();
  std::size_t left = payload.size();
  while (left > 0) {
    const ssize_t n = ::write(to_child_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  return true;
}

WorkerBackend::ReadStatus WorkerBackend::read_line(std::string& line, std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return ReadStatus::Line;
    }
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) return ReadStatus::Timeout;
    pollfd fd{from_child_, POLLIN, 0};
    const int ready = ::poll(&fd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      return ReadStatus::Eof;
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      return ReadStatus::Eof;
    }
    if (n == 0) return ReadStatus::Eof;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ExecutionOutcome WorkerBackend::invoke(std::string_view api, std::span<const ValueIR> args,
                                       std::chrono::milliseconds timeout) {
  ExecutionOutcome out;
  out.backend_id = id_;
  if (pid_ <= 0) {
    try {
      spawn();
    } catch (const WorkerStartError& e) {
      out.status = CallStatus::Crash;
      out.error_text = std::string("respawn failed: ") + e.what();
      return out;
    }
  }

  const std::uint64_t request_id = next_id_++;
  if (!write_line(wire::call_request(request_id, api, args).dump())) {
    out.status = CallStatus::Crash;
    out.error_text = reap_description();
    terminate();
    return out;
  }

  std::string line;
  switch (read_line(line, std::chrono::steady_clock::now() + timeout)) {
    case ReadStatus::Timeout:
      terminate();
      out.status = CallStatus::Timeout;
      out.error_text = "no reply within " + std::to_string(timeout.count()) + " ms";
      return out;
    case ReadStatus::Eof:
      out.status = CallStatus::Crash;
      out.error_text = reap_description();
      terminate();
      return out;
    case ReadStatus::Line: break;
  }

  try {
    const auto reply = nlohmann::json::parse(line);
    if (reply.value("type", "") != "result") throw std::invalid_argument("expected a result message");
    if (reply.at("id").get<std::uint64_t>() != request_id) throw std::invalid_argument("reply id mismatch");
    const std::string status = reply.at("status").get<std::string>();
    if (status == "ok") {
      out.status = CallStatus::Ok;
      for (const auto& v : reply.at("outputs")) out.outputs.push_back(value_from_json(v));
    } else if (status == "error") {
      out.status = CallStatus::Error;
      out.error_text = reply.value("error", std::string("unspecified worker error"));
    } else {
      throw std::invalid_argument("unknown status '" + status + "'");
    }
  } catch (const std::exception& e) {
    terminate();
    out = {};
    out.backend_id = id_;
    out.status = CallStatus::Crash;
    out.error_text = std::string("protocol violation: ") + e.what();
  }
  return out;
}

}  // namespace crossfuzz
