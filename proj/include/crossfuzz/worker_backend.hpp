#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <sys/types.h>
#include <vector>

#include "crossfuzz/backend.hpp"
#include "crossfuzz/wire.hpp"

namespace crossfuzz {

class WorkerStartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A backend living in a supervised child process that speaks the wire
// protocol on stdin/stdout. One call in flight at a time. Process death,
// protocol EOF or a malformed reply makes the in-flight call a Crash; a
// timeout kills the child and reports Timeout. The child is respawned lazily
// before the next call.
class WorkerBackend final : public Backend {
 public:
  // Spawns the worker and completes the handshake; throws WorkerStartError.
  WorkerBackend(std::string id, std::vector<std::string> argv,
                std::chrono::milliseconds handshake_timeout = std::chrono::seconds(10));
  ~WorkerBackend() override;

  WorkerBackend(const WorkerBackend&) = delete;
  WorkerBackend& operator=(const WorkerBackend&) = delete;

  const std::string& id() const override { return id_; }
  std::vector<std::string> manifest() const override { return hello_.manifest; }
  bool supports(std::string_view api) const override;
  std::string version() const override;
  ExecutionOutcome invoke(std::string_view api, std::span<const ValueIR> args,
                          std::chrono::milliseconds timeout) override;

  std::size_t spawn_count() const { return spawns_; }
  bool running() const { return pid_ > 0; }
  pid_t pid() const { return pid_; }

 private:
  enum class ReadStatus { Line, Eof, Timeout };

  void spawn();
  void terminate();
  std::string reap_description();
  bool write_line(const std::string& line);
  ReadStatus read_line(std::string& line, std::chrono::steady_clock::time_point deadline);

  std::string id_;
  std::vector<std::string> argv_;
  std::chrono::milliseconds handshake_timeout_;
  wire::Hello hello_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 1;
  std::size_t spawns_ = 0;
};

}  // namespace crossfuzz
