// SPDX-License-Identifier: Apache-2.0
#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <nlohmann/json.hpp>

#include "sgf/errors.hpp"
#include "sgf/oracle.hpp"

namespace sgf {

namespace {

using nlohmann::json;

constexpr int kProtocolVersion = 1;

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

json parse_line(const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw OracleProtocolError("external oracle: malformed line '" + line + "': " + e.what());
  }
}

}  // namespace

ExternalOracle::ExternalOracle(const std::string& command, std::size_t d, std::size_t n_c) : Oracle(d, n_c) {
  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw OracleProtocolError(errno_text("external oracle: pipe"));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw OracleProtocolError(errno_text("external oracle: pipe"));
  }

  // A child that dies early must not kill us with SIGPIPE on the next write.
  signal(SIGPIPE, SIG_IGN);

  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw OracleProtocolError(errno_text("external oracle: fork"));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  try {
    const json hello = parse_line(read_line());
    if (!hello.is_object() || hello.value("protocol", -1) != kProtocolVersion || !hello.contains("d") ||
        !hello.contains("n_c")) {
      throw OracleProtocolError("external oracle: bad handshake '" + hello.dump() + "'");
    }
    const auto their_d = hello.at("d").get<std::int64_t>();
    const auto their_nc = hello.at("n_c").get<std::int64_t>();
    if (their_d != static_cast<std::int64_t>(d) || their_nc != static_cast<std::int64_t>(n_c)) {
      throw OracleProtocolError("external oracle: advertised d=" + std::to_string(their_d) +
                                ", n_c=" + std::to_string(their_nc) + " but expected d=" + std::to_string(d) +
                                ", n_c=" + std::to_string(n_c));
    }
  } catch (const json::exception& e) {
    shutdown();
    throw OracleProtocolError(std::string("external oracle: bad handshake: ") + e.what());
  } catch (...) {
    shutdown();
    throw;
  }
}

ExternalOracle::~ExternalOracle() { shutdown(); }

int ExternalOracle::shutdown() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
  if (from_child_ >= 0) {
    close(from_child_);
    from_child_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    while (waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    exit_status_ = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    pid_ = -1;
  }
  return exit_status_;
}

std::string ExternalOracle::read_line() {
  if (from_child_ < 0) throw OracleProtocolError("external oracle: not running");
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw OracleProtocolError(errno_text("external oracle: read"));
    }
    if (n == 0) throw OracleProtocolError("external oracle: child closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void ExternalOracle::write_line(const std::string& line) {
  if (to_child_ < 0) throw OracleProtocolError("external oracle: not running");
  std::string data = line;
  data.push_back('\n');
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = write(to_child_, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw OracleProtocolError(errno_text("external oracle: write"));
    }
    written += static_cast<std::size_t>(n);
  }
}

Vector ExternalOracle::do_eval(ConstSpan z) {
  return do_eval_batch({Vector(z.begin(), z.end())}).front();
}

std::vector<Vector> ExternalOracle::do_eval_batch(const std::vector<Vector>& zs) {
  if (zs.empty()) return {};
  std::lock_guard lock(mutex_);
  const std::uint64_t id = next_id_++;
  write_line(json{{"id", id}, {"z", zs}}.dump());

  const json reply = parse_line(read_line());
  try {
    if (reply.at("id").get<std::uint64_t>() != id) {
      throw OracleProtocolError("external oracle: response id " + reply.at("id").dump() + " does not match " +
                                std::to_string(id));
    }
    auto rows = reply.at("c").get<std::vector<Vector>>();
    if (rows.size() != zs.size()) throw OracleProtocolError("external oracle: response batch size mismatch");
    for (const auto& row : rows) {
      if (row.size() != cond_dim()) throw OracleProtocolError("external oracle: response row length mismatch");
    }
    return rows;
  } catch (const json::exception& e) {
    throw OracleProtocolError(std::string("external oracle: bad response: ") + e.what());
  }
}

}  // namespace sgf
