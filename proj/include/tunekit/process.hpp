#pragma once

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tunekit/error.hpp"

extern char** environ;

namespace tunekit {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal or not started
  bool timed_out = false;
  bool spawn_failed = false;
  double wall_s = 0.0;
};

// Runs argv in cwd with env layered over the inherited environment; stdout and
// stderr both go to output. The child leads its own process group so a timeout
// kills everything it started.
inline ProcessResult run_process(const std::vector<std::string>& argv, const std::map<std::string, std::string>& env,
                                 const std::filesystem::path& cwd, const std::filesystem::path& output,
                                 std::optional<double> timeout_s = std::nullopt) {
  if (argv.empty()) {
    throw Error("run_process: empty argv");
  }
  std::vector<std::string> env_strings;
  for (char** e = environ; *e != nullptr; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string::npos && env.contains(entry.substr(0, eq))) {
      continue;
    }
    env_strings.push_back(entry);
  }
  for (const auto& [k, v] : env) {
    env_strings.push_back(k + "=" + v);
  }
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> args(argv);
  std::vector<char*> argp;
  for (auto& s : args) argp.push_back(s.data());
  argp.push_back(nullptr);
  const std::string cwd_str = cwd.string();
  const std::string out_str = output.string();

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  ProcessResult result;

  const pid_t pid = fork();
  if (pid < 0) {
    result.spawn_failed = true;
    return result;
  }
  if (pid == 0) {
    setpgid(0, 0);
    if (chdir(cwd_str.c_str()) != 0) _exit(126);
    const int fd = open(out_str.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) _exit(126);
    dup2(fd, STDOUT_FILENO);
    dup2(fd, STDERR_FILENO);
    close(fd);
    const int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) {
      dup2(devnull, STDIN_FILENO);
      close(devnull);
    }
    execvpe(argp[0], argp.data(), envp.data());
    _exit(127);
  }
  setpgid(pid, pid);

  int status = 0;
  for (;;) {
    const pid_t done = waitpid(pid, &status, WNOHANG);
    if (done == pid) {
      break;
    }
    if (done < 0 && errno != EINTR) {
      result.spawn_failed = true;
      return result;
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (timeout_s && elapsed >= *timeout_s) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  result.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  if (!result.timed_out && WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  }
  if (!result.timed_out && result.exit_code == 127) {
    result.spawn_failed = true;
  }
  return result;
}

inline ProcessResult run_shell(const std::string& command, const std::map<std::string, std::string>& env,
                               const std::filesystem::path& cwd, const std::filesystem::path& output,
                               std::optional<double> timeout_s = std::nullopt) {
  return run_process({"/bin/sh", "-c", command}, env, cwd, output, timeout_s);
}

}  // namespace tunekit
