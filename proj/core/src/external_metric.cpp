#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <string>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "molgram/errors.hpp"
#include "molgram/metrics.hpp"

namespace molgram {

namespace {

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (pipe(fds) != 0) throw ProcessFailure("pipe() failed");
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fds[0] >= 0) ::close(fds[0]);
    fds[0] = -1;
  }
  void close_write() {
    if (fds[1] >= 0) ::close(fds[1]);
    fds[1] = -1;
  }
};

void set_nonblocking(int fd) {
  fcntl(fd, F_SETFL, fcntl(fd, F_GETFL, 0) | O_NONBLOCK);
}

}  // namespace

ExternalScores external_metric(const std::vector<std::string>& smiles,
                               const std::string& command, int timeout_seconds) {
  if (command.empty()) throw ProcessFailure("external metric command is empty");
  signal(SIGPIPE, SIG_IGN);

  Pipe to_child, from_child, err_child;
  const pid_t pid = fork();
  if (pid < 0) throw ProcessFailure("fork() failed");
  if (pid == 0) {
    dup2(to_child.fds[0], STDIN_FILENO);
    dup2(from_child.fds[1], STDOUT_FILENO);
    dup2(err_child.fds[1], STDERR_FILENO);
    to_child.close_read();
    to_child.close_write();
    from_child.close_read();
    from_child.close_write();
    err_child.close_read();
    err_child.close_write();
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  to_child.close_read();
  from_child.close_write();
  err_child.close_write();

  std::string input;
  for (const std::string& s : smiles) {
    input += s;
    input += '\n';
  }

  set_nonblocking(to_child.fds[1]);
  set_nonblocking(from_child.fds[0]);
  set_nonblocking(err_child.fds[0]);

  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::seconds(timeout_seconds);
  std::string out, err;
  std::size_t written = 0;
  bool timed_out = false;

  while (true) {
    pollfd fds[3];
    int n = 0;
    int write_idx = -1, out_idx = -1, err_idx = -1;
    if (to_child.fds[1] >= 0) {
      write_idx = n;
      fds[n++] = {to_child.fds[1], POLLOUT, 0};
    }
    if (from_child.fds[0] >= 0) {
      out_idx = n;
      fds[n++] = {from_child.fds[0], POLLIN, 0};
    }
    if (err_child.fds[0] >= 0) {
      err_idx = n;
      fds[n++] = {err_child.fds[0], POLLIN, 0};
    }
    if (n == 0) break;

    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    const int rc = poll(fds, static_cast<nfds_t>(n),
                        static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (rc < 0 && errno != EINTR) break;

    char buf[4096];
    if (write_idx >= 0 && (fds[write_idx].revents & (POLLOUT | POLLERR))) {
      if (written < input.size()) {
        const ssize_t w = write(to_child.fds[1], input.data() + written,
                                input.size() - written);
        if (w > 0) written += static_cast<std::size_t>(w);
        else if (w < 0 && errno != EAGAIN && errno != EINTR)
          to_child.close_write();
      }
      if (written >= input.size()) to_child.close_write();
    }
    if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP))) {
      const ssize_t r = read(from_child.fds[0], buf, sizeof(buf));
      if (r > 0) out.append(buf, static_cast<std::size_t>(r));
      else if (r == 0 || (r < 0 && errno != EAGAIN && errno != EINTR))
        from_child.close_read();
    }
    if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP))) {
      const ssize_t r = read(err_child.fds[0], buf, sizeof(buf));
      if (r > 0) err.append(buf, static_cast<std::size_t>(r));
      else if (r == 0 || (r < 0 && errno != EAGAIN && errno != EINTR))
        err_child.close_read();
    }
  }

  int status = 0;
  if (timed_out) {
    kill(pid, SIGKILL);
    waitpid(pid, &status, 0);
    throw TimeoutError("external metric timed out after " +
                       std::to_string(timeout_seconds) + " s");
  }
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    std::string what = "external metric exited with status " +
                       std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1);
    if (!err.empty()) what += "; stderr: " + err.substr(0, 500);
    throw ProcessFailure(what);
  }

  ExternalScores result;
  std::size_t pos = 0;
  while (pos < out.size()) {
    std::size_t eol = out.find('\n', pos);
    if (eol == std::string::npos) eol = out.size();
    std::string line = out.substr(pos, eol - pos);
    pos = eol + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(line, &used);
      while (used < line.size() && line[used] == ' ') ++used;
      if (used != line.size()) throw std::invalid_argument("trailing junk");
      result.scores.push_back(v);
    } catch (const std::exception&) {
      throw ProtocolError("external metric produced a non-numeric line: '" +
                          line.substr(0, 100) + "'");
    }
  }
  if (result.scores.size() != smiles.size())
    throw ProtocolError("external metric returned " +
                        std::to_string(result.scores.size()) + " scores for " +
                        std::to_string(smiles.size()) + " molecules");
  double total = 0.0;
  for (double v : result.scores) total += v;
  result.mean = result.scores.empty() ? 0.0 : total / result.scores.size();
  return result;
}

}  // namespace molgram
