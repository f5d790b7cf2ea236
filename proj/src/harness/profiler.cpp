#include "trustmon/harness/profiler.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "trustmon/error.hpp"

namespace trustmon::harness {

namespace {

constexpr double kMiB = 1024.0 * 1024.0;

// Parent pid from /proc/<pid>/stat; the command name may contain spaces and
// parentheses, so parse after the last ')'.
std::optional<pid_t> parent_of(const std::filesystem::path& stat_file) {
  std::ifstream in(stat_file);
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  const auto close = line.rfind(')');
  if (close == std::string::npos) return std::nullopt;
  std::istringstream rest(line.substr(close + 1));
  char state = 0;
  long ppid = 0;
  if (!(rest >> state >> ppid)) return std::nullopt;
  return static_cast<pid_t>(ppid);
}

std::optional<std::uint64_t> resident_pages(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/statm");
  std::uint64_t size = 0;
  std::uint64_t resident = 0;
  if (!(in >> size >> resident)) return std::nullopt;
  return resident;
}

}  // namespace

std::optional<std::uint64_t> tree_rss_bytes(pid_t root) {
  const auto own = resident_pages(root);
  if (!own) return std::nullopt;

  std::multimap<pid_t, pid_t> children;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator("/proc", ec)) {
    const auto name = entry.path().filename().string();
    if (name.empty() || !std::all_of(name.begin(), name.end(), ::isdigit)) continue;
    if (auto ppid = parent_of(entry.path() / "stat")) {
      children.emplace(*ppid, static_cast<pid_t>(std::stol(name)));
    }
  }

  const auto page = static_cast<std::uint64_t>(sysconf(_SC_PAGESIZE));
  std::uint64_t total = *own * page;
  std::vector<pid_t> frontier{root};
  while (!frontier.empty()) {
    const pid_t parent = frontier.back();
    frontier.pop_back();
    auto [lo, hi] = children.equal_range(parent);
    for (auto it = lo; it != hi; ++it) {
      // Processes may exit between listing and reading; skip them.
      if (auto pages = resident_pages(it->second)) total += *pages * page;
      frontier.push_back(it->second);
    }
  }
  return total;
}

struct RssSampler::State {
  pid_t root = 0;
  std::chrono::milliseconds interval{200};
  std::chrono::steady_clock::time_point started;
  std::mutex mutex;
  std::condition_variable wake;
  bool stopping = false;
  bool seen = false;  // at least one readable sample
  std::uint64_t peak = 0;
  std::size_t samples = 0;
  std::thread worker;

  void sample() {
    const auto bytes = tree_rss_bytes(root);
    std::lock_guard lock(mutex);
    ++samples;
    if (!bytes) return;
    seen = true;
    peak = std::max(peak, *bytes);
  }
};

RssSampler::RssSampler(pid_t root, std::chrono::milliseconds interval)
    : state_(std::make_unique<State>()) {
  state_->root = root;
  state_->interval = interval;
  state_->started = std::chrono::steady_clock::now();
  state_->sample();
  state_->worker = std::thread([s = state_.get()] {
    std::unique_lock lock(s->mutex);
    while (!s->wake.wait_for(lock, s->interval, [s] { return s->stopping; })) {
      lock.unlock();
      s->sample();
      lock.lock();
    }
  });
}

RssSampler::~RssSampler() {
  if (state_->worker.joinable()) stop();
}

ProfileResult RssSampler::stop() {
  {
    std::lock_guard lock(state_->mutex);
    state_->stopping = true;
  }
  state_->wake.notify_all();
  if (state_->worker.joinable()) state_->worker.join();
  state_->sample();

  ProfileResult result;
  result.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - state_->started).count();
  result.samples = state_->samples;
  if (state_->seen) {
    result.peak_rss_mib = static_cast<double>(state_->peak) / kMiB;
  }
  return result;
}

ProfileResult profile_in_process(const std::function<void()>& phase,
                                 std::chrono::milliseconds interval) {
  RssSampler sampler(getpid(), interval);
  try {
    phase();
  } catch (...) {
    sampler.stop();
    throw;
  }
  return sampler.stop();
}

SubprocessResult profile_subprocess(const std::vector<std::string>& argv,
                                    std::chrono::milliseconds interval) {
  if (argv.empty()) throw IoError("no command to profile");
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  int gate[2];
  if (pipe(gate) != 0) throw IoError("pipe failed");
  const pid_t child = fork();
  if (child < 0) throw IoError("fork failed");
  if (child == 0) {
    // Wait until the sampler is running so short commands are still seen.
    close(gate[1]);
    char go = 0;
    if (read(gate[0], &go, 1) < 0) _exit(127);
    close(gate[0]);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(gate[0]);

  SubprocessResult result;
  {
    RssSampler sampler(child, interval);
    const char go = 1;
    const bool released = write(gate[1], &go, 1) == 1;
    close(gate[1]);
    int status = 0;
    waitpid(child, &status, 0);
    result.profile = sampler.stop();
    if (!released) throw IoError("could not start '" + argv[0] + "'");
    result.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }
  if (result.exit_status == 127) throw IoError("could not run '" + argv[0] + "'");
  return result;
}

}  // namespace trustmon::harness
