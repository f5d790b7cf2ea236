#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

namespace trustmon::harness {

/// Resident set size, in bytes, of `root` plus all of its descendants, read
/// from /proc. Empty when /proc cannot be read. RSS counts resident pages
/// only; swapped-out or shared-but-unmapped memory is not reflected.
std::optional<std::uint64_t> tree_rss_bytes(pid_t root);

struct ProfileResult {
  double duration_s = 0.0;
  std::optional<double> peak_rss_mib;  // empty when RSS is unavailable
  std::size_t samples = 0;
};

/// Samples the RSS of a process tree on a background thread: once at start,
/// every `interval` while running and once at stop. The peak is the largest
/// per-sample sum.
class RssSampler {
 public:
  explicit RssSampler(pid_t root,
                      std::chrono::milliseconds interval = std::chrono::milliseconds(200));
  ~RssSampler();
  RssSampler(const RssSampler&) = delete;
  RssSampler& operator=(const RssSampler&) = delete;

  /// Stops sampling and returns the peak in MiB with the number of samples.
  ProfileResult stop();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Runs `phase` in this process while sampling this process's tree.
ProfileResult profile_in_process(const std::function<void()>& phase,
                                 std::chrono::milliseconds interval = std::chrono::milliseconds(200));

struct SubprocessResult {
  ProfileResult profile;
  int exit_status = 0;
};

/// Runs argv[0] (searched on PATH) as a child and samples the child's tree
/// until it exits. Throws IoError when the child cannot be started.
SubprocessResult profile_subprocess(const std::vector<std::string>& argv,
                                    std::chrono::milliseconds interval = std::chrono::milliseconds(200));

}  // namespace trustmon::harness
