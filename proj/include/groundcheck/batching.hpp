#pragma once

#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "groundcheck/scoring.hpp"

namespace groundcheck {

/// One window slot in a planned batch: which queued request, which of its
/// windows.
struct PlannedWindow {
  std::size_t request = 0;
  std::size_t window = 0;
  bool operator==(const PlannedWindow&) const = default;
};

/// Packs queued requests' windows into batches of at most
/// max_batch_windows, keeping request arrival order and each request's
/// window order. 7 windows with cap 4 plan as [4, 3].
std::vector<std::vector<PlannedWindow>> batch_plan(
    const std::vector<std::size_t>& windows_per_request,
    std::size_t max_batch_windows);

/// Pools windows across concurrent requests and scores them in batches on
/// a small worker pool. Results are delivered per request, rows in window
/// order, and are identical to inline scoring because scorers are
/// deterministic. Single-flight scorers are honored with one worker.
class ScoringExecutor {
 public:
  ScoringExecutor(std::shared_ptr<const SupportScorer> scorer,
                  std::size_t max_batch_windows, int max_wait_ms,
                  int worker_threads);
  ~ScoringExecutor();

  ScoringExecutor(const ScoringExecutor&) = delete;
  ScoringExecutor& operator=(const ScoringExecutor&) = delete;

  /// Enqueues one request's windows. The future yields one row per window,
  /// or rethrows the scorer's failure.
  std::future<std::vector<std::vector<double>>> submit(
      std::shared_ptr<const TokenizedExample> example,
      std::vector<Window> windows);

  std::size_t batches_executed() const;

 private:
  struct Job;

  void worker_loop();

  std::shared_ptr<const SupportScorer> scorer_;
  const std::size_t max_batch_windows_;
  const int max_wait_ms_;

  mutable std::mutex mutex_;
  std::condition_variable work_ready_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::size_t pending_windows_ = 0;
  std::size_t batches_executed_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace groundcheck
