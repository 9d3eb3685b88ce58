#include "groundcheck/batching.hpp"

#include <algorithm>
#include <chrono>

namespace groundcheck {

std::vector<std::vector<PlannedWindow>> batch_plan(
    const std::vector<std::size_t>& windows_per_request,
    std::size_t max_batch_windows) {
  if (max_batch_windows < 1) {
    throw InvalidConfig("max_batch_windows must be >= 1");
  }
  std::vector<std::vector<PlannedWindow>> batches;
  std::vector<PlannedWindow> current;
  for (std::size_t request = 0; request < windows_per_request.size(); ++request) {
    for (std::size_t window = 0; window < windows_per_request[request]; ++window) {
      current.push_back({request, window});
      if (current.size() == max_batch_windows) {
        batches.push_back(std::move(current));
        current.clear();
      }
    }
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

struct ScoringExecutor::Job {
  std::shared_ptr<const TokenizedExample> example;
  std::vector<Window> windows;
  std::vector<std::vector<double>> rows;
  std::size_t next_window = 0;   // next window not yet handed to a worker
  std::size_t remaining = 0;     // windows not yet scored
  bool failed = false;
  std::promise<std::vector<std::vector<double>>> promise;
};

ScoringExecutor::ScoringExecutor(std::shared_ptr<const SupportScorer> scorer,
                                 std::size_t max_batch_windows, int max_wait_ms,
                                 int worker_threads)
    : scorer_(std::move(scorer)),
      max_batch_windows_(max_batch_windows),
      max_wait_ms_(max_wait_ms) {
  if (!scorer_) throw InvalidConfig("executor requires a scorer");
  if (max_batch_windows_ < 1) {
    throw InvalidConfig("max_batch_windows must be >= 1");
  }
  int workers = std::max(1, worker_threads);
  if (scorer_->single_flight()) workers = 1;
  workers_.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

ScoringExecutor::~ScoringExecutor() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    for (auto& job : queue_) {
      if (!job->failed && job->next_window < job->windows.size()) {
        job->failed = true;
        job->promise.set_exception(std::make_exception_ptr(
            ScorerFailure("scoring executor stopped before completion")));
      }
    }
    queue_.clear();
    pending_windows_ = 0;
  }
  work_ready_.notify_all();
  for (auto& worker : workers_) worker.join();
}

std::future<std::vector<std::vector<double>>> ScoringExecutor::submit(
    std::shared_ptr<const TokenizedExample> example,
    std::vector<Window> windows) {
  auto job = std::make_shared<Job>();
  job->example = std::move(example);
  job->rows.resize(windows.size());
  job->remaining = windows.size();
  job->windows = std::move(windows);
  auto future = job->promise.get_future();

  if (job->windows.empty()) {
    job->promise.set_value({});
    return future;
  }

  {
    std::lock_guard lock(mutex_);
    if (stopping_) {
      job->promise.set_exception(std::make_exception_ptr(
          ScorerFailure("scoring executor is stopped")));
      return future;
    }
    pending_windows_ += job->windows.size();
    queue_.push_back(std::move(job));
  }
  work_ready_.notify_all();
  return future;
}

std::size_t ScoringExecutor::batches_executed() const {
  std::lock_guard lock(mutex_);
  return batches_executed_;
}

void ScoringExecutor::worker_loop() {
  using Entry = std::pair<std::shared_ptr<Job>, std::size_t>;

  while (true) {
    std::vector<Entry> batch;
    {
      std::unique_lock lock(mutex_);
      work_ready_.wait(lock, [this] { return stopping_ || pending_windows_ > 0; });
      if (stopping_ && pending_windows_ == 0) return;

      // Brief chance for more windows to arrive and fill the batch.
      if (max_wait_ms_ > 0 && pending_windows_ < max_batch_windows_) {
        work_ready_.wait_for(lock, std::chrono::milliseconds(max_wait_ms_),
                             [this] {
                               return stopping_ ||
                                      pending_windows_ >= max_batch_windows_;
                             });
        if (stopping_ && pending_windows_ == 0) return;
      }

      // Greedy fill in arrival order, window order within each request.
      while (batch.size() < max_batch_windows_ && !queue_.empty()) {
        auto& job = queue_.front();
        if (job->failed || job->next_window >= job->windows.size()) {
          queue_.pop_front();
          continue;
        }
        batch.emplace_back(job, job->next_window++);
        --pending_windows_;
        if (job->next_window >= job->windows.size()) queue_.pop_front();
      }
      if (batch.empty()) continue;
      ++batches_executed_;
    }

    std::vector<WindowInput> inputs;
    inputs.reserve(batch.size());
    for (const auto& [job, window] : batch) {
      inputs.push_back({job->example.get(), job->windows[window]});
    }

    std::vector<std::vector<double>> rows;
    std::exception_ptr failure;
    try {
      rows = scorer_->score_batch(inputs);
      if (rows.size() != inputs.size()) {
        throw ShapeMismatch("scorer '" + scorer_->name() + "' returned " +
                            std::to_string(rows.size()) + " rows for a batch of " +
                            std::to_string(inputs.size()));
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t expected = batch[i].first->example->response_size();
        if (rows[i].size() != expected) {
          throw ShapeMismatch("scorer '" + scorer_->name() + "' returned " +
                              std::to_string(rows[i].size()) +
                              " probabilities; expected " +
                              std::to_string(expected));
        }
        for (double p : rows[i]) {
          if (!(p >= 0.0 && p <= 1.0)) {
            throw ShapeMismatch("scorer '" + scorer_->name() +
                                "' returned probability outside [0, 1]");
          }
        }
      }
    } catch (...) {
      failure = std::current_exception();
    }

    {
      std::lock_guard lock(mutex_);
      if (failure) {
        for (const auto& [job, window] : batch) {
          if (!job->failed) {
            job->failed = true;
            pending_windows_ -=
                job->windows.size() - job->next_window;  // drop queued rest
            job->next_window = job->windows.size();
            job->promise.set_exception(failure);
          }
        }
      } else {
        for (std::size_t i = 0; i < batch.size(); ++i) {
          auto& job = batch[i].first;
          if (job->failed) continue;
          job->rows[batch[i].second] = std::move(rows[i]);
          if (--job->remaining == 0) {
            job->promise.set_value(std::move(job->rows));
          }
        }
      }
    }
  }
}

}  // namespace groundcheck
