#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rdlab {

/// Fixed-size worker pool for data-parallel loops over cells.
///
/// Work is split into one contiguous chunk per worker. Callers must make every
/// output element a pure function of shared read-only input, so results do not
/// depend on the number of workers.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned threads = 1) : threads_(threads == 0 ? 1 : threads) {
    for (unsigned w = 1; w < threads_; ++w) {
      workers_.emplace_back([this, w] { worker_loop(w); });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
      ++generation_;
    }
    start_cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  unsigned threads() const noexcept { return threads_; }

  /// Calls body(begin, end) over a partition of [0, count).
  void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
    if (threads_ == 1 || count < 2 * threads_) {
      body(0, count);
      return;
    }
    {
      std::lock_guard lock(mutex_);
      body_ = &body;
      count_ = count;
      pending_ = threads_ - 1;
      ++generation_;
    }
    start_cv_.notify_all();
    run_chunk(0);
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    body_ = nullptr;
  }

 private:
  void run_chunk(unsigned w) {
    const std::size_t chunk = (count_ + threads_ - 1) / threads_;
    const std::size_t begin = std::min(count_, chunk * w);
    const std::size_t end = std::min(count_, begin + chunk);
    if (begin < end) (*body_)(begin, end);
  }

  void worker_loop(unsigned w) {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mutex_);
        start_cv_.wait(lock, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
      }
      run_chunk(w);
      {
        std::lock_guard lock(mutex_);
        --pending_;
      }
      done_cv_.notify_one();
    }
  }

  unsigned threads_;
  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t, std::size_t)>* body_ = nullptr;
  std::size_t count_ = 0;
  std::size_t generation_ = 0;
  unsigned pending_ = 0;
  bool stop_ = false;
};

}  // namespace rdlab
