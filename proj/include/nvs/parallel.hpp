#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nvs {

// Deterministic data-parallel execution over grid rows. Every chunk produces
// the same values no matter which thread runs it, and reductions are summed
// in row order, so results are bitwise identical for any thread count.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  int parallelism() {
    std::lock_guard<std::mutex> lock(api_mutex_);
    return static_cast<int>(workers_.size()) + 1;
  }

  void resize(int threads) {
    if (threads < 1) threads = 1;
    std::lock_guard<std::mutex> lock(api_mutex_);
    stop_workers();
    start_workers(threads - 1);
  }

  // Runs fn(i) for i in [0, jobs). The calling thread participates.
  void run(int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 0) return;
    std::lock_guard<std::mutex> lock(api_mutex_);
    if (workers_.empty() || jobs == 1) {
      for (int i = 0; i < jobs; ++i) fn(i);
      return;
    }
    {
      std::unique_lock<std::mutex> state(mutex_);
      fn_ = &fn;
      jobs_ = jobs;
      next_.store(0, std::memory_order_relaxed);
      pending_ = jobs;
      ++generation_;
    }
    cv_.notify_all();
    work_off(fn);
    std::unique_lock<std::mutex> state(mutex_);
    done_cv_.wait(state, [&] { return pending_ == 0; });
    fn_ = nullptr;
  }

  ~ThreadPool() {
    std::lock_guard<std::mutex> lock(api_mutex_);
    stop_workers();
  }

 private:
  ThreadPool() {
    unsigned hw = std::thread::hardware_concurrency();
    start_workers(hw > 1 ? static_cast<int>(hw) - 1 : 0);
  }

  void work_off(const std::function<void(int)>& fn) {
    for (;;) {
      int i = next_.fetch_add(1, std::memory_order_relaxed);
      if (i >= jobs_) break;
      fn(i);
      std::unique_lock<std::mutex> state(mutex_);
      if (--pending_ == 0) done_cv_.notify_all();
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int)>* fn = nullptr;
      {
        std::unique_lock<std::mutex> state(mutex_);
        cv_.wait(state, [&] { return stop_ || (generation_ != seen && fn_); });
        if (stop_) return;
        seen = generation_;
        fn = fn_;
      }
      work_off(*fn);
    }
  }

  void start_workers(int n) {
    stop_ = false;
    for (int i = 0; i < n; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  void stop_workers() {
    {
      std::unique_lock<std::mutex> state(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
    workers_.clear();
  }

  std::mutex api_mutex_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::vector<std::thread> workers_;
  const std::function<void(int)>* fn_ = nullptr;
  std::atomic<int> next_{0};
  int jobs_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

inline void set_thread_count(int n) { ThreadPool::instance().resize(n); }

inline int thread_count() { return ThreadPool::instance().parallelism(); }

// f(y) for each row y in [0, rows), rows partitioned into contiguous chunks.
template <typename F>
void parallel_rows(int rows, F&& f) {
  int nt = ThreadPool::instance().parallelism();
  if (nt <= 1 || rows <= 1) {
    for (int y = 0; y < rows; ++y) f(y);
    return;
  }
  int chunks = std::min(rows, nt);
  std::function<void(int)> job = [&](int c) {
    int y0 = static_cast<int>(static_cast<std::int64_t>(rows) * c / chunks);
    int y1 = static_cast<int>(static_cast<std::int64_t>(rows) * (c + 1) / chunks);
    for (int y = y0; y < y1; ++y) f(y);
  };
  ThreadPool::instance().run(chunks, job);
}

// Ordered reduction: per-row partials are accumulated in row order so the
// result does not depend on the thread count.
template <typename F>
double parallel_rows_sum(int rows, F&& f) {
  std::vector<double> partial(static_cast<size_t>(rows > 0 ? rows : 0), 0.0);
  parallel_rows(rows, [&](int y) { partial[static_cast<size_t>(y)] = f(y); });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace nvs
