#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dyndisc {

/// Persistent pool for deterministic index-parallel loops. Work items are
/// claimed by atomic counter; callers write results into per-index slots so
/// the reduction order never depends on scheduling. n_threads <= 1 runs
/// everything inline.
class WorkerPool {
 public:
  explicit WorkerPool(int n_threads);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void parallel_for(int n_items, const std::function<void(int)>& body);

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  static int default_workers();

 private:
  void worker_loop();

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(int)>* body_ = nullptr;
  int n_items_ = 0;
  int next_item_ = 0;
  int active_ = 0;
  long generation_ = 0;
  bool stop_ = false;
};

}  // namespace dyndisc
