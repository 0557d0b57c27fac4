#include "dyndisc/workers.hpp"

namespace dyndisc {

WorkerPool::WorkerPool(int n_threads) {
  if (n_threads < 1) n_threads = 1;
  for (int i = 0; i < n_threads - 1; ++i)
    threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (std::thread& t : threads_) t.join();
}

int WorkerPool::default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void WorkerPool::parallel_for(int n_items, const std::function<void(int)>& body) {
  if (n_items <= 0) return;
  if (threads_.empty() || n_items == 1) {
    for (int i = 0; i < n_items; ++i) body(i);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    body_ = &body;
    n_items_ = n_items;
    next_item_ = 0;
    active_ = static_cast<int>(threads_.size());
    ++generation_;
  }
  start_cv_.notify_all();

  // The calling thread participates too.
  for (;;) {
    int item;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (next_item_ >= n_items_) break;
      item = next_item_++;
    }
    body(item);
  }

  std::unique_lock<std::mutex> lock(mutex_);
  done_cv_.wait(lock, [this] { return active_ == 0; });
  body_ = nullptr;
}

void WorkerPool::worker_loop() {
  long seen_generation = 0;
  for (;;) {
    std::unique_lock<std::mutex> lock(mutex_);
    start_cv_.wait(lock, [&] { return stop_ || generation_ != seen_generation; });
    if (stop_) return;
    seen_generation = generation_;
    const std::function<void(int)>* body = body_;
    for (;;) {
      if (next_item_ >= n_items_) break;
      const int item = next_item_++;
      lock.unlock();
      (*body)(item);
      lock.lock();
    }
    if (--active_ == 0) {
      lock.unlock();
      done_cv_.notify_all();
    }
  }
}

}  // namespace dyndisc
