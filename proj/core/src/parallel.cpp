#include "ramp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

#include "ramp/error.hpp"

namespace ramp {
namespace {

constexpr std::int64_t kTileCount = 64;

thread_local bool t_inside_worker = false;

class Pool {
 public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  int workers() const { return workers_; }

  void resize(int n) {
    if (n < 1) throw Error("worker count must be >= 1");
    if (n == workers_) return;
    shutdown();
    workers_ = n;
    spawn();
  }

  void run(std::int64_t begin, std::int64_t end,
           const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const std::int64_t range = end - begin;
    if (range <= 0) return;
    const std::int64_t tile = (range + kTileCount - 1) / kTileCount;
    const std::int64_t n_tiles = (range + tile - 1) / tile;

    if (workers_ == 1 || t_inside_worker) {
      for (std::int64_t i = 0; i < n_tiles; ++i) {
        const std::int64_t lo = begin + i * tile;
        fn(lo, std::min(end, lo + tile));
      }
      return;
    }

    // Previous job is fully quiesced here (run returns only when no worker
    // is active), so the job fields can be rewritten safely.
    {
      std::lock_guard<std::mutex> lk(m_);
      fn_ = &fn;
      begin_ = begin;
      end_ = end;
      tile_ = tile;
      n_tiles_ = n_tiles;
      next_.store(0, std::memory_order_relaxed);
      done_.store(0, std::memory_order_relaxed);
      ++job_id_;
    }
    cv_.notify_all();

    drain();
    while (done_.load(std::memory_order_acquire) < n_tiles ||
           active_.load(std::memory_order_acquire) > 0) {
      std::this_thread::yield();
    }

    std::lock_guard<std::mutex> lk(m_);
    fn_ = nullptr;
  }

  ~Pool() { shutdown(); }

 private:
  Pool() : workers_(1) {}

  void spawn() {
    stop_ = false;
    for (int i = 0; i + 1 < workers_; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  void shutdown() {
    {
      std::lock_guard<std::mutex> lk(m_);
      stop_ = true;
      ++job_id_;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
    threads_.clear();
    stop_ = false;
  }

  void worker_loop() {
    t_inside_worker = true;
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lk(m_);
        cv_.wait(lk, [&] { return stop_ || job_id_ != seen; });
        if (stop_) return;
        seen = job_id_;
        if (fn_ == nullptr) continue;
        active_.fetch_add(1, std::memory_order_relaxed);
      }
      drain();
      active_.fetch_sub(1, std::memory_order_release);
    }
  }

  void drain() {
    for (;;) {
      const std::int64_t i = next_.fetch_add(1, std::memory_order_relaxed);
      if (i >= n_tiles_) return;
      const std::int64_t lo = begin_ + i * tile_;
      (*fn_)(lo, std::min(end_, lo + tile_));
      done_.fetch_add(1, std::memory_order_release);
    }
  }

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex m_;
  std::condition_variable cv_;
  const std::function<void(std::int64_t, std::int64_t)>* fn_ = nullptr;
  std::int64_t begin_ = 0, end_ = 0, tile_ = 1, n_tiles_ = 0;
  std::atomic<std::int64_t> next_{0};
  std::atomic<std::int64_t> done_{0};
  std::atomic<int> active_{0};
  std::uint64_t job_id_ = 0;
  bool stop_ = false;
};

}  // namespace

int worker_count() { return Pool::instance().workers(); }

void set_worker_count(int n) { Pool::instance().resize(n); }

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  Pool::instance().run(begin, end, fn);
}

}  // namespace ramp
