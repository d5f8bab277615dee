#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mixdag {

/// Fixed-size worker pool. parallel_for blocks until every index has run; the
/// calling thread participates. Calls made from inside a worker run inline, so
/// nested parallel sections never deadlock.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t threads = 1);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t size() const { return workers_.size() + 1; }

    /// Runs fn(i) for i in [0, n). If any call throws, the exception from the
    /// lowest failing index is rethrown after all indices finish.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

private:
    struct Job;
    void worker_loop();
    static void run_job(Job& job);

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    Job* job_ = nullptr;
    std::size_t generation_ = 0;
    bool stop_ = false;
};

/// Process-wide single-threaded pool used when callers do not supply one.
ThreadPool& serial_pool();

}  // namespace mixdag
