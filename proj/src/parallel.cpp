#include "mixdag/parallel.hpp"

#include <atomic>
#include <exception>
#include <limits>

namespace mixdag {

namespace {
thread_local bool t_in_worker = false;
}

struct ThreadPool::Job {
    std::size_t n = 0;
    const std::function<void(std::size_t)>* fn = nullptr;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> active{0};
    std::mutex err_mu;
    std::size_t err_index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr err;
    std::condition_variable done_cv;
    std::mutex done_mu;
};

ThreadPool::ThreadPool(std::size_t threads) {
    if (threads == 0) threads = 1;
    for (std::size_t i = 1; i < threads; ++i) workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lock(mu_);
        stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
}

void ThreadPool::run_job(Job& job) {
    for (;;) {
        const std::size_t i = job.next.fetch_add(1);
        if (i >= job.n) break;
        try {
            (*job.fn)(i);
        } catch (...) {
            std::lock_guard lock(job.err_mu);
            if (i < job.err_index) {
                job.err_index = i;
                job.err = std::current_exception();
            }
        }
    }
}

void ThreadPool::worker_loop() {
    t_in_worker = true;
    std::size_t seen = 0;
    for (;;) {
        Job* job = nullptr;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stop_ || (job_ != nullptr && generation_ != seen); });
            if (stop_) return;
            seen = generation_;
            job = job_;
            job->active.fetch_add(1);
        }
        run_job(*job);
        if (job->active.fetch_sub(1) == 1) {
            std::lock_guard lock(job->done_mu);
            job->done_cv.notify_all();
        }
    }
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers_.empty() || t_in_worker || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    Job job;
    job.n = n;
    job.fn = &fn;
    {
        std::lock_guard lock(mu_);
        job_ = &job;
        ++generation_;
    }
    cv_.notify_all();
    const bool was_worker = t_in_worker;
    t_in_worker = true;
    run_job(job);
    t_in_worker = was_worker;
    {
        std::lock_guard lock(mu_);
        job_ = nullptr;
    }
    {
        std::unique_lock lock(job.done_mu);
        job.done_cv.wait(lock, [&] { return job.active.load() == 0; });
    }
    if (job.err) std::rethrow_exception(job.err);
}

ThreadPool& serial_pool() {
    static ThreadPool pool(1);
    return pool;
}

}  // namespace mixdag
