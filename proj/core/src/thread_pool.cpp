#include "fastdvd/thread_pool.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace fastdvd {

namespace {

int default_thread_count() {
    if (const char* env = std::getenv("FASTDVD_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Minimal fork-join pool. Tasks are pulled from a shared atomic counter, so
// the assignment of task -> thread varies but the set of task units does not.
class Pool {
public:
    explicit Pool(int workers) : workers_(workers) {
        for (int i = 0; i < workers_ - 1; ++i) {
            threads_.emplace_back([this] { worker_loop(); });
        }
    }

    ~Pool() {
        {
            std::unique_lock lock(mutex_);
            stopping_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    int workers() const { return workers_; }

    void run(std::size_t count, const std::function<void(std::size_t)>& fn) {
        if (count == 0) return;
        if (workers_ == 1 || count == 1) {
            for (std::size_t i = 0; i < count; ++i) fn(i);
            return;
        }
        {
            std::unique_lock lock(mutex_);
            fn_ = &fn;
            count_ = count;
            next_.store(0, std::memory_order_relaxed);
            pending_ = count;
            ++generation_;
        }
        cv_.notify_all();
        drain();
        std::unique_lock lock(mutex_);
        done_cv_.wait(lock, [this] { return pending_ == 0; });
        fn_ = nullptr;
        if (error_) {
            auto e = error_;
            error_ = nullptr;
            std::rethrow_exception(e);
        }
    }

private:
    void drain() {
        for (;;) {
            const std::size_t i = next_.fetch_add(1, std::memory_order_relaxed);
            if (i >= count_) break;
            run_one(i);
        }
    }

    void run_one(std::size_t i) {
        try {
            (*fn_)(i);
        } catch (...) {
            std::unique_lock lock(mutex_);
            if (!error_) error_ = std::current_exception();
        }
        std::unique_lock lock(mutex_);
        if (--pending_ == 0) done_cv_.notify_all();
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
                if (stopping_) return;
                seen = generation_;
            }
            for (;;) {
                const std::size_t i = next_.fetch_add(1, std::memory_order_relaxed);
                if (i >= count_) break;
                run_one(i);
            }
        }
    }

    const int workers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t)>* fn_ = nullptr;
    std::size_t count_ = 0;
    std::atomic<std::size_t> next_{0};
    std::size_t pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stopping_ = false;
    std::exception_ptr error_;
};

std::mutex g_pool_mutex;
std::unique_ptr<Pool> g_pool;

Pool& pool() {
    std::unique_lock lock(g_pool_mutex);
    if (!g_pool) g_pool = std::make_unique<Pool>(default_thread_count());
    return *g_pool;
}

} // namespace

int num_threads() { return pool().workers(); }

void set_num_threads(int n) {
    std::unique_lock lock(g_pool_mutex);
    g_pool = std::make_unique<Pool>(n >= 1 ? n : default_thread_count());
}

void parallel_tasks(std::size_t count, const std::function<void(std::size_t)>& fn) {
    pool().run(count, fn);
}

} // namespace fastdvd
