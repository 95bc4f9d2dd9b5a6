#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <utility>

namespace acsense {

// Single-producer single-consumer bounded queue with two full-queue
// policies: block the producer, or evict the oldest element.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

    void push_block(T item) {
        std::unique_lock<std::mutex> lock(mutex_);
        not_full_.wait(lock, [&] { return queue_.size() < capacity_ || closed_; });
        if (closed_) return;
        queue_.push_back(std::move(item));
        lock.unlock();
        not_empty_.notify_one();
    }

    // Returns the number of evicted items (0 or 1).
    std::size_t push_drop_oldest(T item) {
        std::size_t dropped = 0;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (closed_) return 0;
            if (queue_.size() >= capacity_) {
                queue_.pop_front();
                dropped = 1;
            }
            queue_.push_back(std::move(item));
        }
        not_empty_.notify_one();
        return dropped;
    }

    // Blocks until an item arrives; returns false once closed and drained.
    bool pop(T& out) {
        std::unique_lock<std::mutex> lock(mutex_);
        not_empty_.wait(lock, [&] { return !queue_.empty() || closed_; });
        if (queue_.empty()) return false;
        out = std::move(queue_.front());
        queue_.pop_front();
        lock.unlock();
        not_full_.notify_one();
        return true;
    }

    void close() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            closed_ = true;
        }
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    std::mutex mutex_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    std::deque<T> queue_;
    std::size_t capacity_;
    bool closed_ = false;
};

} // namespace acsense
