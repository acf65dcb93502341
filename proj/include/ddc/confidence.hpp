#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "ddc/errors.hpp"
#include "ddc/token_event.hpp"

namespace ddc {

// Fixed-capacity ring of the most recent scalar confidences with a running
// sum for O(1) window means. The running sum is re-anchored (recomputed from
// the ring) every `capacity` pushes to bound floating-point drift.
class ConfidenceWindow {
   public:
    explicit ConfidenceWindow(std::size_t capacity)
        : capacity_(capacity == 0 ? 1 : capacity), ring_(capacity_, 0.0) {}

    // Appends a value, evicting the oldest when full. Returns the window
    // mean iff the window is full after the push, otherwise nullopt.
    // Non-finite values are rejected and the window is left unchanged.
    std::optional<double> push(double value) {
        if (!std::isfinite(value)) {
            throw MalformedEventError("non-finite confidence value rejected");
        }
        if (size_ == capacity_) {
            evicted_ = ring_[head_];
            running_sum_ -= *evicted_;
        } else {
            ++size_;
        }
        ring_[head_] = value;
        head_ = (head_ + 1) % capacity_;
        running_sum_ += value;
        if (++pushes_since_anchor_ >= capacity_) {
            reanchor();
        }
        if (size_ < capacity_) return std::nullopt;
        return running_sum_ / static_cast<double>(capacity_);
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return size_; }
    bool full() const { return size_ == capacity_; }

    // Mean over whatever the window currently holds (size >= 1).
    double partial_mean() const {
        if (size_ == 0) throw EmptyPathError("mean of an empty window");
        return running_sum_ / static_cast<double>(size_);
    }

    // The value most recently evicted, i.e. the element immediately
    // preceding the current window in the stream.
    std::optional<double> evicted() const { return evicted_; }

    // Window contents oldest-to-newest.
    std::vector<double> values() const {
        std::vector<double> out;
        out.reserve(size_);
        std::size_t start = (head_ + capacity_ - size_) % capacity_;
        for (std::size_t i = 0; i < size_; ++i) {
            out.push_back(ring_[(start + i) % capacity_]);
        }
        return out;
    }

   private:
    void reanchor() {
        double s = 0.0;
        std::size_t start = (head_ + capacity_ - size_) % capacity_;
        for (std::size_t i = 0; i < size_; ++i) s += ring_[(start + i) % capacity_];
        running_sum_ = s;
        pushes_since_anchor_ = 0;
    }

    std::size_t capacity_;
    std::vector<double> ring_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
    std::size_t pushes_since_anchor_ = 0;
    double running_sum_ = 0.0;
    std::optional<double> evicted_;
};

// Per-path confidence state: one window of local confidences, one of global
// confidences, and the running minimum of full-window global means. Owned by
// exactly one path worker; movable between execution contexts.
class PathConfidenceTracker {
   public:
    explicit PathConfidenceTracker(std::size_t window_len)
        : local_(window_len), global_(window_len) {}

    // Folds one token event into both windows. Enforces that k stays
    // constant across the life of the path.
    void observe(const TokenEvent& event) {
        validate_event(event);
        if (tokens_ == 0) {
            top_k_ = event.top_logprobs.size();
        } else if (event.top_logprobs.size() != top_k_) {
            throw MalformedEventError("top-k changed mid-path");
        }
        last_local_mean_ = local_.push(local_confidence(event));
        last_global_mean_ = global_.push(global_confidence(event));
        if (last_global_mean_ && *last_global_mean_ < min_group_global_) {
            min_group_global_ = *last_global_mean_;
        }
        ++tokens_;
    }

    std::size_t tokens() const { return tokens_; }
    std::size_t window_len() const { return global_.capacity(); }
    bool window_full() const { return global_.full(); }

    // Means of the current (full) windows; nullopt before the first full window.
    std::optional<double> local_group_mean() const { return last_local_mean_; }
    std::optional<double> global_group_mean() const { return last_global_mean_; }

    // Current global-confidence window contents and the value just before it,
    // as needed by the trend analysis.
    std::vector<double> global_window_values() const { return global_.values(); }
    std::optional<double> global_before_window() const { return global_.evicted(); }

    // Lowest full-window global mean seen so far; when the path never filled
    // a window, the mean over everything it produced.
    double path_confidence() const {
        if (tokens_ == 0) throw EmptyPathError("path confidence of a zero-token path");
        if (min_group_global_ != std::numeric_limits<double>::infinity()) {
            return min_group_global_;
        }
        return global_.partial_mean();
    }

   private:
    ConfidenceWindow local_;
    ConfidenceWindow global_;
    double min_group_global_ = std::numeric_limits<double>::infinity();
    std::size_t tokens_ = 0;
    std::size_t top_k_ = 0;
    std::optional<double> last_local_mean_;
    std::optional<double> last_global_mean_;
};

}  // namespace ddc
