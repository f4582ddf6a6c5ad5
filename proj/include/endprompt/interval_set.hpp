#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eplab {

// Closed integer interval [lo, hi].
struct Interval {
    std::int64_t lo = 0;
    std::int64_t hi = 0;

    std::int64_t count() const { return hi - lo + 1; }
    bool operator==(const Interval& other) const = default;
};

// A set of integers stored as sorted, pairwise-disjoint, non-adjacent closed
// intervals. Adjacent intervals ([0,3] and [4,6]) are merged on construction
// so equality is canonical.
class DistanceSet {
public:
    DistanceSet() = default;

    static DistanceSet from_intervals(std::vector<Interval> raw) {
        for (const Interval& iv : raw) {
            if (iv.lo > iv.hi) {
                throw std::invalid_argument("DistanceSet: interval with lo > hi");
            }
        }
        std::sort(raw.begin(), raw.end(),
                  [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
        DistanceSet out;
        for (const Interval& iv : raw) {
            if (!out.intervals_.empty() && iv.lo <= out.intervals_.back().hi + 1) {
                out.intervals_.back().hi = std::max(out.intervals_.back().hi, iv.hi);
            } else {
                out.intervals_.push_back(iv);
            }
        }
        return out;
    }

    static DistanceSet from_values(std::vector<std::int64_t> values) {
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        DistanceSet out;
        for (std::int64_t v : values) {
            if (!out.intervals_.empty() && v == out.intervals_.back().hi + 1) {
                out.intervals_.back().hi = v;
            } else {
                out.intervals_.push_back({v, v});
            }
        }
        return out;
    }

    const std::vector<Interval>& intervals() const { return intervals_; }
    bool empty() const { return intervals_.empty(); }

    bool contains(std::int64_t v) const {
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), v,
                                   [](std::int64_t x, const Interval& iv) { return x < iv.lo; });
        if (it == intervals_.begin()) {
            return false;
        }
        --it;
        return v <= it->hi;
    }

    std::int64_t count() const {
        std::int64_t total = 0;
        for (const Interval& iv : intervals_) {
            total += iv.count();
        }
        return total;
    }

    std::int64_t min() const {
        require_non_empty();
        return intervals_.front().lo;
    }

    std::int64_t max() const {
        require_non_empty();
        return intervals_.back().hi;
    }

    DistanceSet union_with(const DistanceSet& other) const {
        std::vector<Interval> merged = intervals_;
        merged.insert(merged.end(), other.intervals_.begin(), other.intervals_.end());
        return from_intervals(std::move(merged));
    }

    // Integers in [lo, hi] not contained in this set.
    DistanceSet complement_within(std::int64_t lo, std::int64_t hi) const {
        if (lo > hi) {
            throw std::invalid_argument("complement_within: lo > hi");
        }
        DistanceSet out;
        std::int64_t cursor = lo;
        for (const Interval& iv : intervals_) {
            if (iv.hi < lo) {
                continue;
            }
            if (iv.lo > hi) {
                break;
            }
            if (iv.lo > cursor) {
                out.intervals_.push_back({cursor, std::min(iv.lo - 1, hi)});
            }
            cursor = std::max(cursor, iv.hi + 1);
            if (cursor > hi) {
                break;
            }
        }
        if (cursor <= hi) {
            out.intervals_.push_back({cursor, hi});
        }
        return out;
    }

    // Number of integers of this set lying in [lo, hi].
    std::int64_t count_within(std::int64_t lo, std::int64_t hi) const {
        std::int64_t total = 0;
        for (const Interval& iv : intervals_) {
            const std::int64_t l = std::max(iv.lo, lo);
            const std::int64_t h = std::min(iv.hi, hi);
            if (l <= h) {
                total += h - l + 1;
            }
        }
        return total;
    }

    std::int64_t largest_interval_width() const {
        std::int64_t best = 0;
        for (const Interval& iv : intervals_) {
            best = std::max(best, iv.count());
        }
        return best;
    }

    bool operator==(const DistanceSet& other) const = default;

    // "lo-hi" pairs joined by commas, e.g. "0-3,11-15".
    std::string to_string() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < intervals_.size(); ++i) {
            if (i > 0) {
                os << ',';
            }
            os << intervals_[i].lo << '-' << intervals_[i].hi;
        }
        return os.str();
    }

private:
    void require_non_empty() const {
        if (intervals_.empty()) {
            throw std::logic_error("DistanceSet: empty set has no extrema");
        }
    }

    std::vector<Interval> intervals_;
};

}  // namespace eplab
