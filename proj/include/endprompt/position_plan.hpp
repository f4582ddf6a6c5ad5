#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "endprompt/interval_set.hpp"
#include "endprompt/rng.hpp"

namespace eplab {

enum class PlanKind { endprompt, pose, full };

inline std::string to_string(PlanKind kind) {
    switch (kind) {
        case PlanKind::endprompt: return "endprompt";
        case PlanKind::pose: return "pose";
        case PlanKind::full: return "full";
    }
    throw std::logic_error("to_string: unknown PlanKind");
}

inline PlanKind plan_kind_from_string(const std::string& name) {
    if (name == "endprompt") return PlanKind::endprompt;
    if (name == "pose") return PlanKind::pose;
    if (name == "full") return PlanKind::full;
    throw std::invalid_argument("unknown plan kind: " + name);
}

// Two-segment plan geometry: context length a, end-prompt length b, target
// context length L, interpolation scale s.
struct PlanSpec {
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t L = 0;
    double s = 1.0;

    void validate() const {
        if (a < 1) throw std::invalid_argument("PlanSpec: a must be >= 1");
        if (b < 1) throw std::invalid_argument("PlanSpec: b must be >= 1");
        if (a + b > L) {
            throw std::invalid_argument("PlanSpec: segments overlap (a + b > L)");
        }
        if (!(s >= 1.0)) throw std::invalid_argument("PlanSpec: scale must be >= 1");
    }

    // The gap region is a single interval only when the middle of the window
    // is at least as wide as the longer segment.
    bool gap_condition() const { return L - a - b >= std::max(a, b); }
};

// Assigned positional indices for one training sample. Effective (post
// interpolation) positions are assigned[i] / scale, derived on demand.
struct PositionPlan {
    std::vector<std::int64_t> assigned;
    double scale = 1.0;
    PlanKind kind = PlanKind::full;

    std::int64_t size() const { return static_cast<std::int64_t>(assigned.size()); }
};

// Context keeps its physical indices; the end prompt is shifted to the far
// end of the target window: [0, a-1] and [L-b, L-1].
inline PositionPlan endprompt_plan(const PlanSpec& spec) {
    spec.validate();
    PositionPlan plan;
    plan.kind = PlanKind::endprompt;
    plan.scale = spec.s;
    plan.assigned.resize(static_cast<std::size_t>(spec.a + spec.b));
    for (std::int64_t i = 0; i < spec.a; ++i) {
        plan.assigned[static_cast<std::size_t>(i)] = i;
    }
    for (std::int64_t i = 0; i < spec.b; ++i) {
        plan.assigned[static_cast<std::size_t>(spec.a + i)] = spec.L - spec.b + i;
    }
    return plan;
}

// Contiguous baseline: assigned = [0 .. n-1].
inline PositionPlan full_plan(std::int64_t n, double s = 1.0) {
    if (n < 1) throw std::invalid_argument("full_plan: empty sequence (n must be >= 1)");
    if (!(s >= 1.0)) throw std::invalid_argument("full_plan: scale must be >= 1");
    PositionPlan plan;
    plan.kind = PlanKind::full;
    plan.scale = s;
    plan.assigned.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        plan.assigned[static_cast<std::size_t>(i)] = i;
    }
    return plan;
}

// Chunked skip plan: n tokens split into near-equal contiguous chunks, each
// chunk offset by a cumulative skip drawn uniformly within the remaining
// budget so that max(assigned) <= L-1. Approximates chunk-and-skip schemes
// at the plan level; chunk 0 always starts at 0.
inline PositionPlan pose_plan(std::int64_t n, int chunks, std::int64_t L, double s, Rng& rng) {
    if (n < 1) throw std::invalid_argument("pose_plan: n must be >= 1");
    if (chunks < 2) throw std::invalid_argument("pose_plan: chunks must be >= 2");
    if (static_cast<std::int64_t>(chunks) > n) {
        throw std::invalid_argument("pose_plan: more chunks than tokens");
    }
    if (L < n) throw std::invalid_argument("pose_plan: capacity error (L < n)");
    if (!(s >= 1.0)) throw std::invalid_argument("pose_plan: scale must be >= 1");

    // Near-equal partition: the first n % chunks chunks get one extra token.
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(chunks), n / chunks);
    for (std::int64_t i = 0; i < n % chunks; ++i) {
        ++sizes[static_cast<std::size_t>(i)];
    }

    PositionPlan plan;
    plan.kind = PlanKind::pose;
    plan.scale = s;
    plan.assigned.reserve(static_cast<std::size_t>(n));
    std::int64_t budget = L - n;
    std::int64_t offset = 0;
    std::int64_t next_physical = 0;
    for (int c = 0; c < chunks; ++c) {
        if (c > 0) {
            const std::int64_t skip = rng.uniform_int(0, budget);
            budget -= skip;
            offset += skip;
        }
        for (std::int64_t i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i) {
            plan.assigned.push_back(next_physical + offset);
            ++next_physical;
        }
    }
    return plan;
}

inline std::vector<double> effective_positions(const PositionPlan& plan) {
    if (!(plan.scale >= 1.0)) {
        throw std::invalid_argument("effective_positions: scale must be >= 1");
    }
    std::vector<double> out(plan.assigned.size());
    for (std::size_t i = 0; i < plan.assigned.size(); ++i) {
        out[i] = static_cast<double>(plan.assigned[i]) / plan.scale;
    }
    return out;
}

// Enumerates every causal pair (r <= l) and collects assigned[l] - assigned[r].
// The enumeration oracle for the closed-form observed set.
inline DistanceSet observed_distances_bruteforce(const PositionPlan& plan) {
    if (plan.assigned.empty()) {
        throw std::invalid_argument("observed_distances_bruteforce: empty plan");
    }
    const std::int64_t max_pos = *std::max_element(plan.assigned.begin(), plan.assigned.end());
    const std::int64_t min_pos = *std::min_element(plan.assigned.begin(), plan.assigned.end());
    std::vector<char> seen(static_cast<std::size_t>(max_pos - min_pos + 1), 0);
    const std::size_t n = plan.assigned.size();
    for (std::size_t l = 0; l < n; ++l) {
        for (std::size_t r = 0; r <= l; ++r) {
            const std::int64_t d = plan.assigned[l] - plan.assigned[r];
            if (d >= 0 && d <= max_pos - min_pos) {
                seen[static_cast<std::size_t>(d)] = 1;
            }
        }
    }
    std::vector<Interval> runs;
    std::int64_t run_start = -1;
    for (std::int64_t d = 0; d <= max_pos - min_pos; ++d) {
        if (seen[static_cast<std::size_t>(d)]) {
            if (run_start < 0) run_start = d;
        } else if (run_start >= 0) {
            runs.push_back({run_start, d - 1});
            run_start = -1;
        }
    }
    if (run_start >= 0) {
        runs.push_back({run_start, max_pos - min_pos});
    }
    return DistanceSet::from_intervals(std::move(runs));
}

// Observed distances of the two-segment plan in closed form:
// [0, a-1] u [0, b-1] u [L-a-b+1, L-1].
inline DistanceSet observed_distances_closed_form(const PlanSpec& spec) {
    spec.validate();
    std::vector<Interval> parts;
    parts.push_back({0, spec.a - 1});
    parts.push_back({0, spec.b - 1});
    if (spec.L - spec.a - spec.b + 1 <= spec.L - 1) {
        parts.push_back({spec.L - spec.a - spec.b + 1, spec.L - 1});
    }
    return DistanceSet::from_intervals(std::move(parts));
}

// The unobserved middle region [max(a,b), L-a-b]. Only defined when the gap
// condition L-a-b >= max(a,b) holds; callers may still compute the complement
// of the observed set directly when it does not.
inline DistanceSet gap_distances(const PlanSpec& spec) {
    spec.validate();
    if (!spec.gap_condition()) {
        throw std::invalid_argument("gap_distances: gap condition L-a-b >= max(a,b) not met");
    }
    return DistanceSet::from_intervals({{std::max(spec.a, spec.b), spec.L - spec.a - spec.b}});
}

struct CoverageReport {
    PlanKind kind = PlanKind::full;
    DistanceSet observed;
    DistanceSet gap;
    double coverage_fraction = 0.0;
    std::int64_t largest_gap_width = 0;
};

inline CoverageReport coverage_report(const PositionPlan& plan, std::int64_t L) {
    if (L < 1) throw std::invalid_argument("coverage_report: L must be >= 1");
    for (std::int64_t p : plan.assigned) {
        if (p < 0 || p > L - 1) {
            throw std::invalid_argument("coverage_report: plan entry outside [0, L-1]");
        }
    }
    CoverageReport report;
    report.kind = plan.kind;
    report.observed = observed_distances_bruteforce(plan);
    report.gap = report.observed.complement_within(0, L - 1);
    report.coverage_fraction = static_cast<double>(report.observed.count_within(0, L - 1)) /
                               static_cast<double>(L);
    report.largest_gap_width = report.gap.largest_interval_width();
    return report;
}

// Single-line record: kind, a, b, L, s, coverage_fraction (6 dp),
// largest_gap_width, observed intervals as "lo-hi" pairs joined by commas.
inline std::string serialize_coverage(const CoverageReport& report, std::int64_t a,
                                      std::int64_t b, std::int64_t L, double s) {
    char frac[32];
    std::snprintf(frac, sizeof(frac), "%.6f", report.coverage_fraction);
    std::string line = to_string(report.kind);
    line += ' ' + std::to_string(a);
    line += ' ' + std::to_string(b);
    line += ' ' + std::to_string(L);
    char sbuf[32];
    std::snprintf(sbuf, sizeof(sbuf), "%g", s);
    line += ' ';
    line += sbuf;
    line += ' ';
    line += frac;
    line += ' ' + std::to_string(report.largest_gap_width);
    line += ' ' + report.observed.to_string();
    return line;
}

}  // namespace eplab
