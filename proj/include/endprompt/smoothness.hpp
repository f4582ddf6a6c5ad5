#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "endprompt/position_plan.hpp"
#include "endprompt/rope.hpp"

namespace eplab {

// One sinusoidal component of an attention-score polynomial:
// amplitude * cos(frequency * d + phase).
struct TrigComponent {
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
};

struct TrigPolynomial {
    std::vector<TrigComponent> components;

    double omega_max() const {
        if (components.empty()) {
            throw std::invalid_argument("TrigPolynomial: undefined frequency (no components)");
        }
        double best = 0.0;
        for (const TrigComponent& c : components) {
            best = std::max(best, c.frequency);
        }
        return best;
    }

    double amplitude_sum() const {
        double total = 0.0;
        for (const TrigComponent& c : components) {
            total += c.amplitude;
        }
        return total;
    }
};

// Interpolation at scale s divides every rotary frequency: component j becomes
// (a_j, theta_j / s, phi_j).
inline TrigPolynomial from_decomposition(const SubspaceDecomposition& dec,
                                         const AngularSpectrum& spec, double s) {
    if (!(s >= 1.0)) {
        throw std::invalid_argument("from_decomposition: invalid scale (must be >= 1)");
    }
    if (dec.size() != static_cast<std::size_t>(spec.dim / 2)) {
        throw std::invalid_argument("from_decomposition: decomposition/spectrum length mismatch");
    }
    TrigPolynomial poly;
    poly.components.resize(dec.size());
    for (std::size_t j = 0; j < dec.size(); ++j) {
        poly.components[j] = {dec.amplitudes[j], spec.freqs[j] / s, dec.phases[j]};
    }
    return poly;
}

inline double eval(const TrigPolynomial& poly, double d) {
    double acc = 0.0;
    for (const TrigComponent& c : poly.components) {
        acc += c.amplitude * std::cos(c.frequency * d + c.phase);
    }
    return acc;
}

// S (order 0), S' (order 1) or S'' (order 2) at distance d.
inline double derivative(const TrigPolynomial& poly, double d, int order) {
    double acc = 0.0;
    switch (order) {
        case 0:
            return eval(poly, d);
        case 1:
            for (const TrigComponent& c : poly.components) {
                acc -= c.amplitude * c.frequency * std::sin(c.frequency * d + c.phase);
            }
            return acc;
        case 2:
            for (const TrigComponent& c : poly.components) {
                acc -= c.amplitude * c.frequency * c.frequency * std::cos(c.frequency * d + c.phase);
            }
            return acc;
        default:
            throw std::invalid_argument("derivative: unsupported order " + std::to_string(order));
    }
}

namespace detail {

struct GridSup {
    double sup0 = 0.0;
    double sup1 = 0.0;
    double sup2 = 0.0;
};

// One sweep over the certification grid, tracking |S|, |S'| and |S''| maxima
// with a single sin/cos per (point, component), then one refinement pass per
// order around its argmax at 10x resolution.
inline GridSup grid_sup_all(const TrigPolynomial& poly, double d_lo, double d_hi) {
    if (!(d_lo < d_hi)) {
        throw std::invalid_argument("sup_estimate: domain must satisfy d_lo < d_hi");
    }
    const double omega = poly.omega_max();  // throws on empty component list
    const double span = d_hi - d_lo;
    double step = span / 1000.0;
    if (omega > 0.0) {
        step = std::min(step, 0.1 / omega);
    }
    const std::int64_t n = static_cast<std::int64_t>(std::ceil(span / step)) + 1;

    struct Tracker {
        double best = -1.0;
        double arg = 0.0;
    };
    Tracker t0, t1, t2;

    auto eval_all = [&poly](double d, double* v0, double* v1, double* v2) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (const TrigComponent& c : poly.components) {
            const double angle = c.frequency * d + c.phase;
            const double cs = std::cos(angle);
            const double sn = std::sin(angle);
            s0 += c.amplitude * cs;
            s1 -= c.amplitude * c.frequency * sn;
            s2 -= c.amplitude * c.frequency * c.frequency * cs;
        }
        *v0 = std::fabs(s0);
        *v1 = std::fabs(s1);
        *v2 = std::fabs(s2);
    };

    for (std::int64_t i = 0; i < n; ++i) {
        const double d = (i == n - 1) ? d_hi : d_lo + static_cast<double>(i) * step;
        double v0, v1, v2;
        eval_all(d, &v0, &v1, &v2);
        if (v0 > t0.best) { t0 = {v0, d}; }
        if (v1 > t1.best) { t1 = {v1, d}; }
        if (v2 > t2.best) { t2 = {v2, d}; }
    }

    auto refine = [&](Tracker& t, int which) {
        const double lo = std::max(d_lo, t.arg - step);
        const double hi = std::min(d_hi, t.arg + step);
        const double fine = step / 10.0;
        const std::int64_t m = static_cast<std::int64_t>(std::ceil((hi - lo) / fine)) + 1;
        for (std::int64_t i = 0; i < m; ++i) {
            const double d = (i == m - 1) ? hi : lo + static_cast<double>(i) * fine;
            double v0, v1, v2;
            eval_all(d, &v0, &v1, &v2);
            const double v = which == 0 ? v0 : which == 1 ? v1 : v2;
            if (v > t.best) { t = {v, d}; }
        }
    };
    refine(t0, 0);
    refine(t1, 1);
    refine(t2, 2);

    return {t0.best, t1.best, t2.best};
}

}  // namespace detail

// Grid maximum of |S^(order)| over [d_lo, d_hi]. Grid step is at most
// min(0.1/omega_max, span/1000) so the fastest component is sampled about 60
// times per period, followed by a local refinement around the argmax.
inline double sup_estimate(const TrigPolynomial& poly, double d_lo, double d_hi, int order) {
    if (order < 0 || order > 2) {
        throw std::invalid_argument("sup_estimate: unsupported order " + std::to_string(order));
    }
    const detail::GridSup sup = detail::grid_sup_all(poly, d_lo, d_hi);
    return order == 0 ? sup.sup0 : order == 1 ? sup.sup1 : sup.sup2;
}

// Certification record for the derivative bounds of a score polynomial.
// The certified checks compare grid sups against omega_max * sum(a_j) and
// omega_max^2 * sum(a_j), which hold analytically for any band-limited
// trigonometric sum; the *_vs_supS fields record the tighter literal form
// with the grid sup|S| on the right-hand side, reported as informational
// because a finite grid can under-estimate sup|S|.
struct BoundReport {
    double amp_sum = 0.0;
    double omega_max = 0.0;
    double sup_S = 0.0;
    double sup_dS = 0.0;
    double sup_d2S = 0.0;
    double bound1 = 0.0;
    double bound2 = 0.0;
    bool pass1 = false;
    bool pass2 = false;
    // Informational: the bound with grid sup|S| in place of sum(a_j).
    double bound1_vs_supS = 0.0;
    double bound2_vs_supS = 0.0;
};

inline constexpr double kBoundTolerance = 1e-9;

inline BoundReport bernstein_check(const TrigPolynomial& poly, double d_lo, double d_hi) {
    const detail::GridSup sup = detail::grid_sup_all(poly, d_lo, d_hi);
    BoundReport report;
    report.amp_sum = poly.amplitude_sum();
    report.omega_max = poly.omega_max();
    report.sup_S = sup.sup0;
    report.sup_dS = sup.sup1;
    report.sup_d2S = sup.sup2;
    report.bound1 = report.omega_max * report.amp_sum;
    report.bound2 = report.omega_max * report.omega_max * report.amp_sum;
    report.pass1 = report.sup_dS <= report.bound1 + kBoundTolerance;
    report.pass2 = report.sup_d2S <= report.bound2 + kBoundTolerance;
    report.bound1_vs_supS = report.omega_max * report.sup_S;
    report.bound2_vs_supS = report.omega_max * report.omega_max * report.sup_S;
    return report;
}

inline std::string bound_report_csv_header() {
    return "amp_sum,omega_max,sup_S,sup_dS,sup_d2S,bound1,bound2,pass1,pass2";
}

inline std::string to_csv_row(const BoundReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s,%s",
                  report.amp_sum, report.omega_max, report.sup_S, report.sup_dS,
                  report.sup_d2S, report.bound1, report.bound2,
                  report.pass1 ? "true" : "false", report.pass2 ? "true" : "false");
    return buf;
}

struct GapProfilePoint {
    double distance = 0.0;
    double score = 0.0;
    double slope = 0.0;
    bool in_gap = false;
};

struct GapStabilityProfile {
    std::vector<GapProfilePoint> points;
    double gap_max_abs_slope = 0.0;
};

// Samples (d, S(d), S'(d)) at `samples` integer distances stratified across
// the observed and gap regions of the plan, and reports the grid max of |S'|
// inside the gap region as the stability proxy.
inline GapStabilityProfile gap_stability_profile(const SubspaceDecomposition& dec,
                                                 const AngularSpectrum& spec, double s,
                                                 const PlanSpec& plan_spec, int samples) {
    plan_spec.validate();
    if (!plan_spec.gap_condition()) {
        throw std::invalid_argument("gap_stability_profile: gap condition not met");
    }
    if (samples < 2) {
        throw std::invalid_argument("gap_stability_profile: need at least 2 samples");
    }
    const TrigPolynomial poly = from_decomposition(dec, spec, s);
    const DistanceSet observed = observed_distances_closed_form(plan_spec);
    const DistanceSet gap = gap_distances(plan_spec);

    const std::int64_t n_obs_total = observed.count_within(0, plan_spec.L - 1);
    const std::int64_t n_gap_total = gap.count();
    std::int64_t n_gap = (samples * n_gap_total) / (n_obs_total + n_gap_total);
    n_gap = std::clamp<std::int64_t>(n_gap, 1, samples - 1);
    const std::int64_t n_obs = samples - n_gap;

    auto pick = [](const DistanceSet& set, std::int64_t k, std::int64_t n_points,
                   std::vector<double>* out) {
        const std::int64_t total = set.count();
        for (std::int64_t i = 0; i < n_points; ++i) {
            std::int64_t rank = (2 * i + 1) * total / (2 * n_points);
            rank = std::min(rank, total - 1);
            // Map rank to the rank-th smallest integer in the set.
            for (const Interval& iv : set.intervals()) {
                if (rank < iv.count()) {
                    out->push_back(static_cast<double>(iv.lo + rank));
                    break;
                }
                rank -= iv.count();
            }
        }
        (void)k;
    };

    std::vector<double> obs_points, gap_points;
    pick(observed, 0, n_obs, &obs_points);
    pick(gap, 1, n_gap, &gap_points);

    GapStabilityProfile profile;
    profile.points.reserve(static_cast<std::size_t>(samples));
    for (double d : obs_points) {
        profile.points.push_back({d, eval(poly, d), derivative(poly, d, 1), false});
    }
    for (double d : gap_points) {
        profile.points.push_back({d, eval(poly, d), derivative(poly, d, 1), true});
    }
    profile.gap_max_abs_slope = sup_estimate(poly, static_cast<double>(gap.min()),
                                             static_cast<double>(gap.max()), 1);
    return profile;
}

}  // namespace eplab
