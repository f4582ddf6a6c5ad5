#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "endprompt/rng.hpp"
#include "endprompt/rope.hpp"
#include "endprompt/smoothness.hpp"

using namespace eplab;

namespace {

TrigPolynomial random_polynomial(Rng& rng, int max_components) {
    TrigPolynomial poly;
    const std::int64_t n = rng.uniform_int(1, max_components);
    for (std::int64_t j = 0; j < n; ++j) {
        poly.components.push_back({2.0 * rng.unit(), 0.001 + rng.unit(),
                                   (2.0 * rng.unit() - 1.0) * kPi});
    }
    return poly;
}

}  // namespace

TEST_CASE("from_decomposition rescales frequencies") {
    const AngularSpectrum spec2 = frequencies(2, 10000.0);
    SubspaceDecomposition dec;
    dec.amplitudes = {1.0};
    dec.phases = {0.0};

    const TrigPolynomial quarter = from_decomposition(dec, spec2, 4.0);
    REQUIRE(quarter.components.size() == 1);
    REQUIRE(quarter.components[0].amplitude == 1.0);
    REQUIRE(quarter.components[0].frequency == 0.25);
    REQUIRE(quarter.components[0].phase == 0.0);

    const TrigPolynomial identity = from_decomposition(dec, spec2, 1.0);
    REQUIRE(identity.components[0].frequency == spec2.freqs[0]);

    const AngularSpectrum spec4 = frequencies(4, 10000.0);
    SubspaceDecomposition dec4;
    dec4.amplitudes = {1.0, 1.0};
    dec4.phases = {0.0, 0.0};
    const TrigPolynomial scaled = from_decomposition(dec4, spec4, 8.0);
    REQUIRE_THAT(scaled.components[0].frequency, Catch::Matchers::WithinAbs(0.125, 1e-15));
    REQUIRE_THAT(scaled.components[1].frequency, Catch::Matchers::WithinAbs(0.00125, 1e-15));

    REQUIRE_THROWS_AS(from_decomposition(dec, spec2, 0.5), std::invalid_argument);
}

TEST_CASE("evaluation and analytic derivatives at anchor points") {
    TrigPolynomial quarter;
    quarter.components = {{1.0, 0.25, 0.0}};
    REQUIRE(derivative(quarter, 0.0, 0) == 1.0);
    REQUIRE(derivative(quarter, 0.0, 1) == 0.0);
    REQUIRE_THAT(derivative(quarter, 0.0, 2), Catch::Matchers::WithinAbs(-0.0625, 1e-15));

    TrigPolynomial unit;
    unit.components = {{1.0, 1.0, 0.0}};
    REQUIRE_THAT(derivative(unit, kPi / 2.0, 1), Catch::Matchers::WithinAbs(-1.0, 1e-15));

    REQUIRE_THROWS_AS(derivative(unit, 0.0, 3), std::invalid_argument);
}

TEST_CASE("analytic derivatives match central finite differences") {
    Rng rng(41);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const TrigPolynomial poly = random_polynomial(rng, 16);
        const double d = rng.normal(0.0, 200.0);
        const double fd1 = (eval(poly, d + h) - eval(poly, d - h)) / (2.0 * h);
        REQUIRE_THAT(derivative(poly, d, 1), Catch::Matchers::WithinAbs(fd1, 1e-6));
        const double fd2 = (derivative(poly, d + h, 1) - derivative(poly, d - h, 1)) / (2.0 * h);
        REQUIRE_THAT(derivative(poly, d, 2), Catch::Matchers::WithinAbs(fd2, 1e-6));
    }
}

TEST_CASE("sup estimate recovers known maxima") {
    TrigPolynomial quarter;
    quarter.components = {{1.0, 0.25, 0.0}};
    REQUIRE_THAT(sup_estimate(quarter, 0.0, 100.0, 1), Catch::Matchers::WithinAbs(0.25, 1e-4));

    TrigPolynomial unit;
    unit.components = {{1.0, 1.0, 0.0}};
    REQUIRE_THAT(sup_estimate(unit, 0.0, 10.0, 0), Catch::Matchers::WithinAbs(1.0, 1e-6));

    TrigPolynomial empty;
    REQUIRE_THROWS_AS(sup_estimate(empty, 0.0, 1.0, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(sup_estimate(unit, 1.0, 1.0, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(sup_estimate(unit, 0.0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("sup estimate agrees with a dense-grid oracle") {
    Rng rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        TrigPolynomial poly;
        poly.components = {{0.5 + rng.unit(), 0.05 + 0.5 * rng.unit(), rng.unit()},
                           {0.5 + rng.unit(), 0.6 + 0.4 * rng.unit(), rng.unit()}};
        for (int order : {0, 1, 2}) {
            double dense = 0.0;
            const int n = 1000000;
            for (int i = 0; i <= n; ++i) {
                const double d = 100.0 * static_cast<double>(i) / static_cast<double>(n);
                dense = std::max(dense, std::fabs(derivative(poly, d, order)));
            }
            REQUIRE_THAT(sup_estimate(poly, 0.0, 100.0, order),
                         Catch::Matchers::WithinAbs(dense, 1e-4));
        }
    }
}

TEST_CASE("bernstein check hits the single-component equality case") {
    TrigPolynomial quarter;
    quarter.components = {{1.0, 0.25, 0.0}};
    const BoundReport report = bernstein_check(quarter, 0.0, 100.0);
    REQUIRE(report.amp_sum == 1.0);
    REQUIRE(report.omega_max == 0.25);
    REQUIRE(report.bound1 == 0.25);
    REQUIRE_THAT(report.sup_dS, Catch::Matchers::WithinAbs(0.25, 1e-4));
    REQUIRE(report.sup_dS <= report.bound1 + kBoundTolerance);
    REQUIRE(report.pass1);
    REQUIRE(report.pass2);
}

TEST_CASE("bernstein check passes trivially for zero amplitudes") {
    TrigPolynomial zero;
    zero.components = {{0.0, 0.3, 1.0}, {0.0, 0.7, -1.0}};
    const BoundReport report = bernstein_check(zero, 0.0, 50.0);
    REQUIRE(report.sup_S == 0.0);
    REQUIRE(report.sup_dS == 0.0);
    REQUIRE(report.sup_d2S == 0.0);
    REQUIRE(report.pass1);
    REQUIRE(report.pass2);
}

TEST_CASE("bernstein certification holds on random interpolated spectra") {
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const int dim = 2 * static_cast<int>(rng.uniform_int(1, 32));
        const AngularSpectrum spec = frequencies(dim, 10000.0);
        HeadVector q(static_cast<std::size_t>(dim)), k(static_cast<std::size_t>(dim));
        for (double& x : q) x = rng.normal();
        for (double& x : k) x = rng.normal();
        const double s = static_cast<double>(rng.uniform_int(1, 16));
        const TrigPolynomial poly = from_decomposition(decompose(q, k, spec), spec, s);
        const BoundReport report = bernstein_check(poly, 0.0, 1023.0);
        REQUIRE(report.pass1);
        REQUIRE(report.pass2);
        REQUIRE_THAT(report.omega_max, Catch::Matchers::WithinRel(1.0 / s, 1e-12));
    }
}

TEST_CASE("bounds strictly decrease in the interpolation scale") {
    Rng rng(44);
    const AngularSpectrum spec = frequencies(16, 10000.0);
    HeadVector q(16), k(16);
    for (double& x : q) x = rng.normal();
    for (double& x : k) x = rng.normal();
    const SubspaceDecomposition dec = decompose(q, k, spec);

    double prev_bound1 = std::numeric_limits<double>::infinity();
    double prev_bound2 = std::numeric_limits<double>::infinity();
    for (double s : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        const TrigPolynomial poly = from_decomposition(dec, spec, s);
        const double b1 = poly.omega_max() * poly.amplitude_sum();
        const double b2 = poly.omega_max() * poly.omega_max() * poly.amplitude_sum();
        REQUIRE(b1 < prev_bound1);
        REQUIRE(b2 < prev_bound2);
        prev_bound1 = b1;
        prev_bound2 = b2;
    }
}

TEST_CASE("bound report serializes to one csv row") {
    TrigPolynomial quarter;
    quarter.components = {{1.0, 0.25, 0.0}};
    const BoundReport report = bernstein_check(quarter, 0.0, 100.0);
    const std::string row = to_csv_row(report);
    REQUIRE(bound_report_csv_header() ==
            "amp_sum,omega_max,sup_S,sup_dS,sup_d2S,bound1,bound2,pass1,pass2");
    REQUIRE(row.find("true,true") != std::string::npos);
    REQUIRE(std::count(row.begin(), row.end(), ',') == 8);
}

TEST_CASE("gap stability profile has the requested shape") {
    const AngularSpectrum spec = frequencies(2, 10000.0);
    SubspaceDecomposition dec;
    dec.amplitudes = {1.0};
    dec.phases = {0.0};
    const PlanSpec plan{4, 2, 16, 4.0};

    const GapStabilityProfile profile = gap_stability_profile(dec, spec, 4.0, plan, 24);
    REQUIRE(profile.points.size() == 24);
    std::size_t in_gap = 0;
    for (const GapProfilePoint& point : profile.points) {
        if (point.in_gap) {
            ++in_gap;
            REQUIRE(point.distance >= 4.0);
            REQUIRE(point.distance <= 10.0);
        }
        // Every reported point carries the exact polynomial values.
        TrigPolynomial poly = from_decomposition(dec, spec, 4.0);
        REQUIRE(point.score == eval(poly, point.distance));
        REQUIRE(point.slope == derivative(poly, point.distance, 1));
    }
    REQUIRE(in_gap >= 1);
    REQUIRE(in_gap < profile.points.size());

    // max over [4,10] of 0.25|sin(0.25 d)| is 0.25 (attained at d = 2*pi).
    REQUIRE_THAT(profile.gap_max_abs_slope, Catch::Matchers::WithinAbs(0.25, 1e-4));
}

TEST_CASE("gap stability at extreme scales is bounded by the frequency ratio") {
    const AngularSpectrum spec = frequencies(8, 10000.0);
    SubspaceDecomposition dec;
    dec.amplitudes = {1.0, 0.5, 0.25, 0.125};
    dec.phases = {0.0, 0.4, -0.9, 2.0};
    const PlanSpec plan{16, 8, 128, 1.0};

    const double s = 1e6;
    const GapStabilityProfile profile = gap_stability_profile(dec, spec, s, plan, 16);
    REQUIRE(profile.gap_max_abs_slope <= dec.amplitude_sum() * spec.freqs[0] / s + 1e-12);
}

TEST_CASE("gap stability profile rejects specs without the gap condition") {
    const AngularSpectrum spec = frequencies(2, 10000.0);
    SubspaceDecomposition dec;
    dec.amplitudes = {1.0};
    dec.phases = {0.0};
    REQUIRE_THROWS_AS(gap_stability_profile(dec, spec, 1.0, {4, 2, 9, 1.0}, 8),
                      std::invalid_argument);
}
