#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eplab {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Per-subspace rotary frequencies for one attention head.
// freqs[j] = base^(-2j/dim), so freqs[0] == 1 exactly and the sequence is
// strictly decreasing for base > 1.
struct AngularSpectrum {
    int dim = 0;
    double base = 0.0;
    std::vector<double> freqs;

    int num_subspaces() const { return dim / 2; }
};

inline AngularSpectrum frequencies(int dim, double base) {
    if (dim < 2 || dim % 2 != 0) {
        throw std::invalid_argument("frequencies: invalid dimension " + std::to_string(dim) +
                                    " (must be even and >= 2)");
    }
    if (!(base > 0.0)) {
        throw std::invalid_argument("frequencies: invalid base (must be > 0)");
    }
    // With more than one subspace the frequencies must be strictly decreasing
    // within (0, 1], which requires base > 1.
    if (dim > 2 && !(base > 1.0)) {
        throw std::invalid_argument("frequencies: invalid base (must be > 1 for dim > 2)");
    }
    AngularSpectrum spec;
    spec.dim = dim;
    spec.base = base;
    spec.freqs.resize(static_cast<std::size_t>(dim / 2));
    for (int j = 0; j < dim / 2; ++j) {
        spec.freqs[static_cast<std::size_t>(j)] =
            std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(dim));
    }
    spec.freqs[0] = 1.0;
    return spec;
}

// Content components of a query or key for one head.
using HeadVector = std::vector<double>;

// Amplitude/phase polar form of the per-subspace content products q_j * conj(k_j).
// amplitudes[j] == 0 implies phases[j] == 0 (canonical zero phase).
struct SubspaceDecomposition {
    std::vector<double> amplitudes;
    std::vector<double> phases;

    std::size_t size() const { return amplitudes.size(); }

    double amplitude_sum() const {
        double total = 0.0;
        for (double a : amplitudes) {
            total += a;
        }
        return total;
    }
};

namespace detail {

inline void check_dim(const HeadVector& v, const AngularSpectrum& spec, const char* who) {
    if (static_cast<int>(v.size()) != spec.dim) {
        throw std::invalid_argument(std::string(who) + ": vector length " +
                                    std::to_string(v.size()) + " does not match spectrum dim " +
                                    std::to_string(spec.dim));
    }
}

}  // namespace detail

// Rotates each 2-subspace (v[2j], v[2j+1]) by angle p_eff * freqs[j].
// Norm-preserving for any real effective position.
inline HeadVector rotate(const HeadVector& v, double p_eff, const AngularSpectrum& spec) {
    detail::check_dim(v, spec, "rotate");
    HeadVector out(v.size());
    for (int j = 0; j < spec.dim / 2; ++j) {
        const double angle = p_eff * spec.freqs[static_cast<std::size_t>(j)];
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double x = v[static_cast<std::size_t>(2 * j)];
        const double y = v[static_cast<std::size_t>(2 * j + 1)];
        out[static_cast<std::size_t>(2 * j)] = x * c - y * s;
        out[static_cast<std::size_t>(2 * j + 1)] = x * s + y * c;
    }
    return out;
}

// <rotate(q, p_m), rotate(k, p_n)>: the unnormalized attention score of a
// rotated query/key pair at assigned positions p_m, p_n.
inline double score_direct(const HeadVector& q, const HeadVector& k, double p_m, double p_n,
                           const AngularSpectrum& spec) {
    detail::check_dim(q, spec, "score_direct");
    detail::check_dim(k, spec, "score_direct");
    const HeadVector qr = rotate(q, p_m, spec);
    const HeadVector kr = rotate(k, p_n, spec);
    double acc = 0.0;
    for (std::size_t i = 0; i < qr.size(); ++i) {
        acc += qr[i] * kr[i];
    }
    return acc;
}

// Polar form of z_j = (q[2j] + i q[2j+1]) * conj(k[2j] + i k[2j+1]).
inline SubspaceDecomposition decompose(const HeadVector& q, const HeadVector& k,
                                       const AngularSpectrum& spec) {
    detail::check_dim(q, spec, "decompose");
    detail::check_dim(k, spec, "decompose");
    SubspaceDecomposition dec;
    const int half = spec.dim / 2;
    dec.amplitudes.resize(static_cast<std::size_t>(half));
    dec.phases.resize(static_cast<std::size_t>(half));
    for (int j = 0; j < half; ++j) {
        const std::complex<double> qc(q[static_cast<std::size_t>(2 * j)],
                                      q[static_cast<std::size_t>(2 * j + 1)]);
        const std::complex<double> kc(k[static_cast<std::size_t>(2 * j)],
                                      k[static_cast<std::size_t>(2 * j + 1)]);
        const std::complex<double> z = qc * std::conj(kc);
        const double amp = std::abs(z);
        double phase = (amp == 0.0) ? 0.0 : std::arg(z);
        if (phase == -kPi) {
            phase = kPi;  // canonical representative of the branch point
        }
        dec.amplitudes[static_cast<std::size_t>(j)] = amp;
        dec.phases[static_cast<std::size_t>(j)] = phase;
    }
    return dec;
}

// Trigonometric-polynomial form of the score at assigned relative distance d
// under interpolation scale s: sum_j a_j * cos(d * freqs[j] / s + phi_j).
// s == 1 recovers the plain rotary score.
inline double score_spectral(const SubspaceDecomposition& dec, double d,
                             const AngularSpectrum& spec, double s) {
    if (!(s >= 1.0)) {
        throw std::invalid_argument("score_spectral: invalid scale (must be >= 1)");
    }
    if (dec.size() != static_cast<std::size_t>(spec.dim / 2)) {
        throw std::invalid_argument("score_spectral: decomposition length " +
                                    std::to_string(dec.size()) + " does not match spectrum dim " +
                                    std::to_string(spec.dim));
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < dec.size(); ++j) {
        acc += dec.amplitudes[j] * std::cos(d * spec.freqs[j] / s + dec.phases[j]);
    }
    return acc;
}

}  // namespace eplab
