#pragma once

// Single-photon temporal modes: a unit-norm Gaussian envelope carrying a
// linear carrier phase, zeta(t) = exp(-i (w t + phi0)) * eps(t).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "qbeat/error.hpp"
#include "qbeat/quadrature.hpp"

namespace qbeat {

using Complex = std::complex<double>;

/// Value of a mode function at one instant (units 1/sqrt(s)).
using ComplexAmplitude = Complex;

struct WavepacketParams {
    double center_time = 0.0;   // s
    double width = 1.0;         // s, Gaussian sigma
    double carrier_freq = 0.0;  // rad/s
    double phase_offset = 0.0;  // rad

    void validate() const {
        if (!std::isfinite(center_time) || !std::isfinite(carrier_freq) ||
            !std::isfinite(phase_offset)) {
            throw ParameterError("wavepacket parameters must be finite");
        }
        if (!(width > 0.0) || !std::isfinite(width)) {
            throw ParameterError("wavepacket width must be positive, got " + std::to_string(width));
        }
    }

    friend bool operator==(const WavepacketParams&, const WavepacketParams&) = default;
};

/// Half-width of the window outside which an envelope is treated as zero,
/// in units of sigma. exp(-32) keeps the neglected tail mass below 1e-28.
inline constexpr double kSupportSigmas = 8.0;

namespace detail {

inline double envelope_unchecked(const WavepacketParams& p, double t) {
    const double x = (t - p.center_time) / p.width;
    return std::pow(std::numbers::pi * p.width * p.width, -0.25) * std::exp(-0.5 * x * x);
}

inline Complex zeta_unchecked(const WavepacketParams& p, double t) {
    return std::polar(envelope_unchecked(p, t), -(p.carrier_freq * t + p.phase_offset));
}

}  // namespace detail

/// (pi sigma^2)^(-1/4) exp(-(t - t_c)^2 / (2 sigma^2)).
inline double gaussian_envelope(const WavepacketParams& p, double t) {
    p.validate();
    return detail::envelope_unchecked(p, t);
}

inline ComplexAmplitude zeta(const WavepacketParams& p, double t) {
    p.validate();
    return detail::zeta_unchecked(p, t);
}

/// Peak value of |zeta|, i.e. (pi sigma^2)^(-1/4).
inline double peak_amplitude(const WavepacketParams& p) {
    p.validate();
    return std::pow(std::numbers::pi * p.width * p.width, -0.25);
}

/// Integral of |eps|^2 over the +-8 sigma support window.
inline double envelope_norm(const WavepacketParams& p, const quad::Options& opt = {}) {
    p.validate();
    const double lo = p.center_time - kSupportSigmas * p.width;
    const double hi = p.center_time + kSupportSigmas * p.width;
    const auto breaks = quad::uniform_breaks(lo, hi, 16);
    auto f = [&](double t) {
        const double e = detail::envelope_unchecked(p, t);
        return e * e;
    };
    return quad::integrate<double>(f, breaks, opt).value;
}

/// <zeta1 | zeta2 shifted by delay> = integral of conj(zeta1(t)) zeta2(t - delay) dt,
/// by adaptive quadrature over the union of both support windows.
inline ComplexAmplitude overlap(const WavepacketParams& p1, const WavepacketParams& p2, double delay,
                                const quad::Options& opt = {}) {
    p1.validate();
    p2.validate();
    if (!std::isfinite(delay)) throw ParameterError("overlap delay must be finite");

    auto integrand = [&](double t) {
        return std::conj(detail::zeta_unchecked(p1, t)) * detail::zeta_unchecked(p2, t - delay);
    };

    struct Window {
        double lo, hi, sigma;
    };
    Window w1{p1.center_time - kSupportSigmas * p1.width, p1.center_time + kSupportSigmas * p1.width,
              p1.width};
    Window w2{p2.center_time + delay - kSupportSigmas * p2.width,
              p2.center_time + delay + kSupportSigmas * p2.width, p2.width};
    if (w2.lo < w1.lo) std::swap(w1, w2);

    // Each window is seeded with sigma-wide panels so neither peak can be
    // stepped over, whatever the width ratio.
    auto seed = [](const Window& w, std::vector<double>& out) {
        const auto b = quad::uniform_breaks(w.lo, w.hi, 16);
        out.insert(out.end(), b.begin(), b.end());
    };
    auto finish = [](std::vector<double>& b) {
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
    };

    Complex total{};
    if (w2.lo <= w1.hi) {
        std::vector<double> breaks;
        seed(w1, breaks);
        seed(w2, breaks);
        finish(breaks);
        total = quad::integrate<Complex>(integrand, breaks, opt).value;
    } else {
        for (const auto& w : {w1, w2}) {
            std::vector<double> breaks;
            seed(w, breaks);
            finish(breaks);
            total += quad::integrate<Complex>(integrand, breaks, opt).value;
        }
    }
    return total;
}

/// Converts a phase-shifter setting to the delay it induces on a carrier of
/// angular frequency omega (delta_tau = phi / omega). Convention-dependent.
inline double shifter_delay_from_phase(double phase, double omega) {
    if (omega == 0.0 || !std::isfinite(omega) || !std::isfinite(phase)) {
        throw ParameterError("phase-to-delay conversion needs a finite non-zero carrier");
    }
    return phase / omega;
}

}  // namespace qbeat
