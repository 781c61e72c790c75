#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature for real or complex
// integrands on finite intervals.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <algorithm>
#include <span>
#include <vector>

#include "qbeat/error.hpp"

namespace qbeat::quad {

struct Options {
    double abs_tol = 1e-13;
    double rel_tol = 0.0;
    std::size_t max_intervals = 4000;
};

template <class T>
struct Result {
    T value{};
    double error = 0.0;
    std::size_t intervals = 0;
};

namespace detail {

// Kronrod abscissae (descending, last is the midpoint) and weights; the odd
// entries are the 7-point Gauss nodes.
inline constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGauss = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const std::complex<double>& z) { return std::abs(z); }

template <class T>
struct Panel {
    double a;
    double b;
    T value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class T, class F>
Panel<T> gk15(const F& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const T centre = f(mid);
    T kronrod = centre * kKronrod[7];
    T gauss = centre * kGauss[3];
    for (std::size_t i = 0; i < 7; ++i) {
        const double dx = half * kNodes[i];
        const T pair = f(mid - dx) + f(mid + dx);
        kronrod += pair * kKronrod[i];
        if (i % 2 == 1) gauss += pair * kGauss[i / 2];
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, magnitude(kronrod - gauss)};
}

}  // namespace detail

/// Integrates f over the composite partition given by `breaks` (sorted,
/// at least two points), bisecting the worst panel until the summed error
/// estimate drops below max(abs_tol, rel_tol * |integral|).
///
/// Seeding with a fine partition matters: a single coarse panel can step
/// over a narrow peak and report a confident zero.
template <class T, class F>
Result<T> integrate(const F& f, std::span<const double> breaks, const Options& opt = {}) {
    if (breaks.size() < 2) throw ParameterError("quadrature needs at least one interval");
    // Max-heap on panel error, kept in a vector so it can be re-summed.
    std::vector<detail::Panel<T>> panels;
    T total{};
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) throw ParameterError("quadrature breakpoints must increase");
        auto p = detail::gk15<T>(f, breaks[i], breaks[i + 1]);
        total += p.value;
        error += p.error;
        panels.push_back(p);
    }
    std::make_heap(panels.begin(), panels.end());
    auto resum = [&] {
        total = T{};
        error = 0.0;
        for (const auto& p : panels) {
            total += p.value;
            error += p.error;
        }
    };
    auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total)); };
    while (true) {
        if (!(error > tolerance())) {
            // The running sums can cancel; only stop on the exact totals.
            resum();
            if (!(error > tolerance())) break;
        }
        if (panels.size() >= opt.max_intervals) {
            throw NumericalError("adaptive quadrature did not converge", error);
        }
        std::pop_heap(panels.begin(), panels.end());
        const auto worst = panels.back();
        panels.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gk15<T>(f, worst.a, mid);
        const auto right = detail::gk15<T>(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push_back(left);
        std::push_heap(panels.begin(), panels.end());
        panels.push_back(right);
        std::push_heap(panels.begin(), panels.end());
    }
    return {total, error, panels.size()};
}

template <class T, class F>
Result<T> integrate(const F& f, double a, double b, const Options& opt = {}) {
    const std::array<double, 2> breaks{a, b};
    return integrate<T>(f, std::span<const double>(breaks), opt);
}

/// Uniform partition of [a, b] into `pieces` panels.
inline std::vector<double> uniform_breaks(double a, double b, std::size_t pieces) {
    std::vector<double> out(pieces + 1);
    for (std::size_t i = 0; i <= pieces; ++i) {
        out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(pieces);
    }
    out.back() = b;
    return out;
}

}  // namespace qbeat::quad
