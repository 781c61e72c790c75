#pragma once

// Two-photon coincidence amplitudes and probabilities: the closed-form
// feedback-device law, the general history-sum engine, the HOM baseline and
// a Schmidt-number witness for the joint detection amplitude.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include <Eigen/SVD>

#include "qbeat/device.hpp"
#include "qbeat/wavepacket.hpp"

namespace qbeat {

struct PhotonSource {
    NodeId port;
    WavepacketParams packet;
};

struct DetectionEvent {
    NodeId detector;
    double time = 0.0;
};

/// The two exchange-related contributions to a coincidence amplitude.
/// `direct` sends photon 1 to the first event and photon 2 to the second;
/// `exchange` swaps them.
struct TwoPhotonAmplitude {
    Complex direct{};
    Complex exchange{};

    Complex total() const { return direct + exchange; }
    double probability() const { return std::norm(direct + exchange); }

    /// |direct + exchange|^2 / (|direct|^2 + |exchange|^2): 1 for
    /// distinguishable photons, 0 when there is no signal at all.
    double normalized() const {
        const double incoherent = std::norm(direct) + std::norm(exchange);
        if (!(incoherent > 0.0)) return 0.0;
        return probability() / incoherent;
    }
};

/// Negative rounding noise is clamped to zero. Values below -1e-15 are
/// clamped too but counted so callers can report them.
inline double clamp_probability(double p, std::size_t* clamped = nullptr) {
    if (p >= 0.0) return p;
    if (p < -1e-15 && clamped) ++*clamped;
    return 0.0;
}

// --- closed form ----------------------------------------------------------

/// Bracket products of the closed-form law, with the detector-1 brackets
/// anchored at t1 and the detector-2 brackets at t2:
///   direct   = [z1(t1+tau) - z1(t1+tau+dtau)] [-z2(t2+tau) + z2(t2+tau+2 dtau)]
///   exchange = [z2(t1) - z2(t1+dtau)]         [-z1(t2+tau) + z1(t2+tau+2 dtau)]
/// With t1 = t2 = t0 this is exactly the simultaneous-detection form.
inline TwoPhotonAmplitude closed_form_terms(double t1, double t2, double tau, double dtau,
                                    const WavepacketParams& p1, const WavepacketParams& p2) {
    p1.validate();
    p2.validate();
    using detail::zeta_unchecked;
    const Complex single1 = zeta_unchecked(p1, t1 + tau) - zeta_unchecked(p1, t1 + tau + dtau);
    const Complex double2 = -zeta_unchecked(p2, t2 + tau) + zeta_unchecked(p2, t2 + tau + 2 * dtau);
    const Complex single2 = zeta_unchecked(p2, t1) - zeta_unchecked(p2, t1 + dtau);
    const Complex double1 = -zeta_unchecked(p1, t2 + tau) + zeta_unchecked(p1, t2 + tau + 2 * dtau);
    return {single1 * double2, single2 * double1};
}

/// Simultaneous-detection coincidence density (1/s^2) of the feedback
/// device, 2^-11 |A|^2, evaluated exactly as the bracket form reads.
inline double coincidence_closed_form(double t0, double tau, double dtau, const WavepacketParams& p1,
                              const WavepacketParams& p2) {
    return std::ldexp(closed_form_terms(t0, t0, tau, dtau, p1, p2).probability(), -11);
}

/// Upper bound on coincidence_closed_form over all arguments: each bracket is at
/// most twice the peak envelope.
inline double closed_form_peak_scale(const WavepacketParams& p1, const WavepacketParams& p2) {
    const double a = peak_amplitude(p1) * peak_amplitude(p2);
    return std::ldexp(64.0 * a * a, -11);
}

// --- history-sum engine ---------------------------------------------------

/// Histories of both photons to both detectors, enumerated once and reused
/// for any number of detection times.
class TwoPhotonEngine {
public:
    TwoPhotonEngine(const DeviceSpec& spec, const std::array<PhotonSource, 2>& sources,
                    const std::array<NodeId, 2>& detectors, int max_passes)
        : packets_{sources[0].packet, sources[1].packet}, detectors_(detectors) {
        if (sources[0].port == sources[1].port) {
            throw ParameterError("the two photons must enter through distinct source ports");
        }
        for (const auto& s : sources) s.packet.validate();
        for (std::size_t ph = 0; ph < 2; ++ph) {
            for (std::size_t d = 0; d < 2; ++d) {
                histories_[ph][d] = enumerate_histories(spec, sources[ph].port, detectors[d], max_passes);
            }
        }
    }

    const std::vector<HistoryAmplitude>& histories(std::size_t photon, std::size_t detector) const {
        return histories_.at(photon).at(detector);
    }
    const std::array<WavepacketParams, 2>& packets() const { return packets_; }
    const std::array<NodeId, 2>& detectors() const { return detectors_; }

    /// Same histories, different wavepackets.
    TwoPhotonEngine with_packets(const WavepacketParams& p1, const WavepacketParams& p2) const {
        p1.validate();
        p2.validate();
        TwoPhotonEngine copy = *this;
        copy.packets_ = {p1, p2};
        return copy;
    }

    /// Field of one photon at one detector: the sum over its histories.
    Complex field(std::size_t photon, std::size_t detector, double t) const {
        Complex sum{};
        const auto& p = packets_[photon];
        for (const auto& h : histories_[photon][detector]) {
            sum += h.weight * detail::zeta_unchecked(p, t - h.total_delay);
        }
        return sum;
    }

    /// Amplitude for one click on detector 0 at t_first and one on
    /// detector 1 at t_second.
    TwoPhotonAmplitude amplitude(double t_first, double t_second) const {
        return {field(0, 0, t_first) * field(1, 1, t_second),
                field(1, 0, t_first) * field(0, 1, t_second)};
    }

    double coincidence(double t_first, double t_second) const {
        return amplitude(t_first, t_second).probability();
    }

    /// Upper bound on coincidence(): every history at its envelope peak.
    double peak_bound() const {
        auto reach = [&](std::size_t ph, std::size_t d) {
            double s = 0.0;
            for (const auto& h : histories_[ph][d]) s += std::abs(h.weight);
            return s * peak_amplitude(packets_[ph]);
        };
        const double a = reach(0, 0) * reach(1, 1) + reach(1, 0) * reach(0, 1);
        return a * a;
    }

    /// Coincidence probability integrated over both detection times,
    /// expanded into products of single-mode overlaps.
    double integrated_coincidence() const {
        struct Term {
            Complex c;
            std::size_t first_photon;
            double first_delay;
            std::size_t second_photon;
            double second_delay;
        };
        std::vector<Term> terms;
        for (const auto& [a, b] : {std::pair<std::size_t, std::size_t>{0, 1}, {1, 0}}) {
            for (const auto& h : histories_[a][0]) {
                for (const auto& g : histories_[b][1]) {
                    terms.push_back({h.weight * g.weight, a, h.total_delay, b, g.total_delay});
                }
            }
        }
        std::map<std::tuple<std::size_t, std::size_t, double>, Complex> cache;
        auto ov = [&](std::size_t i, std::size_t j, double d) {
            const auto key = std::make_tuple(i, j, d);
            auto it = cache.find(key);
            if (it != cache.end()) return it->second;
            return cache.emplace(key, overlap(packets_[i], packets_[j], d)).first->second;
        };
        Complex total{};
        for (const auto& k : terms) {
            for (const auto& l : terms) {
                total += std::conj(k.c) * l.c * ov(k.first_photon, l.first_photon, l.first_delay - k.first_delay) *
                         ov(k.second_photon, l.second_photon, l.second_delay - k.second_delay);
            }
        }
        return clamp_probability(total.real());
    }

    /// n uniformly spaced instants spanning +-half_width_sigmas around the
    /// middle of the window in which either photon can arrive at `detector`.
    std::vector<double> arrival_grid(std::size_t detector, std::size_t n,
                                     double half_width_sigmas = 5.0) const {
        if (n < 2) throw ParameterError("arrival grid needs at least 2 points");
        double lo = 0.0, hi = 0.0;
        bool any = false;
        for (std::size_t ph = 0; ph < 2; ++ph) {
            for (const auto& h : histories_[ph][detector]) {
                const double t = packets_[ph].center_time + h.total_delay;
                lo = any ? std::min(lo, t) : t;
                hi = any ? std::max(hi, t) : t;
                any = true;
            }
        }
        if (!any) throw ParameterError("no history reaches the detector");
        const double centre = 0.5 * (lo + hi);
        const double half = half_width_sigmas * std::max(packets_[0].width, packets_[1].width);
        std::vector<double> grid(n);
        for (std::size_t i = 0; i < n; ++i) {
            grid[i] = centre - half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n - 1);
        }
        return grid;
    }

private:
    std::array<WavepacketParams, 2> packets_;
    std::array<NodeId, 2> detectors_;
    std::array<std::array<std::vector<HistoryAmplitude>, 2>, 2> histories_;
};

/// |A|^2 for two clicks, A summed over both photon-to-event assignments and
/// over every history with at most max_passes mirror reflections.
inline double coincidence_general(const DeviceSpec& spec, const std::array<PhotonSource, 2>& sources,
                                  const std::array<DetectionEvent, 2>& events, int max_passes) {
    TwoPhotonEngine engine(spec, sources, {events[0].detector, events[1].detector}, max_passes);
    return engine.coincidence(events[0].time, events[1].time);
}

/// Hong-Ou-Mandel coincidence probability at a symmetric splitter for a
/// relative delay tau: (1 - |<z1|z2(. - tau)>|^2) / 2.
inline double hom_coincidence(const WavepacketParams& p1, const WavepacketParams& p2, double tau) {
    const double v = std::norm(overlap(p1, p2, tau));
    return std::clamp(0.5 * (1.0 - v), 0.0, 0.5);
}

/// Entry (i, j) is the two-photon amplitude for clicks at grid_first[i] on
/// the engine's first detector and grid_second[j] on its second.
inline CMatrix joint_amplitude_matrix(const TwoPhotonEngine& engine, const std::vector<double>& grid_first,
                                      const std::vector<double>& grid_second) {
    if (grid_first.size() < 2 || grid_second.size() < 2) {
        throw ParameterError("joint amplitude grids need at least 2 points each");
    }
    std::vector<Complex> a0(grid_first.size()), b1(grid_second.size());
    std::vector<Complex> b0(grid_first.size()), a1(grid_second.size());
    for (std::size_t i = 0; i < grid_first.size(); ++i) {
        a0[i] = engine.field(0, 0, grid_first[i]);
        b0[i] = engine.field(1, 0, grid_first[i]);
    }
    for (std::size_t j = 0; j < grid_second.size(); ++j) {
        b1[j] = engine.field(1, 1, grid_second[j]);
        a1[j] = engine.field(0, 1, grid_second[j]);
    }
    CMatrix m(static_cast<Eigen::Index>(grid_first.size()), static_cast<Eigen::Index>(grid_second.size()));
    for (std::size_t i = 0; i < grid_first.size(); ++i) {
        for (std::size_t j = 0; j < grid_second.size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a0[i] * b1[j] + b0[i] * a1[j];
        }
    }
    return m;
}

/// K = (sum l_k)^2 / sum l_k^2 over squared singular values l_k; 1 iff the
/// matrix has rank one.
inline double schmidt_number(const CMatrix& m) {
    const double norm = m.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw DegenerateInputError("schmidt_number of an all-zero or non-finite matrix");
    }
    Eigen::BDCSVD<CMatrix> svd(m / norm);
    const auto& s = svd.singularValues();
    double sum = 0.0, sum_sq = 0.0;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        const double l = s(k) * s(k);
        sum += l;
        sum_sq += l * l;
    }
    return std::max(1.0, sum * sum / sum_sq);
}

struct ExitProbability {
    double probability = 0.0;  // summed over every detector port
    double deficit = 0.0;      // 1 - probability: still inside the device
};

/// Probability that a single photon has left the device through any
/// detector, counting only histories with at most max_passes reflections.
inline ExitProbability single_photon_exit_probability(const DeviceSpec& spec, NodeId source,
                                                      const WavepacketParams& packet, int max_passes) {
    packet.validate();
    std::map<double, Complex> cache;
    auto ov = [&](double d) {
        auto it = cache.find(d);
        if (it != cache.end()) return it->second;
        return cache.emplace(d, overlap(packet, packet, d)).first->second;
    };
    double total = 0.0;
    for (const auto det : spec.detectors()) {
        const auto hs = enumerate_histories(spec, source, det, max_passes);
        Complex acc{};
        for (const auto& h : hs) {
            for (const auto& g : hs) acc += std::conj(h.weight) * g.weight * ov(g.total_delay - h.total_delay);
        }
        total += acc.real();
    }
    return {total, 1.0 - total};
}

}  // namespace qbeat
