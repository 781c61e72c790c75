#pragma once

// Named devices: the recursive feedback interferometer and two small
// reference devices used for baselines.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "qbeat/device.hpp"

namespace qbeat {

/// Parameters of the recursive feedback interferometer.
struct Fig1Params {
    double input_delay = 0.5;    // tau: extra delay of photon 2 on its single-pass route
    double shifter_delay = 0.5;  // delta tau added by each phase-shifter leg
    double loop_delay = 40.0;    // delay picked up on every mirror hop
    Complex mirror_reflectivity{-1.0, 0.0};

    void validate() const {
        if (!std::isfinite(input_delay) || input_delay < 0.0) {
            throw ParameterError("input_delay must be finite and >= 0");
        }
        if (!std::isfinite(shifter_delay) || shifter_delay < 0.0) {
            throw ParameterError("shifter_delay must be finite and >= 0");
        }
        if (!std::isfinite(loop_delay) || loop_delay < 0.0) {
            throw ParameterError("loop_delay must be finite and >= 0");
        }
        if (!(std::abs(mirror_reflectivity) <= 1.0)) {
            throw ParameterError("mirror reflectivity must satisfy |r| <= 1");
        }
    }
};

namespace fig1 {

inline constexpr const char* kInput1 = "in1";
inline constexpr const char* kInput2 = "in2";
inline constexpr const char* kDetector1 = "det1";
inline constexpr const char* kDetector2 = "det2";

/// Mirror count of the single-pass (detector 1) and double-pass (detector 2)
/// histories; with max_passes = 2 these are the only ones that reach the
/// two detectors.
inline constexpr int kSinglePasses = 1;
inline constexpr int kDoublePasses = 2;

}  // namespace fig1

/// Builds the recursive interferometer.
///
/// Both photons are first spread over two merging splitters: one feeds the
/// crossing that exits after a single pass, the other feeds the crossing
/// that is followed by the right mirror and a second crossing. Photon 2
/// reaches the single-pass merger `input_delay` late. Each crossing is a
/// Mach-Zehnder with one phase-shifter leg of `shifter_delay`. The unused
/// outputs of the crossings are folded back through mirrors into the
/// other crossings, closing a feedback ring, so light keeps circulating and
/// leaks out at both detectors on later passes.
///
///   in1 ─┐split1┌─ merge_single ── mz_a ─ left_a ─ det1
///   in2 ─┘split2└─ merge_double ── mz_b ─ right ─ mz_c ─ left_b ─ det2
///                          ring: mz_a → fold_ab → mz_b → fold_bc1/2 → mz_c → fold_ca → mz_a
inline DeviceSpec build_fig1_device(const Fig1Params& p) {
    p.validate();
    DeviceBuilder b;
    const auto in1 = b.add_source(fig1::kInput1);
    const auto in2 = b.add_source(fig1::kInput2);
    const auto vac1 = b.add_source("vac1");
    const auto vac2 = b.add_source("vac2");
    const auto det1 = b.add_detector(fig1::kDetector1);
    const auto det2 = b.add_detector(fig1::kDetector2);
    const auto dump1 = b.add_detector("dump1");
    const auto dump2 = b.add_detector("dump2");

    const auto split1 = b.add_beam_splitter("split1");
    const auto split2 = b.add_beam_splitter("split2");
    const auto merge_single = b.add_beam_splitter("merge_single");
    const auto merge_double = b.add_beam_splitter("merge_double");

    struct Crossing {
        NodeId in, out, shift;
    };
    auto crossing = [&](const std::string& name) {
        Crossing c{b.add_beam_splitter(name + ".in"), b.add_beam_splitter(name + ".out"),
                   b.add_phase_shifter(name + ".shift", p.shifter_delay)};
        b.connect(c.in, 0, c.out, 0);
        b.connect(c.in, 1, c.shift, 0);
        b.connect(c.shift, 0, c.out, 1);
        return c;
    };
    const auto mz_a = crossing("mz_a");
    const auto mz_b = crossing("mz_b");
    const auto mz_c = crossing("mz_c");

    const auto r = p.mirror_reflectivity;
    const auto left_a = b.add_mirror("left_a", r);
    const auto left_b = b.add_mirror("left_b", r);
    const auto right = b.add_mirror("right", r);
    const auto fold_ab = b.add_mirror("fold_ab", r);
    const auto fold_bc1 = b.add_mirror("fold_bc1", r);
    const auto fold_bc2 = b.add_mirror("fold_bc2", r);
    const auto fold_ca = b.add_mirror("fold_ca", r);
    const double hop = p.loop_delay;

    b.connect(in1, 0, split1, 0);
    b.connect(vac1, 0, split1, 1);
    b.connect(in2, 0, split2, 0);
    b.connect(vac2, 0, split2, 1);
    b.connect(split1, 0, merge_single, 0);
    b.connect(split2, 0, merge_single, 1, p.input_delay);
    b.connect(split1, 1, merge_double, 0);
    b.connect(split2, 1, merge_double, 1);
    b.connect(merge_single, 0, dump1, 0);
    b.connect(merge_double, 0, dump2, 0);
    b.connect(merge_single, 1, mz_a.in, 0);
    b.connect(merge_double, 1, mz_b.in, 0);

    // Single pass: difference port of mz_a, one left-side reflection.
    b.connect(mz_a.out, 1, left_a, 0, hop);
    b.connect(left_a, 0, det1, 0);
    // Double pass: sum port of mz_b, right mirror, difference port of mz_c.
    b.connect(mz_b.out, 0, right, 0, hop);
    b.connect(right, 0, mz_c.in, 0);
    b.connect(mz_c.out, 1, left_b, 0, hop);
    b.connect(left_b, 0, det2, 0);

    // Feedback ring.
    b.connect(mz_a.out, 0, fold_ab, 0, hop);
    b.connect(fold_ab, 0, mz_b.in, 1);
    b.connect(mz_b.out, 1, fold_bc1, 0, hop);
    b.connect(fold_bc1, 0, fold_bc2, 0, hop);
    b.connect(fold_bc2, 0, mz_c.in, 1);
    b.connect(mz_c.out, 0, fold_ca, 0, hop);
    b.connect(fold_ca, 0, mz_a.in, 1);
    return b.build();
}

/// Detection instants for the two detectors of the recursive interferometer
/// at reference time t0, derived from the device's own path delays: the
/// detector-1 event sits where photon 2's single-pass bracket is anchored at
/// t0, the detector-2 event where the double-pass brackets are anchored at
/// t0 + tau (tau read back as the single-pass delay difference).
struct Fig1Timing {
    double single_anchor_1 = 0.0;  // longest in1 -> det1 delay
    double single_anchor_2 = 0.0;  // longest in2 -> det1 delay
    double double_anchor = 0.0;    // longest in1 -> det2 delay

    double detector1_time(double t0) const { return t0 + single_anchor_2; }
    double detector2_time(double t0) const {
        return t0 + (single_anchor_2 - single_anchor_1) + double_anchor;
    }
};

inline Fig1Timing fig1_timing(const DeviceSpec& spec) {
    auto longest = [&](const char* src, const char* det, int passes) {
        const auto hs = enumerate_histories(spec, spec.port(src), spec.port(det), passes);
        if (hs.empty()) throw ParameterError(std::string("no history from ") + src + " to " + det);
        double best = hs.front().total_delay;
        for (const auto& h : hs) best = std::max(best, h.total_delay);
        return best;
    };
    return {longest(fig1::kInput1, fig1::kDetector1, fig1::kSinglePasses),
            longest(fig1::kInput2, fig1::kDetector1, fig1::kSinglePasses),
            longest(fig1::kInput1, fig1::kDetector2, fig1::kDoublePasses)};
}

/// A single 50:50 splitter: in1, in2 -> det1, det2.
inline DeviceSpec build_beam_splitter_device() {
    DeviceBuilder b;
    const auto in1 = b.add_source("in1");
    const auto in2 = b.add_source("in2");
    const auto det1 = b.add_detector("det1");
    const auto det2 = b.add_detector("det2");
    const auto bs = b.add_beam_splitter("bs");
    b.connect(in1, 0, bs, 0).connect(in2, 0, bs, 1);
    b.connect(bs, 0, det1, 0).connect(bs, 1, det2, 0);
    return b.build();
}

/// in1 -> det1 and in2 -> det2 with no mixing element.
inline DeviceSpec build_pass_through_device() {
    DeviceBuilder b;
    const auto in1 = b.add_source("in1");
    const auto in2 = b.add_source("in2");
    const auto det1 = b.add_detector("det1");
    const auto det2 = b.add_detector("det2");
    b.connect(in1, det1).connect(in2, det2);
    return b.build();
}

struct PresetInfo {
    std::string name;
    std::string summary;
};

inline std::vector<PresetInfo> preset_catalog() {
    return {
        {"fig1", "recursive feedback interferometer; sources in1 in2, detectors det1 det2"},
        {"beam_splitter", "single 50:50 splitter; sources in1 in2, detectors det1 det2"},
        {"pass_through", "no mixing, in1->det1 and in2->det2"},
    };
}

}  // namespace qbeat
