#pragma once

// Optical devices as directed multigraphs, and enumeration of the
// single-photon histories (source-to-detector paths) they support.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "qbeat/error.hpp"
#include "qbeat/network.hpp"
#include "qbeat/wavepacket.hpp"

namespace qbeat {

struct NodeId {
    std::size_t value = 0;
    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class NodeKind { Source, BeamSplitter, PhaseShifter, Mirror, Detector };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Source: return "source";
        case NodeKind::BeamSplitter: return "beam_splitter";
        case NodeKind::PhaseShifter: return "phase_shifter";
        case NodeKind::Mirror: return "mirror";
        case NodeKind::Detector: return "detector";
    }
    return "unknown";
}

struct Node {
    NodeKind kind = NodeKind::Source;
    std::string name;
    std::optional<UnitaryMatrix> splitter;  // beam splitters only
    double delay = 0.0;                     // phase shifters: delay contribution (s)
    Complex reflectivity{-1.0, 0.0};        // mirrors only
};

/// Directed connection from an output port to an input port. For beam
/// splitters the port index selects the matrix row (out) or column (in).
struct Edge {
    NodeId from;
    unsigned from_port = 0;
    NodeId to;
    unsigned to_port = 0;
    double delay = 0.0;  // propagation delay (s)
};

class DeviceSpec {
public:
    DeviceSpec() = default;
    DeviceSpec(std::vector<Node> nodes, std::vector<Edge> edges)
        : nodes_(std::move(nodes)), edges_(std::move(edges)) {
        out_.resize(nodes_.size());
        in_.resize(nodes_.size());
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            const auto& edge = edges_[e];
            if (edge.from.value >= nodes_.size() || edge.to.value >= nodes_.size()) {
                throw ParameterError("edge " + std::to_string(e) + " references a missing node");
            }
            out_[edge.from.value].push_back(e);
            in_[edge.to.value].push_back(e);
        }
        for (std::size_t n = 0; n < nodes_.size(); ++n) {
            by_name_.emplace(nodes_[n].name, NodeId{n});
        }
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Node& node(NodeId id) const { return nodes_.at(id.value); }
    const std::vector<std::size_t>& out_edges(NodeId id) const { return out_.at(id.value); }
    const std::vector<std::size_t>& in_edges(NodeId id) const { return in_.at(id.value); }

    std::optional<NodeId> find(const std::string& name) const {
        auto it = by_name_.find(name);
        if (it == by_name_.end()) return std::nullopt;
        return it->second;
    }

    /// Looks up a node by name, throwing ParameterError when absent.
    NodeId port(const std::string& name) const {
        if (auto id = find(name)) return *id;
        throw ParameterError("no port named '" + name + "' in device");
    }

    std::vector<NodeId> nodes_of_kind(NodeKind kind) const {
        std::vector<NodeId> out;
        for (std::size_t n = 0; n < nodes_.size(); ++n) {
            if (nodes_[n].kind == kind) out.push_back(NodeId{n});
        }
        return out;
    }
    std::vector<NodeId> inputs() const { return nodes_of_kind(NodeKind::Source); }
    std::vector<NodeId> detectors() const { return nodes_of_kind(NodeKind::Detector); }

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> out_;
    std::vector<std::vector<std::size_t>> in_;
    std::unordered_map<std::string, NodeId> by_name_;
};

class DeviceBuilder {
public:
    NodeId add_source(std::string name) { return add({NodeKind::Source, std::move(name), {}, 0.0, {}}); }
    NodeId add_detector(std::string name) {
        return add({NodeKind::Detector, std::move(name), {}, 0.0, {}});
    }
    NodeId add_beam_splitter(std::string name, UnitaryMatrix u = symmetric_beam_splitter()) {
        if (u.dim() != 2) throw ParameterError("beam splitter '" + name + "' needs a 2x2 transform");
        return add({NodeKind::BeamSplitter, std::move(name), std::move(u), 0.0, {}});
    }
    NodeId add_phase_shifter(std::string name, double delay) {
        return add({NodeKind::PhaseShifter, std::move(name), {}, delay, {}});
    }
    NodeId add_mirror(std::string name, Complex reflectivity = {-1.0, 0.0}) {
        return add({NodeKind::Mirror, std::move(name), {}, 0.0, reflectivity});
    }

    DeviceBuilder& connect(NodeId from, unsigned from_port, NodeId to, unsigned to_port,
                           double delay = 0.0) {
        edges_.push_back({from, from_port, to, to_port, delay});
        return *this;
    }
    DeviceBuilder& connect(NodeId from, NodeId to, double delay = 0.0) {
        return connect(from, 0, to, 0, delay);
    }

    DeviceSpec build() const { return DeviceSpec(nodes_, edges_); }

private:
    NodeId add(Node n) {
        nodes_.push_back(std::move(n));
        return NodeId{nodes_.size() - 1};
    }

    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
};

struct Diagnostic {
    std::string node;
    std::string rule;
};

namespace detail {

inline void check_ports(const DeviceSpec& spec, const Node& n, const std::vector<std::size_t>& edges,
                        bool outgoing, std::size_t expected, const char* direction,
                        std::vector<Diagnostic>& out) {
    if (edges.size() != expected) {
        out.push_back({n.name, std::string(to_string(n.kind)) + " needs exactly " +
                                   std::to_string(expected) + " " + direction + "-edge" +
                                   (expected == 1 ? "" : "s") + ", found " +
                                   std::to_string(edges.size())});
        return;
    }
    std::vector<unsigned> ports;
    for (auto e : edges) {
        const auto& edge = spec.edges()[e];
        ports.push_back(outgoing ? edge.from_port : edge.to_port);
    }
    std::sort(ports.begin(), ports.end());
    for (std::size_t i = 0; i < ports.size(); ++i) {
        if (ports[i] != i) {
            out.push_back({n.name, std::string(direction) + "-ports must be 0.." +
                                       std::to_string(expected - 1) + ", each used once"});
            return;
        }
    }
}

}  // namespace detail

/// Empty iff every structural rule holds. Each entry names the offending
/// node and the rule it breaks.
inline std::vector<Diagnostic> validate_device(const DeviceSpec& spec) {
    std::vector<Diagnostic> out;
    std::unordered_map<std::string, int> seen;
    for (const auto& n : spec.nodes()) {
        if (++seen[n.name] == 2) out.push_back({n.name, "node names must be unique"});
    }

    for (std::size_t i = 0; i < spec.nodes().size(); ++i) {
        const NodeId id{i};
        const auto& n = spec.node(id);
        const auto& ins = spec.in_edges(id);
        const auto& outs = spec.out_edges(id);
        switch (n.kind) {
            case NodeKind::Source:
                detail::check_ports(spec, n, ins, false, 0, "in", out);
                detail::check_ports(spec, n, outs, true, 1, "out", out);
                break;
            case NodeKind::Detector:
                detail::check_ports(spec, n, ins, false, 1, "in", out);
                detail::check_ports(spec, n, outs, true, 0, "out", out);
                break;
            case NodeKind::BeamSplitter:
                detail::check_ports(spec, n, ins, false, 2, "in", out);
                detail::check_ports(spec, n, outs, true, 2, "out", out);
                if (!n.splitter || n.splitter->dim() != 2) {
                    out.push_back({n.name, "beam splitter needs a 2x2 unitary"});
                }
                break;
            case NodeKind::PhaseShifter:
                detail::check_ports(spec, n, ins, false, 1, "in", out);
                detail::check_ports(spec, n, outs, true, 1, "out", out);
                if (!(n.delay >= 0.0) || !std::isfinite(n.delay)) {
                    out.push_back({n.name, "phase shifter delay must be finite and >= 0"});
                }
                break;
            case NodeKind::Mirror:
                detail::check_ports(spec, n, ins, false, 1, "in", out);
                detail::check_ports(spec, n, outs, true, 1, "out", out);
                if (!(std::abs(n.reflectivity) <= 1.0 + 1e-15)) {
                    out.push_back({n.name, "mirror reflectivity must satisfy |r| <= 1"});
                }
                break;
        }
    }

    for (const auto& e : spec.edges()) {
        if (!(e.delay >= 0.0) || !std::isfinite(e.delay)) {
            out.push_back({spec.node(e.from).name, "edge to '" + spec.node(e.to).name +
                                                       "' has a negative or non-finite delay"});
        }
    }

    // Every directed cycle must pass through a mirror: with mirrors removed
    // the graph has to be acyclic.
    const std::size_t n = spec.nodes().size();
    std::vector<int> colour(n, 0);  // 0 new, 1 on stack, 2 done
    std::vector<bool> reported(n, false);
    auto skip = [&](std::size_t v) { return spec.nodes()[v].kind == NodeKind::Mirror; };
    for (std::size_t root = 0; root < n; ++root) {
        if (colour[root] != 0 || skip(root)) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        colour[root] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            const auto& outs = spec.out_edges(NodeId{v});
            if (next == outs.size()) {
                colour[v] = 2;
                stack.pop_back();
                continue;
            }
            const std::size_t w = spec.edges()[outs[next++]].to.value;
            if (skip(w)) continue;
            if (colour[w] == 1 && !reported[w]) {
                reported[w] = true;
                out.push_back({spec.nodes()[w].name, "lies on a cycle that contains no mirror"});
            } else if (colour[w] == 0) {
                colour[w] = 1;
                stack.push_back({w, 0});
            }
        }
    }
    return out;
}

/// One source-to-detector path and the amplitude it carries.
struct HistoryAmplitude {
    std::vector<NodeId> nodes;
    std::vector<std::size_t> edges;
    int pass_count = 0;  // mirror reflections along the path
    double total_delay = 0.0;
    Complex weight{1.0, 0.0};

    std::size_t splitter_traversals(const DeviceSpec& spec) const {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [&](NodeId id) {
            return spec.node(id).kind == NodeKind::BeamSplitter;
        }));
    }
};

namespace detail {

inline void require_valid(const DeviceSpec& spec) {
    const auto diags = validate_device(spec);
    if (!diags.empty()) {
        throw ValidationError("device is invalid: " + diags.front().node + ": " + diags.front().rule +
                              (diags.size() > 1 ? " (and " + std::to_string(diags.size() - 1) +
                                                      " more)"
                                                : std::string()));
    }
}

}  // namespace detail

/// All directed paths from `source` to `detector` that reflect off at most
/// `max_passes` mirrors, sorted lexicographically by node then edge sequence.
inline std::vector<HistoryAmplitude> enumerate_histories(const DeviceSpec& spec, NodeId source,
                                                         NodeId detector, int max_passes) {
    if (source.value >= spec.nodes().size() || spec.node(source).kind != NodeKind::Source) {
        throw ParameterError("history source must be a source port");
    }
    if (detector.value >= spec.nodes().size() || spec.node(detector).kind != NodeKind::Detector) {
        throw ParameterError("history target must be a detector port");
    }
    if (max_passes < 0) throw ParameterError("max_passes must be >= 0");
    detail::require_valid(spec);

    std::vector<HistoryAmplitude> found;
    HistoryAmplitude current;
    current.nodes.push_back(source);

    // Arrive at `id` through input `port`; `current` already holds the prefix.
    auto visit = [&](auto&& self, NodeId id, unsigned port) -> void {
        const Node& n = spec.node(id);
        const auto saved_delay = current.total_delay;
        const auto saved_weight = current.weight;
        const auto saved_passes = current.pass_count;
        switch (n.kind) {
            case NodeKind::Detector:
                if (id == detector) found.push_back(current);
                return;
            case NodeKind::Source:
                return;
            case NodeKind::Mirror:
                if (++current.pass_count > max_passes) {
                    current.pass_count = saved_passes;
                    return;
                }
                current.weight *= n.reflectivity;
                break;
            case NodeKind::PhaseShifter:
                current.total_delay += n.delay;
                break;
            case NodeKind::BeamSplitter:
                break;
        }
        for (auto e : spec.out_edges(id)) {
            const Edge& edge = spec.edges()[e];
            const auto before_weight = current.weight;
            const auto before_delay = current.total_delay;
            if (n.kind == NodeKind::BeamSplitter) current.weight *= (*n.splitter)(edge.from_port, port);
            current.total_delay += edge.delay;
            current.nodes.push_back(edge.to);
            current.edges.push_back(e);
            self(self, edge.to, edge.to_port);
            current.nodes.pop_back();
            current.edges.pop_back();
            current.weight = before_weight;
            current.total_delay = before_delay;
        }
        current.total_delay = saved_delay;
        current.weight = saved_weight;
        current.pass_count = saved_passes;
    };

    for (auto e : spec.out_edges(source)) {
        const Edge& edge = spec.edges()[e];
        current.total_delay = edge.delay;
        current.nodes.push_back(edge.to);
        current.edges.push_back(e);
        visit(visit, edge.to, edge.to_port);
        current.nodes.pop_back();
        current.edges.pop_back();
    }

    std::sort(found.begin(), found.end(), [](const HistoryAmplitude& a, const HistoryAmplitude& b) {
        if (a.nodes != b.nodes) return a.nodes < b.nodes;
        return a.edges < b.edges;
    });
    return found;
}

/// weight * zeta(t - total_delay): the field a history contributes at a detector.
inline ComplexAmplitude history_field(const HistoryAmplitude& h, const WavepacketParams& p,
                                      double detection_time) {
    return h.weight * zeta(p, detection_time - h.total_delay);
}

}  // namespace qbeat
