#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dermfair/image.hpp"

namespace dermfair::graphcut {

// Directed s-t network with nonnegative capacities. Arcs into the source or
// out of the sink are rejected.
class FlowNetwork {
public:
    using Node = std::uint32_t;

    // `nodes` non-terminal nodes; the source and sink are appended after them.
    explicit FlowNetwork(std::size_t nodes);

    Node source() const noexcept { return static_cast<Node>(nodes_); }
    Node sink() const noexcept { return static_cast<Node>(nodes_ + 1); }
    std::size_t node_count() const noexcept { return nodes_ + 2; }
    std::size_t arc_count() const noexcept { return arcs_.size(); }

    void add_arc(Node from, Node to, double capacity);

    struct Arc {
        Node from;
        Node to;
        double capacity;
    };
    const std::vector<Arc>& arcs() const noexcept { return arcs_; }

private:
    std::size_t nodes_;
    std::vector<Arc> arcs_;
};

struct MaxFlowResult {
    double flow = 0.0;
    // source_side[v] is true iff v is reachable from the source in the final
    // residual graph; this is the source side of a minimum cut.
    std::vector<bool> source_side;
};

// Dinic-style shortest-augmenting-path max-flow with capacity scaling.
MaxFlowResult max_flow(const FlowNetwork& net);

// Sum of capacities of arcs leaving the given source side.
double cut_capacity(const FlowNetwork& net, const std::vector<bool>& source_side);

struct LesionGraphParams {
    double lambda = 50.0;  // n-link weight
    double sigma = 10.0;   // n-link intensity scale, 8-bit units
    bool invert = false;   // lesion is the brighter component
};

struct IntensityModel {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t pixels = 0;
};

struct LesionGraph {
    FlowNetwork network{0};
    int width = 0;
    int height = 0;
    int otsu_threshold = 0;  // class 0 is intensities <= threshold
    IntensityModel lesion;
    IntensityModel background;
    // Per-pixel t-link capacities: source -> pixel (cost of labelling the pixel
    // background) and pixel -> sink (cost of labelling it lesion).
    std::vector<double> source_caps;
    std::vector<double> sink_caps;
};

// Variance floor for the per-component Gaussian fits.
inline constexpr double kMinComponentVariance = 4.0;

// Otsu threshold over a 256-bin histogram. Throws DegenerateImage when fewer
// than two intensity levels are present.
int otsu_threshold(const GrayImage& image);

LesionGraph build_lesion_graph(const GrayImage& image, const LesionGraphParams& params = {});

BinaryMask segment_maxflow(const GrayImage& image, const LesionGraphParams& params = {});
BinaryMask segment_maxflow(const RgbImage& image, const LesionGraphParams& params = {});

}  // namespace dermfair::graphcut
