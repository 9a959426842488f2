#include <gtest/gtest.h>

#include <limits>

#include "dermfair/error.hpp"
#include "dermfair/graphcut.hpp"
#include "dermfair/metrics.hpp"
#include "dermfair/random.hpp"
#include "fixture_gen.hpp"

using namespace dermfair;
using namespace dermfair::graphcut;

namespace {

// Minimum over every partition of the non-terminal nodes.
double min_cut_oracle(const FlowNetwork& net, std::size_t nodes) {
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t bits = 0; bits < (1U << nodes); ++bits) {
        std::vector<bool> side(nodes + 2, false);
        for (std::size_t v = 0; v < nodes; ++v) side[v] = (bits >> v) & 1U;
        side[net.source()] = true;
        double cap = 0.0;
        for (const auto& a : net.arcs()) {
            if (side[a.from] && !side[a.to]) cap += a.capacity;
        }
        best = std::min(best, cap);
    }
    return best;
}

double iou(const Mask& a, const Mask& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += a[i] && b[i];
        uni += a[i] || b[i];
    }
    return double(inter) / double(uni);
}

}  // namespace

TEST(MaxFlow, SingleArc) {
    FlowNetwork net(0);
    net.add_arc(net.source(), net.sink(), 7.0);
    EXPECT_EQ(max_flow(net).flow, 7.0);
}

TEST(MaxFlow, Diamond) {
    FlowNetwork net(2);
    const auto s = net.source(), t = net.sink();
    net.add_arc(s, 0, 3);
    net.add_arc(s, 1, 2);
    net.add_arc(0, t, 2);
    net.add_arc(1, t, 3);
    net.add_arc(0, 1, 1);
    const MaxFlowResult r = max_flow(net);
    EXPECT_EQ(r.flow, 5.0);
    EXPECT_EQ(cut_capacity(net, r.source_side), 5.0);
    EXPECT_TRUE(r.source_side[s]);
    EXPECT_FALSE(r.source_side[t]);
}

TEST(MaxFlow, RejectsInvalidArcs) {
    FlowNetwork net(2);
    EXPECT_THROW(net.add_arc(0, net.source(), 1.0), Error);
    EXPECT_THROW(net.add_arc(net.sink(), 0, 1.0), Error);
    EXPECT_THROW(net.add_arc(0, 1, -1.0), Error);
    EXPECT_THROW(net.add_arc(0, 7, 1.0), Error);
    EXPECT_THROW(net.add_arc(0, 1, std::numeric_limits<double>::infinity()), Error);
}

TEST(MaxFlow, DisconnectedHasZeroFlow) {
    FlowNetwork net(3);
    net.add_arc(net.source(), 0, 4);
    net.add_arc(1, net.sink(), 4);
    EXPECT_EQ(max_flow(net).flow, 0.0);
}

TEST(MaxFlow, RandomNetworksMatchCutEnumeration) {
    Rng rng(8);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng.below(8);
        FlowNetwork net(n);
        const std::size_t total = n + 2;
        for (std::size_t u = 0; u < total; ++u) {
            for (std::size_t v = 0; v < total; ++v) {
                if (u == v || v == net.source() || u == net.sink() || !rng.coin(0.4)) continue;
                net.add_arc(static_cast<FlowNetwork::Node>(u), static_cast<FlowNetwork::Node>(v),
                            static_cast<double>(1 + rng.below(10)));
            }
        }
        const MaxFlowResult r = max_flow(net);
        EXPECT_EQ(r.flow, min_cut_oracle(net, n));
        EXPECT_EQ(cut_capacity(net, r.source_side), r.flow);
    }
}

TEST(Otsu, ConstantImageIsDegenerate) {
    try {
        otsu_threshold(GrayImage(8, 8, 100));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateImage);
    }
}

TEST(Otsu, SeparatesTwoLevels) {
    GrayImage img(10, 10, 200);
    for (int x = 0; x < 5; ++x) img(x, 0) = 40;
    const int t = otsu_threshold(img);
    EXPECT_GE(t, 40);
    EXPECT_LT(t, 200);
}

TEST(LesionGraph, TwoLevelDiscPolarizesTerminalLinks) {
    const auto f = fixtures::noisy_disc(1, 64, 15.0, 0.0);
    const LesionGraph g = build_lesion_graph(f.image);
    for (std::size_t i = 0; i < f.image.size(); ++i) {
        // Source side is the lesion: cost of calling a disc pixel background
        // must exceed the cost of calling it lesion.
        if (f.truth[i]) EXPECT_GT(g.source_caps[i], g.sink_caps[i]);
        else EXPECT_LT(g.source_caps[i], g.sink_caps[i]);
    }
    EXPECT_LT(g.lesion.mean, g.background.mean);
}

TEST(Segment, NoiselessDiscIsExact) {
    const auto f = fixtures::noisy_disc(2, 224, 40.0, 0.0);
    EXPECT_EQ(segment_maxflow(f.image), f.truth);
}

TEST(Segment, NoisyDiscs) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto f = fixtures::noisy_disc(seed);
        EXPECT_GE(iou(segment_maxflow(f.image), f.truth), 0.90) << seed;
    }
}

TEST(Segment, InvertSelectsBrightComponent) {
    auto f = fixtures::noisy_disc(3, 96, 20.0, 5.0, 200.0, 60.0);
    const Mask m = segment_maxflow(f.image, {50.0, 10.0, true});
    EXPECT_GE(iou(m, f.truth), 0.9);
}

TEST(Segment, RgbInputUsesLuma) {
    const auto f = fixtures::noisy_disc(4, 96, 20.0, 0.0);
    RgbImage rgb(96, 96);
    for (std::size_t i = 0; i < f.image.size(); ++i) rgb.set(i, {f.image[i], f.image[i], f.image[i]});
    EXPECT_EQ(segment_maxflow(rgb), f.truth);
}
