#include "dermfair/graphcut.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "dermfair/error.hpp"

namespace dermfair::graphcut {

FlowNetwork::FlowNetwork(std::size_t nodes) : nodes_(nodes) {}

void FlowNetwork::add_arc(Node from, Node to, double capacity) {
    if (from >= node_count() || to >= node_count()) {
        throw Error(ErrorKind::InvalidArgument, "arc endpoint out of range");
    }
    if (to == source() || from == sink()) {
        throw Error(ErrorKind::InvalidArgument, "arcs may not enter the source or leave the sink");
    }
    if (!(capacity >= 0.0) || !std::isfinite(capacity)) {
        throw Error(ErrorKind::InvalidArgument, "capacities must be finite and nonnegative");
    }
    if (from == to) return;
    arcs_.push_back({from, to, capacity});
}

namespace {

// Residual graph in CSR form. Edge 2i is arc i, edge 2i+1 its reverse.
class Residual {
public:
    explicit Residual(const FlowNetwork& net) : n_(net.node_count()) {
        const auto& arcs = net.arcs();
        const std::size_t m = 2 * arcs.size();
        head_.resize(m);
        tail_.resize(m);
        cap_.resize(m);
        std::vector<std::uint32_t> degree(n_ + 1, 0);
        for (std::size_t i = 0; i < arcs.size(); ++i) {
            const auto& a = arcs[i];
            head_[2 * i] = a.to;
            tail_[2 * i] = a.from;
            cap_[2 * i] = a.capacity;
            head_[2 * i + 1] = a.from;
            tail_[2 * i + 1] = a.to;
            cap_[2 * i + 1] = 0.0;
            ++degree[a.from + 1];
            ++degree[a.to + 1];
        }
        for (std::size_t v = 0; v < n_; ++v) degree[v + 1] += degree[v];
        first_ = degree;
        edges_.resize(m);
        std::vector<std::uint32_t> fill(first_.begin(), first_.end() - 1);
        for (std::uint32_t e = 0; e < m; ++e) edges_[fill[tail_[e]]++] = e;
    }

    std::size_t nodes() const noexcept { return n_; }

    // Breadth-first levels over edges with residual >= threshold.
    bool build_levels(std::uint32_t s, std::uint32_t t, double threshold) {
        level_.assign(n_, -1);
        queue_.clear();
        level_[s] = 0;
        queue_.push_back(s);
        for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
            const std::uint32_t v = queue_[qi];
            for (std::uint32_t k = first_[v]; k < first_[v + 1]; ++k) {
                const std::uint32_t e = edges_[k];
                const std::uint32_t w = head_[e];
                if (level_[w] < 0 && cap_[e] >= threshold) {
                    level_[w] = level_[v] + 1;
                    queue_.push_back(w);
                }
            }
        }
        return level_[t] >= 0;
    }

    // Saturates the level graph; returns the flow pushed.
    double blocking_flow(std::uint32_t s, std::uint32_t t, double threshold) {
        current_.assign(first_.begin(), first_.end() - 1);
        path_.clear();
        double pushed = 0.0;
        std::uint32_t v = s;
        for (;;) {
            if (v == t) {
                double bottleneck = cap_[path_.front()];
                for (std::uint32_t e : path_) bottleneck = std::min(bottleneck, cap_[e]);
                std::size_t cut_at = path_.size();
                for (std::size_t i = 0; i < path_.size(); ++i) {
                    const std::uint32_t e = path_[i];
                    cap_[e] -= bottleneck;
                    cap_[e ^ 1U] += bottleneck;
                    if (cut_at == path_.size() && cap_[e] < threshold) cut_at = i;
                }
                pushed += bottleneck;
                v = tail_[path_[cut_at]];
                path_.resize(cut_at);
                continue;
            }
            bool advanced = false;
            for (std::uint32_t& k = current_[v]; k < first_[v + 1]; ++k) {
                const std::uint32_t e = edges_[k];
                const std::uint32_t w = head_[e];
                if (cap_[e] >= threshold && level_[w] == level_[v] + 1) {
                    path_.push_back(e);
                    v = w;
                    advanced = true;
                    break;
                }
            }
            if (advanced) continue;
            level_[v] = -1;  // dead end
            if (v == s) break;
            const std::uint32_t e = path_.back();
            path_.pop_back();
            v = tail_[e];
            ++current_[v];
        }
        return pushed;
    }

    std::vector<bool> reachable(std::uint32_t s, double threshold) const {
        std::vector<bool> seen(n_, false);
        std::vector<std::uint32_t> stack{s};
        seen[s] = true;
        while (!stack.empty()) {
            const std::uint32_t v = stack.back();
            stack.pop_back();
            for (std::uint32_t k = first_[v]; k < first_[v + 1]; ++k) {
                const std::uint32_t e = edges_[k];
                const std::uint32_t w = head_[e];
                if (!seen[w] && cap_[e] > threshold) {
                    seen[w] = true;
                    stack.push_back(w);
                }
            }
        }
        return seen;
    }

private:
    std::size_t n_;
    std::vector<std::uint32_t> head_;
    std::vector<std::uint32_t> tail_;
    std::vector<double> cap_;
    std::vector<std::uint32_t> first_;
    std::vector<std::uint32_t> edges_;
    std::vector<int> level_;
    std::vector<std::uint32_t> queue_;
    std::vector<std::uint32_t> current_;
    std::vector<std::uint32_t> path_;
};

}  // namespace

MaxFlowResult max_flow(const FlowNetwork& net) {
    const std::uint32_t s = net.source();
    const std::uint32_t t = net.sink();
    double max_cap = 0.0;
    for (const auto& a : net.arcs()) max_cap = std::max(max_cap, a.capacity);

    Residual g(net);
    MaxFlowResult result;
    // Residuals at or below this are treated as saturated.
    const double eps = max_cap * 1e-12;
    if (max_cap > 0.0) {
        const double floor_delta = max_cap * 0x1.0p-30;
        for (double delta = std::exp2(std::floor(std::log2(max_cap))); delta >= floor_delta;
             delta *= 0.5) {
            while (g.build_levels(s, t, delta)) result.flow += g.blocking_flow(s, t, delta);
        }
        const double last = std::nextafter(eps, 1.0);
        while (g.build_levels(s, t, last)) result.flow += g.blocking_flow(s, t, last);
    }
    result.source_side = g.reachable(s, eps);
    return result;
}

double cut_capacity(const FlowNetwork& net, const std::vector<bool>& source_side) {
    double c = 0.0;
    for (const auto& a : net.arcs()) {
        if (source_side[a.from] && !source_side[a.to]) c += a.capacity;
    }
    return c;
}

int otsu_threshold(const GrayImage& image) {
    std::array<double, 256> hist{};
    for (std::uint8_t v : image.values()) hist[v] += 1.0;
    const int levels = static_cast<int>(std::count_if(hist.begin(), hist.end(), [](double c) { return c > 0.0; }));
    if (levels < 2) throw Error(ErrorKind::DegenerateImage, "image has a single intensity level");

    const double total = static_cast<double>(image.size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * hist[static_cast<std::size_t>(i)];

    double w0 = 0.0;
    double sum0 = 0.0;
    double best = -1.0;
    int threshold = 0;
    for (int t = 0; t < 255; ++t) {
        w0 += hist[static_cast<std::size_t>(t)];
        sum0 += t * hist[static_cast<std::size_t>(t)];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            threshold = t;
        }
    }
    return threshold;
}

namespace {

IntensityModel fit(const GrayImage& image, int threshold, bool below) {
    IntensityModel m;
    double sum = 0.0;
    double sq = 0.0;
    for (std::uint8_t v : image.values()) {
        if ((v <= threshold) != below) continue;
        sum += v;
        sq += double(v) * v;
        ++m.pixels;
    }
    const double n = static_cast<double>(m.pixels);
    m.mean = sum / n;
    m.variance = std::max(sq / n - m.mean * m.mean, kMinComponentVariance);
    return m;
}

double neg_log_likelihood(double v, const IntensityModel& m) {
    const double d = v - m.mean;
    return 0.5 * std::log(2.0 * std::numbers::pi * m.variance) + d * d / (2.0 * m.variance);
}

}  // namespace

LesionGraph build_lesion_graph(const GrayImage& image, const LesionGraphParams& params) {
    if (!(params.lambda > 0.0) || !(params.sigma > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "lambda and sigma must be positive");
    }
    const int w = image.width();
    const int h = image.height();
    const std::size_t n = image.size();

    LesionGraph g;
    g.width = w;
    g.height = h;
    g.otsu_threshold = otsu_threshold(image);
    const IntensityModel dark = fit(image, g.otsu_threshold, true);
    const IntensityModel bright = fit(image, g.otsu_threshold, false);
    g.lesion = params.invert ? bright : dark;
    g.background = params.invert ? dark : bright;

    // One t-link per pixel carries only the difference of the two costs; the
    // shared part is a constant offset of every cut.
    std::array<double, 256> cost_lesion{};
    std::array<double, 256> cost_background{};
    for (int v = 0; v < 256; ++v) {
        cost_lesion[static_cast<std::size_t>(v)] = neg_log_likelihood(v, g.lesion);
        cost_background[static_cast<std::size_t>(v)] = neg_log_likelihood(v, g.background);
    }

    g.network = FlowNetwork(n);
    g.source_caps.resize(n);
    g.sink_caps.resize(n);
    const auto s = g.network.source();
    const auto t = g.network.sink();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t v = image[i];
        const double cl = cost_lesion[v];
        const double cb = cost_background[v];
        const double base = std::min(cl, cb);
        g.source_caps[i] = cb - base;
        g.sink_caps[i] = cl - base;
        if (g.source_caps[i] > 0.0) g.network.add_arc(s, static_cast<FlowNetwork::Node>(i), g.source_caps[i]);
        if (g.sink_caps[i] > 0.0) g.network.add_arc(static_cast<FlowNetwork::Node>(i), t, g.sink_caps[i]);
    }

    std::array<double, 256> weight{};
    for (int d = 0; d < 256; ++d) {
        weight[static_cast<std::size_t>(d)] =
            params.lambda * std::exp(-double(d) * d / (2.0 * params.sigma * params.sigma));
    }
    auto link = [&](std::size_t a, std::size_t b) {
        const double c = weight[static_cast<std::size_t>(std::abs(int(image[a]) - int(image[b])))];
        if (c <= 0.0) return;
        g.network.add_arc(static_cast<FlowNetwork::Node>(a), static_cast<FlowNetwork::Node>(b), c);
        g.network.add_arc(static_cast<FlowNetwork::Node>(b), static_cast<FlowNetwork::Node>(a), c);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (x + 1 < w) link(i, i + 1);
            if (y + 1 < h) link(i, i + static_cast<std::size_t>(w));
        }
    }
    return g;
}

BinaryMask segment_maxflow(const GrayImage& image, const LesionGraphParams& params) {
    const LesionGraph g = build_lesion_graph(image, params);
    const MaxFlowResult r = max_flow(g.network);
    BinaryMask mask(g.width, g.height);
    for (std::size_t i = 0; i < mask.size(); ++i) mask.set(i, r.source_side[i]);
    return mask;
}

BinaryMask segment_maxflow(const RgbImage& image, const LesionGraphParams& params) {
    return segment_maxflow(to_gray(image), params);
}

}  // namespace dermfair::graphcut
