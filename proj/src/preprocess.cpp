#include "dermfair/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dermfair/colorspace.hpp"
#include "dermfair/config.hpp"
#include "dermfair/error.hpp"

namespace dermfair::preprocess {

namespace {

std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

void PreprocessConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw Error(ErrorKind::InvalidArgument, what);
    };
    require(target_size > 0 && eval_resize > 0, "sizes must be positive");
    require(target_size <= eval_resize, "target_size must not exceed eval_resize");
    require(gamma > 0.0 && gamma_min > 0.0 && gamma_max >= gamma_min, "bad gamma settings");
    require(clahe_clip > 0.0 && clahe_tiles_x > 0 && clahe_tiles_y > 0, "bad CLAHE settings");
    require(nlm_strength > 0.0, "nlm_strength must be positive");
    require(nlm_patch > 0 && nlm_patch % 2 == 1, "nlm_patch must be odd");
    require(nlm_search > 0 && nlm_search % 2 == 1, "nlm_search must be odd");
    require(hair_kernel > 0 && hair_kernel % 2 == 1, "hair_kernel must be odd");
    require(hair_threshold >= 0, "hair_threshold must be >= 0");
    require(max_artifact_fraction > 0.0 && max_artifact_fraction <= 1.0,
            "max_artifact_fraction must be in (0, 1]");
}

PreprocessConfig read_config(const std::string& path, PreprocessConfig cfg) {
    for (const auto& kv : config::read_file(path)) {
        const std::string& k = kv.first;
        const auto as_int = [&] { return static_cast<int>(config::to_int(kv)); };
        if (k == "target_size") cfg.target_size = as_int();
        else if (k == "eval_resize") cfg.eval_resize = as_int();
        else if (k == "gamma_mode") {
            if (kv.second == "fixed") cfg.gamma_mode = GammaMode::Fixed;
            else if (kv.second == "adaptive") cfg.gamma_mode = GammaMode::Adaptive;
            else throw Error(ErrorKind::Parse, "gamma_mode must be fixed or adaptive");
        } else if (k == "gamma") cfg.gamma = config::to_double(kv);
        else if (k == "gamma_min") cfg.gamma_min = config::to_double(kv);
        else if (k == "gamma_max") cfg.gamma_max = config::to_double(kv);
        else if (k == "clahe_clip") cfg.clahe_clip = config::to_double(kv);
        else if (k == "clahe_tiles") cfg.clahe_tiles_x = cfg.clahe_tiles_y = as_int();
        else if (k == "clahe_tiles_x") cfg.clahe_tiles_x = as_int();
        else if (k == "clahe_tiles_y") cfg.clahe_tiles_y = as_int();
        else if (k == "nlm_strength") cfg.nlm_strength = config::to_double(kv);
        else if (k == "nlm_patch") cfg.nlm_patch = as_int();
        else if (k == "nlm_search") cfg.nlm_search = as_int();
        else if (k == "hair_kernel") cfg.hair_kernel = as_int();
        else if (k == "hair_threshold") cfg.hair_threshold = as_int();
        else if (k == "max_artifact_fraction") cfg.max_artifact_fraction = config::to_double(kv);
        else if (k == "seed") cfg.seed = static_cast<std::uint64_t>(config::to_int(kv));
        else if (k == "augment_order") {
            if (kv.second == "after") cfg.augment_order = AugmentOrder::AfterPreprocess;
            else if (kv.second == "before") cfg.augment_order = AugmentOrder::BeforePreprocess;
            else throw Error(ErrorKind::Parse, "augment_order must be before or after");
        } else {
            throw Error(ErrorKind::Parse, "unknown preprocess key '" + k + "'");
        }
    }
    cfg.validate();
    return cfg;
}

// --- normalization -----------------------------------------------------------

NormalizedImage normalize(const RgbImage& image) {
    NormalizedImage out;
    out.width = image.width();
    out.height = image.height();
    for (auto& c : out.channels) c.resize(image.pixel_count());
    const auto bytes = image.bytes();
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            out.channels[c][i] = static_cast<float>(
                (bytes[3 * i + c] / 255.0 - kImageNetMean[c]) / kImageNetStd[c]);
        }
    }
    return out;
}

RgbImage denormalize(const NormalizedImage& image) {
    RgbImage out(image.width, image.height);
    auto bytes = out.bytes();
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = (image.channels[c][i] * kImageNetStd[c] + kImageNetMean[c]) * 255.0;
            bytes[3 * i + c] = to_u8(v);
        }
    }
    return out;
}

// --- non-local means -----------------------------------------------------------

RgbImage nlm_denoise(const RgbImage& image, double h, int patch, int search) {
    if (!(h > 0.0) || patch < 1 || patch % 2 == 0 || search < 1 || search % 2 == 0) {
        throw Error(ErrorKind::InvalidArgument, "bad NLM parameters");
    }
    const int w = image.width();
    const int ht = image.height();
    const int pr = patch / 2;
    const int sr = search / 2;
    const int pad = pr + sr;
    const int pw = w + 2 * pad;
    const int ph = ht + 2 * pad;

    // Reflect-padded float copy.
    auto reflect = [](int i, int n) {
        if (n == 1) return 0;
        const int period = 2 * (n - 1);
        i %= period;
        if (i < 0) i += period;
        return i < n ? i : period - i;
    };
    std::vector<float> src(static_cast<std::size_t>(pw) * ph * 3);
    const auto bytes = image.bytes();
    for (int y = 0; y < ph; ++y) {
        const int sy = reflect(y - pad, ht);
        for (int x = 0; x < pw; ++x) {
            const int sx = reflect(x - pad, w);
            const std::size_t s = 3 * (static_cast<std::size_t>(sy) * w + sx);
            const std::size_t d = 3 * (static_cast<std::size_t>(y) * pw + x);
            src[d] = bytes[s];
            src[d + 1] = bytes[s + 1];
            src[d + 2] = bytes[s + 2];
        }
    }

    // Patch sums are needed for every pixel of the image; the difference image
    // covers the image plus the patch radius.
    const int rw = w + 2 * pr;
    const int rh = ht + 2 * pr;
    std::vector<double> diff(static_cast<std::size_t>(rw + 1) * (rh + 1), 0.0);
    std::vector<double> wsum(static_cast<std::size_t>(w) * ht, 0.0);
    std::vector<double> acc(static_cast<std::size_t>(w) * ht * 3, 0.0);
    const double norm = 1.0 / (3.0 * patch * patch);
    const double inv_h2 = 1.0 / (h * h);

    for (int dy = -sr; dy <= sr; ++dy) {
        for (int dx = -sr; dx <= sr; ++dx) {
            // Integral image of squared colour differences at this offset.
            for (int y = 0; y < rh; ++y) {
                double row = 0.0;
                const int py = y + sr;  // padded coordinates of region row y
                for (int x = 0; x < rw; ++x) {
                    const int px = x + sr;
                    const float* a = &src[3 * (static_cast<std::size_t>(py) * pw + px)];
                    const float* b = &src[3 * (static_cast<std::size_t>(py + dy) * pw + px + dx)];
                    const double d0 = a[0] - b[0];
                    const double d1 = a[1] - b[1];
                    const double d2 = a[2] - b[2];
                    row += d0 * d0 + d1 * d1 + d2 * d2;
                    const std::size_t at = static_cast<std::size_t>(y + 1) * (rw + 1) + x + 1;
                    diff[at] = diff[at - (rw + 1)] + row;
                }
            }
            for (int y = 0; y < ht; ++y) {
                for (int x = 0; x < w; ++x) {
                    const std::size_t top = static_cast<std::size_t>(y) * (rw + 1);
                    const std::size_t bot = static_cast<std::size_t>(y + patch) * (rw + 1);
                    const double ssd = diff[bot + x + patch] - diff[top + x + patch] -
                                       diff[bot + x] + diff[top + x];
                    const double weight = std::exp(-std::max(ssd, 0.0) * norm * inv_h2);
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    wsum[i] += weight;
                    const float* q =
                        &src[3 * (static_cast<std::size_t>(y + pad + dy) * pw + x + pad + dx)];
                    acc[3 * i] += weight * q[0];
                    acc[3 * i + 1] += weight * q[1];
                    acc[3 * i + 2] += weight * q[2];
                }
            }
        }
    }

    RgbImage out(w, ht);
    auto ob = out.bytes();
    for (std::size_t i = 0; i < wsum.size(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) ob[3 * i + c] = to_u8(acc[3 * i + c] / wsum[i]);
    }
    return out;
}

// --- gamma -----------------------------------------------------------------------

double choose_gamma(const RgbImage& image, const PreprocessConfig& cfg) {
    if (cfg.gamma_mode == GammaMode::Fixed) return cfg.gamma;
    double sum = 0.0;
    const auto bytes = image.bytes();
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        sum += 0.299 * bytes[i] + 0.587 * bytes[i + 1] + 0.114 * bytes[i + 2];
    }
    const double mean = sum / static_cast<double>(image.pixel_count()) / 255.0;
    if (mean <= 0.0 || mean >= 1.0) return 1.0;
    return std::clamp(std::log(0.5) / std::log(mean), cfg.gamma_min, cfg.gamma_max);
}

RgbImage apply_gamma(const RgbImage& image, double gamma) {
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) {
        lut[static_cast<std::size_t>(v)] = to_u8(255.0 * std::pow(v / 255.0, gamma));
    }
    RgbImage out = image;
    for (auto& b : out.bytes()) b = lut[b];
    return out;
}

// --- CLAHE -----------------------------------------------------------------------

namespace {

struct TileGrid {
    std::vector<int> x_start;  // tiles_x + 1 boundaries
    std::vector<int> y_start;
};

TileGrid make_grid(int w, int h, int tx, int ty) {
    TileGrid g;
    for (int i = 0; i <= tx; ++i) g.x_start.push_back(static_cast<int>(static_cast<long long>(i) * w / tx));
    for (int j = 0; j <= ty; ++j) g.y_start.push_back(static_cast<int>(static_cast<long long>(j) * h / ty));
    return g;
}

std::array<double, 256> tile_lut(const GrayImage& image, int x0, int x1, int y0, int y1,
                                 double clip_limit) {
    std::array<double, 256> lut{};
    std::array<long long, 256> hist{};
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) ++hist[image(x, y)];
    }
    const long long area = static_cast<long long>(x1 - x0) * (y1 - y0);
    const auto occupied = std::count_if(hist.begin(), hist.end(), [](long long c) { return c > 0; });
    if (area == 0 || occupied <= 1) {
        for (int v = 0; v < 256; ++v) lut[static_cast<std::size_t>(v)] = v;
        return lut;
    }
    const long long limit =
        std::max<long long>(1, static_cast<long long>(clip_limit * static_cast<double>(area) / 256.0));
    long long excess = 0;
    for (auto& c : hist) {
        if (c > limit) {
            excess += c - limit;
            c = limit;
        }
    }
    const long long share = excess / 256;
    long long residual = excess % 256;
    for (auto& c : hist) c += share;
    if (residual > 0) {
        const long long step = std::max<long long>(256 / residual, 1);
        for (long long i = 0; i < 256 && residual > 0; i += step, --residual) ++hist[static_cast<std::size_t>(i)];
    }
    long long cdf = 0;
    for (int v = 0; v < 256; ++v) {
        cdf += hist[static_cast<std::size_t>(v)];
        lut[static_cast<std::size_t>(v)] =
            std::min(255.0, std::round(static_cast<double>(cdf) * 255.0 / static_cast<double>(area)));
    }
    return lut;
}

// Bilinearly interpolated tile mapping, unrounded.
Plane<double> clahe_map(const GrayImage& image, double clip_limit, int tiles_x, int tiles_y) {
    if (!(clip_limit > 0.0) || tiles_x < 1 || tiles_y < 1) {
        throw Error(ErrorKind::InvalidArgument, "bad CLAHE parameters");
    }
    const int w = image.width();
    const int h = image.height();
    tiles_x = std::min(tiles_x, w);
    tiles_y = std::min(tiles_y, h);
    const TileGrid grid = make_grid(w, h, tiles_x, tiles_y);
    std::vector<std::array<double, 256>> luts;
    luts.reserve(static_cast<std::size_t>(tiles_x) * tiles_y);
    std::vector<double> cx;
    std::vector<double> cy;
    for (int j = 0; j < tiles_y; ++j) {
        cy.push_back((grid.y_start[j] + grid.y_start[j + 1] - 1) / 2.0);
        for (int i = 0; i < tiles_x; ++i) {
            luts.push_back(tile_lut(image, grid.x_start[i], grid.x_start[i + 1], grid.y_start[j],
                                    grid.y_start[j + 1], clip_limit));
        }
    }
    for (int i = 0; i < tiles_x; ++i) cx.push_back((grid.x_start[i] + grid.x_start[i + 1] - 1) / 2.0);

    auto locate = [](const std::vector<double>& centres, double p, int& lo, int& hi, double& t) {
        const int n = static_cast<int>(centres.size());
        if (p <= centres.front()) {
            lo = hi = 0;
            t = 0.0;
            return;
        }
        if (p >= centres.back()) {
            lo = hi = n - 1;
            t = 0.0;
            return;
        }
        lo = 0;
        while (centres[static_cast<std::size_t>(lo) + 1] < p) ++lo;
        hi = lo + 1;
        t = (p - centres[static_cast<std::size_t>(lo)]) /
            (centres[static_cast<std::size_t>(hi)] - centres[static_cast<std::size_t>(lo)]);
    };

    Plane<double> out(w, h);
    for (int y = 0; y < h; ++y) {
        int j0 = 0, j1 = 0;
        double ty = 0.0;
        locate(cy, y, j0, j1, ty);
        for (int x = 0; x < w; ++x) {
            int i0 = 0, i1 = 0;
            double tx = 0.0;
            locate(cx, x, i0, i1, tx);
            const std::uint8_t v = image(x, y);
            const auto lut = [&](int i, int j) {
                return luts[static_cast<std::size_t>(j) * tiles_x + i][v];
            };
            const double top = lut(i0, j0) * (1.0 - tx) + lut(i1, j0) * tx;
            const double bot = lut(i0, j1) * (1.0 - tx) + lut(i1, j1) * tx;
            out(x, y) = top * (1.0 - ty) + bot * ty;
        }
    }
    return out;
}

}  // namespace

GrayImage clahe(const GrayImage& image, double clip_limit, int tiles_x, int tiles_y) {
    const Plane<double> mapped = clahe_map(image, clip_limit, tiles_x, tiles_y);
    GrayImage out(image.width(), image.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_u8(mapped[i]);
    return out;
}

RgbImage clahe_luminance(const RgbImage& image, double clip_limit, int tiles_x, int tiles_y) {
    const std::size_t n = image.pixel_count();
    std::vector<colorspace::LabPixel> lab(n);
    GrayImage lightness(image.width(), image.height());
    for (std::size_t i = 0; i < n; ++i) {
        lab[i] = colorspace::srgb_to_lab(image.at(i));
        lightness[i] = to_u8(lab[i].l_star * 255.0 / 100.0);
    }
    const Plane<double> mapped = clahe_map(lightness, clip_limit, tiles_x, tiles_y);
    RgbImage out(image.width(), image.height());
    for (std::size_t i = 0; i < n; ++i) {
        const double shift = mapped[i] - lightness[i];
        if (shift == 0.0) {
            out.set(i, image.at(i));
            continue;
        }
        colorspace::LabPixel p = lab[i];
        p.l_star = std::clamp(p.l_star + shift * 100.0 / 255.0, 0.0, 100.0);
        double r = 0.0, g = 0.0, b = 0.0;
        colorspace::lab_to_linear(p, r, g, b);
        out.set(i, {to_u8(255.0 * colorspace::linear_to_srgb(r)),
                    to_u8(255.0 * colorspace::linear_to_srgb(g)),
                    to_u8(255.0 * colorspace::linear_to_srgb(b))});
    }
    return out;
}

// --- hair suppression ---------------------------------------------------------------

namespace {

// Cross-shaped morphology: the structuring element is the horizontal and
// vertical segments of half-length r through the centre. Out-of-image samples
// are ignored.
template <typename Pick>
GrayImage cross_filter(const GrayImage& in, int r, Pick pick) {
    const int w = in.width();
    const int h = in.height();
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = in(x, y);
            for (int k = std::max(0, x - r); k <= std::min(w - 1, x + r); ++k) v = pick(v, in(k, y));
            for (int k = std::max(0, y - r); k <= std::min(h - 1, y + r); ++k) v = pick(v, in(x, k));
            out(x, y) = v;
        }
    }
    return out;
}

}  // namespace

GrayImage black_hat(const GrayImage& image, int kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw Error(ErrorKind::InvalidArgument, "kernel must be odd");
    const int r = kernel / 2;
    const auto max_of = [](std::uint8_t a, std::uint8_t b) { return std::max(a, b); };
    const auto min_of = [](std::uint8_t a, std::uint8_t b) { return std::min(a, b); };
    const GrayImage closed = cross_filter(cross_filter(image, r, max_of), r, min_of);
    GrayImage out(image.width(), image.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(std::max(0, int(closed[i]) - int(image[i])));
    }
    return out;
}

HairResult suppress_hair(const RgbImage& image, int kernel, int threshold, double max_fraction) {
    const GrayImage response = black_hat(to_gray(image), kernel);
    const int w = image.width();
    const int h = image.height();
    HairResult result{image, BinaryMask(w, h), 0.0};
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < response.size(); ++i) {
        if (response[i] > threshold) {
            result.flagged.set(i, true);
            ++flagged;
        }
    }
    result.flagged_fraction = static_cast<double>(flagged) / static_cast<double>(response.size());
    if (result.flagged_fraction > max_fraction) {
        throw Error(ErrorKind::ArtifactRejection,
                    "persistent artefacts: " + std::to_string(result.flagged_fraction * 100.0) +
                        "% of pixels flagged");
    }
    if (flagged == 0) return result;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!result.flagged(x, y)) continue;
            for (int r = std::max(1, kernel / 2);; r *= 2) {
                double sw = 0.0;
                std::array<double, 3> acc{};
                for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
                    for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                        if (result.flagged(xx, yy)) continue;
                        const double d = std::hypot(double(xx - x), double(yy - y));
                        if (d > r) continue;
                        const double wt = 1.0 / d;
                        const Rgb p = image.at(xx, yy);
                        acc[0] += wt * p.r;
                        acc[1] += wt * p.g;
                        acc[2] += wt * p.b;
                        sw += wt;
                    }
                }
                if (sw > 0.0) {
                    result.image.set(x, y, {to_u8(acc[0] / sw), to_u8(acc[1] / sw), to_u8(acc[2] / sw)});
                    break;
                }
                if (r > std::max(w, h)) break;  // unreachable: flagged share is bounded
            }
        }
    }
    return result;
}

// --- pipeline -----------------------------------------------------------------------

PreprocessResult preprocess_full(const RgbImage& image, const PreprocessConfig& cfg) {
    cfg.validate();
    PreprocessResult r;
    RgbImage work = resize_bilinear(image, cfg.target_size, cfg.target_size);
    work = nlm_denoise(work, cfg.nlm_strength, cfg.nlm_patch, cfg.nlm_search);
    r.gamma = choose_gamma(work, cfg);
    work = apply_gamma(work, r.gamma);
    work = clahe_luminance(work, cfg.clahe_clip, cfg.clahe_tiles_x, cfg.clahe_tiles_y);
    HairResult hair = suppress_hair(work, cfg.hair_kernel, cfg.hair_threshold, cfg.max_artifact_fraction);
    r.hair_fraction = hair.flagged_fraction;
    r.processed = std::move(hair.image);
    r.normalized = normalize(r.processed);
    return r;
}

NormalizedImage preprocess(const RgbImage& image, const PreprocessConfig& cfg) {
    return preprocess_full(image, cfg).normalized;
}

// --- augmentation -------------------------------------------------------------------

AugmentParams draw_augment(int width, int height, Rng& rng) {
    AugmentParams p;
    const double area = static_cast<double>(width) * height;
    const double log_lo = std::log(3.0 / 4.0);
    const double log_hi = std::log(4.0 / 3.0);
    bool found = false;
    for (int attempt = 0; attempt < 10 && !found; ++attempt) {
        const double target = area * rng.uniform(0.08, 1.0);
        const double aspect = std::exp(rng.uniform(log_lo, log_hi));
        const int w = static_cast<int>(std::lround(std::sqrt(target * aspect)));
        const int h = static_cast<int>(std::lround(std::sqrt(target / aspect)));
        if (w > 0 && h > 0 && w <= width && h <= height) {
            p.crop_w = w;
            p.crop_h = h;
            p.crop_x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - w + 1)));
            p.crop_y = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - h + 1)));
            found = true;
        }
    }
    if (!found) {
        const double ratio = static_cast<double>(width) / height;
        int w = width;
        int h = height;
        if (ratio < 3.0 / 4.0) {
            h = static_cast<int>(std::lround(w / (3.0 / 4.0)));
        } else if (ratio > 4.0 / 3.0) {
            w = static_cast<int>(std::lround(h * (4.0 / 3.0)));
        }
        p.crop_w = std::clamp(w, 1, width);
        p.crop_h = std::clamp(h, 1, height);
        p.crop_x = (width - p.crop_w) / 2;
        p.crop_y = (height - p.crop_h) / 2;
    }
    p.hflip = rng.coin();
    p.vflip = rng.coin();
    p.brightness = rng.uniform(0.8, 1.2);
    p.contrast = rng.uniform(0.8, 1.2);
    p.saturation = rng.uniform(0.8, 1.2);
    p.hue = rng.uniform(-0.1, 0.1);
    return p;
}

namespace {

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    v = mx;
    s = mx > 0.0 ? d / mx : 0.0;
    if (d == 0.0) {
        h = 0.0;
    } else if (mx == r) {
        h = std::fmod((g - b) / d, 6.0);
    } else if (mx == g) {
        h = (b - r) / d + 2.0;
    } else {
        h = (r - g) / d + 4.0;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = h * 6.0;
    const int sector = static_cast<int>(std::floor(hh)) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

}  // namespace

RgbImage apply_augment(const RgbImage& image, const AugmentParams& p, int out_size) {
    RgbImage img = resize_bilinear(crop(image, p.crop_x, p.crop_y, p.crop_w, p.crop_h), out_size, out_size);
    const int n = out_size;
    if (p.hflip || p.vflip) {
        RgbImage flipped(n, n);
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                flipped.set(x, y, img.at(p.hflip ? n - 1 - x : x, p.vflip ? n - 1 - y : y));
            }
        }
        img = std::move(flipped);
    }
    const bool jitter = p.brightness != 1.0 || p.contrast != 1.0 || p.saturation != 1.0 || p.hue != 0.0;
    if (!jitter) return img;

    const std::size_t count = img.pixel_count();
    std::vector<double> px(3 * count);
    const auto bytes = img.bytes();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = bytes[i] / 255.0;
    const auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };

    if (p.brightness != 1.0) {
        for (double& v : px) v = clamp01(v * p.brightness);
    }
    if (p.contrast != 1.0) {
        double mean = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            mean += 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
        }
        mean /= static_cast<double>(count);
        for (double& v : px) v = clamp01((v - mean) * p.contrast + mean);
    }
    if (p.saturation != 1.0) {
        for (std::size_t i = 0; i < count; ++i) {
            double* c = &px[3 * i];
            const double g = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
            for (int k = 0; k < 3; ++k) c[k] = clamp01((c[k] - g) * p.saturation + g);
        }
    }
    if (p.hue != 0.0) {
        for (std::size_t i = 0; i < count; ++i) {
            double* c = &px[3 * i];
            double h = 0.0, s = 0.0, v = 0.0;
            rgb_to_hsv(c[0], c[1], c[2], h, s, v);
            h = std::fmod(h + p.hue + 1.0, 1.0);
            hsv_to_rgb(h, s, v, c[0], c[1], c[2]);
        }
    }
    RgbImage out(n, n);
    auto ob = out.bytes();
    for (std::size_t i = 0; i < px.size(); ++i) ob[i] = to_u8(px[i] * 255.0);
    return out;
}

RgbImage train_augment(const RgbImage& image, Rng& rng, int out_size) {
    return apply_augment(image, draw_augment(image.width(), image.height(), rng), out_size);
}

Rng image_rng(std::uint64_t seed, std::string_view image_id) {
    return Rng(mix_seed(seed, stable_hash(image_id)));
}

NormalizedImage train_sample(const RgbImage& image, const PreprocessConfig& cfg, Rng& rng) {
    if (cfg.augment_order == AugmentOrder::AfterPreprocess) {
        const RgbImage processed = preprocess_full(image, cfg).processed;
        return normalize(train_augment(processed, rng, cfg.target_size));
    }
    return preprocess(train_augment(image, rng, cfg.target_size), cfg);
}

NormalizedImage eval_transform(const RgbImage& image, const PreprocessConfig& cfg) {
    const RgbImage resized = resize_bilinear(image, cfg.eval_resize, cfg.eval_resize);
    const int off = (cfg.eval_resize - cfg.target_size) / 2;
    return normalize(crop(resized, off, off, cfg.target_size, cfg.target_size));
}

}  // namespace dermfair::preprocess
