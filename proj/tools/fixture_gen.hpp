// Deterministic synthetic fixtures: noisy disc images for the graph cut and a
// small ISIC-shaped corpus for end-to-end CLI runs.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dermfair/csv.hpp"
#include "dermfair/image.hpp"
#include "dermfair/imageio.hpp"
#include "dermfair/random.hpp"

namespace dermfair::fixtures {

inline Mask ellipse_mask(int w, int h, double cx, double cy, double rx, double ry) {
    Mask m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = (x - cx) / rx;
            const double dy = (y - cy) / ry;
            m.set(x, y, dx * dx + dy * dy <= 1.0);
        }
    }
    return m;
}

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct DiscFixture {
    GrayImage image;
    BinaryMask truth;
};

// Dark disc on a lighter field with additive Gaussian noise. The centre is
// jittered by up to 20 px per seed.
inline DiscFixture noisy_disc(std::uint64_t seed, int size = 224, double radius = 40.0,
                              double noise_sigma = 15.0, double lesion = 80.0,
                              double background = 170.0) {
    Rng rng(seed);
    const double cx = size / 2.0 + rng.uniform(-20.0, 20.0);
    const double cy = size / 2.0 + rng.uniform(-20.0, 20.0);
    DiscFixture f{GrayImage(size, size), ellipse_mask(size, size, cx, cy, radius, radius)};
    for (std::size_t i = 0; i < f.image.size(); ++i) {
        const double base = f.truth[i] ? lesion : background;
        f.image[i] = clamp_u8(base + noise_sigma * rng.normal());
    }
    return f;
}

// Skin-coloured field with a darker elliptical lesion and mild noise.
inline RgbImage lesion_image(Rgb skin, const Mask& lesion, double darken, double noise_sigma,
                             Rng& rng) {
    RgbImage img(lesion.width(), lesion.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double k = lesion(x, y) ? darken : 1.0;
            const double n = noise_sigma * rng.normal();
            img.set(x, y, {clamp_u8(skin.r * k + n), clamp_u8(skin.g * k + n), clamp_u8(skin.b * k + n)});
        }
    }
    return img;
}

// Skin colours spanning the six phototypes, lightest first.
inline constexpr std::array<Rgb, 6> kToneColours = {{
    {246, 222, 200},
    {234, 196, 164},
    {214, 168, 128},
    {186, 136, 98},
    {142, 98, 68},
    {92, 62, 44},
}};

struct Corpus {
    std::filesystem::path root;
    std::filesystem::path metadata;      // ISIC-style metadata CSV
    std::filesystem::path images;        // real images
    std::filesystem::path masks;         // ground-truth masks, <id>_segmentation.png
    std::filesystem::path synthetic;     // generator output with metadata.csv
    std::filesystem::path predictions;   // image_id,score,label
    std::filesystem::path training_log;  // epoch log
    std::size_t real_count = 0;
    std::size_t synthetic_count = 0;
};

inline constexpr int kCorpusImageSize = 128;

// 48 real images (16 patients x 3) with truth masks, 16 generator outputs of
// which half are off-distribution, a classifier prediction file and a 25-epoch
// training log.
inline Corpus write_corpus(const std::filesystem::path& root, std::uint64_t seed = 7) {
    namespace fs = std::filesystem;
    Corpus c;
    c.root = root;
    c.images = root / "isic" / "images";
    c.masks = root / "isic" / "masks";
    c.metadata = root / "isic" / "metadata.csv";
    c.synthetic = root / "synthetic";
    c.predictions = root / "predictions.csv";
    c.training_log = root / "training_log.csv";
    fs::create_directories(c.images);
    fs::create_directories(c.masks);
    fs::create_directories(c.synthetic);

    static constexpr const char* kDiagnoses[] = {
        "melanoma",       "nevus",           "basal cell carcinoma", "seborrheic keratosis",
        "dermatofibroma", "actinic keratosis", "vascular lesion",    "squamous cell carcinoma"};
    // Tone of each patient: dark phototypes are over-represented so the
    // synthetic screen has a reference sample.
    static constexpr int kPatientTone[16] = {0, 1, 2, 3, 0, 1, 2, 3, 4, 4, 5, 5, 4, 5, 2, 3};
    const int n = kCorpusImageSize;
    Rng rng(seed);

    std::ofstream meta(c.metadata, std::ios::binary);
    csv::write_row(meta, {"isic_id", "patient_id", "diagnosis"});
    for (int p = 0; p < 16; ++p) {
        for (int k = 0; k < 3; ++k) {
            const int idx = 3 * p + k;
            char id[32];
            std::snprintf(id, sizeof id, "ISIC_%07d", 9000 + idx);
            const Mask truth = ellipse_mask(n, n, n / 2.0 + rng.uniform(-12, 12),
                                            n / 2.0 + rng.uniform(-12, 12), rng.uniform(18, 32),
                                            rng.uniform(18, 32));
            const RgbImage img = lesion_image(kToneColours[static_cast<std::size_t>(kPatientTone[p])],
                                              truth, 0.55, 3.0, rng);
            write_png((c.images / (std::string(id) + ".png")).string(), img);
            write_mask_png((c.masks / (std::string(id) + "_segmentation.png")).string(), truth);
            char patient[32];
            std::snprintf(patient, sizeof patient, "IP_%04d", 100 + p);
            csv::write_row(meta, {id, patient, kDiagnoses[(p + k) % 8]});
            ++c.real_count;
        }
    }

    std::ofstream smeta(c.synthetic / "metadata.csv", std::ios::binary);
    csv::write_row(smeta, {"image_id", "prompt", "lesion_superclass", "fitzpatrick", "seed"});
    for (int s = 0; s < 16; ++s) {
        char id[32];
        std::snprintf(id, sizeof id, "GEN_%03d", s);
        const bool melanocytic = s % 2 == 0;
        RgbImage img;
        if (s < 8) {
            const Mask lesion = ellipse_mask(n, n, n / 2.0 + rng.uniform(-12, 12),
                                             n / 2.0 + rng.uniform(-12, 12), rng.uniform(18, 32),
                                             rng.uniform(18, 32));
            img = lesion_image(kToneColours[s % 2 == 0 ? 4 : 5], lesion, 0.55, 3.0, rng);
        } else if (s < 11) {
            img = RgbImage(n, n, Rgb{255, 255, 255});
        } else if (s < 14) {
            img = RgbImage(n, n);
            for (std::size_t i = 0; i < img.pixel_count(); ++i) {
                img.set(i, {clamp_u8(rng.uniform(0, 60)), clamp_u8(rng.uniform(0, 60)),
                            clamp_u8(rng.uniform(180, 255))});
            }
        } else {
            img = RgbImage(n, n);
            for (int y = 0; y < n; ++y) {
                for (int x = 0; x < n; ++x) {
                    const bool on = ((x / 4) + (y / 4)) % 2 == 0;
                    img.set(x, y, on ? Rgb{250, 250, 250} : Rgb{5, 5, 5});
                }
            }
        }
        write_png((c.synthetic / (std::string(id) + ".png")).string(), img);
        csv::write_row(smeta, {id,
                               std::string("dermoscopic image of a ") +
                                   (melanocytic ? "melanocytic" : "non-melanocytic") +
                                   " lesion on dark skin",
                               melanocytic ? "melanocytic" : "non-melanocytic",
                               s % 2 == 0 ? "V" : "VI", std::to_string(1000 + s)});
        ++c.synthetic_count;
    }

    // 140 predictions, 129 on the correct side of 0.5.
    std::ofstream pred(c.predictions, std::ios::binary);
    csv::write_row(pred, {"image_id", "score", "label"});
    for (int i = 0; i < 140; ++i) {
        const int label = i % 2;
        const bool wrong = i % 13 == 5;
        double score = label ? rng.uniform(0.55, 0.99) : rng.uniform(0.01, 0.45);
        if (wrong) score = 1.0 - score;
        char id[32];
        std::snprintf(id, sizeof id, "VAL_%04d", i);
        csv::write_row(pred, {id, csv::format_double(score, 6), std::to_string(label)});
    }

    // Validation AUC rises from 0.856 to 0.948 over 25 epochs.
    std::ofstream log(c.training_log, std::ios::binary);
    csv::write_row(log, {"epoch", "loss_train", "loss_val", "acc_train", "acc_val", "auc_val"});
    for (int e = 1; e <= 25; ++e) {
        const double t = (e - 1) / 24.0;
        csv::write_row(log, {std::to_string(e), csv::format_double(0.62 - 0.45 * t, 6),
                             csv::format_double(0.58 - 0.36 * t, 6),
                             csv::format_double(0.74 + 0.22 * t, 6),
                             csv::format_double(0.80 + 0.1214 * t, 6),
                             csv::format_double(0.856 + 0.092 * std::sqrt(t), 6)});
    }
    return c;
}

}  // namespace dermfair::fixtures
