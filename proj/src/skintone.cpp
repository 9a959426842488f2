#include "dermfair/skintone.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "dermfair/csv.hpp"
#include "dermfair/error.hpp"
#include "dermfair/parallel.hpp"

namespace dermfair::skintone {

double compute_ita(double l_star, double b_star) {
    const double dl = l_star - 50.0;
    if (b_star == 0.0) {
        if (dl == 0.0) {
            throw Error(ErrorKind::DegenerateChroma, "ITA undefined for L* = 50, b* = 0");
        }
        return dl > 0.0 ? 90.0 : -90.0;
    }
    return std::atan(dl / b_star) * 180.0 / std::numbers::pi;
}

Fitzpatrick ita_to_fitzpatrick(double ita, std::size_t skin_pixel_count) {
    if (skin_pixel_count < kMinSkinPixels || !std::isfinite(ita)) return Fitzpatrick::Uncertain;
    if (ita > 55.0) return Fitzpatrick::I;
    if (ita > 40.0) return Fitzpatrick::II;
    if (ita > 27.0) return Fitzpatrick::III;
    if (ita >= 10.0) return Fitzpatrick::IV;
    if (ita >= -30.0) return Fitzpatrick::V;
    return Fitzpatrick::VI;
}

SkinToneResult analyze(const RgbImage& image) {
    SkinToneResult result;
    const SkinMask mask = colorspace::skin_mask(image);
    result.skin_pixel_count = mask.count();
    if (result.skin_pixel_count < kMinSkinPixels) return result;

    const colorspace::LabPixel lab = colorspace::mean_lab(image, mask);
    result.mean_l_star = lab.l_star;
    result.mean_b_star = lab.b_star;
    result.negative_b_star = lab.b_star < 0.0;
    try {
        const double ita = compute_ita(lab);
        result.ita_degrees = ita;
        result.fitzpatrick = ita_to_fitzpatrick(ita, result.skin_pixel_count);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateChroma) throw;
        result.degenerate_chroma = true;
    }
    return result;
}

std::string_view to_string(AuditRow row) noexcept {
    switch (row) {
        case AuditRow::I: return "I";
        case AuditRow::II: return "II";
        case AuditRow::III: return "III";
        case AuditRow::IV: return "IV";
        case AuditRow::V: return "V";
        case AuditRow::VI: return "VI";
        case AuditRow::Uncertain: return "Uncertain";
        case AuditRow::Unreadable: return "Unreadable";
    }
    return "Unreadable";
}

AuditRow audit_row(Fitzpatrick f) noexcept { return static_cast<AuditRow>(static_cast<int>(f)); }

void ToneAudit::add(AuditRow row, Superclass superclass, std::size_t n) noexcept {
    counts_[static_cast<std::size_t>(row)][static_cast<std::size_t>(superclass)] += n;
}

ToneAudit& ToneAudit::merge(const ToneAudit& other) noexcept {
    for (std::size_t r = 0; r < kAuditRows; ++r) {
        for (std::size_t c = 0; c < 2; ++c) counts_[r][c] += other.counts_[r][c];
    }
    return *this;
}

std::size_t ToneAudit::count(AuditRow row, Superclass superclass) const noexcept {
    return counts_[static_cast<std::size_t>(row)][static_cast<std::size_t>(superclass)];
}

std::size_t ToneAudit::row_total(AuditRow row) const noexcept {
    const auto& r = counts_[static_cast<std::size_t>(row)];
    return r[0] + r[1];
}

std::size_t ToneAudit::column_total(Superclass superclass) const noexcept {
    std::size_t n = 0;
    for (const auto& r : counts_) n += r[static_cast<std::size_t>(superclass)];
    return n;
}

std::size_t ToneAudit::total() const noexcept {
    return column_total(Superclass::Melanocytic) + column_total(Superclass::NonMelanocytic);
}

double ToneAudit::dark_share() const noexcept {
    const std::size_t n = total();
    if (n == 0) return 0.0;
    return static_cast<double>(row_total(AuditRow::V) + row_total(AuditRow::VI)) /
           static_cast<double>(n);
}

AuditReport audit_dataset(const Manifest& manifest, const ImageLoader& loader,
                          const AuditOptions& options) {
    AuditReport report;
    report.entries.resize(manifest.size());
    parallel_for(manifest.size(), options.threads, [&](std::size_t i) {
        const ImageRecord& rec = manifest.records[i];
        ImageToneEntry& entry = report.entries[i];
        entry.image_id = rec.image_id;
        entry.superclass = rec.superclass;
        try {
            entry.result = analyze(loader(rec));
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
    });
    // Sequential reduction keeps the table independent of scheduling.
    for (const auto& e : report.entries) {
        const AuditRow row = e.result ? audit_row(e.result->fitzpatrick) : AuditRow::Unreadable;
        report.audit.add(row, e.superclass);
    }
    return report;
}

void annotate(Manifest& manifest, const AuditReport& report) {
    for (std::size_t i = 0; i < manifest.records.size() && i < report.entries.size(); ++i) {
        auto& rec = manifest.records[i];
        const auto& e = report.entries[i];
        if (rec.image_id != e.image_id) {
            throw Error(ErrorKind::InvalidArgument, "audit report does not match manifest order");
        }
        if (e.result) {
            rec.ita_degrees = e.result->ita_degrees;
            rec.fitzpatrick = e.result->fitzpatrick;
        } else {
            rec.ita_degrees.reset();
            rec.fitzpatrick = Fitzpatrick::Uncertain;
        }
    }
}

namespace {

constexpr AuditRow kRowOrder[] = {AuditRow::I,   AuditRow::II, AuditRow::III,
                                  AuditRow::IV,  AuditRow::V,  AuditRow::VI,
                                  AuditRow::Uncertain, AuditRow::Unreadable};

constexpr const char* kBandNote =
    "bands: I (55,90] II (40,55] III (27,40] IV [10,27] V [-30,10) VI [-90,-30); "
    "Uncertain = fewer than 500 skin pixels or undefined ITA";
constexpr const char* kMaskNote =
    "skin mask: full-range BT.601 YCbCr, Cb in [77,173], Cr in [133,255] inclusive";

}  // namespace

void write_audit_csv(const AuditReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << "# " << kBandNote << '\n' << "# " << kMaskNote << '\n';
    out << "# dark_share_V_VI," << csv::format_double(report.audit.dark_share(), 8) << '\n';
    csv::write_row(out, {"fitzpatrick", "Melanocytic", "NonMelanocytic", "Total"});
    const auto& a = report.audit;
    for (AuditRow row : kRowOrder) {
        csv::write_row(out, {std::string(to_string(row)),
                             std::to_string(a.count(row, Superclass::Melanocytic)),
                             std::to_string(a.count(row, Superclass::NonMelanocytic)),
                             std::to_string(a.row_total(row))});
    }
    csv::write_row(out, {"Total", std::to_string(a.column_total(Superclass::Melanocytic)),
                         std::to_string(a.column_total(Superclass::NonMelanocytic)),
                         std::to_string(a.total())});
}

void write_audit_json(const AuditReport& report, const std::string& path) {
    using nlohmann::ordered_json;
    const auto& a = report.audit;
    ordered_json j;
    j["bands"] = kBandNote;
    j["skin_mask"] = kMaskNote;
    j["min_skin_pixels"] = kMinSkinPixels;
    ordered_json table = ordered_json::object();
    for (AuditRow row : kRowOrder) {
        table[std::string(to_string(row))] = {
            {"Melanocytic", a.count(row, Superclass::Melanocytic)},
            {"NonMelanocytic", a.count(row, Superclass::NonMelanocytic)},
            {"Total", a.row_total(row)}};
    }
    j["table"] = std::move(table);
    j["totals"] = {{"Melanocytic", a.column_total(Superclass::Melanocytic)},
                   {"NonMelanocytic", a.column_total(Superclass::NonMelanocytic)},
                   {"Total", a.total()}};
    j["dark_share_V_VI"] = a.dark_share();
    j["dark_count_V_VI"] = a.row_total(AuditRow::V) + a.row_total(AuditRow::VI);

    ordered_json images = ordered_json::array();
    ordered_json flagged = ordered_json::array();
    for (const auto& e : report.entries) {
        ordered_json im;
        im["image_id"] = e.image_id;
        im["superclass"] = to_string(e.superclass);
        if (e.result) {
            const auto& r = *e.result;
            im["ita_degrees"] = r.ita_degrees ? ordered_json(*r.ita_degrees) : ordered_json(nullptr);
            im["fitzpatrick"] = to_string(r.fitzpatrick);
            im["skin_pixel_count"] = r.skin_pixel_count;
            im["mean_l_star"] = r.mean_l_star;
            im["mean_b_star"] = r.mean_b_star;
            if (r.negative_b_star) flagged.push_back({{"image_id", e.image_id}, {"flag", "negative_b_star"}});
            if (r.degenerate_chroma) flagged.push_back({{"image_id", e.image_id}, {"flag", "degenerate_chroma"}});
        } else {
            im["fitzpatrick"] = "Unreadable";
            im["error"] = e.error;
        }
        images.push_back(std::move(im));
    }
    j["flagged"] = std::move(flagged);
    j["images"] = std::move(images);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace dermfair::skintone
