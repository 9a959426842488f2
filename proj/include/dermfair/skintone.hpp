#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dermfair/colorspace.hpp"
#include "dermfair/dataset.hpp"
#include "dermfair/fitzpatrick.hpp"
#include "dermfair/image.hpp"

namespace dermfair::skintone {

// Images with fewer skin pixels than this are not classified.
inline constexpr std::size_t kMinSkinPixels = 500;

// Individual Typology Angle in degrees: atan((L* - 50) / b*) with the
// principal-value arctangent. b* = 0 returns the +/-90 limit; the 0/0 case
// (b* = 0, L* = 50) throws DegenerateChroma.
double compute_ita(double l_star, double b_star);
inline double compute_ita(const colorspace::LabPixel& lab) {
    return compute_ita(lab.l_star, lab.b_star);
}

// Half-open bands without gaps:
//   I (55, 90]  II (40, 55]  III (27, 40]  IV [10, 27]  V [-30, 10)  VI [-90, -30)
Fitzpatrick ita_to_fitzpatrick(double ita_degrees, std::size_t skin_pixel_count);

struct SkinToneResult {
    std::optional<double> ita_degrees;
    Fitzpatrick fitzpatrick = Fitzpatrick::Uncertain;
    std::size_t skin_pixel_count = 0;
    double mean_l_star = 0.0;
    double mean_b_star = 0.0;
    // Set when the masked mean b* is negative, where the sign of the
    // principal-value ITA is ambiguous.
    bool negative_b_star = false;
    bool degenerate_chroma = false;
};

SkinToneResult analyze(const RgbImage& image);

// Row order of the audit table.
enum class AuditRow { I, II, III, IV, V, VI, Uncertain, Unreadable };
inline constexpr std::size_t kAuditRows = 8;
std::string_view to_string(AuditRow row) noexcept;
AuditRow audit_row(Fitzpatrick f) noexcept;

class ToneAudit {
public:
    void add(AuditRow row, Superclass superclass, std::size_t n = 1) noexcept;
    ToneAudit& merge(const ToneAudit& other) noexcept;

    std::size_t count(AuditRow row, Superclass superclass) const noexcept;
    std::size_t row_total(AuditRow row) const noexcept;
    std::size_t column_total(Superclass superclass) const noexcept;
    std::size_t total() const noexcept;
    // (V + VI) / total; 0 for an empty audit.
    double dark_share() const noexcept;

    friend bool operator==(const ToneAudit&, const ToneAudit&) = default;

private:
    std::array<std::array<std::size_t, 2>, kAuditRows> counts_{};
};

struct ImageToneEntry {
    std::string image_id;
    Superclass superclass = Superclass::NonMelanocytic;
    std::optional<SkinToneResult> result;  // empty when unreadable
    std::string error;
};

struct AuditReport {
    ToneAudit audit;
    std::vector<ImageToneEntry> entries;  // manifest order
};

using ImageLoader = std::function<RgbImage(const ImageRecord&)>;

struct AuditOptions {
    unsigned threads = 0;  // 0 = hardware concurrency
};

AuditReport audit_dataset(const Manifest& manifest, const ImageLoader& loader,
                          const AuditOptions& options = {});

// Copies ITA and Fitzpatrick results into the manifest records.
void annotate(Manifest& manifest, const AuditReport& report);

void write_audit_csv(const AuditReport& report, const std::string& path);
void write_audit_json(const AuditReport& report, const std::string& path);

}  // namespace dermfair::skintone
