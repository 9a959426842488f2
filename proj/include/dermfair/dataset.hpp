#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dermfair/fitzpatrick.hpp"

namespace dermfair {

enum class Superclass { Melanocytic, NonMelanocytic };
enum class Source { Real, Synthetic };
enum class Split { Train, Val, Test };

std::string_view to_string(Superclass s) noexcept;
std::string_view to_string(Source s) noexcept;
std::string_view to_string(Split s) noexcept;
std::optional<Superclass> parse_superclass(std::string_view s) noexcept;
std::optional<Source> parse_source(std::string_view s) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;

// Reserved patient-id prefix for synthetic records; each synthetic image is
// its own pseudo-patient.
inline constexpr std::string_view kSyntheticPatientPrefix = "SYNTH-";

struct ImageRecord {
    std::string image_id;
    std::string path;
    std::string diagnosis;
    Superclass superclass = Superclass::NonMelanocytic;
    std::string patient_id;
    Source source = Source::Real;
    std::optional<double> ita_degrees;
    std::optional<Fitzpatrick> fitzpatrick;
    std::optional<Split> split;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Manifest {
    std::vector<std::string> notes;  // free-form header lines
    std::vector<ImageRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    const ImageRecord* find(std::string_view image_id) const noexcept;
    // Throws DuplicateId when two records share an image_id.
    void check_unique_ids() const;
};

inline constexpr std::string_view kManifestVersion = "dermfair-manifest v1";

Manifest read_manifest(const std::string& path);
void write_manifest_csv(const Manifest& manifest, const std::string& path);
void write_manifest_json(const Manifest& manifest, const std::string& path);
std::string manifest_to_csv(const Manifest& manifest);

// --- ISIC ingestion --------------------------------------------------------

// Superclass for an ISIC diagnosis label (full names or HAM10000 codes).
std::optional<Superclass> superclass_for_diagnosis(std::string_view diagnosis);

struct IngestIssue {
    std::size_t row = 0;  // 1-based data row
    std::string image_id;
    std::string kind;     // UnknownDiagnosis | MissingFile
    std::string detail;
};

struct IngestResult {
    Manifest manifest;
    std::vector<IngestIssue> issues;
};

// Reads an ISIC-style metadata CSV. Recognised columns (case-insensitive):
// image id (image_id | isic_id | image), diagnosis (diagnosis | dx |
// diagnosis_1), patient (patient_id | patient) and optional path. Records with
// unknown diagnoses are dropped and listed; missing image files are listed but
// kept.
IngestResult ingest_isic(const std::string& metadata_file, const std::string& image_root);
IngestResult ingest_isic_table(std::string_view csv_text, const std::string& image_root,
                               bool check_files);

// --- Synthetic integration -------------------------------------------------

struct SyntheticCandidate {
    std::string image_id;
    std::string path;
    Superclass superclass = Superclass::Melanocytic;
    std::optional<Fitzpatrick> fitzpatrick;
    std::string prompt;
};

struct IntegrationResult {
    Manifest manifest;
    std::size_t synthetic_total = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

// Appends accepted candidates as Synthetic records. `accepted_by_id` maps each
// candidate id to its validation verdict; a candidate without a verdict raises
// UnvalidatedImage, an id colliding with an existing record raises DuplicateId.
IntegrationResult integrate_synthetic(
    const Manifest& real, const std::vector<SyntheticCandidate>& candidates,
    const std::vector<std::pair<std::string, bool>>& verdicts);

// Loads candidates from a generator output directory: every image file in the
// directory plus the required metadata.csv sidecar (image_id,
// lesion_superclass, prompt, fitzpatrick).
std::vector<SyntheticCandidate> scan_synthetic_dir(const std::string& dir);

// Reads (image_id, accepted) pairs from a validation report CSV.
std::vector<std::pair<std::string, bool>> read_verdicts(const std::string& report_csv);

// --- Patient-level stratified split ----------------------------------------

enum class StratKey { Superclass, ToneGroup, Source };

struct SplitSpec {
    std::array<double, 3> fractions{0.70, 0.15, 0.15};
    std::vector<StratKey> strat_keys{StratKey::Superclass, StratKey::ToneGroup};
    std::uint64_t seed = 42;
    bool synthetic_train_only = false;
};

std::optional<StratKey> parse_strat_key(std::string_view s) noexcept;

// Assigns every record a split. All images of a patient share one split.
// Within each stratum (patients keyed by their majority record), patients are
// shuffled by seed and each goes to the split with the largest remaining
// image-count deficit. Records without a patient id are treated as singleton
// patients keyed by image id.
Manifest split(const Manifest& manifest, const SplitSpec& spec);

}  // namespace dermfair
