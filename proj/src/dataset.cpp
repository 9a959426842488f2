#include "dermfair/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "dermfair/csv.hpp"
#include "dermfair/error.hpp"
#include "dermfair/random.hpp"

namespace fs = std::filesystem;

namespace dermfair {

namespace {

// Lowercase, keep alphanumerics only.
std::string squash(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return out;
}

// Lowercase, separators to single spaces, trimmed.
std::string normalize_label(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            if (space && !out.empty()) out += ' ';
            space = false;
            out += static_cast<char>(std::tolower(u));
        } else {
            space = true;
        }
    }
    return out;
}

std::string trimmed(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

std::string_view to_string(Fitzpatrick f) noexcept {
    switch (f) {
        case Fitzpatrick::I: return "I";
        case Fitzpatrick::II: return "II";
        case Fitzpatrick::III: return "III";
        case Fitzpatrick::IV: return "IV";
        case Fitzpatrick::V: return "V";
        case Fitzpatrick::VI: return "VI";
        case Fitzpatrick::Uncertain: return "Uncertain";
    }
    return "Uncertain";
}

std::optional<Fitzpatrick> parse_fitzpatrick(std::string_view s) noexcept {
    for (Fitzpatrick f : kAllFitzpatrick) {
        if (s == to_string(f)) return f;
    }
    return std::nullopt;
}

ToneGroup tone_group(std::optional<Fitzpatrick> f) noexcept {
    if (!f) return ToneGroup::Uncertain;
    switch (*f) {
        case Fitzpatrick::I:
        case Fitzpatrick::II:
        case Fitzpatrick::III:
        case Fitzpatrick::IV: return ToneGroup::Light;
        case Fitzpatrick::V:
        case Fitzpatrick::VI: return ToneGroup::Dark;
        case Fitzpatrick::Uncertain: return ToneGroup::Uncertain;
    }
    return ToneGroup::Uncertain;
}

std::string_view to_string(ToneGroup g) noexcept {
    switch (g) {
        case ToneGroup::Light: return "I-IV";
        case ToneGroup::Dark: return "V-VI";
        case ToneGroup::Uncertain: return "Uncertain";
    }
    return "Uncertain";
}

std::string_view to_string(Superclass s) noexcept {
    return s == Superclass::Melanocytic ? "Melanocytic" : "NonMelanocytic";
}

std::string_view to_string(Source s) noexcept {
    return s == Source::Real ? "Real" : "Synthetic";
}

std::string_view to_string(Split s) noexcept {
    switch (s) {
        case Split::Train: return "Train";
        case Split::Val: return "Val";
        case Split::Test: return "Test";
    }
    return "Train";
}

std::optional<Superclass> parse_superclass(std::string_view s) noexcept {
    const std::string k = squash(s);
    if (k == "melanocytic" || k == "mel" || k == "1") return Superclass::Melanocytic;
    if (k == "nonmelanocytic" || k == "nonmel" || k == "0") return Superclass::NonMelanocytic;
    return std::nullopt;
}

std::optional<Source> parse_source(std::string_view s) noexcept {
    const std::string k = squash(s);
    if (k == "real") return Source::Real;
    if (k == "synthetic") return Source::Synthetic;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) noexcept {
    const std::string k = squash(s);
    if (k == "train") return Split::Train;
    if (k == "val" || k == "validation") return Split::Val;
    if (k == "test") return Split::Test;
    return std::nullopt;
}

std::optional<StratKey> parse_strat_key(std::string_view s) noexcept {
    const std::string k = squash(s);
    if (k == "superclass") return StratKey::Superclass;
    if (k == "fitzpatrick" || k == "tonegroup" || k == "tone") return StratKey::ToneGroup;
    if (k == "source") return StratKey::Source;
    return std::nullopt;
}

const ImageRecord* Manifest::find(std::string_view image_id) const noexcept {
    for (const auto& r : records) {
        if (r.image_id == image_id) return &r;
    }
    return nullptr;
}

void Manifest::check_unique_ids() const {
    std::unordered_set<std::string> seen;
    for (const auto& r : records) {
        if (!seen.insert(r.image_id).second) {
            throw Error(ErrorKind::DuplicateId, "duplicate image_id: " + r.image_id);
        }
    }
}

// --- serialization -----------------------------------------------------------

namespace {

const csv::Row kManifestColumns = {"image_id", "patient_id", "path",  "diagnosis",
                                   "superclass", "source",   "ita_degrees",
                                   "fitzpatrick", "split"};

const csv::Row kManifestOrder = {"image_id",   "path",   "diagnosis",   "superclass", "patient_id",
                                 "source",     "ita_degrees", "fitzpatrick", "split"};

}  // namespace

std::string manifest_to_csv(const Manifest& manifest) {
    std::ostringstream out;
    out << "# " << kManifestVersion << '\n';
    for (const auto& note : manifest.notes) out << "# " << note << '\n';
    csv::write_row(out, kManifestOrder);
    for (const auto& r : manifest.records) {
        csv::write_row(out, {r.image_id, r.path, r.diagnosis, std::string(to_string(r.superclass)),
                             r.patient_id, std::string(to_string(r.source)),
                             r.ita_degrees ? csv::format_double(*r.ita_degrees, 12) : "",
                             r.fitzpatrick ? std::string(to_string(*r.fitzpatrick)) : "",
                             r.split ? std::string(to_string(*r.split)) : ""});
    }
    return out.str();
}

void write_manifest_csv(const Manifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << manifest_to_csv(manifest);
}

void write_manifest_json(const Manifest& manifest, const std::string& path) {
    nlohmann::ordered_json j;
    j["version"] = kManifestVersion;
    j["notes"] = manifest.notes;
    auto& records = j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : manifest.records) {
        nlohmann::ordered_json e;
        e["image_id"] = r.image_id;
        e["path"] = r.path;
        e["diagnosis"] = r.diagnosis;
        e["superclass"] = to_string(r.superclass);
        e["patient_id"] = r.patient_id;
        e["source"] = to_string(r.source);
        e["ita_degrees"] = r.ita_degrees ? nlohmann::ordered_json(*r.ita_degrees) : nullptr;
        e["fitzpatrick"] =
            r.fitzpatrick ? nlohmann::ordered_json(to_string(*r.fitzpatrick)) : nullptr;
        e["split"] = r.split ? nlohmann::ordered_json(to_string(*r.split)) : nullptr;
        records.push_back(std::move(e));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << j.dump(2) << '\n';
}

Manifest read_manifest(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    Manifest m;
    for (const auto& c : t.comments) {
        std::string line = trimmed(std::string_view(c).substr(1));
        if (line.rfind("dermfair-manifest", 0) == 0) {
            if (line != kManifestVersion) {
                throw Error(ErrorKind::Parse, path + ": unsupported manifest version '" + line + "'");
            }
            continue;
        }
        m.notes.push_back(line);
    }
    std::array<std::size_t, 9> col{};
    for (std::size_t i = 0; i < kManifestColumns.size(); ++i) {
        col[i] = t.require_column({kManifestColumns[i]});
    }
    const auto cell = [&](const csv::Row& row, std::size_t k) -> const std::string& {
        return row[col[k]];
    };
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string where = path + " row " + std::to_string(i + 1);
        ImageRecord r;
        r.image_id = cell(row, 0);
        r.patient_id = cell(row, 1);
        r.path = cell(row, 2);
        r.diagnosis = cell(row, 3);
        auto sc = parse_superclass(cell(row, 4));
        if (!sc) throw Error(ErrorKind::Parse, where + ": bad superclass '" + cell(row, 4) + "'");
        r.superclass = *sc;
        auto src = parse_source(cell(row, 5));
        if (!src) throw Error(ErrorKind::Parse, where + ": bad source '" + cell(row, 5) + "'");
        r.source = *src;
        if (!cell(row, 6).empty()) {
            try {
                r.ita_degrees = std::stod(cell(row, 6));
            } catch (const std::exception&) {
                throw Error(ErrorKind::Parse, where + ": bad ita_degrees");
            }
        }
        if (!cell(row, 7).empty()) {
            r.fitzpatrick = parse_fitzpatrick(cell(row, 7));
            if (!r.fitzpatrick) throw Error(ErrorKind::Parse, where + ": bad fitzpatrick");
        }
        if (!cell(row, 8).empty()) {
            r.split = parse_split(cell(row, 8));
            if (!r.split) throw Error(ErrorKind::Parse, where + ": bad split");
        }
        if (r.image_id.empty()) throw Error(ErrorKind::Parse, where + ": empty image_id");
        m.records.push_back(std::move(r));
    }
    m.check_unique_ids();
    return m;
}

// --- ingestion ---------------------------------------------------------------

std::optional<Superclass> superclass_for_diagnosis(std::string_view diagnosis) {
    static const std::map<std::string, Superclass, std::less<>> table = {
        {"melanoma", Superclass::Melanocytic},
        {"melanoma metastasis", Superclass::Melanocytic},
        {"melanocytic nevus", Superclass::Melanocytic},
        {"nevus", Superclass::Melanocytic},
        {"mel", Superclass::Melanocytic},
        {"nv", Superclass::Melanocytic},
        {"actinic keratosis", Superclass::NonMelanocytic},
        {"ak", Superclass::NonMelanocytic},
        {"akiec", Superclass::NonMelanocytic},
        {"basal cell carcinoma", Superclass::NonMelanocytic},
        {"bcc", Superclass::NonMelanocytic},
        {"benign keratosis", Superclass::NonMelanocytic},
        {"pigmented benign keratosis", Superclass::NonMelanocytic},
        {"bkl", Superclass::NonMelanocytic},
        {"seborrheic keratosis", Superclass::NonMelanocytic},
        {"solar lentigo", Superclass::NonMelanocytic},
        {"lichen planus like keratosis", Superclass::NonMelanocytic},
        {"lichenoid keratosis", Superclass::NonMelanocytic},
        {"lplk", Superclass::NonMelanocytic},
        {"dermatofibroma", Superclass::NonMelanocytic},
        {"df", Superclass::NonMelanocytic},
        {"squamous cell carcinoma", Superclass::NonMelanocytic},
        {"scc", Superclass::NonMelanocytic},
        {"vascular lesion", Superclass::NonMelanocytic},
        {"vasc", Superclass::NonMelanocytic},
    };
    const auto it = table.find(normalize_label(diagnosis));
    if (it == table.end()) return std::nullopt;
    return it->second;
}

namespace {

std::string resolve_image(const std::string& root, const std::string& id, bool check,
                          bool& found) {
    static constexpr std::string_view exts[] = {".jpg", ".jpeg", ".png", ".JPG", ".PNG"};
    const fs::path base(root);
    if (check) {
        for (auto ext : exts) {
            fs::path p = base / (id + std::string(ext));
            if (fs::exists(p)) {
                found = true;
                return p.string();
            }
        }
    }
    found = !check;
    return (base / (id + ".jpg")).string();
}

}  // namespace

IngestResult ingest_isic_table(std::string_view csv_text, const std::string& image_root,
                               bool check_files) {
    const csv::Table t = csv::parse(csv_text);
    const std::size_t id_col = t.require_column({"image_id", "isic_id", "image"});
    const std::size_t dx_col = t.require_column({"diagnosis", "dx", "diagnosis_1"});
    const auto patient_col = t.column({"patient_id", "patient"});
    const auto path_col = t.column({"path", "file", "filename"});

    IngestResult result;
    result.manifest.notes.push_back("source: ISIC metadata ingest");
    result.manifest.notes.push_back("records without patient_id use image_id as patient_id");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        ImageRecord r;
        r.image_id = trimmed(row[id_col]);
        r.diagnosis = trimmed(row[dx_col]);
        const auto sc = superclass_for_diagnosis(r.diagnosis);
        if (!sc) {
            result.issues.push_back({i + 1, r.image_id, "UnknownDiagnosis", r.diagnosis});
            continue;
        }
        r.superclass = *sc;
        r.patient_id = patient_col ? trimmed(row[*patient_col]) : "";
        if (r.patient_id.empty()) r.patient_id = r.image_id;
        r.source = Source::Real;

        bool found = true;
        if (path_col && !trimmed(row[*path_col]).empty()) {
            fs::path p(trimmed(row[*path_col]));
            if (p.is_relative() && !image_root.empty()) p = fs::path(image_root) / p;
            r.path = p.string();
            found = !check_files || fs::exists(p);
        } else {
            r.path = resolve_image(image_root, r.image_id, check_files, found);
        }
        if (!found) result.issues.push_back({i + 1, r.image_id, "MissingFile", r.path});
        result.manifest.records.push_back(std::move(r));
    }
    result.manifest.check_unique_ids();
    return result;
}

IngestResult ingest_isic(const std::string& metadata_file, const std::string& image_root) {
    std::ifstream in(metadata_file, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + metadata_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ingest_isic_table(ss.str(), image_root, true);
}

// --- synthetic integration -----------------------------------------------------

IntegrationResult integrate_synthetic(const Manifest& real,
                                      const std::vector<SyntheticCandidate>& candidates,
                                      const std::vector<std::pair<std::string, bool>>& verdicts) {
    std::unordered_map<std::string, bool> verdict_of(verdicts.begin(), verdicts.end());
    std::unordered_set<std::string> ids;
    for (const auto& r : real.records) ids.insert(r.image_id);

    IntegrationResult result;
    result.manifest = real;
    result.synthetic_total = candidates.size();
    std::vector<std::string> unvalidated;
    for (const auto& c : candidates) {
        if (!verdict_of.contains(c.image_id)) unvalidated.push_back(c.image_id);
    }
    if (!unvalidated.empty()) {
        std::string msg = "synthetic images without a validation verdict:";
        for (const auto& id : unvalidated) msg += " " + id;
        throw Error(ErrorKind::UnvalidatedImage, msg);
    }
    for (const auto& c : candidates) {
        if (!verdict_of.at(c.image_id)) {
            ++result.rejected;
            continue;
        }
        if (!ids.insert(c.image_id).second) {
            throw Error(ErrorKind::DuplicateId, "synthetic id collides with existing record: " +
                                                    c.image_id);
        }
        ImageRecord r;
        r.image_id = c.image_id;
        r.path = c.path;
        r.diagnosis = c.superclass == Superclass::Melanocytic ? "synthetic melanocytic"
                                                              : "synthetic non-melanocytic";
        r.superclass = c.superclass;
        r.patient_id = std::string(kSyntheticPatientPrefix) + c.image_id;
        r.source = Source::Synthetic;
        r.fitzpatrick = c.fitzpatrick;
        result.manifest.records.push_back(std::move(r));
        ++result.accepted;
    }
    result.manifest.notes.push_back("synthetic records use pseudo-patient ids '" +
                                    std::string(kSyntheticPatientPrefix) + "<image_id>'");
    result.manifest.notes.push_back("synthetic integrated: " + std::to_string(result.accepted) +
                                    " accepted, " + std::to_string(result.rejected) +
                                    " rejected of " + std::to_string(result.synthetic_total));
    return result;
}

std::vector<SyntheticCandidate> scan_synthetic_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = squash(entry.path().extension().string());
        if (ext == "png" || ext == "jpg" || ext == "jpeg") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::unordered_map<std::string, csv::Row> meta;
    std::optional<std::size_t> sc_col;
    std::optional<std::size_t> prompt_col;
    std::optional<std::size_t> fst_col;
    const fs::path sidecar = fs::path(dir) / "metadata.csv";
    if (fs::exists(sidecar)) {
        const csv::Table t = csv::read_file(sidecar.string());
        const std::size_t id_col = t.require_column({"image_id"});
        sc_col = t.require_column({"lesion_superclass", "superclass"});
        prompt_col = t.column({"prompt"});
        fst_col = t.column({"fitzpatrick"});
        for (const auto& row : t.rows) meta.emplace(row[id_col], row);
    }

    std::vector<SyntheticCandidate> out;
    for (const auto& f : files) {
        SyntheticCandidate c;
        c.image_id = f.stem().string();
        c.path = f.string();
        const auto it = meta.find(c.image_id);
        if (it == meta.end()) {
            throw Error(ErrorKind::Parse, "no superclass metadata for synthetic image " + c.image_id);
        }
        const auto sc = parse_superclass(it->second[*sc_col]);
        if (!sc) {
            throw Error(ErrorKind::Parse, "bad lesion_superclass for " + c.image_id);
        }
        c.superclass = *sc;
        if (prompt_col) c.prompt = it->second[*prompt_col];
        if (fst_col && !it->second[*fst_col].empty()) {
            c.fitzpatrick = parse_fitzpatrick(it->second[*fst_col]);
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<std::pair<std::string, bool>> read_verdicts(const std::string& report_csv) {
    const csv::Table t = csv::read_file(report_csv);
    const std::size_t id_col = t.require_column({"image_id"});
    const std::size_t v_col = t.require_column({"verdict"});
    std::vector<std::pair<std::string, bool>> out;
    for (const auto& row : t.rows) {
        const std::string v = squash(row[v_col]);
        if (v != "accept" && v != "reject") {
            throw Error(ErrorKind::Parse, "bad verdict '" + row[v_col] + "' for " + row[id_col]);
        }
        out.emplace_back(row[id_col], v == "accept");
    }
    return out;
}

// --- split ---------------------------------------------------------------------

namespace {

std::string stratum_of(const ImageRecord& r, const std::vector<StratKey>& keys) {
    std::string k;
    for (StratKey key : keys) {
        if (!k.empty()) k += '|';
        switch (key) {
            case StratKey::Superclass: k += to_string(r.superclass); break;
            case StratKey::ToneGroup: k += to_string(tone_group(r.fitzpatrick)); break;
            case StratKey::Source: k += to_string(r.source); break;
        }
    }
    return k;
}

struct Patient {
    std::string id;
    std::vector<std::size_t> records;
};

}  // namespace

Manifest split(const Manifest& manifest, const SplitSpec& spec) {
    double sum = 0.0;
    for (double f : spec.fractions) {
        if (f < 0.0) throw Error(ErrorKind::InvalidArgument, "split fractions must be >= 0");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "split fractions must sum to 1");
    }

    Manifest out = manifest;
    for (auto& r : out.records) r.split.reset();

    // Group records by patient, in first-appearance order.
    std::vector<Patient> patients;
    std::unordered_map<std::string, std::size_t> patient_index;
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        auto& r = out.records[i];
        if (spec.synthetic_train_only && r.source == Source::Synthetic) {
            r.split = Split::Train;
            continue;
        }
        const std::string pid = r.patient_id.empty() ? r.image_id : r.patient_id;
        auto [it, inserted] = patient_index.emplace(pid, patients.size());
        if (inserted) patients.push_back({pid, {}});
        patients[it->second].records.push_back(i);
    }

    // Majority stratum per patient; ties go to the lexicographically smallest key.
    std::map<std::string, std::vector<std::size_t>> strata;
    for (std::size_t p = 0; p < patients.size(); ++p) {
        std::map<std::string, std::size_t> votes;
        for (std::size_t ri : patients[p].records) {
            ++votes[stratum_of(out.records[ri], spec.strat_keys)];
        }
        auto best = votes.begin();
        for (auto it = votes.begin(); it != votes.end(); ++it) {
            if (it->second > best->second) best = it;
        }
        strata[best->first].push_back(p);
    }

    struct Stratum {
        std::string key;
        std::vector<std::size_t> patients;
        std::size_t images = 0;
    };
    std::vector<Stratum> ordered;
    for (auto& [key, members] : strata) {
        Stratum s{key, std::move(members), 0};
        for (std::size_t p : s.patients) s.images += patients[p].records.size();
        ordered.push_back(std::move(s));
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](const Stratum& a, const Stratum& b) {
        return a.images > b.images;
    });

    Rng rng(spec.seed);
    for (auto& s : ordered) {
        std::sort(s.patients.begin(), s.patients.end(), [&](std::size_t a, std::size_t b) {
            return patients[a].id < patients[b].id;
        });
        rng.shuffle(std::span<std::size_t>(s.patients));

        std::array<double, 3> deficit{};
        for (std::size_t k = 0; k < 3; ++k) {
            deficit[k] = spec.fractions[k] * static_cast<double>(s.images);
        }
        for (std::size_t p : s.patients) {
            std::size_t target = 0;
            for (std::size_t k = 1; k < 3; ++k) {
                if (deficit[k] > deficit[target]) target = k;
            }
            deficit[target] -= static_cast<double>(patients[p].records.size());
            for (std::size_t ri : patients[p].records) {
                out.records[ri].split = static_cast<Split>(target);
            }
        }
    }
    return out;
}

}  // namespace dermfair
