// dermfair command-line entry point.
//
// Exit status: 0 on success, 1 on data errors, 2 on usage errors. Failures
// print a single JSON object on stderr.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dermfair/csv.hpp"
#include "dermfair/dataset.hpp"
#include "dermfair/error.hpp"
#include "dermfair/graphcut.hpp"
#include "dermfair/imageio.hpp"
#include "dermfair/metrics.hpp"
#include "dermfair/parallel.hpp"
#include "dermfair/preprocess.hpp"
#include "dermfair/skintone.hpp"
#include "dermfair/synthval.hpp"
#include "dermfair/trainlog.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using namespace dermfair;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Effective configuration of one run, echoed into every output.
using Echo = std::vector<std::pair<std::string, std::string>>;

struct Common {
    std::uint64_t seed = 42;
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--seed", common.seed, "Random seed")->capture_default_str();
    cmd->add_option("--threads", common.threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
}

Echo base_echo(const std::string& command, const Common& common) {
    return {{"command", command}, {"seed", std::to_string(common.seed)}};
}

std::string join_echo(const Echo& echo) {
    std::string s;
    for (const auto& [k, v] : echo) s += (s.empty() ? "" : " ") + k + "=" + v;
    return s;
}

// Prepends "# key=value" comment lines to a CSV written by a library routine.
void stamp_csv(const std::string& path, const Echo& echo) {
    std::string body;
    {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        body = ss.str();
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    for (const auto& [k, v] : echo) out << "# " << k << '=' << v << '\n';
    out << body;
}

json echo_json(const Echo& echo) {
    json j = json::object();
    for (const auto& [k, v] : echo) j[k] = v;
    return j;
}

// Inserts a "config" member at the front of a JSON object file.
void stamp_json(const std::string& path, const Echo& echo) {
    json doc;
    {
        std::ifstream in(path, std::ios::binary);
        doc = json::parse(in);
    }
    json out = json::object();
    out["config"] = echo_json(echo);
    for (auto it = doc.begin(); it != doc.end(); ++it) out[it.key()] = it.value();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
    f << out.dump(2) << '\n';
}

std::ofstream open_out(const std::string& path) {
    if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create directory " + dir);
}

fs::path manifest_dir(const std::string& manifest_path) {
    const fs::path p = fs::absolute(manifest_path).parent_path();
    return p.empty() ? fs::current_path() : p;
}

// Relative record paths are interpreted against the manifest's directory.
std::string resolve(const fs::path& base, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() ? p.string() : (base / p).lexically_normal().string();
}

// Rewrites record paths (relative to `from`) to be relative to `to`.
void rebase(Manifest& m, const fs::path& from, const fs::path& to) {
    const fs::path target = fs::weakly_canonical(to);
    for (auto& r : m.records) {
        if (r.path.empty()) continue;
        const fs::path abs = fs::weakly_canonical(fs::path(resolve(from, r.path)));
        const fs::path rel = abs.lexically_relative(target);
        r.path = rel.empty() ? abs.string() : rel.generic_string();
    }
}

void add_notes(Manifest& m, const Echo& echo) {
    std::erase_if(m.notes, [](const std::string& n) { return n.rfind("run ", 0) == 0; });
    m.notes.push_back("run " + join_echo(echo));
}

void write_manifest_out(Manifest m, const fs::path& from, const std::string& out_path,
                        const Echo& echo) {
    if (const fs::path parent = fs::path(out_path).parent_path(); !parent.empty()) {
        ensure_dir(parent.string());
    }
    rebase(m, from, manifest_dir(out_path));
    add_notes(m, echo);
    write_manifest_csv(m, out_path);
}

std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw UsageError("bad fraction '" + item + "'");
        }
    }
    return out;
}

std::vector<const ImageRecord*> select(const Manifest& m, const std::string& split_filter,
                                       bool real_only) {
    std::optional<Split> want;
    if (!split_filter.empty() && split_filter != "all") {
        want = parse_split(split_filter);
        if (!want) throw UsageError("unknown split '" + split_filter + "'");
    }
    std::vector<const ImageRecord*> out;
    for (const auto& r : m.records) {
        if (want && r.split != want) continue;
        if (real_only && r.source != Source::Real) continue;
        out.push_back(&r);
    }
    return out;
}

void print_summary(const json& j) { std::cout << j.dump() << std::endl; }

// --- subcommands ---------------------------------------------------------------

struct IngestArgs {
    Common common;
    std::string metadata;
    std::string images;
    std::string out;
    bool require_files = false;
};

int cmd_ingest(const IngestArgs& a) {
    Echo echo = base_echo("ingest", a.common);
    echo.emplace_back("metadata", a.metadata);
    echo.emplace_back("images", a.images);
    IngestResult res = ingest_isic(a.metadata, a.images);
    res.manifest.check_unique_ids();
    const auto missing = std::count_if(res.issues.begin(), res.issues.end(),
                                       [](const IngestIssue& i) { return i.kind == "MissingFile"; });
    if (a.require_files && missing > 0) {
        throw Error(ErrorKind::MissingFile, std::to_string(missing) + " image files are missing");
    }
    write_manifest_out(res.manifest, fs::current_path(), a.out, echo);

    const std::string issues_path = (fs::path(a.out).parent_path() /
                                     (fs::path(a.out).stem().string() + "_issues.csv"))
                                        .string();
    {
        auto out = open_out(issues_path);
        for (const auto& [k, v] : echo) out << "# " << k << '=' << v << '\n';
        csv::write_row(out, {"row", "image_id", "kind", "detail"});
        for (const auto& i : res.issues) {
            csv::write_row(out, {std::to_string(i.row), i.image_id, i.kind, i.detail});
        }
    }
    print_summary({{"command", "ingest"},
                   {"records", res.manifest.size()},
                   {"issues", res.issues.size()},
                   {"missing_files", missing},
                   {"manifest", a.out},
                   {"issues_file", issues_path}});
    return 0;
}

struct AuditArgs {
    Common common;
    std::string manifest;
    std::string out_dir;
    std::string format = "both";
    std::string annotated;
};

int cmd_audit(const AuditArgs& a) {
    if (a.format != "csv" && a.format != "json" && a.format != "both") {
        throw UsageError("--format must be csv, json or both");
    }
    Echo echo = base_echo("audit", a.common);
    echo.emplace_back("manifest", a.manifest);
    echo.emplace_back("min_skin_pixels", std::to_string(skintone::kMinSkinPixels));
    Manifest m = read_manifest(a.manifest);
    m.check_unique_ids();
    const fs::path base = manifest_dir(a.manifest);
    ensure_dir(a.out_dir);
    const skintone::AuditReport report = skintone::audit_dataset(
        m, [&](const ImageRecord& r) { return read_rgb(resolve(base, r.path)); },
        {a.common.threads});

    json summary = {{"command", "audit"}, {"images", m.size()}};
    if (a.format != "json") {
        const std::string p = (fs::path(a.out_dir) / "audit.csv").string();
        skintone::write_audit_csv(report, p);
        stamp_csv(p, echo);
        summary["csv"] = p;
    }
    if (a.format != "csv") {
        const std::string p = (fs::path(a.out_dir) / "audit.json").string();
        skintone::write_audit_json(report, p);
        stamp_json(p, echo);
        summary["json"] = p;
    }
    skintone::annotate(m, report);
    const std::string annotated =
        a.annotated.empty() ? (fs::path(a.out_dir) / "manifest_annotated.csv").string() : a.annotated;
    write_manifest_out(m, base, annotated, echo);

    std::size_t unreadable = 0;
    for (const auto& e : report.entries) unreadable += e.result ? 0 : 1;
    summary["unreadable"] = unreadable;
    summary["dark_share"] = report.audit.dark_share();
    summary["annotated_manifest"] = annotated;
    print_summary(summary);
    return 0;
}

struct PreprocessArgs {
    Common common;
    std::string manifest;
    std::string out_dir;
    std::string config;
    std::string split;
};

Echo preprocess_echo(const preprocess::PreprocessConfig& c) {
    using preprocess::GammaMode;
    return {{"target_size", std::to_string(c.target_size)},
            {"gamma_mode", c.gamma_mode == GammaMode::Fixed ? "fixed" : "adaptive"},
            {"gamma", csv::format_double(c.gamma)},
            {"gamma_min", csv::format_double(c.gamma_min)},
            {"gamma_max", csv::format_double(c.gamma_max)},
            {"clahe_clip", csv::format_double(c.clahe_clip)},
            {"clahe_tiles_x", std::to_string(c.clahe_tiles_x)},
            {"clahe_tiles_y", std::to_string(c.clahe_tiles_y)},
            {"nlm_strength", csv::format_double(c.nlm_strength)},
            {"nlm_patch", std::to_string(c.nlm_patch)},
            {"nlm_search", std::to_string(c.nlm_search)},
            {"hair_kernel", std::to_string(c.hair_kernel)},
            {"hair_threshold", std::to_string(c.hair_threshold)},
            {"max_artifact_fraction", csv::format_double(c.max_artifact_fraction)},
            {"augment_order", c.augment_order == preprocess::AugmentOrder::AfterPreprocess
                                  ? "after"
                                  : "before"}};
}

int cmd_preprocess(const PreprocessArgs& a) {
    preprocess::PreprocessConfig cfg;
    cfg.seed = a.common.seed;
    if (!a.config.empty()) cfg = preprocess::read_config(a.config, cfg);
    cfg.validate();
    Echo echo = base_echo("preprocess", a.common);
    echo.emplace_back("manifest", a.manifest);
    for (auto& kv : preprocess_echo(cfg)) echo.push_back(std::move(kv));

    const Manifest m = read_manifest(a.manifest);
    m.check_unique_ids();
    const fs::path base = manifest_dir(a.manifest);
    const auto records = select(m, a.split, false);
    ensure_dir(a.out_dir);

    struct Outcome {
        std::string error_kind;
        std::string detail;
        double gamma = 1.0;
        double hair_fraction = 0.0;
    };
    std::vector<Outcome> outcomes(records.size());
    parallel_for(records.size(), a.common.threads, [&](std::size_t i) {
        const ImageRecord& r = *records[i];
        try {
            const auto res = preprocess::preprocess_full(read_rgb(resolve(base, r.path)), cfg);
            write_png((fs::path(a.out_dir) / (r.image_id + ".png")).string(), res.processed);
            outcomes[i].gamma = res.gamma;
            outcomes[i].hair_fraction = res.hair_fraction;
        } catch (const Error& e) {
            outcomes[i].error_kind = std::string(to_string(e.kind()));
            outcomes[i].detail = e.what();
        }
    });

    Manifest processed;
    processed.notes = m.notes;
    std::size_t excluded = 0;
    const std::string log_path = (fs::path(a.out_dir) / "preprocess_log.csv").string();
    {
        auto log = open_out(log_path);
        for (const auto& [k, v] : echo) log << "# " << k << '=' << v << '\n';
        csv::write_row(log, {"image_id", "status", "gamma", "hair_fraction", "detail"});
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& o = outcomes[i];
            if (!o.error_kind.empty()) {
                ++excluded;
                csv::write_row(log, {records[i]->image_id, "excluded:" + o.error_kind, "", "", o.detail});
                continue;
            }
            csv::write_row(log, {records[i]->image_id, "ok", csv::format_double(o.gamma, 6),
                                 csv::format_double(o.hair_fraction, 6), ""});
            ImageRecord rec = *records[i];
            rec.path = (fs::path(a.out_dir) / (rec.image_id + ".png")).string();
            processed.records.push_back(std::move(rec));
        }
    }
    const std::string out_manifest = (fs::path(a.out_dir) / "manifest.csv").string();
    write_manifest_out(processed, fs::current_path(), out_manifest, echo);
    print_summary({{"command", "preprocess"},
                   {"images", records.size()},
                   {"processed", records.size() - excluded},
                   {"excluded", excluded},
                   {"manifest", out_manifest},
                   {"log", log_path}});
    return 0;
}

struct ValidateArgs {
    Common common;
    std::string real_manifest;
    std::string synth_dir;
    std::string out;
    std::string thresholds;
};

int cmd_validate_synth(const ValidateArgs& a) {
    synthval::ValidationConfig cfg;
    cfg.seed = a.common.seed;
    if (!a.thresholds.empty()) cfg = synthval::read_thresholds(a.thresholds, cfg);
    cfg.seed = a.common.seed;

    const Manifest real = read_manifest(a.real_manifest);
    const fs::path base = manifest_dir(a.real_manifest);
    std::vector<const ImageRecord*> dark;
    for (const auto& r : real.records) {
        if (r.source == Source::Real &&
            (r.fitzpatrick == Fitzpatrick::V || r.fitzpatrick == Fitzpatrick::VI)) {
            dark.push_back(&r);
        }
    }
    if (dark.empty()) {
        throw Error(ErrorKind::EmptyReference,
                    "no real FST V-VI records in " + a.real_manifest + " (run audit first)");
    }
    std::vector<RgbImage> reference(dark.size());
    parallel_for(dark.size(), a.common.threads,
                 [&](std::size_t i) { reference[i] = read_rgb(resolve(base, dark[i]->path)); });
    const synthval::ReferenceStats stats = synthval::build_reference(reference, cfg);
    reference.clear();

    const auto candidates = scan_synthetic_dir(a.synth_dir);
    std::vector<synthval::SynthValidationReport> reports(candidates.size());
    parallel_for(candidates.size(), a.common.threads, [&](std::size_t i) {
        reports[i] = synthval::validate_synthetic(candidates[i].image_id, read_rgb(candidates[i].path),
                                                  stats, cfg);
    });
    if (const fs::path parent = fs::path(a.out).parent_path(); !parent.empty()) {
        ensure_dir(parent.string());
    }
    synthval::write_report_csv(reports, cfg, a.out);
    Echo echo = base_echo("validate-synth", a.common);
    echo.emplace_back("real_manifest", a.real_manifest);
    echo.emplace_back("synth_dir", a.synth_dir);
    echo.emplace_back("reference_images", std::to_string(dark.size()));
    stamp_csv(a.out, echo);

    const auto accepted = std::count_if(reports.begin(), reports.end(),
                                        [](const auto& r) { return r.accepted; });
    print_summary({{"command", "validate-synth"},
                   {"candidates", reports.size()},
                   {"accepted", accepted},
                   {"rejected", static_cast<long>(reports.size()) - accepted},
                   {"reference", dark.size()},
                   {"report", a.out}});
    return 0;
}

struct IntegrateArgs {
    Common common;
    std::string manifest;
    std::string synth_dir;
    std::string report;
    std::string out;
};

int cmd_integrate(const IntegrateArgs& a) {
    Echo echo = base_echo("integrate", a.common);
    echo.emplace_back("manifest", a.manifest);
    echo.emplace_back("synth_dir", a.synth_dir);
    echo.emplace_back("report", a.report);
    Manifest real = read_manifest(a.manifest);
    // Synthetic candidate paths come from the directory scan; make the real
    // paths comparable by resolving them first.
    rebase(real, manifest_dir(a.manifest), fs::current_path());
    const auto candidates = scan_synthetic_dir(a.synth_dir);
    const auto verdicts = read_verdicts(a.report);
    IntegrationResult res = integrate_synthetic(real, candidates, verdicts);
    res.manifest.notes.push_back("synthetic records use pseudo-patients " +
                                 std::string(kSyntheticPatientPrefix) + "<image_id>");
    res.manifest.notes.push_back("synthetic total=" + std::to_string(res.synthetic_total) +
                                 " accepted=" + std::to_string(res.accepted) +
                                 " rejected=" + std::to_string(res.rejected));
    write_manifest_out(res.manifest, fs::current_path(), a.out, echo);
    print_summary({{"command", "integrate"},
                   {"records", res.manifest.size()},
                   {"synthetic_total", res.synthetic_total},
                   {"accepted", res.accepted},
                   {"rejected", res.rejected},
                   {"manifest", a.out}});
    return 0;
}

struct SplitArgs {
    Common common;
    std::string manifest;
    std::string out;
    std::string fractions = "0.7,0.15,0.15";
    std::string strat = "superclass,tone";
    bool synthetic_train_only = false;
};

int cmd_split(const SplitArgs& a) {
    SplitSpec spec;
    const auto fr = parse_fractions(a.fractions);
    if (fr.size() != 3) throw UsageError("--fractions needs three values");
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!(fr[i] >= 0.0)) throw UsageError("fractions must be nonnegative");
        spec.fractions[i] = fr[i];
        sum += fr[i];
    }
    if (std::abs(sum - 1.0) > 1e-6) throw UsageError("fractions must sum to 1");
    spec.strat_keys.clear();
    std::stringstream ss(a.strat);
    std::string key;
    while (std::getline(ss, key, ',')) {
        if (key.empty() || key == "none") continue;
        const auto k = parse_strat_key(key);
        if (!k) throw UsageError("unknown stratification key '" + key + "'");
        spec.strat_keys.push_back(*k);
    }
    spec.seed = a.common.seed;
    spec.synthetic_train_only = a.synthetic_train_only;

    Echo echo = base_echo("split", a.common);
    echo.emplace_back("manifest", a.manifest);
    echo.emplace_back("fractions", a.fractions);
    echo.emplace_back("strat", a.strat);
    echo.emplace_back("synthetic_train_only", a.synthetic_train_only ? "true" : "false");

    const Manifest in = read_manifest(a.manifest);
    Manifest out = split(in, spec);
    std::array<std::size_t, 3> counts{};
    for (const auto& r : out.records) ++counts[static_cast<std::size_t>(*r.split)];
    write_manifest_out(out, manifest_dir(a.manifest), a.out, echo);
    print_summary({{"command", "split"},
                   {"records", out.size()},
                   {"train", counts[0]},
                   {"val", counts[1]},
                   {"test", counts[2]},
                   {"manifest", a.out}});
    return 0;
}

struct SegmentArgs {
    Common common;
    std::string manifest;
    std::string out_dir;
    std::string split;
    bool real_only = false;
    double lambda = graphcut::LesionGraphParams{}.lambda;
    double sigma = graphcut::LesionGraphParams{}.sigma;
    bool invert = false;
    int work_size = 224;
};

int cmd_segment(const SegmentArgs& a) {
    if (!(a.lambda >= 0.0) || !(a.sigma > 0.0)) throw UsageError("--lambda >= 0 and --sigma > 0 required");
    if (a.work_size < 0) throw UsageError("--work-size must be >= 0");
    const graphcut::LesionGraphParams params{a.lambda, a.sigma, a.invert};
    Echo echo = base_echo("segment", a.common);
    echo.emplace_back("manifest", a.manifest);
    echo.emplace_back("split", a.split.empty() ? "all" : a.split);
    echo.emplace_back("lambda", csv::format_double(a.lambda));
    echo.emplace_back("sigma", csv::format_double(a.sigma));
    echo.emplace_back("invert", a.invert ? "true" : "false");
    echo.emplace_back("work_size", std::to_string(a.work_size));

    const Manifest m = read_manifest(a.manifest);
    const fs::path base = manifest_dir(a.manifest);
    const auto records = select(m, a.split, a.real_only);
    ensure_dir(a.out_dir);
    std::vector<std::string> errors(records.size());
    parallel_for(records.size(), a.common.threads, [&](std::size_t i) {
        const ImageRecord& r = *records[i];
        try {
            const RgbImage img = read_rgb(resolve(base, r.path));
            const bool scale = a.work_size > 0 &&
                               (img.width() != a.work_size || img.height() != a.work_size);
            const RgbImage work = scale ? resize_bilinear(img, a.work_size, a.work_size) : img;
            BinaryMask mask = graphcut::segment_maxflow(work, params);
            if (scale) mask = resize_nearest(mask, img.width(), img.height());
            write_mask_png((fs::path(a.out_dir) / (r.image_id + ".png")).string(), mask);
        } catch (const Error& e) {
            errors[i] = std::string(to_string(e.kind())) + ": " + e.what();
        }
    });
    const std::string log_path = (fs::path(a.out_dir) / "segment_log.csv").string();
    std::size_t failed = 0;
    {
        auto log = open_out(log_path);
        for (const auto& [k, v] : echo) log << "# " << k << '=' << v << '\n';
        csv::write_row(log, {"image_id", "status", "detail"});
        for (std::size_t i = 0; i < records.size(); ++i) {
            failed += errors[i].empty() ? 0 : 1;
            csv::write_row(log, {records[i]->image_id, errors[i].empty() ? "ok" : "failed", errors[i]});
        }
    }
    print_summary({{"command", "segment"},
                   {"images", records.size()},
                   {"segmented", records.size() - failed},
                   {"failed", failed},
                   {"log", log_path}});
    return 0;
}

struct EvalSegArgs {
    Common common;
    std::string pred;
    std::string truth;
    std::string out_dir;
    std::string manifest;
    std::string split;
};

std::optional<fs::path> find_mask(const fs::path& dir, const std::string& id) {
    for (const char* suffix : {".png", "_segmentation.png", "_mask.png"}) {
        const fs::path p = dir / (id + suffix);
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

int cmd_eval_seg(const EvalSegArgs& a) {
    std::vector<std::string> ids;
    if (!a.manifest.empty()) {
        const Manifest m = read_manifest(a.manifest);
        for (const auto* r : select(m, a.split, true)) ids.push_back(r->image_id);
    } else {
        for (const auto& e : fs::directory_iterator(a.truth)) {
            if (!e.is_regular_file() || e.path().extension() != ".png") continue;
            std::string stem = e.path().stem().string();
            for (const std::string suffix : {"_segmentation", "_mask"}) {
                if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
                    stem.resize(stem.size() - suffix.size());
                }
            }
            ids.push_back(stem);
        }
        std::sort(ids.begin(), ids.end());
    }
    std::vector<metrics::SegImageResult> results(ids.size());
    parallel_for(ids.size(), a.common.threads, [&](std::size_t i) {
        results[i].image_id = ids[i];
        try {
            const auto truth = find_mask(a.truth, ids[i]);
            if (!truth) throw Error(ErrorKind::MissingFile, "no truth mask");
            const auto pred = find_mask(a.pred, ids[i]);
            if (!pred) throw Error(ErrorKind::MissingPrediction, "no predicted mask");
            results[i].scores = metrics::seg_scores(read_mask(pred->string()), read_mask(truth->string()));
        } catch (const Error& e) {
            results[i].error = std::string(to_string(e.kind())) + ": " + e.what();
        }
    });
    const metrics::SegRunReport report = metrics::aggregate_segmentation(std::move(results));

    Echo echo = base_echo("eval-seg", a.common);
    echo.emplace_back("pred", a.pred);
    echo.emplace_back("truth", a.truth);
    if (!a.manifest.empty()) echo.emplace_back("manifest", a.manifest);
    echo.emplace_back("split", a.split.empty() ? "all" : a.split);
    ensure_dir(a.out_dir);
    const std::string csv_path = (fs::path(a.out_dir) / "seg_report.csv").string();
    const std::string json_path = (fs::path(a.out_dir) / "seg_report.json").string();
    metrics::write_seg_report_csv(report, csv_path);
    metrics::write_seg_report_json(report, json_path);
    stamp_csv(csv_path, echo);
    stamp_json(json_path, echo);
    print_summary({{"command", "eval-seg"},
                   {"images", report.images.size()},
                   {"failed", report.failed},
                   {"mean_iou", report.iou.mean},
                   {"mean_dice", report.dice.mean},
                   {"csv", csv_path},
                   {"json", json_path}});
    return 0;
}

struct EvalClsArgs {
    Common common;
    std::string pred;
    std::string out_dir;
    std::string manifest;
    std::string split;
};

int cmd_eval_cls(const EvalClsArgs& a) {
    std::vector<metrics::LabeledPrediction> preds = metrics::read_predictions(a.pred);
    if (!a.manifest.empty()) {
        const Manifest m = read_manifest(a.manifest);
        std::map<std::string, std::size_t> seen;
        for (std::size_t i = 0; i < preds.size(); ++i) seen.emplace(preds[i].image_id, i);
        for (const auto* r : select(m, a.split, true)) {
            if (!seen.contains(r->image_id)) {
                throw Error(ErrorKind::MissingPrediction, "no prediction for " + r->image_id);
            }
        }
    }
    const metrics::ClsRunReport report = metrics::evaluate_classification(preds);
    Echo echo = base_echo("eval-cls", a.common);
    echo.emplace_back("pred", a.pred);
    if (!a.manifest.empty()) echo.emplace_back("manifest", a.manifest);
    echo.emplace_back("decision_threshold", csv::format_double(metrics::kDecisionThreshold));
    ensure_dir(a.out_dir);
    const std::string csv_path = (fs::path(a.out_dir) / "cls_report.csv").string();
    const std::string json_path = (fs::path(a.out_dir) / "cls_report.json").string();
    metrics::write_cls_report_csv(report, csv_path);
    metrics::write_cls_report_json(report, json_path);
    stamp_csv(csv_path, echo);
    stamp_json(json_path, echo);
    json summary = {{"command", "eval-cls"}, {"samples", report.samples},
                    {"accuracy", report.scores.accuracy}};
    summary["auc"] = report.scores.auc ? json(*report.scores.auc) : json(nullptr);
    summary["csv"] = csv_path;
    summary["json"] = json_path;
    print_summary(summary);
    return 0;
}

struct ReportArgs {
    Common common;
    std::string log;
    std::string out_dir;
};

int cmd_report(const ReportArgs& a) {
    const trainlog::TrainingLog log = trainlog::read_log(a.log);
    const auto files = trainlog::write_report(log, a.out_dir, a.log);
    print_summary({{"command", "report"},
                   {"epochs", log.rows.size()},
                   {"best_auc_epoch", trainlog::best_auc_epoch(log)},
                   {"series", files.series_csv},
                   {"summary", files.summary_json},
                   {"charts", files.charts}});
    return 0;
}

int error_exit(int code, std::string_view kind, const std::string& message) {
    std::cerr << json({{"status", "error"},
                       {"exit_code", code},
                       {"kind", kind},
                       {"message", message}})
                     .dump()
              << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dermfair: skin-tone fairness toolkit for dermoscopic image pipelines"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Build a manifest from ISIC metadata");
    add_common(c_ingest, ingest.common);
    c_ingest->add_option("--metadata", ingest.metadata, "ISIC metadata CSV")
        ->required()->check(CLI::ExistingFile)->envname("DERMFAIR_METADATA");
    c_ingest->add_option("--images", ingest.images, "Image root directory")
        ->required()->check(CLI::ExistingDirectory)->envname("DERMFAIR_IMAGE_ROOT");
    c_ingest->add_option("--out", ingest.out, "Output manifest CSV")->required();
    c_ingest->add_flag("--require-files", ingest.require_files, "Fail when image files are missing");

    AuditArgs audit;
    auto* c_audit = app.add_subcommand("audit", "Estimate skin tone and tabulate FST x superclass");
    add_common(c_audit, audit.common);
    c_audit->add_option("--manifest", audit.manifest, "Input manifest")
        ->required()->check(CLI::ExistingFile)->envname("DERMFAIR_MANIFEST");
    c_audit->add_option("--out-dir", audit.out_dir, "Output directory")->required();
    c_audit->add_option("--format", audit.format, "csv, json or both")->capture_default_str();
    c_audit->add_option("--annotated", audit.annotated,
                        "Annotated manifest path (default OUT_DIR/manifest_annotated.csv)");

    PreprocessArgs prep;
    auto* c_prep = app.add_subcommand("preprocess", "Run the preprocessing chain over a manifest");
    add_common(c_prep, prep.common);
    c_prep->add_option("--manifest", prep.manifest, "Input manifest")
        ->required()->check(CLI::ExistingFile)->envname("DERMFAIR_MANIFEST");
    c_prep->add_option("--out", prep.out_dir, "Output directory")->required();
    c_prep->add_option("--config", prep.config, "key=value preprocessing config")
        ->check(CLI::ExistingFile);
    c_prep->add_option("--split", prep.split, "Only records of this split");

    ValidateArgs val;
    auto* c_val = app.add_subcommand("validate-synth", "Screen synthetic images against real FST V-VI images");
    add_common(c_val, val.common);
    c_val->add_option("--real-manifest", val.real_manifest, "Audited real manifest")
        ->required()->check(CLI::ExistingFile)->envname("DERMFAIR_MANIFEST");
    c_val->add_option("--synth-dir", val.synth_dir, "Generator output directory")
        ->required()->check(CLI::ExistingDirectory)->envname("DERMFAIR_SYNTH_DIR");
    c_val->add_option("--out", val.out, "Report CSV")->required();
    c_val->add_option("--thresholds", val.thresholds, "key=value threshold file")
        ->check(CLI::ExistingFile);

    IntegrateArgs integ;
    auto* c_int = app.add_subcommand("integrate", "Merge accepted synthetic images into a manifest");
    add_common(c_int, integ.common);
    c_int->add_option("--manifest", integ.manifest, "Real manifest")
        ->required()->check(CLI::ExistingFile)->envname("DERMFAIR_MANIFEST");
    c_int->add_option("--synth-dir", integ.synth_dir, "Generator output directory")
        ->required()->check(CLI::ExistingDirectory)->envname("DERMFAIR_SYNTH_DIR");
    c_int->add_option("--report", integ.report, "validate-synth report CSV")
        ->required()->check(CLI::ExistingFile);
    c_int->add_option("--out", integ.out, "Output manifest")->required();

    SplitArgs sp;
    auto* c_split = app.add_subcommand("split", "Patient-level stratified train/val/test split");
    add_common(c_split, sp.common);
    c_split->add_option("--manifest", sp.manifest, "Input manifest")
        ->required()->check(CLI::ExistingFile)->envname("DERMFAIR_MANIFEST");
    c_split->add_option("--out", sp.out, "Output manifest")->required();
    c_split->add_option("--fractions", sp.fractions, "train,val,test")->capture_default_str();
    c_split->add_option("--strat", sp.strat, "Comma list of superclass, tone, source")
        ->capture_default_str();
    c_split->add_flag("--synthetic-train-only", sp.synthetic_train_only,
                      "Place all synthetic records in train");

    SegmentArgs seg;
    auto* c_seg = app.add_subcommand("segment", "Max-flow lesion segmentation");
    add_common(c_seg, seg.common);
    c_seg->add_option("--manifest", seg.manifest, "Input manifest")
        ->required()->check(CLI::ExistingFile)->envname("DERMFAIR_MANIFEST");
    c_seg->add_option("--out", seg.out_dir, "Mask output directory")->required();
    c_seg->add_option("--split", seg.split, "Only records of this split");
    c_seg->add_flag("--real-only", seg.real_only, "Skip synthetic records");
    c_seg->add_option("--lambda", seg.lambda, "n-link weight")->capture_default_str();
    c_seg->add_option("--sigma", seg.sigma, "n-link intensity scale")->capture_default_str();
    c_seg->add_flag("--invert", seg.invert, "Lesion is brighter than skin");
    c_seg->add_option("--work-size", seg.work_size, "Working resolution (0 = native)")
        ->capture_default_str();

    EvalSegArgs es;
    auto* c_es = app.add_subcommand("eval-seg", "Score predicted masks against ground truth");
    add_common(c_es, es.common);
    c_es->add_option("--pred", es.pred, "Predicted mask directory")
        ->required()->check(CLI::ExistingDirectory);
    c_es->add_option("--truth", es.truth, "Ground-truth mask directory")
        ->required()->check(CLI::ExistingDirectory)->envname("DERMFAIR_TRUTH_DIR");
    c_es->add_option("--out-dir", es.out_dir, "Report directory")->required();
    c_es->add_option("--manifest", es.manifest, "Restrict to real records of this manifest")
        ->check(CLI::ExistingFile);
    c_es->add_option("--split", es.split, "Only records of this split");

    EvalClsArgs ec;
    auto* c_ec = app.add_subcommand("eval-cls", "Score classifier predictions");
    add_common(c_ec, ec.common);
    c_ec->add_option("--pred", ec.pred, "image_id,score,label CSV")
        ->required()->check(CLI::ExistingFile);
    c_ec->add_option("--out-dir", ec.out_dir, "Report directory")->required();
    c_ec->add_option("--manifest", ec.manifest, "Require predictions for these records")
        ->check(CLI::ExistingFile);
    c_ec->add_option("--split", ec.split, "Only records of this split");

    ReportArgs rep;
    auto* c_rep = app.add_subcommand("report", "Training-curve series and charts from an epoch log");
    add_common(c_rep, rep.common);
    c_rep->add_option("--log", rep.log, "Epoch log CSV")->required()->check(CLI::ExistingFile);
    c_rep->add_option("--out-dir", rep.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return error_exit(2, "UsageError", e.what());
    }

    try {
        if (*c_ingest) return cmd_ingest(ingest);
        if (*c_audit) return cmd_audit(audit);
        if (*c_prep) return cmd_preprocess(prep);
        if (*c_val) return cmd_validate_synth(val);
        if (*c_int) return cmd_integrate(integ);
        if (*c_split) return cmd_split(sp);
        if (*c_seg) return cmd_segment(seg);
        if (*c_es) return cmd_eval_seg(es);
        if (*c_ec) return cmd_eval_cls(ec);
        if (*c_rep) return cmd_report(rep);
    } catch (const UsageError& e) {
        return error_exit(2, "UsageError", e.what());
    } catch (const Error& e) {
        const int code = e.kind() == ErrorKind::InvalidArgument ? 2 : 1;
        return error_exit(code, to_string(e.kind()), e.what());
    } catch (const fs::filesystem_error& e) {
        return error_exit(1, "Io", e.what());
    } catch (const nlohmann::json::exception& e) {
        return error_exit(1, "Parse", e.what());
    }
    return error_exit(2, "UsageError", "no subcommand");
}
