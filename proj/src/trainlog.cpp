#include "dermfair/trainlog.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dermfair/csv.hpp"
#include "dermfair/error.hpp"

namespace dermfair::trainlog {

namespace {

double number(const std::string& s, std::size_t line, std::string_view column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size() && std::isfinite(v)) return v;
    } catch (const std::logic_error&) {
    }
    throw Error(ErrorKind::MalformedLog, "row " + std::to_string(line) + ": bad " +
                                             std::string(column) + " value '" + s + "'");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    return out;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(2);
    ss << v;
    return ss.str();
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

TrainingLog parse_log(std::string_view text) {
    csv::Table table;
    try {
        table = csv::parse(text);
    } catch (const Error& e) {
        throw Error(ErrorKind::MalformedLog, e.what());
    }
    static constexpr std::string_view kColumns[] = {"epoch",     "loss_train", "loss_val",
                                                    "acc_train", "acc_val",    "auc_val"};
    std::size_t idx[6];
    for (std::size_t c = 0; c < 6; ++c) {
        const auto found = table.column({kColumns[c]});
        if (!found) throw Error(ErrorKind::MalformedLog, "missing column " + std::string(kColumns[c]));
        idx[c] = *found;
    }
    if (table.rows.empty()) throw Error(ErrorKind::MalformedLog, "log has no epochs");
    TrainingLog log;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const double e = number(row[idx[0]], r + 1, "epoch");
        if (e != std::floor(e)) throw Error(ErrorKind::MalformedLog, "non-integer epoch");
        EpochRow er;
        er.epoch = static_cast<int>(e);
        er.loss_train = number(row[idx[1]], r + 1, kColumns[1]);
        er.loss_val = number(row[idx[2]], r + 1, kColumns[2]);
        er.acc_train = number(row[idx[3]], r + 1, kColumns[3]);
        er.acc_val = number(row[idx[4]], r + 1, kColumns[4]);
        er.auc_val = number(row[idx[5]], r + 1, kColumns[5]);
        if (!log.rows.empty() && er.epoch <= log.rows.back().epoch) {
            throw Error(ErrorKind::MalformedLog, "epoch " + std::to_string(er.epoch) +
                                                     " does not follow " +
                                                     std::to_string(log.rows.back().epoch));
        }
        log.rows.push_back(er);
    }
    return log;
}

TrainingLog read_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_log(ss.str());
}

int best_auc_epoch(const TrainingLog& log) {
    if (log.rows.empty()) throw Error(ErrorKind::MalformedLog, "log has no epochs");
    const auto best = std::max_element(log.rows.begin(), log.rows.end(),
                                       [](const EpochRow& a, const EpochRow& b) {
                                           return a.auc_val < b.auc_val;
                                       });
    return best->epoch;
}

std::string svg_chart(std::string_view title, std::string_view y_label,
                      const std::vector<int>& epochs, const std::vector<Series>& series) {
    constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
    static constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    const double plot_w = kW - kLeft - kRight;
    const double plot_h = kH - kTop - kBottom;

    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : series) {
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-9) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const int e0 = epochs.empty() ? 0 : epochs.front();
    const int e1 = epochs.empty() ? 1 : epochs.back();
    const auto px = [&](int e) {
        return e1 == e0 ? kLeft + plot_w / 2 : kLeft + plot_w * (e - e0) / double(e1 - e0);
    };
    const auto py = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << xml_escape(title) << "</text>\n";
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        const double y = py(v);
        svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << fmt(y) << "\" x2=\"" << kLeft
            << "\" y2=\"" << fmt(y) << "\" stroke=\"#444\"/>"
            << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << csv::format_double(v, 3) << "</text>\n";
    }
    for (int e : epochs) {
        svg << "<text x=\"" << fmt(px(e)) << "\" y=\"" << kTop + plot_h + 16
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << e
            << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kH - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch</text>\n";
    svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 16 "
        << kTop + plot_h / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = kColours[s % std::size(kColours)];
        const auto& vals = series[s].values;
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < vals.size() && i < epochs.size(); ++i) {
            svg << (i ? " " : "") << fmt(px(epochs[i])) << ',' << fmt(py(vals[i]));
        }
        svg << "\"/>\n";
        for (std::size_t i = 0; i < vals.size() && i < epochs.size(); ++i) {
            svg << "<circle cx=\"" << fmt(px(epochs[i])) << "\" cy=\"" << fmt(py(vals[i]))
                << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
        }
        const double ly = kTop + 12 + 18.0 * static_cast<double>(s);
        svg << "<line x1=\"" << kW - kRight + 12 << "\" y1=\"" << ly << "\" x2=\""
            << kW - kRight + 32 << "\" y2=\"" << ly << "\" stroke=\"" << colour
            << "\" stroke-width=\"2\"/><text x=\"" << kW - kRight + 38 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(series[s].name)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

ReportFiles write_report(const TrainingLog& log, const std::string& out_dir, std::string_view source) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const int best = best_auc_epoch(log);

    std::vector<int> epochs;
    Series lt{"loss_train", {}}, lv{"loss_val", {}}, at{"acc_train", {}}, av{"acc_val", {}},
        auc{"auc_val", {}};
    for (const auto& r : log.rows) {
        epochs.push_back(r.epoch);
        lt.values.push_back(r.loss_train);
        lv.values.push_back(r.loss_val);
        at.values.push_back(r.acc_train);
        av.values.push_back(r.acc_val);
        auc.values.push_back(r.auc_val);
    }

    ReportFiles files;
    files.series_csv = (fs::path(out_dir) / "series.csv").string();
    {
        auto out = open_out(files.series_csv);
        if (!source.empty()) out << "# source=" << source << '\n';
        out << "# best_auc_epoch=" << best << '\n';
        csv::write_row(out, {"epoch", "series", "value"});
        for (const Series* s : {&lt, &lv, &at, &av, &auc}) {
            for (std::size_t i = 0; i < epochs.size(); ++i) {
                csv::write_row(out, {std::to_string(epochs[i]), s->name, csv::format_double(s->values[i])});
            }
        }
    }

    const struct {
        const char* file;
        const char* title;
        const char* label;
        std::vector<Series> series;
    } panels[] = {{"loss.svg", "Loss", "binary cross-entropy", {lt, lv}},
                  {"accuracy.svg", "Accuracy", "accuracy", {at, av}},
                  {"auc.svg", "Validation AUC", "AUC", {auc}}};
    for (const auto& p : panels) {
        const std::string path = (fs::path(out_dir) / p.file).string();
        auto out = open_out(path);
        out << svg_chart(p.title, p.label, epochs, p.series);
        files.charts.push_back(path);
    }

    const auto& best_row = *std::find_if(log.rows.begin(), log.rows.end(),
                                         [&](const EpochRow& r) { return r.epoch == best; });
    nlohmann::ordered_json summary;
    if (!source.empty()) summary["source"] = std::string(source);
    summary["epochs"] = log.rows.size();
    summary["first_epoch"] = log.rows.front().epoch;
    summary["last_epoch"] = log.rows.back().epoch;
    summary["best_auc_epoch"] = best;
    summary["best_auc"] = best_row.auc_val;
    summary["final"] = {{"loss_train", log.rows.back().loss_train},
                        {"loss_val", log.rows.back().loss_val},
                        {"acc_train", log.rows.back().acc_train},
                        {"acc_val", log.rows.back().acc_val},
                        {"auc_val", log.rows.back().auc_val}};
    files.summary_json = (fs::path(out_dir) / "summary.json").string();
    open_out(files.summary_json) << summary.dump(2) << '\n';
    return files;
}

}  // namespace dermfair::trainlog
