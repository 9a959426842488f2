#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dermfair::trainlog {

struct EpochRow {
    int epoch = 0;
    double loss_train = 0.0;
    double loss_val = 0.0;
    double acc_train = 0.0;
    double acc_val = 0.0;
    double auc_val = 0.0;
};

struct TrainingLog {
    std::vector<EpochRow> rows;
};

// CSV with columns epoch,loss_train,loss_val,acc_train,acc_val,auc_val.
// Throws MalformedLog when epochs are not strictly increasing, a value is not
// numeric or the log is empty.
TrainingLog parse_log(std::string_view text);
TrainingLog read_log(const std::string& path);

// First epoch attaining the maximum validation AUC.
int best_auc_epoch(const TrainingLog& log);

struct Series {
    std::string name;
    std::vector<double> values;
};

// Static line chart; x is the epoch column.
std::string svg_chart(std::string_view title, std::string_view y_label,
                      const std::vector<int>& epochs, const std::vector<Series>& series);

struct ReportFiles {
    std::string series_csv;
    std::string summary_json;
    std::vector<std::string> charts;
};

// Writes series.csv (epoch,series,value), loss.svg, accuracy.svg, auc.svg and
// summary.json into out_dir.
ReportFiles write_report(const TrainingLog& log, const std::string& out_dir,
                         std::string_view source = {});

}  // namespace dermfair::trainlog
