#include <gtest/gtest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dermfair/csv.hpp"
#include "dermfair/dataset.hpp"
#include "dermfair/metrics.hpp"
#include "fixture_gen.hpp"

using namespace dermfair;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = fs::temp_directory_path() / "dermfair_cli_test";
        fs::remove_all(root_);
        corpus_ = fixtures::write_corpus(root_ / "corpus");
        ASSERT_EQ(run("ingest --metadata " + corpus_.metadata.string() + " --images " + corpus_.images.string() +
                      " --out " + (root_ / "m.csv").string())
                      .code,
                  0);
    }
    static void TearDownTestSuite() { fs::remove_all(root_); }

    static CliResult run(const std::string& args) {
        const fs::path out = root_ / "stdout.txt";
        const fs::path err = root_ / "stderr.txt";
        const std::string cmd = std::string(DERMFAIR_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    static fs::path root_;
    static fixtures::Corpus corpus_;
};

fs::path Cli::root_;
fixtures::Corpus Cli::corpus_;

}  // namespace

TEST_F(Cli, HelpExitsZero) {
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("split --help").code, 0);
}

TEST_F(Cli, UsageErrorsExitTwoWithJson) {
    for (const std::string& args : std::vector<std::string>{"", "frobnicate", "split --manifest nowhere.csv --out x.csv",
                                   "split --manifest " + (root_ / "m.csv").string() + " --out x.csv --fractions 0.5,0.6"}) {
        const CliResult r = run(args);
        EXPECT_EQ(r.code, 2) << args;
        const auto j = nlohmann::json::parse(r.err);
        EXPECT_EQ(j["status"], "error");
        EXPECT_EQ(j["exit_code"], 2);
    }
}

TEST_F(Cli, DataErrorsExitOne) {
    const fs::path bad_log = root_ / "bad_log.csv";
    std::ofstream(bad_log) << "epoch,loss_train,loss_val,acc_train,acc_val,auc_val\n2,1,1,1,1,1\n1,1,1,1,1,1\n";
    CliResult r = run("report --log " + bad_log.string() + " --out-dir " + (root_ / "rep").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["kind"], "MalformedLog");

    const fs::path bad_pred = root_ / "bad_pred.csv";
    std::ofstream(bad_pred) << "image_id,score,label\na,0.5,3\n";
    EXPECT_EQ(run("eval-cls --pred " + bad_pred.string() + " --out-dir " + (root_ / "cls_bad").string()).code, 1);
}

TEST_F(Cli, AuditThreeImageManifest) {
    Manifest m = read_manifest((root_ / "m.csv").string());
    m.records.resize(3);
    for (auto& r : m.records) r.path = (root_ / r.path).lexically_normal().string();
    write_manifest_csv(m, (root_ / "three.csv").string());
    const CliResult r = run("audit --manifest " + (root_ / "three.csv").string() + " --out-dir " + (root_ / "a3").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const csv::Table t = csv::read_file((root_ / "a3" / "audit.csv").string());
    std::size_t classified = 0;
    for (const auto& row : t.rows) {
        if (row[0] == "Total" || row[0] == "Uncertain" || row[0] == "Unreadable") {
            if (row[0] != "Total") EXPECT_EQ(row.back(), "0");
            continue;
        }
        classified += std::stoul(row.back());
    }
    EXPECT_EQ(classified, 3U);
    const auto j = nlohmann::json::parse(slurp(root_ / "a3" / "audit.json"));
    EXPECT_TRUE(j.contains("config"));
}

TEST_F(Cli, EvalClsMatchesLibrary) {
    const CliResult r = run("eval-cls --pred " + corpus_.predictions.string() + " --out-dir " + (root_ / "cls").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto preds = metrics::read_predictions(corpus_.predictions.string());
    std::vector<metrics::Prediction> p;
    for (const auto& x : preds) p.push_back(x.prediction);
    const metrics::ClassificationScores s = metrics::cls_scores(p);
    const auto j = nlohmann::json::parse(slurp(root_ / "cls" / "cls_report.json"));
    EXPECT_EQ(j["Accuracy"].get<double>(), 100.0 * s.accuracy);
    EXPECT_EQ(j["AUC"].get<double>(), *s.auc);
    EXPECT_EQ(j["Loss"].get<double>(), s.loss);
    EXPECT_NEAR(j["Accuracy"].get<double>(), 92.14, 0.005);
}

TEST_F(Cli, SeedRunsAreByteIdentical) {
    const std::string m = (root_ / "m.csv").string();
    ASSERT_EQ(run("split --seed 5 --manifest " + m + " --out " + (root_ / "s1.csv").string()).code, 0);
    ASSERT_EQ(run("split --seed 5 --manifest " + m + " --out " + (root_ / "s2.csv").string()).code, 0);
    ASSERT_EQ(run("split --seed 6 --manifest " + m + " --out " + (root_ / "s3.csv").string()).code, 0);
    EXPECT_EQ(slurp(root_ / "s1.csv"), slurp(root_ / "s2.csv"));
    EXPECT_NE(slurp(root_ / "s1.csv"), slurp(root_ / "s3.csv"));
}

TEST_F(Cli, OutputsIndependentOfThreadCount) {
    const std::string m = (root_ / "m.csv").string();
    ASSERT_EQ(run("audit --threads 1 --manifest " + m + " --out-dir " + (root_ / "t1").string()).code, 0);
    ASSERT_EQ(run("audit --threads 3 --manifest " + m + " --out-dir " + (root_ / "t3").string()).code, 0);
    EXPECT_EQ(slurp(root_ / "t1" / "audit.csv"), slurp(root_ / "t3" / "audit.csv"));
    EXPECT_EQ(slurp(root_ / "t1" / "manifest_annotated.csv"), slurp(root_ / "t3" / "manifest_annotated.csv"));
}

TEST_F(Cli, InputsAreNotModified) {
    const std::string before = slurp(root_ / "m.csv");
    ASSERT_EQ(run("split --manifest " + (root_ / "m.csv").string() + " --out " + (root_ / "s4.csv").string()).code, 0);
    EXPECT_EQ(slurp(root_ / "m.csv"), before);
}

TEST_F(Cli, EnvironmentSuppliesPaths) {
    const std::string cmd = "DERMFAIR_MANIFEST=" + (root_ / "m.csv").string() + " split --out " +
                            (root_ / "s5.csv").string();
    const int status = std::system((cmd.substr(0, cmd.find(' ')) + " " + DERMFAIR_CLI + cmd.substr(cmd.find(' ')) +
                                    " > /dev/null 2>&1")
                                       .c_str());
    EXPECT_EQ(WEXITSTATUS(status), 0);
    EXPECT_TRUE(fs::exists(root_ / "s5.csv"));
}
