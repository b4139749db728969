#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli_io.hpp"
#include "rcbc/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "rcbc_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(RCBC_CLI_PATH) + " " + args + " > " + (work_dir() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string path(const std::string& rel) { return (work_dir() / rel).string(); }

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& p) { return json::parse(slurp(p)); }

// small simulated data set shared by several tests
void ensure_sim() {
  static bool done = false;
  if (done) return;
  ASSERT_EQ(run("simulate --n 30 --p 24 --row-blocks 3 --col-blocks 2 --sigma 0.5 --noise t --seed 4 --out-dir " +
                path("sim")),
            0);
  done = true;
}

}  // namespace

TEST(Cli, SimulateWritesFiles) {
  ensure_sim();
  const auto data = rcbc::cli::read_csv(path("sim/data.csv"), false, false);
  EXPECT_EQ(data.values.rows(), 30u);
  EXPECT_EQ(data.values.cols(), 24u);
  EXPECT_EQ(rcbc::cli::read_labels(path("sim/truth_row_labels.csv")).size(), 30u);
  EXPECT_EQ(rcbc::cli::read_labels(path("sim/truth_col_labels.csv")).size(), 24u);
  const auto spec = read_json(path("sim/spec.json"));
  EXPECT_EQ(spec["noise"], "t");
  EXPECT_EQ(spec["seed"], 4);
}

TEST(Cli, SimulateDefaultsAndDeterminism) {
  ASSERT_EQ(run("simulate --seed 2 --out-dir " + path("sim_a")), 0);
  ASSERT_EQ(run("simulate --seed 2 --out-dir " + path("sim_b")), 0);
  EXPECT_EQ(slurp(path("sim_a/data.csv")), slurp(path("sim_b/data.csv")));
  const auto truth = rcbc::cli::read_labels(path("sim_a/truth_row_labels.csv"));
  EXPECT_EQ(truth.size(), 100u);
  EXPECT_EQ(*std::max_element(truth.begin(), truth.end()), 3);
}

TEST(Cli, SimulateNoiselessBlocksAreConstant) {
  ASSERT_EQ(run("simulate --n 8 --p 6 --row-blocks 2 --col-blocks 3 --sigma 1e-12 --noise none --out-dir " +
                path("flat")),
            0);
  const auto x = rcbc::cli::read_csv(path("flat/data.csv"), false, false).values;
  EXPECT_NEAR(x(0, 0), x(3, 1), 1e-10);
  EXPECT_NEAR(x(4, 4), x(7, 5), 1e-10);
}

TEST(Cli, SimulateRejectsBadSpec) {
  EXPECT_EQ(run("simulate --n 3 --row-blocks 5 --out-dir " + path("bad")), 64);
  EXPECT_EQ(run("simulate --noise gamma --out-dir " + path("bad")), 64);
  EXPECT_EQ(run("simulate --sigma -1 --out-dir " + path("bad")), 64);
}

TEST(Cli, FitLambdaZeroReturnsInput) {
  ensure_sim();
  ASSERT_EQ(run("fit " + path("sim/data.csv") + " --lambda 0 --out-dir " + path("fit0")), 0);
  const auto x = rcbc::cli::read_csv(path("sim/data.csv"), false, false).values;
  const auto u = rcbc::cli::read_csv(path("fit0/u_hat.csv"), false, false).values;
  EXPECT_LE(rcbc::frobenius_distance(x, u), 1e-6);
  const auto s = read_json(path("fit0/summary.json"));
  EXPECT_EQ(s["lambda"], 0.0);
  EXPECT_EQ(s["n_row_clusters"], 30);
  EXPECT_TRUE(s["converged"].get<bool>());
}

TEST(Cli, FitSummaryAndLabelsAgree) {
  ensure_sim();
  ASSERT_EQ(run("fit " + path("sim/data.csv") + " --lambda 20 --heatmap --out-dir " + path("fit20")), 0);
  const auto s = read_json(path("fit20/summary.json"));
  const auto rows = rcbc::cli::read_labels(path("fit20/row_labels.csv"));
  const auto cols = rcbc::cli::read_labels(path("fit20/col_labels.csv"));
  EXPECT_EQ(s["n_row_clusters"].get<int>(), *std::max_element(rows.begin(), rows.end()) + 1);
  EXPECT_EQ(s["n_col_clusters"].get<int>(), *std::max_element(cols.begin(), cols.end()) + 1);
  for (const char* key : {"lambda", "tau", "row_k", "col_k", "xi", "delta", "rho", "tol", "inner_tol", "max_outer",
                          "max_inner", "fuse_tol", "top_variance", "seed"}) {
    EXPECT_TRUE(s["config"].contains(key)) << key;
  }
  EXPECT_GE(s["tau_trajectory"].size(), 1u);
  EXPECT_EQ(slurp(path("fit20/heatmap.ppm")).substr(0, 2), "P6");
}

TEST(Cli, ConfigEchoReproducesRun) {
  ensure_sim();
  ASSERT_EQ(run("fit " + path("sim/data.csv") + " --lambda 5 --tau mad --out-dir " + path("echo1")), 0);
  const auto c = read_json(path("echo1/summary.json"))["config"];
  std::ostringstream args;
  args << "fit " << c["input"].get<std::string>() << " --lambda " << c["lambda"].dump() << " --tau "
       << c["tau"].get<std::string>() << " --row-k " << c["row_k"] << " --col-k " << c["col_k"] << " --xi "
       << c["xi"].dump() << " --delta " << c["delta"].get<std::string>() << " --rho " << c["rho"].dump() << " --tol "
       << c["tol"].dump() << " --inner-tol " << c["inner_tol"].dump() << " --max-outer " << c["max_outer"]
       << " --max-inner " << c["max_inner"] << " --fuse-tol " << c["fuse_tol"].dump() << " --seed " << c["seed"]
       << " --out-dir " << path("echo2");
  ASSERT_EQ(run(args.str()), 0);
  EXPECT_EQ(slurp(path("echo1/u_hat.csv")), slurp(path("echo2/u_hat.csv")));
  EXPECT_EQ(slurp(path("echo1/row_labels.csv")), slurp(path("echo2/row_labels.csv")));
}

TEST(Cli, NonRobustModeFlags) {
  ensure_sim();
  ASSERT_EQ(run("fit " + path("sim/data.csv") + " --lambda 5 --tau inf --delta inf --out-dir " + path("squared")), 0);
  const auto c = read_json(path("squared/summary.json"));
  EXPECT_EQ(c["config"]["tau"], "inf");
  EXPECT_EQ(c["config"]["delta"], "inf");
  EXPECT_EQ(c["tau_trajectory"].size(), 1u);
  EXPECT_TRUE(c["tau_trajectory"][0].is_null());  // infinity has no JSON number form
}

TEST(Cli, TopVarianceFilterAndNames) {
  // 40 rows x 12 columns with names; 3 row groups differ in level
  std::ofstream out(path("named.csv"));
  out << "gene";
  for (int j = 0; j < 12; ++j) out << ",s" << j;
  out << '\n';
  for (int i = 0; i < 40; ++i) {
    out << "g" << i;
    for (int j = 0; j < 12; ++j) {
      const double level = (i % 3) * 4.0 * ((j < 6) ? 1 : -1);
      out << ',' << level + 0.01 * ((i * 7 + j * 3) % 11);
    }
    out << '\n';
  }
  out.close();
  ASSERT_EQ(run("fit " + path("named.csv") + " --header --rownames --top-variance 20 --row-k 4 --col-k 3 --lambda 3 "
                "--out-dir " + path("named_fit")),
            0);
  const auto u = rcbc::cli::read_csv(path("named_fit/u_hat.csv"), true, true);
  EXPECT_EQ(u.values.rows(), 20u);
  EXPECT_EQ(u.col_names.front(), "s0");
  const auto s = read_json(path("named_fit/summary.json"));
  EXPECT_EQ(s["kept_rows"].size(), 20u);
  EXPECT_GE(s["n_row_clusters"].get<int>(), 2);
  const std::string labels = slurp(path("named_fit/row_labels.csv"));
  EXPECT_EQ(labels.substr(0, 2), "g1");
}

TEST(Cli, CrossValidationReport) {
  ensure_sim();
  ASSERT_EQ(run("cv " + path("sim/data.csv") + " --grid 0.5,5,50 --folds 3 --seed 9 --threads 1 --out-dir " +
                path("cv1")),
            0);
  ASSERT_EQ(run("cv " + path("sim/data.csv") + " --grid 0.5,5,50 --folds 3 --seed 9 --threads 2 --out-dir " +
                path("cv2")),
            0);
  const std::string report = slurp(path("cv1/cv_report.json"));
  EXPECT_EQ(report, slurp(path("cv2/cv_report.json")));
  const auto j = json::parse(report);
  ASSERT_EQ(j["mse_per_lambda"].size(), 3u);
  for (std::size_t g = 0; g < 3; ++g) {
    double s = 0.0;
    for (const auto& f : j["fold_mse"]) s += f[g].get<double>();
    EXPECT_NEAR(j["mse_per_lambda"][g].get<double>(), s / 3.0, 1e-12);
  }
  EXPECT_EQ(read_json(path("cv1/summary.json"))["lambda"], j["best_lambda"]);
}

TEST(Cli, CrossValidationZeroGridAndLogGrid) {
  ensure_sim();
  ASSERT_EQ(run("cv " + path("sim/data.csv") + " --grid 0 --folds 2 --out-dir " + path("cv0")), 0);
  EXPECT_EQ(read_json(path("cv0/cv_report.json"))["best_lambda"], 0.0);
  const auto x = rcbc::cli::read_csv(path("sim/data.csv"), false, false).values;
  const auto u = rcbc::cli::read_csv(path("cv0/u_hat.csv"), false, false).values;
  EXPECT_LE(rcbc::frobenius_distance(x, u), 1e-6);
  ASSERT_EQ(run("fit --cv " + path("sim/data.csv") + " --grid log:1:100:3 --folds 2 --out-dir " + path("cvlog")), 0);
  EXPECT_EQ(read_json(path("cvlog/cv_report.json"))["grid"].size(), 3u);
}

TEST(Cli, EvaluateConstants) {
  {
    std::ofstream ones(path("one.csv"));
    for (int i = 0; i < 100; ++i) ones << "0\n";
    std::ofstream four(path("four.csv"));
    for (int i = 0; i < 100; ++i) four << i / 25 << '\n';
    std::ofstream five(path("five.csv"));
    for (int i = 0; i < 100; ++i) five << i / 20 << '\n';
  }
  const std::string one = path("one.csv");
  ASSERT_EQ(run("evaluate --row-labels " + one + " --col-labels " + one + " --truth-row-labels " + path("four.csv") +
                " --truth-col-labels " + path("four.csv") + " --out-dir " + path("ev4")),
            0);
  const auto m4 = read_json(path("ev4/metrics.json"));
  EXPECT_NEAR(m4["ri"].get<double>(), 0.0624, 1e-4);
  EXPECT_NEAR(m4["ari"].get<double>(), 0.0, 1e-9);
  EXPECT_NEAR(m4["nvi"].get<double>(), 1.0, 1e-6);
  ASSERT_EQ(run("evaluate --row-labels " + one + " --col-labels " + one + " --truth-row-labels " + path("five.csv") +
                " --truth-col-labels " + path("five.csv") + " --out-dir " + path("ev5")),
            0);
  EXPECT_NEAR(read_json(path("ev5/metrics.json"))["ri"].get<double>(), 0.0399, 1e-4);
  const std::string four = path("four.csv");
  ASSERT_EQ(run("evaluate --row-labels " + four + " --col-labels " + four + " --truth-row-labels " + four +
                " --truth-col-labels " + four + " --out-dir " + path("ev_same")),
            0);
  const auto same = read_json(path("ev_same/metrics.json"));
  EXPECT_EQ(same["ri"], 1.0);
  EXPECT_EQ(same["ari"], 1.0);
  EXPECT_EQ(same["vi_nats"], 0.0);
  EXPECT_EQ(same["nvi"], 0.0);
}

TEST(Cli, EndToEndRoundTrip) {
  ensure_sim();
  ASSERT_EQ(run("fit " + path("sim/data.csv") + " --lambda 10 --out-dir " + path("e2e")), 0);
  ASSERT_EQ(run("evaluate --row-labels " + path("e2e/row_labels.csv") + " --col-labels " + path("e2e/col_labels.csv") +
                " --truth-row-labels " + path("sim/truth_row_labels.csv") + " --truth-col-labels " +
                path("sim/truth_col_labels.csv") + " --out-dir " + path("e2e")),
            0);
  EXPECT_TRUE(read_json(path("e2e/metrics.json")).contains("ari"));
}

TEST(Cli, ExitCodes) {
  ensure_sim();
  EXPECT_EQ(run("fit " + path("missing.csv") + " --lambda 1"), 2);
  std::ofstream(path("broken.csv")) << "1,2,3\n4,five,6\n";
  EXPECT_EQ(run("fit " + path("broken.csv") + " --lambda 1"), 2);
  EXPECT_EQ(run("fit " + path("sim/data.csv")), 64);
  EXPECT_EQ(run("fit " + path("sim/data.csv") + " --lambda 1 --no-such-flag"), 64);
  EXPECT_EQ(run("fit " + path("sim/data.csv") + " --lambda 1 --tau banana"), 64);
  EXPECT_EQ(run("fit " + path("sim/data.csv") + " --lambda 1 --row-k 500"), 64);
  EXPECT_EQ(run("cv " + path("sim/data.csv") + " --grid log:1:2"), 64);
  EXPECT_EQ(run("frobnicate"), 64);
  EXPECT_EQ(run("evaluate --row-labels " + path("sim/truth_row_labels.csv") + " --col-labels " +
                path("sim/truth_col_labels.csv") + " --truth-row-labels " + path("sim/truth_col_labels.csv") +
                " --truth-col-labels " + path("sim/truth_col_labels.csv")),
            2);
  // a run that hits the iteration cap still succeeds
  EXPECT_EQ(run("fit " + path("sim/data.csv") + " --lambda 3 --max-outer 1 --out-dir " + path("capped")), 0);
  EXPECT_FALSE(read_json(path("capped/summary.json"))["converged"].get<bool>());
}
