#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "safe_lsvi/errors.hpp"
#include "safe_lsvi/instance_io.hpp"
#include "safe_lsvi_cli/cli.hpp"

namespace {

namespace fs = std::filesystem;
using safe_lsvi::cli::cli_run;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("safe_lsvi_cli_" + name);
  fs::remove_all(p);
  return p;
}

// Replaces every leaf by its type name, keeping keys and nesting; arrays
// collapse to the schema of their first element.
nlohmann::ordered_json schema_of(const nlohmann::ordered_json& j) {
  if (j.is_object()) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [k, v] : j.items()) out[k] = schema_of(v);
    return out;
  }
  if (j.is_array()) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    if (!j.empty()) out.push_back(schema_of(j.front()));
    return out;
  }
  if (j.is_number()) return "number";
  return j.type_name();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(Cli, SeedLists) {
  using safe_lsvi::cli::parse_seed_list;
  EXPECT_EQ(parse_seed_list("0..3"), (std::vector<unsigned long long>{0, 1, 2, 3}));
  EXPECT_EQ(parse_seed_list("1,4,7"), (std::vector<unsigned long long>{1, 4, 7}));
  EXPECT_EQ(parse_seed_list("5"), (std::vector<unsigned long long>{5}));
  EXPECT_THROW(parse_seed_list("3..1"), safe_lsvi::ConfigError);
  EXPECT_THROW(parse_seed_list("a,b"), safe_lsvi::ConfigError);
  EXPECT_THROW(parse_seed_list(""), safe_lsvi::ConfigError);
}

TEST(Cli, HelpAndBadArguments) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"run", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({"run", "--generate", "d=4", "--corridor"}).code, 2);
  const auto bad_key = run({"run", "--generate", "d=4,colour=2", "--out", fresh_dir("bad").string()});
  EXPECT_EQ(bad_key.code, 2);
  EXPECT_NE(bad_key.err.find("colour"), std::string::npos);
}

TEST(Cli, TightParametersAreAConfigError) {
  const auto r = run({"run", "--generate", "d=4,H=4,S=6,A=3", "--episodes", "2000", "--lambda0", "0.1", "--out",
                      fresh_dir("tight").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("config error"), std::string::npos);
}

TEST(Cli, MetricsHaveOneRowPerEpisodeAndSeed) {
  const fs::path dir = fresh_dir("rows");
  const auto r = run({"run", "--generate", "d=4,H=4,S=6,A=3", "--episodes", "2000", "--seeds", "0..9", "--out",
                      dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines_of(slurp(dir / "metrics.csv"));
  EXPECT_EQ(rows.size(), 20001u);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["runs"].size(), 10u);
  EXPECT_EQ(summary["aggregate"]["runs_with_violations"], 0);
}

TEST(Cli, SeedOnlyRegretGrowsByTheValueGap) {
  const fs::path dir = fresh_dir("seed_only");
  ASSERT_EQ(run({"run", "--generate", "d=4,H=4,S=6,A=3", "--agent", "seed-only", "--episodes", "50", "--out",
                 dir.string()})
                .code,
            0);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  const double gap = summary["runs"][0]["v_star"].get<double>() - summary["runs"][0]["seed_value"].get<double>();
  const auto rows = lines_of(slurp(dir / "metrics.csv"));
  for (std::size_t k = 1; k < rows.size(); ++k) {
    std::vector<std::string> cells;
    std::stringstream ss(rows[k]);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    EXPECT_NEAR(std::stod(cells[3]), static_cast<double>(k) * gap, 1e-9 * static_cast<double>(k) + 1e-10);
  }
}

TEST(Cli, LowerBoundSummaryNamesUnsafeFourthAction) {
  const fs::path dir = fresh_dir("lb");
  ASSERT_EQ(run({"run", "--lower-bound", "variant=1", "--episodes", "500", "--out", dir.string()}).code, 0);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  const auto unsafe = summary["runs"][0]["unsafe_actions_s1"].get<std::vector<int>>();
  EXPECT_NE(std::find(unsafe.begin(), unsafe.end(), 3), unsafe.end());
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  const std::vector<std::string> base{"run", "--generate", "d=4,H=4,S=6,A=3", "--episodes", "1000", "--seeds", "0..3"};
  auto args_a = base, args_b = base;
  args_a.insert(args_a.end(), {"--out", a.string(), "--threads", "1"});
  args_b.insert(args_b.end(), {"--out", b.string(), "--threads", "4"});
  ASSERT_EQ(run(args_a).code, 0);
  ASSERT_EQ(run(args_b).code, 0);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
}

TEST(Cli, SummaryMatchesGoldenSchema) {
  const fs::path dir = fresh_dir("schema");
  ASSERT_EQ(run({"run", "--generate", "d=4,H=4,S=6,A=3", "--episodes", "1000", "--track-gap", "--timing", "--out",
                 dir.string()})
                .code,
            0);
  const auto schema = schema_of(nlohmann::ordered_json::parse(slurp(dir / "summary.json")));
  const fs::path golden = fs::path(SAFE_LSVI_GOLDEN_DIR) / "summary_schema.json";
  if (std::getenv("SAFE_LSVI_UPDATE_GOLDEN")) std::ofstream(golden, std::ios::binary) << schema.dump(2) << "\n";
  ASSERT_TRUE(fs::exists(golden));
  EXPECT_EQ(schema.dump(2) + "\n", slurp(golden));
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const fs::path dir = fresh_dir("env");
  ::setenv("SAFE_LSVI_OUT_DIR", dir.c_str(), 1);
  const auto r = run({"run", "--corridor", "--episodes", "2000"});
  ::unsetenv("SAFE_LSVI_OUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
}

TEST(Cli, GenerateAndCheckInstance) {
  const auto gen = run({"generate", "--generate", "d=4,H=3,S=4,A=2", "--seed", "7", "--out", "-"});
  ASSERT_EQ(gen.code, 0);
  const auto inst = safe_lsvi::instance_from_json(gen.out);
  EXPECT_EQ(inst.H, 3);
  EXPECT_EQ(inst.n_actions, 2);

  const fs::path dir = fresh_dir("check");
  fs::create_directories(dir);
  const fs::path file = dir / "inst.json";
  ASSERT_EQ(run({"generate", "--generate", "d=4,H=3,S=4,A=2", "--seed", "7", "--out", file.string()}).code, 0);
  EXPECT_EQ(slurp(file), gen.out);
  const auto check = run({"check-instance", file.string()});
  ASSERT_EQ(check.code, 0);
  const auto diag = nlohmann::json::parse(check.out);
  for (const char* key : {"d", "H", "delta", "delta_phi_c", "delta_c", "star_convex_ok", "flags", "v_star"}) {
    EXPECT_TRUE(diag.contains(key)) << key;
  }

  std::ofstream(dir / "broken.json") << "{\"d\": 2";
  EXPECT_EQ(run({"check-instance", (dir / "broken.json").string()}).code, 2);
  EXPECT_EQ(run({"check-instance", (dir / "missing.json").string()}).code, 2);
}

TEST(Cli, DiagnoseWritesGapTable) {
  const fs::path dir = fresh_dir("diagnose");
  const auto r = run({"diagnose", "--generate", "d=4,H=4,S=6,A=3", "--sigma", "0", "--episodes", "400", "--every",
                      "100", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines_of(slurp(dir / "safety_gap.csv"));
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0], "episode,h,s,a,s_prime,true_gap,est_gap,slack");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double slack = std::stod(rows[i].substr(rows[i].rfind(',') + 1));
    EXPECT_GE(slack, -1e-6) << rows[i];
  }
  EXPECT_TRUE(fs::exists(dir / "diagnostics.json"));
}

}  // namespace
