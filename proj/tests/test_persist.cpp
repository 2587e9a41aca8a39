#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lbsda/persist.hpp"

using namespace lbsda;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lbsda_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

ExperimentConfig tiny() {
  PresetOverrides o;
  o.horizon = 400;
  o.replications = 3;
  o.seed = 5;
  return find_preset("fig4-bernoulli-nonstationary")->build(o);
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  Rng rng = make_rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double x = (uniform01(rng) - 0.5) * std::pow(10.0, static_cast<double>(uniform_index(rng, 40)) - 20.0);
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(18.0), "18");
  EXPECT_TRUE(std::isnan(parse_double(format_double(std::numeric_limits<double>::quiet_NaN()))));
  EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
}

TEST(Csv, HeaderAndRoundTrip) {
  auto cfg = tiny();
  auto res = run_experiment(cfg, 1);
  std::stringstream ss;
  const auto rows = csv_rows(res);
  write_csv(rows, ss);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "t,policy,mean_regret,q25,q75");
  EXPECT_EQ(read_csv(ss), rows);
  std::size_t expected = 0;
  for (const auto& p : res.policies) expected += p.times.size();
  EXPECT_EQ(rows.size(), expected);
}

TEST(Csv, MalformedInputIsRejected) {
  std::istringstream bad_header("t,policy\n");
  EXPECT_THROW(read_csv(bad_header), std::invalid_argument);
  std::istringstream bad_row("t,policy,mean_regret,q25,q75\n1,a,0.5,0.1\n");
  EXPECT_THROW(read_csv(bad_row), std::invalid_argument);
  std::istringstream bad_num("t,policy,mean_regret,q25,q75\n1,a,x,0.1,0.2\n");
  EXPECT_THROW(read_csv(bad_num), std::invalid_argument);
}

TEST(Persist, WritesCsvAndManifest) {
  auto dir = scratch("persist");
  auto cfg = tiny();
  auto res = run_experiment(cfg, 2);
  auto paths = persist_results(cfg, res, dir, "out", {"a warning"});
  EXPECT_TRUE(std::filesystem::exists(paths.csv));
  EXPECT_EQ(read_csv_file(paths.csv), csv_rows(res));

  std::ifstream in(paths.manifest);
  auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m["software"]["version"], kVersion);
  EXPECT_EQ(m["seeds"], (std::vector<std::uint64_t>{5, 6, 7}));
  ASSERT_EQ(m["environment_phases"].size(), 4u);
  EXPECT_EQ(m["environment_phases"][1]["start"], 101u);
  EXPECT_EQ(m["warnings"][0], "a warning");
  EXPECT_EQ(m["policies"].size(), cfg.policies.size());
  EXPECT_EQ(parse_config_text(m["config"].dump()).config, cfg);
  std::filesystem::remove_all(dir);
}

TEST(Persist, IoErrorsCarryPath) {
  auto file = scratch("blocker");
  { std::ofstream(file) << "x"; }
  auto cfg = tiny();
  cfg.replications = 1;
  auto res = run_experiment(cfg, 1);
  try {
    persist_results(cfg, res, file / "sub", "out");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("lbsda_test_blocker"), std::string::npos);
  }
  try {
    read_csv_file(file / "missing.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.csv"), std::string::npos);
  }
  std::filesystem::remove(file);
}
