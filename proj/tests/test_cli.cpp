#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code{-1};
  std::string out;
};

Run shell(const std::string& command) {
  const std::string cmd = "(" + command + ") 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Run gapar(const std::string& args) { return shell(std::string(GAPAR_CLI_PATH) + " " + args); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t data_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line[0] != 't') ++n;
  return n;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gapar_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  // A short fig3 series shared by the fitting commands.
  std::string series(std::size_t n = 300) {
    const auto path = p("series.csv");
    const auto r = gapar("--seed 4 simulate --scenario fig3 --n " + std::to_string(n) + " --out " + path);
    EXPECT_EQ(r.code, 0) << r.out;
    return path;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesRequestedRows) {
  const auto r = gapar("--seed 1 simulate --scenario 1 --n 1000 --out " + p("s.csv") + " --model-out " + p("m.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(data_rows(p("s.csv")), 1000u);
  const auto model = nlohmann::json::parse(slurp(p("m.json")));
  EXPECT_EQ(model.at("format_version"), 1);
  EXPECT_EQ(model.at("config").at("subcommand"), "simulate");
}

TEST_F(CliTest, SimulateFromModelFile) {
  ASSERT_EQ(gapar("simulate --scenario 3 --n 50 --out " + p("a.csv") + " --model-out " + p("m.json")).code, 0);
  const auto r = gapar("simulate --model " + p("m.json") + " --n 80 --out " + p("b.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(data_rows(p("b.csv")), 80u);
  EXPECT_EQ(gapar("simulate --model " + p("m.json") + " --scenario 1 --out " + p("c.csv")).code, 2);
}

TEST_F(CliTest, MissingRequiredOptionIsUsageError) {
  EXPECT_EQ(gapar("simulate --scenario 1").code, 2);
  EXPECT_EQ(gapar("").code, 2);
  EXPECT_EQ(gapar("simulate --scenario 9 --out " + p("x.csv")).code, 2);
  EXPECT_EQ(gapar("--jobs 0 simulate --scenario 1 --out " + p("x.csv")).code, 2);
  EXPECT_EQ(gapar("--help").code, 0);
}

TEST_F(CliTest, CorruptCsvNamesTheLine) {
  std::ofstream(p("bad.csv")) << "t,x\n0,1.0\n1,2.0\n2,oops\n";
  const auto r = gapar("fit --input " + p("bad.csv") + " --order 1 --states 1 --out " + p("f.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find(":4:"), std::string::npos) << r.out;
}

TEST_F(CliTest, FitReportsLikelihood) {
  const auto s = series();
  const auto r = gapar("fit --input " + s + " --order 4 --states 2 --out " + p("f.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("loglik="), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(p("f.json")));
  EXPECT_EQ(j.at("model").at("filters").size(), 2u);
}

TEST_F(CliTest, SeriesTooShortIsInvalidInput) {
  std::ofstream(p("short.csv")) << "0,1\n1,2\n2,3\n";
  EXPECT_EQ(gapar("fit --input " + p("short.csv") + " --order 2 --states 2 --out " + p("f.json")).code, 2);
}

TEST_F(CliTest, UnsupportedResultantOrder) {
  const auto r = gapar("distance --a 0.1,0.1,0.1,0.1,0.1,0.1,0.1 --b 0,0,0,0,0,0,0 --method resultant");
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST_F(CliTest, DistanceOfCanonicalPair) {
  const auto r = gapar("distance --a -0.5 --b -0.3 --method cov");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("distance=0.05333333333333"), std::string::npos) << r.out;
}

TEST_F(CliTest, UnitVariantUsesUnitRadius) {
  const auto s = series();
  const auto r = gapar("select --input " + s + " --order 4 --max-states 2 --variant U --F 60 --iter 2 --restarts 3 " +
                       "--out-prefix " + p("sel"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(p("sel.json")));
  EXPECT_EQ(j.at("r_used").get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(p("sel_observed.csv")));
  EXPECT_TRUE(fs::exists(p("sel_reference.csv")));
}

TEST_F(CliTest, BenchmarkMethodSubset) {
  const auto r = gapar("benchmark --scenario 3 --instances 2 --n 200 --max-states 2 --methods gap-b,aic --F 50 " +
                       std::string("--iter 2 --restarts 2 --out-prefix ") + p("b"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(p("b.json")));
  const std::string dump = j.dump();
  EXPECT_NE(dump.find("gap-b"), std::string::npos);
  EXPECT_EQ(dump.find("\"bic\""), std::string::npos);
  EXPECT_EQ(dump.find("\"gap-u\""), std::string::npos);
  EXPECT_EQ(gapar("benchmark --methods gap-x --out-prefix " + p("c")).code, 2);
}

TEST_F(CliTest, ConfigFileSuppliesOptions) {
  std::ofstream(p("run.ini")) << "seed=11\n[simulate]\nscenario=2\nn=120\nout=" << p("cfg.csv") << "\n";
  const auto r = gapar("--config " + p("run.ini") + " simulate");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(data_rows(p("cfg.csv")), 120u);
  const std::string body = slurp(p("cfg.csv"));
  EXPECT_NE(body.find("# seed=11"), std::string::npos);
  EXPECT_NE(body.find("# scenario=2"), std::string::npos);
}

TEST_F(CliTest, EverySubcommandIsByteIdenticalOnRerun) {
  const auto s = series();
  std::ofstream(p("filters_in.csv")) << "psi_1\n-0.5\n0.3\n0.1\n";
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"--seed 3 simulate --scenario 1 --n 400 --out {d}/s.csv --model-out {d}/m.json", {"s.csv", "m.json"}},
      {"fit --input " + s + " --order 4 --states 3 --out {d}/f.json", {"f.json"}},
      {"--seed 5 select --input " + s + " --order 4 --max-states 3 --F 60 --iter 2 --restarts 3 --out-prefix {d}/sel",
       {"sel.json", "sel_observed.csv", "sel_reference.csv"}},
      {"--seed 6 gen-filters --order 3 --radius 0.8 --count 25 --out {d}/g.csv", {"g.csv"}},
      {"--seed 7 distance --a -0.5 --b -0.3 --method mc --mc-samples 20000 --out {d}/d.json", {"d.json"}},
      {"distance --filters " + p("filters_in.csv") + " --out {d}/dm.json", {"dm.json"}},
      {"--seed 8 benchmark --scenario 3 --instances 2 --n 200 --max-states 2 --F 40 --iter 2 --restarts 2 "
       "--out-prefix {d}/b",
       {"b.json", "b.csv"}},
      {"--seed 9 reference-curve --order 2 --radius 0.6 --max-states 3 --F 40 --iter 2 --restarts 2 "
       "--out-prefix {d}/rc",
       {"rc.json", "rc.csv"}},
  };
  for (const auto& [args, outputs] : cases) {
    std::vector<std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path d = dir_ / ("rep" + std::to_string(rep));
      fs::create_directories(d);
      std::string a = args;
      for (auto pos = a.find("{d}"); pos != std::string::npos; pos = a.find("{d}"))
        a.replace(pos, 3, ".");
      // Run inside the per-rep directory so the echoed paths match too.
      const auto r = shell("cd " + d.string() + " && " + std::string(GAPAR_CLI_PATH) + " " + a);
      ASSERT_EQ(r.code, 0) << a << "\n" << r.out;
      for (std::size_t i = 0; i < outputs.size(); ++i) {
        const std::string body = slurp(d / outputs[i]);
        ASSERT_FALSE(body.empty()) << outputs[i];
        if (rep == 0)
          first.push_back(body);
        else
          EXPECT_EQ(body, first[i]) << a << " -> " << outputs[i];
      }
      fs::remove_all(d);
    }
  }
}
