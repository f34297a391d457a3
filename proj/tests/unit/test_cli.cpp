#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>

#include "perfsampler/perfsampler.hpp"

namespace fs = std::filesystem;
using namespace perfsampler;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PERF_SAMPLER_BIN) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Value after "output: " in the tool's stdout.
fs::path output_dir(const Run& r) {
  const auto at = r.out.rfind("output: ");
  if (at == std::string::npos) return {};
  const auto end = r.out.find('\n', at);
  return r.out.substr(at + 8, end - at - 8);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("perfsampler_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const Json& j) const {
    const auto p = (dir_ / name).string();
    write_json_file(p, j);
    return p;
  }
  std::string out() const { return (dir_ / "out").string(); }
  std::string data(const std::string& name) const { return std::string(PERFSAMPLER_DATA_DIR) + "/lrzip/" + name; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("sample --out " + out()).code, 2);  // no --spec
  EXPECT_EQ(run("sample --spec " + (dir_ / "missing.json").string()).code, 2);
  const auto bad = (dir_ / "bad.json").string();
  write_text_file(bad, "{ not json");
  EXPECT_EQ(run("evaluate --spec " + bad + " --out " + out()).code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, BudgetOutsideTheSpaceIsRejected) {
  for (int budget : {0, 1201}) {
    Json spec = Json::parse(read_text_file(data("sample_random.json")));
    for (const char* k : {"csv", "space", "docs"}) spec["dataset"][k] = data(spec["dataset"][k].get<std::string>());
    spec["budget"] = budget;
    const auto r = run("sample --spec " + write("s.json", spec) + " --out " + out());
    EXPECT_EQ(r.code, 2) << r.out;
  }
  EXPECT_FALSE(fs::exists(out()) && !fs::is_empty(out()));  // nothing left behind
}

TEST_F(Cli, PruneAndSampleOnShippedData) {
  const auto pr = run("prune --spec " + data("prune.json") + " --out " + out());
  ASSERT_EQ(pr.code, 0) << pr.out;
  const auto pruned = read_space_file((output_dir(pr) / "pruned_space.json").string());
  EXPECT_FALSE(pruned.find("-N").has_value());
  EXPECT_TRUE(fs::exists(output_dir(pr) / "transcript.jsonl"));

  const auto sr = run("sample --spec " + data("sample_llm4perf.json") + " --out " + out());
  ASSERT_EQ(sr.code, 0) << sr.out;
  EXPECT_NE(sr.out.find("iterations: 7 7 6"), std::string::npos) << sr.out;
  const Json outcome = read_json_file((output_dir(sr) / "outcome.json").string());
  EXPECT_EQ(outcome["configurations"].size(), 20u);

  // Same inputs map to the same output directory with the same content.
  const auto again = run("sample --spec " + data("sample_llm4perf.json") + " --out " + out());
  EXPECT_EQ(output_dir(again), output_dir(sr));
  EXPECT_EQ(read_json_file((output_dir(again) / "outcome.json").string()).dump(), outcome.dump());
  // A different seed goes elsewhere.
  const auto seeded = run("sample --spec " + data("sample_llm4perf.json") + " --seed 2 --out " + out());
  EXPECT_NE(output_dir(seeded), output_dir(sr));
}

TEST_F(Cli, SynthThenEvaluateThenReport) {
  const auto syn = run("synth --spec " + write("synth.json", {{"fixture", "lrzip"}}) + " --out " + out());
  ASSERT_EQ(syn.code, 0) << syn.out;
  const auto sd = output_dir(syn);
  for (const char* f : {"space.json", "pruned_space.json", "docs.json", "measurements.csv", "mock.json"}) {
    EXPECT_TRUE(fs::exists(sd / f)) << f;
  }
  const auto ds = load_dataset((sd / "measurements.csv").string(), (sd / "space.json").string());
  EXPECT_EQ(ds.size(), 1200u);

  Json spec = {{"datasets", Json::array({{{"csv", (sd / "measurements.csv").string()},
                                          {"space", (sd / "space.json").string()},
                                          {"pruned_space", (sd / "pruned_space.json").string()},
                                          {"docs", (sd / "docs.json").string()},
                                          {"name", "lrzip"}}})},
               {"samplers", Json::array({"random", "nsbs"})},
               {"budgets", {10, 20}},
               {"repetitions", 2},
               {"models", {"gbt"}},
               {"reference", "random"},
               {"candidate", "nsbs"},
               {"seed", 3}};
  const auto ev = run("evaluate --spec " + write("eval.json", spec) + " --out " + out());
  ASSERT_EQ(ev.code, 0) << ev.out;
  const auto ed = output_dir(ev);
  const std::string csv = read_text_file((ed / "report.csv").string());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 2 * 2);  // metrics x budgets x samplers

  const auto rp = run("report --spec " +
                      write("report.json", {{"raw", (ed / "raw.jsonl").string()}, {"reference", "random"}, {"candidate", "nsbs"}}) +
                      " --out " + out());
  ASSERT_EQ(rp.code, 0) << rp.out;
  EXPECT_EQ(read_text_file((output_dir(rp) / "report.csv").string()), csv);
}
