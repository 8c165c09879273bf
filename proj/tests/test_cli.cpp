#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "gridcast/util.hpp"
#include "test_common.hpp"

using testutil::TempDir;

namespace {

int run(const std::string& args, const std::filesystem::path& out_file = {}) {
  std::string cmd = std::string(GRIDCAST_CLI) + " " + args;
  cmd += out_file.empty() ? " >/dev/null 2>&1" : " >" + out_file.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("train --method gru --data x --out y"), 1);
  EXPECT_EQ(run("forecast --model x"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, DataErrors) {
  TempDir dir("cli_data");
  EXPECT_EQ(run("ingest --input " + q(dir / "missing.txt") + " --out " + q(dir / "s")), 2);
  testutil::write_file(dir / "bad.txt", "Date;Time;Global_active_power\n1/1/2007;00:00:00\n");
  EXPECT_EQ(run("ingest --input " + q(dir / "bad.txt") + " --out " + q(dir / "s")), 2);
}

TEST(Cli, IngestTrainForecast) {
  TempDir dir("cli_flow");
  ASSERT_EQ(run("ingest --input " + q(testutil::fixture()) + " --out " + q(dir / "s.series")), 0);
  ASSERT_EQ(run("train --method arma --window 30 --horizon 12 --train-size 2000 --seed 3 --data " +
                q(dir / "s.series") + " --out " + q(dir / "arma.ens")),
            0);
  ASSERT_EQ(run("train --method svr --window 30 --horizon 12 --train-size 600 --start 1400 --data " +
                q(dir / "s.series") + " --out " + q(dir / "svr.ens") + " --set svr_c=2"),
            0);
  ASSERT_EQ(run("forecast --model " + q(dir / "arma.ens") + " --data " + q(dir / "s.series") + " --at 2500",
                dir / "f.txt"),
            0);
  const std::string line = testutil::read_file(dir / "f.txt");
  const auto fields = gridcast::split_view(gridcast::trim(line), ',');
  ASSERT_EQ(fields.size(), 12u);
  for (auto f : fields) EXPECT_TRUE(std::isfinite(gridcast::parse_double(f)));

  EXPECT_EQ(run("forecast --model " + q(dir / "arma.ens") + " --data " + q(dir / "s.series") + " --at 5"), 2);

  ASSERT_EQ(run("hybrid --models " + q(dir / "arma.ens") + " " + q(dir / "svr.ens") + " --validation " +
                q(testutil::fixture()) + " --stride 50 --out " + q(dir / "h.hyb")),
            0);
  ASSERT_EQ(run("forecast --model " + q(dir / "h.hyb") + " --data " + q(dir / "s.series") + " --at 2500",
                dir / "h.txt"),
            0);
  EXPECT_EQ(gridcast::split_view(gridcast::trim(testutil::read_file(dir / "h.txt")), ',').size(), 12u);
}

TEST(Cli, TrainingFailureExitCode) {
  TempDir dir("cli_train");
  std::string flat = "Date;Time;Global_active_power\n";
  for (int i = 0; i < 200; ++i) flat += "1/1/2007;00:00:00;1.0\n";
  testutil::write_file(dir / "flat.txt", flat);
  // constant training data cannot be standardized
  EXPECT_EQ(run("train --method svr --window 5 --horizon 2 --train-size 100 --data " + q(dir / "flat.txt") +
                " --out " + q(dir / "e")),
            2);
  std::string noise = "Date;Time;Global_active_power\n";
  gridcast::Rng rng(1);
  for (int i = 0; i < 60; ++i) noise += "1/1/2007;00:00:00;" + gridcast::format_double(rng.normal()) + "\n";
  testutil::write_file(dir / "short.txt", noise);
  EXPECT_EQ(run("train --method arma --window 5 --horizon 2 --train-size 60 --set arma_p=5 --set arma_q=5 --data " +
                q(dir / "short.txt") + " --out " + q(dir / "e")),
            3);
}

TEST(Cli, BenchWritesOutputs) {
  TempDir dir("cli_bench");
  testutil::write_file(dir / "b.cfg", "data = " + testutil::fixture().string() +
                                          "\nmethods = arma, svr\nwindow = 10\nhorizon = 4\ntrain_size = 500\n"
                                          "test_size = 400\nhybrid = true\n");
  ASSERT_EQ(run("bench --config " + q(dir / "b.cfg") + " --out-dir " + q(dir / "out")), 0);
  for (const char* f : {"report.csv", "mae.svg", "variance.svg"}) EXPECT_TRUE(std::filesystem::exists(dir / "out" / f));
  const std::string first = testutil::read_file(dir / "out" / "report.csv");
  ASSERT_EQ(run("bench --config " + q(dir / "b.cfg") + " --out-dir " + q(dir / "out2") + " --workers 1"), 0);
  EXPECT_EQ(testutil::read_file(dir / "out2" / "report.csv"), first);
  EXPECT_EQ(run("bench --config " + q(dir / "b.cfg") + " --out-dir " + q(dir / "out3") + " --abs-error-variance"), 0);
  EXPECT_NE(testutil::read_file(dir / "out3" / "report.csv"), first);

  testutil::write_file(dir / "bad.cfg", "window = banana\n");
  EXPECT_EQ(run("bench --config " + q(dir / "bad.cfg") + " --out-dir " + q(dir / "x")), 1);
}
