#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tasep/cli.hpp"
#include "text_util.hpp"

using namespace tasep;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  for (std::string_view line : text::lines(text)) {
    std::vector<std::string> r;
    for (std::string_view f : text::split(line, ',')) r.emplace_back(f);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tasep_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t c = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++c;
  return c;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"sync", "--n", "x"}).code == kExitUsage);
  CHECK(cli({"sync", "--help"}).code == kExitOk);
}

TEST_CASE("sync") {
  const Run a = cli({"sync", "--n", "1", "--alpha", "1", "--beta", "1", "--runs", "100", "--seed", "7"});
  CHECK(a.code == kExitOk);
  const auto rows = csv_rows(a.out);
  REQUIRE(rows.size() == 101);
  CHECK(rows[0] == std::vector<std::string>{"n", "alpha", "beta", "seed", "tau", "synced", "events"});
  CHECK(cli({"sync", "--n", "1", "--alpha", "1", "--beta", "1", "--runs", "100", "--seed", "7"}).out == a.out);

  const Run pair = cli({"sync", "--n", "3", "--runs", "50", "--seed", "4"});
  const Run all = cli({"sync", "--n", "3", "--runs", "50", "--seed", "4", "--all-states"});
  CHECK(pair.out == all.out);

  CHECK(cli({"sync", "--n", "3", "--runs", "0"}).code == kExitUsage);
  CHECK(cli({"sync", "--n", "21", "--all-states"}).code == kExitUsage);
  CHECK(cli({"sync", "--n", "4", "--h", "1,2"}).code == kExitUsage);
  CHECK(cli({"sync", "--n", "4", "--h", "1,2,3"}).code == kExitOk);
  CHECK(cli({"sync", "--n", "4", "--h", "1", "--h", "2", "--h", "0.5"}).code == kExitOk);
  CHECK(cli({"sync", "--n", "3", "--alpha", "-1"}).code == kExitUsage);
  const Run slow = cli({"sync", "--n", "5", "--runs", "3", "--max-time", "1e-6"});
  CHECK(slow.code == kExitWarning);
  CHECK(csv_rows(slow.out)[1][5] == "0");
}

TEST_CASE("replay") {
  const Run r = cli({"replay", "--fixture", "remark54"});
  CHECK(r.code == kExitOk);
  CHECK(r.out ==
        "t traj1 traj2\nt0 110 000\nt1 101 000\nt2 011 000\nt3 111 100\nt4 111 010\n"
        "t5 111 001\nt6 110 000\n");
  const Run l = cli({"replay", "--fixture", "lemma:3"});
  CHECK(l.out.find("sequence 3 2 3 1 2 3\n") != std::string::npos);
  CHECK(l.out.find("all-zero: yes") != std::string::npos);
  CHECK(cli({"replay", "--fixture", "lemma:11"}).code == kExitUsage);
  CHECK(cli({"replay", "--fixture", "lemma:x"}).code == kExitUsage);
  CHECK(cli({"replay", "--fixture", "other"}).code == kExitUsage);
}

TEST_CASE("master") {
  const Run r = cli({"master", "--n", "1", "--alpha", "1", "--beta", "2"});
  CHECK(r.code == kExitOk);
  double p0 = 0, p1 = 0;
  for (const auto& row : csv_rows(r.out)) {
    if (row[0] == "pi:0") p0 = std::stod(row[1]);
    if (row[0] == "pi:1") p1 = std::stod(row[1]);
  }
  CHECK(p0 == doctest::Approx(2.0 / 3.0));
  CHECK(p1 == doctest::Approx(1.0 / 3.0));

  const Run b = cli({"master", "--n", "3", "--t", "5", "--check-bound"});
  CHECK(b.out.find("bound_holds,true") != std::string::npos);
  CHECK(cli({"master", "--n", "2", "--epsilon", "1.5"}).code == kExitUsage);
  CHECK(cli({"master", "--n", "13"}).code == kExitUsage);
  CHECK(cli({"master", "--n", "6", "--check-bound"}).code == kExitUsage);

  const auto dir = scratch("master");
  CHECK(cli({"master", "--n", "2", "--stationary-out", (dir / "pi.csv").string(), "--curve-out",
             (dir / "c.csv").string(), "--curve-times", "1,2"})
            .code == kExitOk);
  CHECK(csv_rows(slurp(dir / "pi.csv")).size() == 5);
  CHECK(csv_rows(slurp(dir / "c.csv")).size() == 3);
}

TEST_CASE("attractor") {
  const Run r = cli({"attractor", "--n", "4", "--seeds", "100"});
  CHECK(r.code == kExitOk);
  CHECK(r.err.find("100/100") != std::string::npos);
  const Run z = cli({"attractor", "--model", "z3", "--seeds", "20"});
  CHECK(z.code == kExitOk);
  for (std::size_t i = 1; i < csv_rows(z.out).size(); ++i) CHECK(csv_rows(z.out)[i][2] == "3");
  CHECK(cli({"attractor", "--n", "4", "--seeds", "5", "--t-max", "0.001"}).code == kExitWarning);
  CHECK(cli({"attractor", "--model", "nope"}).code == kExitUsage);
  CHECK(cli({"attractor", "--model", "asep", "--n", "3", "--h-left", "0.5", "--seeds", "5"}).code == kExitOk);
}

TEST_CASE("sweep, fit and render") {
  const auto dir = scratch("sweep");
  std::ofstream(dir / "tiny.plan") << "[sweep]\nruns = 9\nbatches = 3\nseed = 2\nlengths = 4, 6, 8\n"
                                      "segments = 4:8, 3:8, 6:8\n[points]\n1.0, 0.3\n";
  const std::string plan = (dir / "tiny.plan").string();
  const Run s = cli({"sweep", "--plan", plan, "--out", (dir / "a").string(), "--workers", "1"});
  CHECK(s.code == kExitOk);
  const auto summary = csv_rows(slurp(dir / "a" / "summary.csv"));
  CHECK(summary.size() == 3);  // header + the two segments holding three cells
  CHECK(std::filesystem::exists(dir / "a" / "table.csv"));
  CHECK(std::filesystem::exists(dir / "a" / "cells.csv"));

  const Run resumed = cli({"sweep", "--plan", plan, "--out", (dir / "a").string(), "--resume"});
  CHECK(resumed.out.find("new_runs,0") != std::string::npos);

  cli({"sweep", "--plan", plan, "--out", (dir / "b").string(), "--workers", "3"});
  CHECK(slurp(dir / "a" / "results.csv") == slurp(dir / "b" / "results.csv"));

  std::ofstream(dir / "bad.plan") << "[sweep]\nruns = x\n";
  CHECK(cli({"sweep", "--plan", (dir / "bad.plan").string(), "--out", (dir / "c").string()}).code == kExitUsage);
  CHECK(cli({"sweep", "--plan", (dir / "missing.plan").string(), "--out", (dir / "c").string()}).code == kExitUsage);

  const Run f = cli({"fit", "--results", (dir / "a" / "results.csv").string(), "--batches", "3",
                     "--segments", "4:8,3:8,6:8", "--table-out", (dir / "t.csv").string()});
  CHECK(f.code == kExitOk);
  CHECK(f.out == slurp(dir / "a" / "summary.csv"));

  CHECK(cli({"render", "--sweep-summary", (dir / "a" / "summary.csv").string(), "--out",
             (dir / "s.svg").string()})
            .code == kExitOk);
  const std::string scatter = slurp(dir / "s.svg");
  CHECK(count(scatter, "<g class=\"point\"") == 1);
  CHECK(count(scatter, "class=\"annotation\"") == 1);
  CHECK(count(scatter, "class=\"boundary\"") == 3);

  CHECK(cli({"sync", "--n", "6", "--traj-out", (dir / "tr.csv").string(), "--traj-times", "0,1,2"}).code ==
        kExitOk);
  CHECK(cli({"render", "--traj", (dir / "tr.csv").string(), "--out", (dir / "t.svg").string()}).code ==
        kExitOk);
  const std::string raster = slurp(dir / "t.svg");
  CHECK(count(raster, "<g class=\"sample\"") == 3);
  CHECK(count(raster, "<g class=\"trajectory\"") == 6);
  CHECK(count(raster, "<rect class=\"occupied\"") + count(raster, "<rect class=\"vacant\"") == 36);
  CHECK(raster.find("data-state=\"111111\"") != std::string::npos);

  std::ofstream(dir / "empty.csv") << "";
  CHECK(cli({"render", "--traj", (dir / "empty.csv").string(), "--out", (dir / "x.svg").string()}).code ==
        kExitUsage);
  CHECK(cli({"render", "--out", (dir / "x.svg").string()}).code == kExitUsage);
}
