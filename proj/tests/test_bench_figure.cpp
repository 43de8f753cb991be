#include <chrono>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lvsk/bench.hpp"
#include "lvsk/error.hpp"
#include "lvsk/figure.hpp"

using namespace lvsk;

TEST_CASE("smoke bench runs every method quickly") {
  const auto start = std::chrono::steady_clock::now();
  const auto records = run_bench(bench_preset("smoke"));
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(elapsed < 5.0);
  CHECK(records.size() == 4 * 3);
  for (const auto& r : records) {
    CHECK(r.status == "ok");
    CHECK(r.seconds >= 0.0);
  }
  const auto summary = summarize(records);
  CHECK(summary.size() == 4);
  for (const auto& s : summary) CHECK(s.runs == 3);
}

TEST_CASE("summaries take the median") {
  std::vector<BenchRecord> rs;
  for (double t : {3.0, 1.0, 2.0}) rs.push_back({100, 4, "exact", 0.5, rs.size(), t, "ok"});
  for (double t : {4.0, 1.0}) rs.push_back({100, 4, "osnap", 0.5, rs.size(), t, "ok"});
  const auto s = summarize(rs);
  REQUIRE(s.size() == 2);
  CHECK(s[0].median_seconds == 2.0);
  CHECK(s[1].median_seconds == 2.5);
}

TEST_CASE("cells over the memory cap are skipped") {
  set_memory_cap(1 << 20);
  BenchScenario sc;
  sc.n_values = {1 << 16};
  sc.d = 8;
  sc.methods = {"exact"};
  const auto records = run_bench(sc);
  reset_memory_cap();
  REQUIRE(records.size() == 1);
  CHECK(records[0].status.rfind("skipped:", 0) == 0);
}

TEST_CASE("bench scenario validation and presets") {
  BenchScenario sc;
  sc.n_values = {100};
  sc.methods = {"bogus"};
  CHECK_THROWS_AS(validate(sc), Error);
  for (const char* name : {"table1", "table2", "table3", "table4", "smoke"})
    CHECK_NOTHROW(validate(bench_preset(name)));
  CHECK_THROWS_AS(bench_preset("table9"), Error);
  CHECK(bench_preset("table3").d == 256);
}

TEST_CASE("figure panels") {
  FigureOptions o;
  o.n = 1024;
  o.d = 6;
  o.noise_n = 2000;
  o.noise_d = 40;
  o.noise_rank = 10;

  const auto full = make_figure(FigureKind::rank_full, o);
  CHECK(full.band == 1.0);
  REQUIRE(full.panels.size() == 2);
  CHECK(full.panels[0].true_rank == 6);

  const auto half = make_figure(FigureKind::rank_half, o);
  REQUIRE(half.panels.size() == 2);
  CHECK(half.panels[0].true_rank == 3);
  CHECK(half.panels[0].sketch_rank == 6);
  CHECK(half.panels[0].stats.max_relative > 1.0);

  const auto fix = make_figure(FigureKind::trunc_fix, o);
  CHECK(fix.panels.size() == 2 + 2 * 2);
  for (const auto& p : fix.panels)
    if (p.truncated) CHECK(p.sketch_rank == p.true_rank);

  const auto spec = make_figure(FigureKind::spectrum, o);
  REQUIRE(spec.spectrum.size() == 3);
  CHECK(spec.spectrum[0].label == "A");
  CHECK(spec.spectrum[0].sigma.size() == 40);

  const auto path = std::filesystem::temp_directory_path() / "lvsk_fig_test.csv";
  write_figure_csv(half, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "scenario,family,variant,index,true_score,approx_score");
  std::filesystem::remove(path);
  CHECK(figure_summary(half)["panels"].size() == 2);
}
