#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "nucasim/error.hpp"
#include "nucasim/harness.hpp"

using namespace nucasim;

namespace {

WorkloadSpec small_sort(std::uint64_t n = 1024, int m = 4) {
  WorkloadSpec s;
  s.n = n;
  s.m = m;
  return s;
}

SimParams params_from(const std::string& text) {
  std::istringstream in(text);
  return parse_params(in);
}

Task<> idle(SimThread&) { co_return; }

Task<> touch_first_chunk(SimThread& t) {
  const Region r = t.allocate(8192);
  for (Addr a = r.base; a < r.end(); a += 64) co_await t.read(a);
}

}  // namespace

TEST_CASE("case table") {
  const CaseConfig c1 = case_config(1);
  CHECK_FALSE(c1.localised);
  CHECK(c1.mapping == MappingPolicy::Kind::MigratingLinux);
  CHECK(c1.hash_mode == HashMode::AllButStack);
  const CaseConfig c8 = case_config(8);
  CHECK(c8.localised);
  CHECK(c8.mapping == MappingPolicy::Kind::StaticOrdered);
  CHECK(c8.hash_mode == HashMode::None);
  CHECK_THROWS_AS(case_config(9), UsageError);
  CHECK_THROWS_AS(case_config(0), UsageError);

  std::set<std::tuple<bool, MappingPolicy::Kind, HashMode>> combos;
  for (int id = 1; id <= kNumCases; ++id) {
    const CaseConfig c = case_config(id);
    CHECK(c.id == id);
    combos.emplace(c.localised, c.mapping, c.hash_mode);
  }
  CHECK(combos.size() == 8);
}

TEST_CASE("speedup") {
  ReportRow r;
  r.total_cycles = 25;
  CHECK(speedup(r, 100) == doctest::Approx(4.0));
  r.total_cycles = 400;
  CHECK(speedup(r, 1000) == doctest::Approx(2.5));
  r.total_cycles = 1000;
  CHECK(speedup(r, 1000) == doctest::Approx(1.0));
  r.total_cycles = 0;
  CHECK_THROWS_AS(speedup(r, 10), std::domain_error);
}

TEST_CASE("baseline") {
  const SimParams p;
  CHECK(baseline_cycles(Program{[](SimThread& t) { return idle(t); }, 1}, p) == 0);

  const Program chunk{[](SimThread& t) { return touch_first_chunk(t); }, 1};
  SimParams off = p;
  off.sim.striping = false;
  const Cycles on_cycles = baseline_cycles(chunk, p);
  CHECK(on_cycles > 0);
  CHECK(on_cycles == baseline_cycles(chunk, off));

  const WorkloadSpec s = small_sort();
  const ReportRow row = baseline_row(s, p);
  CHECK(row.m == 1);
  CHECK(row.case_id == 1);
  CHECK(row.speedup_vs_base == doctest::Approx(1.0));
  CHECK(baseline(s, p) == row.total_cycles);
  CHECK(baseline(s, p) == baseline(s, p));
}

TEST_CASE("run_case fills a conserving, self-describing row") {
  for (int c = 1; c <= kNumCases; ++c) {
    const ReportRow r = run_case(c, small_sort(), SimParams{});
    CHECK(r.case_id == c);
    CHECK(r.localised == case_config(c).localised);
    CHECK(r.hash_mode == case_config(c).hash_mode);
    CHECK(r.l2_hits + r.l3_hits + r.dram_fills == r.accesses);
    CHECK(r.total_cycles > 0);
    CHECK(r.latency.t_dram == 80);
    CHECK(r.usable_tiles == 64);
  }
  WorkloadSpec mb = small_sort(1000, 7);
  mb.kind = WorkloadKind::Microbench;
  const ReportRow r = run_case(4, mb, SimParams{});
  CHECK(r.usable_tiles == 63);
  CHECK(r.reps == 1);
}

TEST_CASE("run_case rejects bad configurations") {
  CHECK_THROWS_AS(run_case(9, small_sort(), SimParams{}), UsageError);
  CHECK_THROWS_AS(run_case(8, small_sort(1024, 3), SimParams{}), ConfigError);
  SimParams p;
  p.usable_tiles = 2;
  CHECK_THROWS_AS(run_case(8, small_sort(1024, 4), p), ConfigError);
  SimParams pinned = params_from("hash_mode = none\n");
  CHECK_NOTHROW(run_case(8, small_sort(), pinned));
  CHECK_THROWS_AS(run_case(7, small_sort(), pinned), ConfigError);
}

TEST_CASE("params file") {
  const SimParams p = params_from(
      "# latency\n"
      "t_dram = 70\n"
      "t_migrate=500   # cheap\n"
      "\n"
      "caches_enabled = off\n"
      "usable_tiles = 32\n"
      "controller_anchors = 0:0, 7:0, 0:7, 7:7\n"
      "seed = 99\n"
      "quantum = 5000\n"
      "migrate_prob = 0.25\n"
      "striping = off\n");
  CHECK(p.sim.latency.t_dram == 70);
  CHECK(p.sim.latency.t_migrate == 500);
  CHECK_FALSE(p.sim.cache.caches_enabled);
  CHECK(p.usable_tiles == 32);
  CHECK(p.mapping_seed == 99u);
  CHECK(p.quantum == 5000);
  CHECK(p.migrate_prob == doctest::Approx(0.25));
  CHECK_FALSE(p.sim.striping);

  CHECK_THROWS_AS(params_from("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(params_from("t_l2 = eight\n"), ConfigError);
  CHECK_THROWS_AS(params_from("t_l2\n"), ConfigError);
  CHECK_THROWS_AS(params_from("caches_enabled = maybe\n"), ConfigError);
  CHECK_THROWS_AS(params_from("controller_anchors = 0:0,1:1\n"), ConfigError);
  CHECK_THROWS_AS(load_params_file("/nonexistent/params.txt"), ConfigError);

  const SimParams small = params_from("width = 4\nheight = 4\n");
  CHECK(small.sim.mesh.controller_anchors[3] == TileCoord{3, 3});
}

TEST_CASE("CSV and JSON output") {
  ReportRow r = run_case(8, small_sort(), SimParams{});
  const std::string header = csv_header();
  const std::string line = to_csv(r);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(line.begin(), line.end(), ','));
  CHECK(header.rfind("case_id,workload,n,m,reps,striping,seed,total_cycles", 0) == 0);
  CHECK(line.rfind("8,mergesort,1024,4,0,on,1,", 0) == 0);

  r.speedup_vs_base = 2.5;
  const auto j = nlohmann::json::parse(to_json({r}));
  REQUIRE(j.size() == 1);
  CHECK(j[0]["case_id"] == 8);
  CHECK(j[0]["speedup_vs_base"] == 2.5);
  CHECK(j[0]["hash_mode"] == "none");
  CHECK(j[0]["t_l2"] == 8);

  const std::string csv = format_rows({r, r}, "csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK_THROWS_AS(format_rows({r}, "xml"), UsageError);
}

TEST_CASE("runs are deterministic") {
  const ReportRow a = run_case(1, small_sort(), SimParams{});
  const ReportRow b = run_case(1, small_sort(), SimParams{});
  CHECK(to_csv(a) == to_csv(b));
}

TEST_CASE("sweeps") {
  SUBCASE("sizes") {
    const auto rows = sweep(SweepAxis::Size, {"256", "512", "1024"}, 8, small_sort(), {}, 2);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].n == 256);
    CHECK(rows[1].n == 512);
    CHECK(rows[2].n == 1024);
  }
  SUBCASE("striping") {
    const auto rows = sweep(SweepAxis::Striping, {"on", "off"}, 8, small_sort(), {}, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].striping);
    CHECK_FALSE(rows[1].striping);
    CHECK(rows[0].n == rows[1].n);
    CHECK(rows[0].accesses == rows[1].accesses);
  }
  SUBCASE("threads under static mapping") {
    WorkloadSpec mb = small_sort(630, 1);
    mb.kind = WorkloadKind::Microbench;
    const auto rows = sweep(SweepAxis::Threads, {"16", "32", "63"}, 4, mb, {}, 0);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
      std::vector<TileId> want(static_cast<std::size_t>(r.m));
      for (int i = 0; i < r.m; ++i) want[static_cast<std::size_t>(i)] = static_cast<TileId>(i);
      CHECK(r.leaf_tiles == want);
    }
  }
  SUBCASE("reps") {
    WorkloadSpec mb = small_sort(640, 8);
    mb.kind = WorkloadKind::Microbench;
    const auto rows = sweep(SweepAxis::Reps, {"1", "2"}, 8, mb, {}, 1);
    CHECK(rows[1].accesses > rows[0].accesses);
  }
  SUBCASE("bad input") {
    CHECK_THROWS_AS(sweep(SweepAxis::Size, {}, 8, small_sort(), {}), UsageError);
    CHECK_THROWS_AS(sweep(SweepAxis::Size, {"big"}, 8, small_sort(), {}), UsageError);
    CHECK_THROWS_AS(sweep(SweepAxis::Striping, {"maybe"}, 8, small_sort(), {}), UsageError);
    CHECK_THROWS_AS(parse_sweep_axis("colour"), UsageError);
  }
}

TEST_CASE("batch runs keep request order") {
  std::vector<RunRequest> reqs;
  for (int c = 1; c <= 4; ++c) reqs.push_back({c, small_sort(512, 2), {}});
  const auto rows = run_batch(reqs, 3);
  REQUIRE(rows.size() == 4);
  for (int c = 1; c <= 4; ++c) {
    CHECK(rows[static_cast<std::size_t>(c - 1)].case_id == c);
    CHECK(to_csv(rows[static_cast<std::size_t>(c - 1)]) == to_csv(run_case(c, small_sort(512, 2), {})));
  }
}
