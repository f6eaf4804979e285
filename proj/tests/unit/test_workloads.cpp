#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "doctest.h"
#include "nucasim/error.hpp"
#include "nucasim/workloads.hpp"

using namespace nucasim;

namespace {

SimConfig config(HashMode mode = HashMode::None) {
  SimConfig c;
  c.hash_mode = mode;
  c.mesh.usable_tiles = 64;
  return c;
}

using Kernel = std::function<Task<>(SimThread&, Addr data, Addr scratch)>;

struct KernelRun {
  std::vector<std::int32_t> data;
  std::vector<std::int32_t> scratch;
  std::vector<TraceEvent> trace;
  Addr data_base = 0;
  Addr scratch_base = 0;
};

// Runs kernel on one thread over a data region preloaded with values and a
// zeroed scratch region of the same length.
KernelRun run_kernel(const std::vector<std::int32_t>& values, const Kernel& kernel) {
  Engine e(config(), MappingPolicy::static_ordered());
  const std::uint64_t bytes = std::max<std::uint64_t>(4, values.size() * 4);
  const Region d = e.memory().allocate(0, bytes, HomePolicy::local());
  const Region s = e.memory().allocate(0, bytes, HomePolicy::local());
  for (std::size_t i = 0; i < values.size(); ++i) e.memory().space().store(d.base + i * 4, values[i]);
  KernelRun out;
  out.data_base = d.base;
  out.scratch_base = s.base;
  e.set_access_observer([&](const TraceEvent& ev) { out.trace.push_back(ev); });
  const Addr db = d.base, sb = s.base;
  e.run({[=](SimThread& t) { return kernel(t, db, sb); }, 1});
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.data.push_back(e.memory().space().load(d.base + i * 4));
    out.scratch.push_back(e.memory().space().load(s.base + i * 4));
  }
  return out;
}

std::vector<std::int32_t> sort_on_sim(const std::vector<std::int32_t>& v) {
  const auto n = v.size();
  return run_kernel(v, [n](SimThread& t, Addr d, Addr s) {
           return serial_mergesort(t, d, s, n, 4);
         }).data;
}

std::vector<std::int32_t> merge_on_sim(const std::vector<std::int32_t>& left,
                                       const std::vector<std::int32_t>& right) {
  std::vector<std::int32_t> both = left;
  both.insert(both.end(), right.begin(), right.end());
  const auto nl = left.size(), nr = right.size();
  return run_kernel(both, [nl, nr](SimThread& t, Addr d, Addr s) {
           return merge(t, d, nl, d + nl * 4, nr, s, false, 4);
         }).scratch;
}

struct WorkloadRun {
  RunReport report;
  std::vector<std::int32_t> result;
  std::vector<TraceEvent> trace;
  std::vector<std::pair<TileId, std::uint64_t>> leaf_buffers;  // tile, count
  bool homes_ok = true;
};

WorkloadRun run_workload(WorkloadSpec spec, HashMode mode, bool check_home_is_leaf = false,
                         bool check_home_is_root = false) {
  SimConfig c = config(mode);
  BuiltWorkload w = build_workload(spec);
  Engine e(c, MappingPolicy::static_ordered());
  WorkloadRun out;
  WorkloadRun* o = &out;
  Engine* ep = &e;
  w.state->on_leaf_buffer = [=](SimThread& t, Addr base, std::uint64_t count) {
    o->leaf_buffers.emplace_back(t.tile(), count);
    const AddressSpace& s = ep->memory().space();
    for (std::uint64_t i = 0; i < count; ++i) {
      const TileId home = s.home_of_line(s.line_of(base + i * 4));
      if (check_home_is_leaf && home != t.tile()) o->homes_ok = false;
      if (check_home_is_root && home != 0) o->homes_ok = false;
    }
  };
  e.set_access_observer([o](const TraceEvent& ev) { o->trace.push_back(ev); });
  out.report = e.run(w.program);
  verify(*w.state, e.memory().space());
  out.result = read_result(*w.state, e.memory().space());
  return out;
}

}  // namespace

TEST_CASE("serial merge sort examples") {
  CHECK(sort_on_sim({}).empty());
  CHECK(sort_on_sim({5}) == std::vector<std::int32_t>{5});
  CHECK(sort_on_sim({3, 1, 2}) == std::vector<std::int32_t>{1, 2, 3});
}

TEST_CASE("serial merge sort matches std::sort on 1000 random ints") {
  std::mt19937 rng(1);
  std::vector<std::int32_t> v(1000);
  for (auto& x : v) x = static_cast<std::int32_t>(rng());
  std::vector<std::int32_t> want = v;
  std::sort(want.begin(), want.end());
  CHECK(sort_on_sim(v) == want);
}

TEST_CASE("merge examples") {
  CHECK(merge_on_sim({1, 3}, {2, 4}) == std::vector<std::int32_t>{1, 2, 3, 4});
  CHECK(merge_on_sim({}, {2, 4}) == std::vector<std::int32_t>{2, 4});
  CHECK(merge_on_sim({7}, {}) == std::vector<std::int32_t>{7});
}

TEST_CASE("merge takes the left element first on ties") {
  const KernelRun r = run_kernel({1, 1, 1}, [](SimThread& t, Addr d, Addr s) {
    return merge(t, d, 2, d + 8, 1, s, false, 4);
  });
  // Left-first: the second left element is read before the second output
  // write; right-first would write the right element and the first left one
  // before touching left[1].
  std::vector<std::pair<AccessKind, Addr>> seq;
  for (const auto& ev : r.trace) seq.emplace_back(ev.kind, ev.addr);
  const std::vector<std::pair<AccessKind, Addr>> want = {
      {AccessKind::Read, r.data_base},          {AccessKind::Read, r.data_base + 8},
      {AccessKind::Write, r.scratch_base},      {AccessKind::Read, r.data_base + 4},
      {AccessKind::Write, r.scratch_base + 4},  {AccessKind::Write, r.scratch_base + 8}};
  CHECK(seq == want);
}

TEST_CASE("merge equals std::merge on random sorted pairs, with and without copy-back") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int32_t> a(rng() % 40), b(rng() % 40);
    for (auto& x : a) x = static_cast<std::int32_t>(rng() % 20);
    for (auto& x : b) x = static_cast<std::int32_t>(rng() % 20);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::int32_t> want;
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(want));
    CHECK(merge_on_sim(a, b) == want);

    std::vector<std::int32_t> both = a;
    both.insert(both.end(), b.begin(), b.end());
    if (both.empty()) continue;
    const auto nl = a.size(), nr = b.size();
    const KernelRun r = run_kernel(both, [nl, nr](SimThread& t, Addr d, Addr s) {
      return merge(t, d, nl, d + nl * 4, nr, s, true, 4);
    });
    CHECK(r.data == want);
  }
}

TEST_CASE("micro-benchmark chunks") {
  CHECK(microbench_chunk(10, 3, 0) == std::pair<std::uint64_t, std::uint64_t>{0, 4});
  CHECK(microbench_chunk(10, 3, 1) == std::pair<std::uint64_t, std::uint64_t>{4, 8});
  CHECK(microbench_chunk(10, 3, 2) == std::pair<std::uint64_t, std::uint64_t>{8, 10});
  CHECK(microbench_chunk(4, 4, 3) == std::pair<std::uint64_t, std::uint64_t>{3, 4});
}

TEST_CASE("micro-benchmark access counts") {
  WorkloadSpec spec;
  spec.kind = WorkloadKind::Microbench;
  spec.n = 4;
  spec.m = 2;
  spec.reps = 1;
  auto leaf_accesses = [](const WorkloadRun& r) {
    std::map<ThreadId, std::pair<int, int>> per;  // reads, writes
    for (const auto& ev : r.trace) {
      if (ev.thread == 0) continue;
      auto& p = per[ev.thread];
      (ev.kind == AccessKind::Read ? p.first : p.second)++;
    }
    return per;
  };

  SUBCASE("non-localised") {
    const auto per = leaf_accesses(run_workload(spec, HashMode::None));
    REQUIRE(per.size() == 2);
    for (const auto& [id, rw] : per) CHECK(rw == std::pair<int, int>{2, 2});
  }
  SUBCASE("localised adds the copy-in") {
    spec.localised = true;
    const WorkloadRun r = run_workload(spec, HashMode::None);
    const auto per = leaf_accesses(r);
    REQUIRE(per.size() == 2);
    for (const auto& [id, rw] : per) CHECK(rw == std::pair<int, int>{4, 4});
    CHECK(r.report.live_regions == 2);  // input and output; copies freed
  }
  SUBCASE("zero reps leaves the output untouched") {
    spec.localised = true;
    spec.reps = 0;
    const WorkloadRun r = run_workload(spec, HashMode::None);
    CHECK(r.result == std::vector<std::int32_t>(4, 0));
    const auto per = leaf_accesses(r);
    for (const auto& [id, rw] : per) CHECK(rw == std::pair<int, int>{2, 2});
  }
}

TEST_CASE("merge sort recursion shape") {
  WorkloadSpec spec;
  spec.n = 8;
  spec.m = 4;
  WorkloadRun r = run_workload(spec, HashMode::None);
  REQUIRE(r.report.leaves.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r.report.leaves[i].counter == i);
    CHECK(r.report.leaves[i].tile == static_cast<TileId>(i));
  }
  for (const auto& [tile, count] : r.leaf_buffers) CHECK(count == 2);

  spec.n = 5;
  spec.m = 2;
  r = run_workload(spec, HashMode::None);
  REQUIRE(r.leaf_buffers.size() == 2);
  CHECK(r.leaf_buffers[0].second == 2);
  CHECK(r.leaf_buffers[1].second == 3);
}

TEST_CASE("merge sort homing") {
  WorkloadSpec spec;
  spec.n = 4096;
  spec.m = 8;
  SUBCASE("localised copies are homed on the leaf") {
    spec.localised = true;
    CHECK(run_workload(spec, HashMode::None, true, false).homes_ok);
  }
  SUBCASE("non-localised slices are homed on the main thread") {
    CHECK(run_workload(spec, HashMode::None, false, true).homes_ok);
  }
}

TEST_CASE("merge sort variants agree and free their buffers") {
  WorkloadSpec spec;
  spec.n = 3000;
  spec.m = 8;
  spec.rng_seed = 9;
  std::vector<std::int32_t> want = generate_input(spec.n, spec.rng_seed);
  std::sort(want.begin(), want.end());
  for (bool localised : {false, true}) {
    for (bool inter : {false, true}) {
      spec.localised = localised;
      spec.intermediate_step = inter;
      for (HashMode mode : {HashMode::None, HashMode::AllButStack}) {
        const WorkloadRun r = run_workload(spec, mode);
        CHECK(r.result == want);
        CHECK(r.report.live_regions == 1);  // the sorted result
        if (localised) CHECK(r.leaf_buffers.size() == 8);
      }
    }
  }
}

TEST_CASE("verify catches a swapped pair") {
  WorkloadSpec spec;
  spec.n = 64;
  spec.m = 2;
  BuiltWorkload w = build_workload(spec);
  Engine e(config(), MappingPolicy::static_ordered());
  e.run(w.program);
  AddressSpace& s = e.memory().space();
  CHECK_NOTHROW(verify(*w.state, s));
  const Addr a = w.state->result_base;
  const std::int32_t x = s.load(a);
  s.store(a, s.load(a + 4));
  s.store(a + 4, x);
  if (s.load(a) != s.load(a + 4)) CHECK_THROWS_AS(verify(*w.state, s), VerificationError);
}

TEST_CASE("WorkloadSpec validation") {
  WorkloadSpec spec;
  spec.n = 16;
  spec.m = 3;
  CHECK_THROWS_AS(spec.validate(), ConfigError);  // merge sort needs 2^k
  spec.kind = WorkloadKind::Microbench;
  CHECK_NOTHROW(spec.validate());
  spec.n = 2;
  CHECK_THROWS_AS(spec.validate(), ConfigError);  // n < m
  spec.n = 16;
  spec.reps = -1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CHECK(parse_workload_kind("mergesort") == WorkloadKind::MergeSort);
  CHECK_THROWS_AS(parse_workload_kind("quicksort"), UsageError);
}

TEST_CASE("input generation is seeded") {
  CHECK(generate_input(100, 3) == generate_input(100, 3));
  CHECK_FALSE(generate_input(100, 3) == generate_input(100, 4));
}
