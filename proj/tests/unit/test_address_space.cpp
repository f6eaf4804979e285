#include <set>

#include "doctest.h"
#include "nucasim/address_space.hpp"
#include "nucasim/error.hpp"

using namespace nucasim;

namespace {

AddressSpace make_space(HashMode mode = HashMode::None) {
  return AddressSpace(AddrSpaceConfig{}, MeshConfig{}, mode);
}

}  // namespace

TEST_CASE("line and page arithmetic") {
  const AddressSpace s = make_space();
  CHECK(s.line_of(0) == 0);
  CHECK(s.page_of(0) == 0);
  CHECK(s.line_of(64) == 1);
  CHECK(s.line_of(65600) == 1025);
  CHECK(s.page_of(65600) == 1);
}

TEST_CASE("local and hashed allocation") {
  SUBCASE("None honours Local") {
    AddressSpace s = make_space(HashMode::None);
    const Region r = s.allocate(5, 100, HomePolicy::local());
    CHECK(r.base % 65536 == 0);
    CHECK(s.page_table().size() == 1);
    const PageEntry* e = s.page_table().find(s.page_of(r.base));
    REQUIRE(e != nullptr);
    CHECK(e->home == 5);
    CHECK(s.home_of_line(s.line_of(r.base)) == 5);
  }
  SUBCASE("AllButStack hashes every request") {
    for (auto policy : {HomePolicy::local(), HomePolicy::remote(3), HomePolicy::hashed()}) {
      AddressSpace s = make_space(HashMode::AllButStack);
      const Region r = s.allocate(5, 100, policy);
      CHECK(s.page_table().find(s.page_of(r.base))->hashed());
    }
  }
  SUBCASE("Remote under None") {
    AddressSpace s = make_space(HashMode::None);
    const Region r = s.allocate(5, 100, HomePolicy::remote(9));
    CHECK(s.home_of_line(s.line_of(r.base)) == 9);
    CHECK_THROWS_AS(s.allocate(5, 100, HomePolicy::remote(64)), ConfigError);
  }
}

TEST_CASE("successive regions are disjoint") {
  AddressSpace s = make_space();
  const Region a = s.allocate(0, 70000, HomePolicy::local());
  const Region b = s.allocate(1, 10, HomePolicy::local());
  CHECK((a.end() <= b.base || b.end() <= a.base));
  CHECK(s.page_table().size() == 3);
}

TEST_CASE("hashed homes are line mod tiles") {
  AddressSpace s = make_space(HashMode::AllButStack);
  s.allocate(0, 2 * 65536, HomePolicy::hashed());
  CHECK(s.home_of_line(0) == 0);
  CHECK(s.home_of_line(65) == 1);
}

TEST_CASE("hash-for-home balance over one whole page") {
  AddressSpace s = make_space(HashMode::AllButStack);
  const Region r = s.allocate(0, 65536, HomePolicy::hashed());
  const LineId first = s.line_of(r.base);
  const LineId lines = 65536 / 64;
  for (LineId start = first; start + 64 <= first + lines; ++start) {
    std::set<TileId> homes;
    for (LineId l = start; l < start + 64; ++l) homes.insert(s.home_of_line(l));
    CHECK(homes.size() == 64);
  }
}

TEST_CASE("local page homes are constant") {
  AddressSpace s = make_space(HashMode::None);
  const Region r = s.allocate(9, 65536, HomePolicy::local());
  for (Addr a = r.base; a < r.end(); a += 64) CHECK(s.home_of_line(s.line_of(a)) == 9);
}

TEST_CASE("controller mapping") {
  AddressSpace s = make_space();
  const Region r = s.allocate(63, 4 * 65536, HomePolicy::local());
  CHECK(s.controller_of(r.base + 0, true) == 0);
  CHECK(s.controller_of(r.base + 8192, true) == 1);
  CHECK(s.controller_of(r.base + 32768, true) == 0);
  // Off: the allocating tile's nearest anchor, wherever in the region.
  for (Addr a = r.base; a < r.end(); a += 4096) CHECK(s.controller_of(a, false) == 3);
  const Region top = s.allocate(2, 64, HomePolicy::local());
  CHECK(s.controller_of(top.base, false) == 0);
}

TEST_CASE("release unmaps and detects misuse") {
  AddressSpace s = make_space();
  const Region a = s.allocate(0, 100, HomePolicy::local());
  const Region b = s.allocate(1, 100, HomePolicy::local());
  const auto [lo, hi] = s.release(a.id);
  CHECK(lo == s.line_of(a.base));
  CHECK(hi == s.line_of(a.end() - 1) + 1);
  CHECK(s.page_table().find(s.page_of(a.base)) == nullptr);
  CHECK(s.page_table().find(s.page_of(b.base)) != nullptr);
  CHECK_THROWS_AS(s.region_at(a.base), SimulationFault);
  CHECK_THROWS_AS(s.checked_home(a.base), SimulationFault);
  CHECK_THROWS_AS(s.release(a.id), SimulationFault);
  CHECK_THROWS_AS(s.region_at(b.base + 100), SimulationFault);
  CHECK(s.live_region_count() == 1);
}

TEST_CASE("allocate then release restores the page table") {
  AddressSpace s = make_space();
  s.allocate(3, 1000, HomePolicy::local());
  const PageTable before = s.page_table();
  const Region r = s.allocate(4, 3 * 65536, HomePolicy::local());
  CHECK_FALSE(s.page_table() == before);
  s.release(r.id);
  CHECK(s.page_table() == before);
}

TEST_CASE("allocation errors") {
  AddressSpace s = make_space();
  CHECK_THROWS_AS(s.allocate(0, 0, HomePolicy::local()), SimulationFault);
  CHECK_THROWS_AS(s.allocate(64, 10, HomePolicy::local()), SimulationFault);
  AddrSpaceConfig small;
  small.capacity = 2 * 65536;
  AddressSpace t(small, MeshConfig{}, HashMode::None);
  t.allocate(0, 65536, HomePolicy::local());
  t.allocate(0, 65536, HomePolicy::local());
  CHECK_THROWS_AS(t.allocate(0, 1, HomePolicy::local()), SimulationFault);
}

TEST_CASE("config validation") {
  AddrSpaceConfig c;
  CHECK_NOTHROW(c.validate());
  c.line_size = 48;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = AddrSpaceConfig{};
  c.page_size = 4096;  // smaller than the stripe chunk
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = AddrSpaceConfig{};
  c.element_size = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("hash mode names") {
  CHECK(parse_hash_mode("none") == HashMode::None);
  CHECK(parse_hash_mode("all_but_stack") == HashMode::AllButStack);
  CHECK(to_string(HashMode::None) == "none");
  CHECK_THROWS_AS(parse_hash_mode("bogus"), ConfigError);
}

TEST_CASE("functional storage round-trips") {
  AddressSpace s = make_space();
  const Region r = s.allocate(0, 64, HomePolicy::local());
  CHECK(s.load(r.base + 8) == 0);
  s.store(r.base + 8, -42);
  CHECK(s.load(r.base + 8) == -42);
}
