#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "nucasim/geometry.hpp"

namespace nucasim {

using Addr = std::uint64_t;
using LineId = std::uint64_t;
using PageId = std::uint64_t;
using RegionId = std::uint32_t;

// System-wide default homing. AllButStack hashes every heap page across
// the tiles; None homes pages where the allocation asks.
enum class HashMode { AllButStack, None };

std::string_view to_string(HashMode mode);
HashMode parse_hash_mode(std::string_view text);

struct HomePolicy {
  enum class Kind { Local, Remote, HashForHome };
  Kind kind = Kind::Local;
  TileId remote_tile = 0;

  static constexpr HomePolicy local() { return {Kind::Local, 0}; }
  static constexpr HomePolicy remote(TileId tile) { return {Kind::Remote, tile}; }
  static constexpr HomePolicy hashed() { return {Kind::HashForHome, 0}; }
};

struct AddrSpaceConfig {
  std::uint64_t line_size = 64;
  std::uint64_t page_size = 65536;
  std::uint64_t stripe_chunk = 8192;
  std::uint64_t element_size = 4;
  std::uint64_t capacity = std::uint64_t{1} << 32;

  void validate() const;
};

struct Region {
  RegionId id = 0;
  Addr base = 0;
  std::uint64_t length = 0;
  TileId allocating_tile = 0;
  bool live = false;

  Addr end() const { return base + length; }
};

inline constexpr TileId kHashedHome = ~TileId{0};

struct PageEntry {
  TileId home = kHashedHome;  // kHashedHome: homed per line
  RegionId region = 0;

  bool hashed() const { return home == kHashedHome; }
  friend bool operator==(const PageEntry&, const PageEntry&) = default;
};

// Dense page table indexed by page id. Unmapped slots are ignored by
// equality, so a table compares equal to itself after allocate + release.
class PageTable {
 public:
  const PageEntry* find(PageId page) const {
    return page < slots_.size() && mapped_[page] ? &slots_[page] : nullptr;
  }
  void insert(PageId page, PageEntry entry);
  void erase(PageId page);
  std::size_t size() const { return count_; }

  friend bool operator==(const PageTable& a, const PageTable& b);

 private:
  std::vector<PageEntry> slots_;
  std::vector<std::uint8_t> mapped_;
  std::size_t count_ = 0;
};

/// Flat simulated physical memory. Regions come from a bump allocator and
/// are page aligned; freed addresses are never handed out again, which is
/// what makes use-after-free detectable. The address space also carries the
/// functional contents of memory: one 32-bit value per element slot.
class AddressSpace {
 public:
  AddressSpace(AddrSpaceConfig config, MeshConfig mesh, HashMode mode);

  const AddrSpaceConfig& config() const { return config_; }
  const MeshConfig& mesh() const { return mesh_; }
  HashMode hash_mode() const { return mode_; }

  LineId line_of(Addr addr) const { return addr >> line_shift_; }
  PageId page_of(Addr addr) const { return addr >> page_shift_; }
  PageId page_of_line(LineId line) const { return line >> (page_shift_ - line_shift_); }

  const Region& allocate(TileId thread_tile, std::uint64_t n_bytes, HomePolicy policy);

  // Kills the region and unmaps its pages. Returns the half-open line range
  // it covered so the caller can drop cached copies.
  std::pair<LineId, LineId> release(RegionId id);

  TileId home_of_line(LineId line) const;
  // Home tile of addr's line, with the same liveness checks as region_at.
  TileId checked_home(Addr addr) const;
  int controller_of(Addr addr, bool striping) const;

  // Region containing addr; throws SimulationFault unless it is live.
  const Region& region_at(Addr addr) const;
  const Region& region(RegionId id) const;

  const PageTable& page_table() const { return table_; }
  std::size_t live_region_count() const { return live_count_; }
  // One past the highest line ever allocated.
  LineId line_limit() const { return line_of(next_free_); }

  std::int32_t load(Addr addr) const { return data_[addr / config_.element_size]; }
  void store(Addr addr, std::int32_t value) { data_[addr / config_.element_size] = value; }

 private:
  AddrSpaceConfig config_;
  MeshConfig mesh_;
  HashMode mode_;
  int line_shift_ = 0;
  int page_shift_ = 0;
  Addr next_free_ = 0;
  PageTable table_;
  std::vector<Region> regions_;
  std::size_t live_count_ = 0;
  LineId tiles_ = 0;
  std::vector<int> nearest_controller_;  // per tile
  std::vector<std::int32_t> data_;
};

}  // namespace nucasim
