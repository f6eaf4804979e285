#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "nucasim/address_space.hpp"
#include "nucasim/geometry.hpp"

namespace nucasim {

using Cycles = std::uint64_t;

struct CacheConfig {
  std::uint64_t l2_capacity = 65536;
  std::uint64_t associativity = 4;
  bool caches_enabled = true;

  void validate(const AddrSpaceConfig& addr) const;
};

// All values in core cycles. Defaults only encode the ordering
// local L2 < remote home L3 < DRAM.
struct LatencyParams {
  Cycles t_l2 = 8;
  Cycles t_hop = 1;  // per hop, per direction
  Cycles t_dir = 4;
  Cycles t_dram = 80;
  Cycles t_mem_svc = 10;
  Cycles t_migrate = 10000;

  void validate(const MeshConfig& mesh) const;
};

// Everything the memory side of one simulation needs.
struct SimConfig {
  MeshConfig mesh;
  AddrSpaceConfig addr;
  CacheConfig cache;
  LatencyParams latency;
  HashMode hash_mode = HashMode::AllButStack;
  bool striping = true;

  void validate() const;
};

enum class AccessKind { Read, Write };
enum class AccessClass { LocalL2Hit, HomeL3Hit, DramFill };

std::string_view to_string(AccessClass cls);

struct AccessResult {
  Cycles latency = 0;
  AccessClass cls = AccessClass::LocalL2Hit;
  Cycles queue_wait = 0;
  unsigned invalidations_sent = 0;
};

/// FIFO server with a fixed service time. Requests are granted in the
/// order they are presented; a request arriving while the server is busy
/// waits until every earlier reservation has drained.
class FifoResource {
 public:
  explicit FifoResource(Cycles service = 0) : service_(service) {}

  Cycles wait(Cycles at);

  Cycles busy_until() const { return busy_until_; }
  std::uint64_t max_depth() const { return max_depth_; }

 private:
  Cycles service_;
  Cycles busy_until_ = 0;
  std::uint64_t max_depth_ = 0;
};

/// Set-associative LRU cache holding line ids only (no data). Set index is
/// the line id XOR-folded with its upper bits, so lines that hash-for-home
/// sends to one tile (line mod tiles) still spread over every set.
class L2Cache {
 public:
  L2Cache(std::uint64_t capacity, std::uint64_t line_size, std::uint64_t ways);

  // Hit test that also refreshes LRU order.
  bool touch(LineId line);
  bool contains(LineId line) const;
  // Inserts a line that is not present; returns the evicted victim if the
  // set was full.
  std::optional<LineId> insert(LineId line);
  bool erase(LineId line);

  std::size_t set_of(LineId line) const;
  std::size_t sets() const { return sets_; }
  std::size_t ways() const { return ways_; }
  std::size_t occupancy() const;

 private:
  static constexpr LineId kEmpty = ~LineId{0};

  std::size_t sets_;
  std::size_t ways_;
  int set_bits_ = 0;
  bool pow2_ = false;
  std::vector<LineId> tags_;
  std::vector<std::uint64_t> stamps_;
  std::uint64_t tick_ = 0;
};

struct DirectoryEntry {
  LineId line = 0;
  std::vector<TileId> sharers;  // non-home tiles holding a copy
  bool present_at_home = false;
};

struct CoherenceStats {
  std::uint64_t accesses = 0;
  std::uint64_t l2_hits = 0;
  std::uint64_t l3_hits = 0;
  std::uint64_t dram_fills = 0;
  std::uint64_t invalidations = 0;
  std::uint64_t max_home_queue_depth = 0;
  std::uint64_t max_controller_queue_depth = 0;

  friend bool operator==(const CoherenceStats&, const CoherenceStats&) = default;
};

/// Per-tile L2 caches that double as the home (L3) caches, a perfect
/// directory of remote sharers per line, and the latency model.
///
/// The home tile's copy of a line is kept current by write-through, so a
/// write only invalidates the other remote sharers; afterwards the sharer
/// set is exactly {writer} (empty when the writer is the home).
class MemorySystem {
 public:
  explicit MemorySystem(const SimConfig& config);

  const SimConfig& config() const { return config_; }
  AddressSpace& space() { return space_; }
  const AddressSpace& space() const { return space_; }

  AccessResult access(TileId tile, Addr addr, AccessKind kind, Cycles at);

  const Region& allocate(TileId tile, std::uint64_t n_bytes, HomePolicy policy);
  // Frees the region and silently drops every cached copy of its lines.
  void release(RegionId id);

  // Drops line from tile's L2. When tile is the line's home, remote sharers
  // lose their copies too. No cycles are charged.
  void evict(TileId tile, LineId line);

  CoherenceStats stats_snapshot() const;
  DirectoryEntry directory_entry(LineId line) const;
  const L2Cache& cache(TileId tile) const { return caches_[tile]; }

  FifoResource& home_directory(TileId tile) { return directories_[tile]; }
  FifoResource& controller(int id) { return controllers_[static_cast<std::size_t>(id)]; }

  int distance(TileId a, TileId b) const {
    return distances_[static_cast<std::size_t>(a) * tiles_ + b];
  }

 private:
  void install(TileId tile, LineId line);
  // Hop distance from tile to the anchor of the controller serving addr.
  int controller_distance(TileId tile, Addr addr, int& controller) const;

  SimConfig config_;
  AddressSpace space_;
  std::size_t tiles_;
  std::vector<L2Cache> caches_;
  std::vector<std::uint64_t> sharers_;  // bit mask per line, home excluded
  std::vector<FifoResource> directories_;
  std::vector<FifoResource> controllers_;
  std::vector<int> distances_;  // tiles x tiles
  std::vector<std::array<int, kNumControllers>> anchor_distances_;  // per tile
  CoherenceStats stats_;
};

}  // namespace nucasim
