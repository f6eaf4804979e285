#include "nucasim/coherence.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "nucasim/error.hpp"

namespace nucasim {

std::string_view to_string(AccessClass cls) {
  switch (cls) {
    case AccessClass::LocalL2Hit:
      return "local_l2_hit";
    case AccessClass::HomeL3Hit:
      return "home_l3_hit";
    case AccessClass::DramFill:
      return "dram_fill";
  }
  return "?";
}

void CacheConfig::validate(const AddrSpaceConfig& addr) const {
  if (associativity == 0) throw ConfigError("associativity must be positive");
  if (l2_capacity == 0 || l2_capacity % (associativity * addr.line_size) != 0) {
    throw ConfigError("l2_capacity must be a positive multiple of associativity * line_size");
  }
}

void LatencyParams::validate(const MeshConfig& mesh) const {
  if (2 * t_hop + t_dir == 0) {
    throw ConfigError("a remote home hit must cost more than a local L2 hit (2*t_hop + t_dir > 0)");
  }
  const Cycles max_hops = static_cast<Cycles>((mesh.width - 1) + (mesh.height - 1));
  const Cycles worst_l3 = t_l2 + 2 * t_hop * max_hops + t_dir + t_l2;
  if (worst_l3 >= t_l2 + t_dram) {
    throw ConfigError("remote home hit at " + std::to_string(max_hops) + " hops costs " +
                      std::to_string(worst_l3) + " cycles, not below t_l2 + t_dram = " +
                      std::to_string(t_l2 + t_dram));
  }
}

void SimConfig::validate() const {
  mesh.validate();
  addr.validate();
  cache.validate(addr);
  latency.validate(mesh);
}

Cycles FifoResource::wait(Cycles at) {
  const Cycles w = busy_until_ > at ? busy_until_ - at : 0;
  if (service_ > 0) {
    const std::uint64_t depth = (w + service_ - 1) / service_;
    max_depth_ = std::max(max_depth_, depth);
  }
  busy_until_ = std::max(busy_until_, at) + service_;
  return w;
}

L2Cache::L2Cache(std::uint64_t capacity, std::uint64_t line_size, std::uint64_t ways)
    : sets_(capacity / (line_size * ways)), ways_(ways) {
  pow2_ = std::has_single_bit(sets_);
  set_bits_ = pow2_ ? std::countr_zero(sets_) : 0;
  tags_.assign(sets_ * ways_, kEmpty);
  stamps_.assign(sets_ * ways_, 0);
}

std::size_t L2Cache::set_of(LineId line) const {
  if (pow2_) return static_cast<std::size_t>((line ^ (line >> set_bits_)) & (sets_ - 1));
  return static_cast<std::size_t>((line ^ (line / sets_)) % sets_);
}

bool L2Cache::touch(LineId line) {
  const std::size_t base = set_of(line) * ways_;
  for (std::size_t w = 0; w < ways_; ++w) {
    if (tags_[base + w] == line) {
      stamps_[base + w] = ++tick_;
      return true;
    }
  }
  return false;
}

bool L2Cache::contains(LineId line) const {
  const std::size_t base = set_of(line) * ways_;
  for (std::size_t w = 0; w < ways_; ++w) {
    if (tags_[base + w] == line) return true;
  }
  return false;
}

std::optional<LineId> L2Cache::insert(LineId line) {
  const std::size_t base = set_of(line) * ways_;
  std::size_t slot = base;
  for (std::size_t w = 0; w < ways_; ++w) {
    if (tags_[base + w] == kEmpty) {
      tags_[base + w] = line;
      stamps_[base + w] = ++tick_;
      return std::nullopt;
    }
    if (stamps_[base + w] < stamps_[slot]) slot = base + w;
  }
  const LineId victim = tags_[slot];
  tags_[slot] = line;
  stamps_[slot] = ++tick_;
  return victim;
}

bool L2Cache::erase(LineId line) {
  const std::size_t base = set_of(line) * ways_;
  for (std::size_t w = 0; w < ways_; ++w) {
    if (tags_[base + w] == line) {
      tags_[base + w] = kEmpty;
      stamps_[base + w] = 0;
      return true;
    }
  }
  return false;
}

std::size_t L2Cache::occupancy() const {
  return static_cast<std::size_t>(std::count_if(tags_.begin(), tags_.end(),
                                                [](LineId t) { return t != kEmpty; }));
}

MemorySystem::MemorySystem(const SimConfig& config)
    : config_(config),
      space_(config.addr, config.mesh, config.hash_mode),
      tiles_(static_cast<std::size_t>(config.mesh.total_tiles())) {
  config_.validate();
  caches_.reserve(tiles_);
  for (std::size_t t = 0; t < tiles_; ++t) {
    caches_.emplace_back(config_.cache.l2_capacity, config_.addr.line_size,
                         config_.cache.associativity);
  }
  directories_.assign(tiles_, FifoResource(config_.latency.t_dir));
  controllers_.assign(kNumControllers,
                      FifoResource(config_.latency.t_mem_svc + config_.latency.t_dram));
  distances_.resize(tiles_ * tiles_);
  anchor_distances_.resize(tiles_);
  for (std::size_t a = 0; a < tiles_; ++a) {
    const TileCoord ca = coords_of(static_cast<TileId>(a), config_.mesh);
    for (std::size_t b = 0; b < tiles_; ++b) {
      distances_[a * tiles_ + b] =
          hop_distance(ca, coords_of(static_cast<TileId>(b), config_.mesh));
    }
    for (int c = 0; c < kNumControllers; ++c) {
      anchor_distances_[a][c] = hop_distance(ca, config_.mesh.controller_anchors[c]);
    }
  }
}

int MemorySystem::controller_distance(TileId tile, Addr addr, int& controller) const {
  controller = space_.controller_of(addr, config_.striping);
  return anchor_distances_[tile][controller];
}

AccessResult MemorySystem::access(TileId tile, Addr addr, AccessKind kind, Cycles at) {
  if (tile >= tiles_) throw SimulationFault("access from invalid tile " + std::to_string(tile));
  const TileId home = space_.checked_home(addr);
  const LatencyParams& lp = config_.latency;
  const bool caching = config_.cache.caches_enabled;
  const LineId line = space_.line_of(addr);

  AccessResult r;
  r.latency = lp.t_l2;
  ++stats_.accesses;

  if (caching && caches_[tile].touch(line)) {
    r.cls = AccessClass::LocalL2Hit;
    ++stats_.l2_hits;
  } else if (home == tile) {
    // Locally homed: directory consulted in place, then straight to DRAM.
    int ctrl = 0;
    const Cycles dc = static_cast<Cycles>(controller_distance(tile, addr, ctrl));
    const Cycles arrive = at + lp.t_l2 + lp.t_dir + lp.t_hop * dc;
    const Cycles w = controllers_[ctrl].wait(arrive);
    r.latency += lp.t_dir + 2 * lp.t_hop * dc + w + lp.t_dram + lp.t_mem_svc;
    r.queue_wait += w;
    r.cls = AccessClass::DramFill;
    ++stats_.dram_fills;
    if (caching) install(tile, line);
  } else {
    const Cycles d = static_cast<Cycles>(distance(tile, home));
    const Cycles arrive_home = at + lp.t_l2 + lp.t_hop * d;
    const Cycles wd = directories_[home].wait(arrive_home);
    r.latency += 2 * lp.t_hop * d + wd + lp.t_dir;
    r.queue_wait += wd;
    if (caching && caches_[home].touch(line)) {
      r.latency += lp.t_l2;
      r.cls = AccessClass::HomeL3Hit;
      ++stats_.l3_hits;
    } else {
      int ctrl = 0;
      const Cycles dc = static_cast<Cycles>(controller_distance(home, addr, ctrl));
      const Cycles arrive_ctrl = arrive_home + wd + lp.t_dir + lp.t_hop * dc;
      const Cycles wc = controllers_[ctrl].wait(arrive_ctrl);
      r.latency += 2 * lp.t_hop * dc + wc + lp.t_dram + lp.t_mem_svc;
      r.queue_wait += wc;
      r.cls = AccessClass::DramFill;
      ++stats_.dram_fills;
      if (caching) install(home, line);
    }
    if (caching) install(tile, line);
  }

  if (kind == AccessKind::Write && caching) {
    const std::uint64_t self = std::uint64_t{1} << tile;
    std::uint64_t others = sharers_[line] & ~self;
    if (others != 0) {
      int max_d = 0;
      unsigned count = 0;
      for (std::uint64_t m = others; m != 0; m &= m - 1) {
        const auto s = static_cast<TileId>(std::countr_zero(m));
        max_d = std::max(max_d, distance(home, s));
        caches_[s].erase(line);
        ++count;
      }
      r.latency += lp.t_dir + 2 * lp.t_hop * static_cast<Cycles>(max_d);
      r.invalidations_sent = count;
      stats_.invalidations += count;
    }
    sharers_[line] = (tile == home) ? 0 : (sharers_[line] & self);
  }
  return r;
}

void MemorySystem::install(TileId tile, LineId line) {
  if (const auto victim = caches_[tile].insert(line)) {
    const LineId v = *victim;
    const TileId vhome = space_.home_of_line(v);
    if (vhome == tile) {
      for (std::uint64_t m = sharers_[v]; m != 0; m &= m - 1) {
        caches_[static_cast<TileId>(std::countr_zero(m))].erase(v);
      }
      sharers_[v] = 0;
    } else {
      sharers_[v] &= ~(std::uint64_t{1} << tile);
    }
  }
  const TileId home = space_.home_of_line(line);
  if (home != tile) sharers_[line] |= std::uint64_t{1} << tile;
}

void MemorySystem::evict(TileId tile, LineId line) {
  if (!caches_[tile].erase(line)) return;
  const TileId home = space_.home_of_line(line);
  if (home == tile) {
    for (std::uint64_t m = sharers_[line]; m != 0; m &= m - 1) {
      caches_[static_cast<TileId>(std::countr_zero(m))].erase(line);
    }
    sharers_[line] = 0;
  } else {
    sharers_[line] &= ~(std::uint64_t{1} << tile);
  }
}

const Region& MemorySystem::allocate(TileId tile, std::uint64_t n_bytes, HomePolicy policy) {
  const Region& r = space_.allocate(tile, n_bytes, policy);
  sharers_.resize(static_cast<std::size_t>(space_.line_limit()), 0);
  return r;
}

void MemorySystem::release(RegionId id) {
  const Region& region = space_.region(id);
  if (region.live && config_.cache.caches_enabled) {
    const LineId first = space_.line_of(region.base);
    const LineId last = space_.line_of(region.end() - 1) + 1;
    for (LineId line = first; line < last; ++line) {
      caches_[space_.home_of_line(line)].erase(line);
      for (std::uint64_t m = sharers_[line]; m != 0; m &= m - 1) {
        caches_[static_cast<TileId>(std::countr_zero(m))].erase(line);
      }
      sharers_[line] = 0;
    }
  }
  space_.release(id);
}

CoherenceStats MemorySystem::stats_snapshot() const {
  CoherenceStats s = stats_;
  for (const auto& d : directories_) {
    s.max_home_queue_depth = std::max(s.max_home_queue_depth, d.max_depth());
  }
  for (const auto& c : controllers_) {
    s.max_controller_queue_depth = std::max(s.max_controller_queue_depth, c.max_depth());
  }
  return s;
}

DirectoryEntry MemorySystem::directory_entry(LineId line) const {
  DirectoryEntry e;
  e.line = line;
  const TileId home = space_.home_of_line(line);
  e.present_at_home = caches_[home].contains(line);
  const std::uint64_t mask = line < sharers_.size() ? sharers_[line] : 0;
  for (std::uint64_t m = mask; m != 0; m &= m - 1) {
    e.sharers.push_back(static_cast<TileId>(std::countr_zero(m)));
  }
  return e;
}

}  // namespace nucasim
