#include "nucasim/address_space.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "nucasim/error.hpp"

namespace nucasim {

std::string_view to_string(HashMode mode) {
  return mode == HashMode::AllButStack ? "all_but_stack" : "none";
}

HashMode parse_hash_mode(std::string_view text) {
  if (text == "all_but_stack" || text == "AllButStack") return HashMode::AllButStack;
  if (text == "none" || text == "None") return HashMode::None;
  throw ConfigError("unknown hash_mode '" + std::string(text) + "'");
}

void AddrSpaceConfig::validate() const {
  for (auto [name, v] : {std::pair{"line_size", line_size}, std::pair{"page_size", page_size},
                         std::pair{"stripe_chunk", stripe_chunk},
                         std::pair{"element_size", element_size}}) {
    if (v == 0 || !std::has_single_bit(v)) {
      throw ConfigError(std::string(name) + " must be a power of two, got " + std::to_string(v));
    }
  }
  if (stripe_chunk % line_size != 0) throw ConfigError("line_size must divide stripe_chunk");
  if (page_size % stripe_chunk != 0) throw ConfigError("stripe_chunk must divide page_size");
  if (line_size % element_size != 0) throw ConfigError("element_size must divide line_size");
  if (element_size < 4) throw ConfigError("element_size must hold a 32-bit value");
  if (capacity < page_size) throw ConfigError("address space smaller than one page");
}

void PageTable::insert(PageId page, PageEntry entry) {
  if (page >= slots_.size()) {
    slots_.resize(page + 1);
    mapped_.resize(page + 1, 0);
  }
  if (!mapped_[page]) ++count_;
  slots_[page] = entry;
  mapped_[page] = 1;
}

void PageTable::erase(PageId page) {
  if (page < slots_.size() && mapped_[page]) {
    mapped_[page] = 0;
    --count_;
  }
}

bool operator==(const PageTable& a, const PageTable& b) {
  if (a.count_ != b.count_) return false;
  const std::size_t n = std::max(a.slots_.size(), b.slots_.size());
  for (PageId p = 0; p < n; ++p) {
    const PageEntry* ea = a.find(p);
    const PageEntry* eb = b.find(p);
    if ((ea == nullptr) != (eb == nullptr)) return false;
    if (ea != nullptr && !(*ea == *eb)) return false;
  }
  return true;
}

AddressSpace::AddressSpace(AddrSpaceConfig config, MeshConfig mesh, HashMode mode)
    : config_(config), mesh_(mesh), mode_(mode) {
  config_.validate();
  mesh_.validate();
  line_shift_ = std::countr_zero(config_.line_size);
  page_shift_ = std::countr_zero(config_.page_size);
  tiles_ = static_cast<LineId>(mesh_.total_tiles());
  nearest_controller_.resize(static_cast<std::size_t>(mesh_.total_tiles()));
  for (int t = 0; t < mesh_.total_tiles(); ++t) {
    nearest_controller_[t] = nearest_controller(coords_of(static_cast<TileId>(t), mesh_), mesh_);
  }
}

const Region& AddressSpace::allocate(TileId thread_tile, std::uint64_t n_bytes,
                                     HomePolicy policy) {
  if (n_bytes == 0) throw SimulationFault("zero-byte allocation");
  if (thread_tile >= static_cast<TileId>(mesh_.total_tiles())) {
    throw SimulationFault("allocation from invalid tile " + std::to_string(thread_tile));
  }
  const std::uint64_t pages = (n_bytes + config_.page_size - 1) / config_.page_size;
  const std::uint64_t span = pages * config_.page_size;
  if (next_free_ + span > config_.capacity || next_free_ + span < next_free_) {
    throw SimulationFault("simulated address space exhausted allocating " +
                          std::to_string(n_bytes) + " bytes (capacity " +
                          std::to_string(config_.capacity) + ")");
  }

  TileId home = kHashedHome;
  if (mode_ == HashMode::None) {
    switch (policy.kind) {
      case HomePolicy::Kind::Local:
        home = thread_tile;
        break;
      case HomePolicy::Kind::Remote:
        if (policy.remote_tile >= static_cast<TileId>(mesh_.total_tiles())) {
          throw ConfigError("remote home tile " + std::to_string(policy.remote_tile) +
                            " out of range");
        }
        home = policy.remote_tile;
        break;
      case HomePolicy::Kind::HashForHome:
        home = kHashedHome;
        break;
    }
  }

  const auto id = static_cast<RegionId>(regions_.size());
  regions_.push_back(Region{id, next_free_, n_bytes, thread_tile, true});
  const PageId first = page_of(next_free_);
  for (PageId p = first; p < first + pages; ++p) table_.insert(p, PageEntry{home, id});
  next_free_ += span;
  data_.resize(next_free_ / config_.element_size, 0);
  ++live_count_;
  return regions_.back();
}

std::pair<LineId, LineId> AddressSpace::release(RegionId id) {
  if (id >= regions_.size()) throw SimulationFault("release of unknown region");
  Region& r = regions_[id];
  if (!r.live) {
    throw SimulationFault("double release of region at 0x" + std::to_string(r.base));
  }
  r.live = false;
  --live_count_;
  const PageId first = page_of(r.base);
  const PageId last = page_of(r.end() - 1);
  for (PageId p = first; p <= last; ++p) table_.erase(p);
  return {line_of(r.base), line_of(r.end() - 1) + 1};
}

TileId AddressSpace::home_of_line(LineId line) const {
  const PageEntry* e = table_.find(page_of_line(line));
  if (e == nullptr) {
    throw SimulationFault("line " + std::to_string(line) + " belongs to no mapped page");
  }
  if (e->hashed()) return static_cast<TileId>(line % tiles_);
  return e->home;
}

TileId AddressSpace::checked_home(Addr addr) const {
  const PageEntry* e = table_.find(page_of(addr));
  if (e == nullptr) {
    throw SimulationFault("access to unmapped address " + std::to_string(addr));
  }
  const Region& r = regions_[e->region];
  if (addr >= r.end()) {
    throw SimulationFault("access past the end of region at " + std::to_string(r.base));
  }
  if (e->hashed()) return static_cast<TileId>(line_of(addr) % tiles_);
  return e->home;
}

int AddressSpace::controller_of(Addr addr, bool striping) const {
  if (striping) return static_cast<int>((addr / config_.stripe_chunk) % kNumControllers);
  return nearest_controller_[region_at(addr).allocating_tile];
}

const Region& AddressSpace::region_at(Addr addr) const {
  const PageEntry* e = table_.find(page_of(addr));
  if (e == nullptr) {
    throw SimulationFault("access to unmapped address " + std::to_string(addr));
  }
  const Region& r = regions_[e->region];
  if (addr >= r.end()) {
    throw SimulationFault("access past the end of region at " + std::to_string(r.base));
  }
  return r;
}

const Region& AddressSpace::region(RegionId id) const {
  if (id >= regions_.size()) throw SimulationFault("unknown region id");
  return regions_[id];
}

}  // namespace nucasim
