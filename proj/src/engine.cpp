#include "nucasim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nucasim/error.hpp"

namespace nucasim {

namespace {

constexpr std::uint64_t kSpreadPrime = 17;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Distribution helpers written out by hand: the standard distributions are
// implementation-defined and would break cross-platform determinism.
double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (~std::uint64_t{0} - n + 1) % n;
  std::uint64_t x = rng();
  while (x < threshold) x = rng();
  return x % n;
}

struct CurrentThreadReset {
  ~CurrentThreadReset() { detail::current_thread = nullptr; }
};

}  // namespace

void detail::ReadyQueue::push(Key k) {
  std::size_t i = heap_.size();
  heap_.push_back(k);
  while (i > 0) {
    const std::size_t parent = (i - 1) / 2;
    if (!(heap_[i] < heap_[parent])) break;
    std::swap(heap_[i], heap_[parent]);
    i = parent;
  }
}

detail::ReadyQueue::Key detail::ReadyQueue::pop() {
  const Key out = heap_.front();
  heap_.front() = heap_.back();
  heap_.pop_back();
  if (!heap_.empty()) sift_down(0);
  return out;
}

detail::ReadyQueue::Key detail::ReadyQueue::push_pop(Key k) {
  if (heap_.empty() || k < heap_.front()) return k;
  std::swap(k, heap_.front());
  sift_down(0);
  return k;
}

void detail::ReadyQueue::sift_down(std::size_t i) {
  const std::size_t n = heap_.size();
  for (;;) {
    const std::size_t l = 2 * i + 1;
    if (l >= n) return;
    std::size_t best = l;
    if (l + 1 < n && heap_[l + 1] < heap_[l]) best = l + 1;
    if (!(heap_[best] < heap_[i])) return;
    std::swap(heap_[i], heap_[best]);
    i = best;
  }
}

void detail::set_resume_point(SimThread& thread, std::coroutine_handle<> h) noexcept {
  thread.resume_point_ = h;
}

void MappingPolicy::validate() const {
  if (kind == Kind::MigratingLinux) {
    if (quantum == 0) throw ConfigError("quantum must be positive");
    if (!(migrate_prob >= 0.0 && migrate_prob <= 1.0)) {
      throw ConfigError("migrate_prob must lie in [0, 1]");
    }
  }
}

std::string_view to_string(MappingPolicy::Kind kind) {
  return kind == MappingPolicy::Kind::StaticOrdered ? "static" : "linux";
}

std::optional<TileId> place_thread(const MappingPolicy& mapping, ThreadId id,
                                   std::optional<std::uint64_t> leaf_counter, int usable_tiles) {
  const auto usable = static_cast<std::uint64_t>(usable_tiles);
  if (mapping.kind == MappingPolicy::Kind::StaticOrdered) {
    if (leaf_counter) return static_cast<TileId>(*leaf_counter % usable);
    return std::nullopt;
  }
  if (leaf_counter) return std::nullopt;
  return static_cast<TileId>((static_cast<std::uint64_t>(id) * kSpreadPrime) % usable);
}

void SimThread::AccessAwaiter::await_suspend(std::coroutine_handle<> h) noexcept {
  thread_->resume_point_ = h;
  thread_->yielded_ = true;
}

void SimThread::ForkAwaiter::await_suspend(std::coroutine_handle<> h) noexcept {
  thread_->resume_point_ = h;
  thread_->yielded_ = true;
}

SimThread::AccessAwaiter SimThread::issue(Addr addr, AccessKind kind, std::int32_t value) {
  Engine& e = *engine_;
  const AccessResult r = e.memory_.access(tile_, addr, kind, clock_);
  if (kind == AccessKind::Write) {
    e.memory_.space().store(addr, value);
  } else {
    value = e.memory_.space().load(addr);
  }
  if (e.observer_) e.observer_(TraceEvent{id_, tile_, clock_, addr, kind, value, r});
  e.advance(*this, r.latency);
  return AccessAwaiter(this, value, e.should_yield(*this));
}

SimThread::AccessAwaiter SimThread::read(Addr addr) { return issue(addr, AccessKind::Read, 0); }

SimThread::AccessAwaiter SimThread::write(Addr addr, std::int32_t value) {
  return issue(addr, AccessKind::Write, value);
}

Region SimThread::allocate(std::uint64_t n_bytes, HomePolicy policy) {
  return engine_->memory_.allocate(tile_, n_bytes, policy);
}

void SimThread::release(RegionId region) { engine_->memory_.release(region); }

void SimThread::mark_leaf() {
  Engine& e = *engine_;
  const std::uint64_t counter = e.leaf_counter_++;
  if (auto tile = place_thread(e.mapping_, id_, counter, e.config_.mesh.usable_tiles)) {
    tile_ = *tile;
  }
  e.report_.leaves.push_back({id_, counter, tile_});
}

SimThread::ForkAwaiter SimThread::fork(std::vector<ThreadBody> bodies) {
  if (bodies.empty()) {
    throw SimulationFault("thread " + std::to_string(id_) + " joins with no children");
  }
  state_ = State::BlockedOnJoin;
  join_clock_ = clock_;
  pending_children_ = bodies.size();
  children_.clear();
  for (auto& body : bodies) {
    SimThread& child = engine_->spawn(std::move(body), clock_, tile_, id_);
    children_.push_back(child.id_);
  }
  return ForkAwaiter(this);
}

Engine::Engine(const SimConfig& config, MappingPolicy mapping)
    : config_(config), mapping_(mapping), memory_(config) {
  mapping_.validate();
}

Engine::~Engine() = default;

SimThread& Engine::spawn(ThreadBody body, Cycles clock, TileId inherited_tile,
                         std::optional<ThreadId> parent) {
  const auto id = static_cast<ThreadId>(threads_.size());
  const TileId tile =
      place_thread(mapping_, id, std::nullopt, config_.mesh.usable_tiles).value_or(inherited_tile);
  threads_.push_back(std::unique_ptr<SimThread>(new SimThread(this, id, tile, clock, parent)));
  SimThread& t = *threads_.back();
  if (mapping_.kind == MappingPolicy::Kind::MigratingLinux) {
    t.next_quantum_ = mapping_.quantum;
    t.rng_.emplace(splitmix64(mapping_.seed ^ splitmix64(id)));
  }
  t.body_ = std::move(body);
  t.root_.emplace(t.body_(t));
  t.resume_point_ = t.root_->handle();
  ++report_.threads_created;
  make_ready(t);
  return t;
}

bool Engine::should_yield(const SimThread& t) const {
  return !ready_.empty() && ready_.top() < Key{t.clock_, t.id_};
}

void Engine::advance(SimThread& t, Cycles latency) {
  t.clock_ += latency;
  if (mapping_.kind != MappingPolicy::Kind::MigratingLinux) return;
  t.work_ += latency;
  while (t.work_ >= t.next_quantum_) {
    t.next_quantum_ += mapping_.quantum;
    maybe_migrate(t);
  }
}

void Engine::maybe_migrate(SimThread& t) {
  const int usable = config_.mesh.usable_tiles;
  if (usable <= 1) return;
  if (unit_interval(*t.rng_) >= mapping_.migrate_prob) return;
  auto target = static_cast<TileId>(uniform_below(*t.rng_, static_cast<std::uint64_t>(usable - 1)));
  if (target >= t.tile_) ++target;
  report_.migration_log.push_back({t.id_, t.clock_, t.tile_, target});
  ++report_.migrations;
  t.tile_ = target;
  t.clock_ += config_.latency.t_migrate;
}

void Engine::finish(SimThread& t) {
  t.state_ = SimThread::State::Finished;
  t.root_.reset();
  if (!t.parent_) return;
  SimThread& p = *threads_[*t.parent_];
  p.join_clock_ = std::max(p.join_clock_, t.clock_);
  if (--p.pending_children_ == 0) {
    p.clock_ = p.join_clock_;
    p.tile_ = threads_[p.children_.front()]->tile_;
    p.state_ = SimThread::State::Running;
    make_ready(p);
  }
}

RunReport Engine::run(const Program& program) {
  if (used_) throw std::logic_error("an Engine runs exactly one program");
  used_ = true;
  if (!program.root) throw ConfigError("program has no root body");
  if (mapping_.kind == MappingPolicy::Kind::StaticOrdered &&
      program.leaves > config_.mesh.usable_tiles) {
    throw ConfigError(std::to_string(program.leaves) + " threads exceed the " +
                      std::to_string(config_.mesh.usable_tiles) +
                      " usable tiles under static mapping");
  }

  CurrentThreadReset guard;
  spawn(program.root, 0, 0, std::nullopt);
  std::optional<Key> next = ready_.pop();
  while (next) {
    SimThread& t = *threads_[next->id];
    detail::current_thread = &t;
    bool requeue = false;
    for (;;) {
      t.yielded_ = false;
      t.resume_point_.resume();
      if (t.yielded_) {
        requeue = t.state_ == SimThread::State::Running;
        break;
      }
      if (!t.resume_point_) {
        finish(t);
        break;
      }
    }
    if (requeue) {
      next = ready_.push_pop(Key{t.clock_, t.id_});
    } else if (!ready_.empty()) {
      next = ready_.pop();
    } else {
      next.reset();
    }
  }

  const SimThread& root = *threads_.front();
  if (root.state_ != SimThread::State::Finished) {
    throw SimulationFault("simulation stalled before the root thread finished");
  }
  report_.total_cycles = root.clock_;
  report_.stats = memory_.stats_snapshot();
  report_.live_regions = memory_.space().live_region_count();
  return report_;
}

RunReport run(const Program& program, const MappingPolicy& mapping, const SimConfig& config) {
  Engine engine(config, mapping);
  return engine.run(program);
}

}  // namespace nucasim
