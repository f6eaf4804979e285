#pragma once

#include <coroutine>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "nucasim/coherence.hpp"
#include "nucasim/task.hpp"

namespace nucasim {

using ThreadId = std::uint32_t;

struct MappingPolicy {
  enum class Kind { StaticOrdered, MigratingLinux };
  Kind kind = Kind::StaticOrdered;
  std::uint64_t seed = 1;
  Cycles quantum = 100000;
  double migrate_prob = 0.05;

  static MappingPolicy static_ordered() { return {}; }
  static MappingPolicy migrating(std::uint64_t seed, Cycles quantum = 100000,
                                 double migrate_prob = 0.05) {
    return {Kind::MigratingLinux, seed, quantum, migrate_prob};
  }

  void validate() const;
};

std::string_view to_string(MappingPolicy::Kind kind);

class SimThread;
using ThreadBody = std::function<Task<>(SimThread&)>;

// A whole simulated program: the body of the root thread, plus the number
// of leaf threads it will mark (checked against usable tiles when pinned).
struct Program {
  ThreadBody root;
  int leaves = 1;
};

// Tile for a newly created thread, or for a thread that just became a
// leaf. nullopt means "stay where you are" (pinned, non-leaf threads).
std::optional<TileId> place_thread(const MappingPolicy& mapping, ThreadId id,
                                   std::optional<std::uint64_t> leaf_counter, int usable_tiles);

struct MigrationEvent {
  ThreadId thread = 0;
  Cycles at = 0;
  TileId from = 0;
  TileId to = 0;
  friend bool operator==(const MigrationEvent&, const MigrationEvent&) = default;
};

struct LeafPlacement {
  ThreadId thread = 0;
  std::uint64_t counter = 0;
  TileId tile = 0;
  friend bool operator==(const LeafPlacement&, const LeafPlacement&) = default;
};

struct RunReport {
  Cycles total_cycles = 0;
  CoherenceStats stats;
  std::uint64_t migrations = 0;
  std::uint64_t threads_created = 0;
  std::size_t live_regions = 0;
  std::vector<MigrationEvent> migration_log;
  std::vector<LeafPlacement> leaves;
};

class Engine;

// One completed access, as seen by an access observer.
struct TraceEvent {
  ThreadId thread = 0;
  TileId tile = 0;
  Cycles at = 0;  // issue time
  Addr addr = 0;
  AccessKind kind = AccessKind::Read;
  std::int32_t value = 0;  // value read or written
  AccessResult result;
};

using AccessObserver = std::function<void(const TraceEvent&)>;

namespace detail {

/// Binary min-heap of runnable threads keyed by (clock, id). push_pop
/// swaps a yielding thread for the earliest one with a single sift.
class ReadyQueue {
 public:
  struct Key {
    Cycles clock;
    ThreadId id;
    friend bool operator<(const Key& a, const Key& b) {
      return a.clock < b.clock || (a.clock == b.clock && a.id < b.id);
    }
  };

  bool empty() const { return heap_.empty(); }
  const Key& top() const { return heap_.front(); }
  void push(Key k);
  Key pop();
  // Inserts k and removes the minimum of the queue plus k.
  Key push_pop(Key k);

 private:
  void sift_down(std::size_t i);
  std::vector<Key> heap_;
};

}  // namespace detail

/// One logical thread of the simulated program, and the API its body uses.
/// Accesses are performed at the thread's current clock; the awaitable they
/// return suspends only if another thread is now earlier in global order.
class SimThread {
 public:
  enum class State { Running, BlockedOnJoin, Finished };

  class AccessAwaiter {
   public:
    bool await_ready() const noexcept { return !yield_; }
    void await_suspend(std::coroutine_handle<> h) noexcept;
    std::int32_t await_resume() const noexcept { return value_; }

   private:
    friend class SimThread;
    AccessAwaiter(SimThread* t, std::int32_t v, bool y) : thread_(t), value_(v), yield_(y) {}
    SimThread* thread_;
    std::int32_t value_;
    bool yield_;
  };

  class ForkAwaiter {
   public:
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h) noexcept;
    void await_resume() const noexcept {}

   private:
    friend class SimThread;
    explicit ForkAwaiter(SimThread* t) : thread_(t) {}
    SimThread* thread_;
  };

  ThreadId id() const { return id_; }
  TileId tile() const { return tile_; }
  Cycles clock() const { return clock_; }
  std::optional<ThreadId> parent() const { return parent_; }
  State state() const { return state_; }

  AccessAwaiter read(Addr addr);
  AccessAwaiter write(Addr addr, std::int32_t value);

  // Returned by value: the region table may grow while this thread is suspended.
  Region allocate(std::uint64_t n_bytes, HomePolicy policy = HomePolicy::local());
  void release(RegionId region);

  // Registers this thread as a leaf worker: bumps the shared leaf counter
  // and, when pinned, moves the thread to its ordered tile.
  void mark_leaf();

  // Starts one child per body (clocks start at ours) and suspends until all
  // have finished. Afterwards our clock is the latest child finish time and
  // we sit on the first child's tile, as the forking thread itself runs the
  // first section.
  ForkAwaiter fork(std::vector<ThreadBody> bodies);

  Engine& engine() { return *engine_; }

 private:
  friend class Engine;
  friend void detail::set_resume_point(SimThread&, std::coroutine_handle<>) noexcept;

  SimThread(Engine* engine, ThreadId id, TileId tile, Cycles clock,
            std::optional<ThreadId> parent)
      : engine_(engine), id_(id), tile_(tile), clock_(clock), parent_(parent) {}

  AccessAwaiter issue(Addr addr, AccessKind kind, std::int32_t value);

  Engine* engine_;
  ThreadId id_;
  TileId tile_;
  Cycles clock_;
  std::optional<ThreadId> parent_;
  State state_ = State::Running;

  ThreadBody body_;
  std::optional<Task<>> root_;
  std::coroutine_handle<> resume_point_;
  bool yielded_ = false;

  std::vector<ThreadId> children_;
  std::size_t pending_children_ = 0;
  Cycles join_clock_ = 0;

  Cycles work_ = 0;  // cycles of progress, migration delays excluded
  Cycles next_quantum_ = 0;
  std::optional<std::mt19937_64> rng_;
};

/// Deterministic discrete-event executor. Threads run one at a time in
/// (clock, thread id) order; a single Engine runs a single program.
class Engine {
 public:
  Engine(const SimConfig& config, MappingPolicy mapping);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  RunReport run(const Program& program);

  MemorySystem& memory() { return memory_; }
  const MemorySystem& memory() const { return memory_; }
  const MappingPolicy& mapping() const { return mapping_; }
  const SimThread& thread(ThreadId id) const { return *threads_.at(id); }

  // Called after every simulated access, in execution order.
  void set_access_observer(AccessObserver observer) { observer_ = std::move(observer); }

 private:
  friend class SimThread;

  using Key = detail::ReadyQueue::Key;

  SimThread& spawn(ThreadBody body, Cycles clock, TileId inherited_tile,
                   std::optional<ThreadId> parent);
  bool should_yield(const SimThread& t) const;
  void advance(SimThread& t, Cycles latency);
  void maybe_migrate(SimThread& t);
  void finish(SimThread& t);
  void make_ready(SimThread& t) { ready_.push(Key{t.clock_, t.id_}); }

  SimConfig config_;
  MappingPolicy mapping_;
  MemorySystem memory_;
  std::vector<std::unique_ptr<SimThread>> threads_;
  detail::ReadyQueue ready_;
  std::uint64_t leaf_counter_ = 0;
  RunReport report_;
  AccessObserver observer_;
  bool used_ = false;
};

// Convenience wrapper: fresh engine, one program.
RunReport run(const Program& program, const MappingPolicy& mapping, const SimConfig& config);

}  // namespace nucasim
