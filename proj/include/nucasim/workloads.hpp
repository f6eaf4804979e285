#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "nucasim/engine.hpp"

namespace nucasim {

enum class WorkloadKind { Microbench, MergeSort };

std::string_view to_string(WorkloadKind kind);
WorkloadKind parse_workload_kind(std::string_view text);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::MergeSort;
  std::uint64_t n = 1 << 20;
  int m = 64;
  int reps = 1;  // micro-benchmark only
  bool localised = false;
  // Merge into a fresh buffer instead of scratch + copy-back. Implied when
  // localised; may be set alone to isolate its effect.
  bool intermediate_step = false;
  std::uint64_t rng_seed = 1;

  bool uses_fresh_merge_buffers() const { return localised || intermediate_step; }
  void validate() const;
};

// Seeded uniform 32-bit input values.
std::vector<std::int32_t> generate_input(std::uint64_t n, std::uint64_t seed);

// A buffer a worker ended up with: its base address and, when the worker
// allocated it, the region to free.
struct Buffer {
  Addr base = 0;
  std::optional<RegionId> owned;
};

/// Shared between the program's coroutines and the caller. Filled in while
/// the simulation runs; read back for verification.
struct WorkloadState {
  WorkloadSpec spec;
  std::uint64_t element_size = 4;
  std::vector<std::int32_t> input;

  Addr input_base = 0;   // micro-benchmark input, merge sort array0
  Addr output_base = 0;  // micro-benchmark output
  Addr result_base = 0;  // merge sort final sorted buffer

  // Called on every leaf right after its compute phase, with the buffer it
  // worked on (the local copy when localised) still live.
  std::function<void(SimThread&, Addr base, std::uint64_t count)> on_leaf_buffer;
};

struct BuiltWorkload {
  Program program;
  std::shared_ptr<WorkloadState> state;
};

BuiltWorkload build_microbench(const WorkloadSpec& spec, std::uint64_t element_size = 4);
BuiltWorkload build_mergesort(const WorkloadSpec& spec, std::uint64_t element_size = 4);
BuiltWorkload build_workload(const WorkloadSpec& spec, std::uint64_t element_size = 4);

// Chunk of the micro-benchmark input owned by leaf i: [first, second).
std::pair<std::uint64_t, std::uint64_t> microbench_chunk(std::uint64_t n, int m, int leaf);

// Access-generating kernels. All addresses are element-aligned; counts are
// in elements.

Task<> bulk_copy(SimThread& t, Addr dst, Addr src, std::uint64_t count, std::uint64_t elem);

// Stable, left-biased merge of two sorted runs into dest. With copy_back the
// merged run is then written over [left, left + nl + nr), which must be the
// contiguous origin of both runs.
Task<> merge(SimThread& t, Addr left, std::uint64_t nl, Addr right, std::uint64_t nr, Addr dest,
             bool copy_back, std::uint64_t elem);

// Top-down recursive merge sort of data[0, size) using scratch[0, size).
Task<> serial_mergesort(SimThread& t, Addr data, Addr scratch, std::uint64_t size,
                        std::uint64_t elem);

// Reads the workload's final buffer back out of simulated memory.
std::vector<std::int32_t> read_result(const WorkloadState& state, const AddressSpace& space);

// Throws VerificationError with a diff summary when the output is wrong.
void verify(const WorkloadState& state, const AddressSpace& space);

}  // namespace nucasim
