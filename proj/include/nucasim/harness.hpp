#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nucasim/engine.hpp"
#include "nucasim/workloads.hpp"

namespace nucasim {

// One row of the experiment matrix.
struct CaseConfig {
  int id = 1;
  bool localised = false;
  MappingPolicy::Kind mapping = MappingPolicy::Kind::MigratingLinux;
  HashMode hash_mode = HashMode::AllButStack;
};

inline constexpr int kNumCases = 8;

// Throws UsageError outside 1..8.
CaseConfig case_config(int id);

/// Simulator parameters that are not fixed by the case or the workload.
/// Loaded from a key=value params file and adjusted by CLI flags.
struct SimParams {
  SimConfig sim;
  std::optional<int> usable_tiles;        // default depends on the workload
  std::optional<HashMode> hash_mode;      // if given, must agree with the case
  std::optional<std::uint64_t> mapping_seed;  // defaults to the run seed
  Cycles quantum = 100000;
  double migrate_prob = 0.05;
};

// Flat key=value text; '#' starts a comment. Unknown keys and malformed
// values throw ConfigError.
SimParams parse_params(std::istream& in);
SimParams load_params_file(const std::string& path);

// 63 for the micro-benchmark, 64 for merge sort.
int default_usable_tiles(WorkloadKind kind);

struct ReportRow {
  int case_id = 0;
  WorkloadKind workload = WorkloadKind::MergeSort;
  std::uint64_t n = 0;
  int m = 0;
  int reps = 0;
  bool striping = true;
  std::uint64_t seed = 0;
  Cycles total_cycles = 0;
  std::uint64_t accesses = 0;
  std::uint64_t l2_hits = 0;
  std::uint64_t l3_hits = 0;
  std::uint64_t dram_fills = 0;
  std::uint64_t invalidations = 0;
  std::uint64_t migrations = 0;
  std::uint64_t max_home_queue_depth = 0;
  std::uint64_t max_controller_queue_depth = 0;
  std::optional<double> speedup_vs_base;

  // Parameter echo.
  bool localised = false;
  bool intermediate_step = false;
  MappingPolicy::Kind mapping = MappingPolicy::Kind::StaticOrdered;
  HashMode hash_mode = HashMode::AllButStack;
  LatencyParams latency;
  CacheConfig cache;
  std::uint64_t line_size = 0;
  std::uint64_t page_size = 0;
  int width = 0;
  int height = 0;
  int usable_tiles = 0;
  Cycles quantum = 0;
  double migrate_prob = 0.0;
  std::uint64_t mapping_seed = 0;

  // Not part of the CSV/JSON output.
  std::vector<TileId> leaf_tiles;
};

std::string csv_header();
std::string to_csv(const ReportRow& row);
std::string to_json(const std::vector<ReportRow>& rows);
std::string format_rows(const std::vector<ReportRow>& rows, std::string_view format);

// What to run besides the case: the workload with its size/threads/reps/seed.
// spec.localised is overwritten from the case. If `output` is given it
// receives the final output array, also when verification fails.
ReportRow run_case(int case_id, WorkloadSpec spec, const SimParams& params,
                   std::vector<std::int32_t>* output = nullptr);

// Single thread, case 1 policies.
Cycles baseline(WorkloadSpec spec, const SimParams& params);
ReportRow baseline_row(WorkloadSpec spec, const SimParams& params);
// Same, for an arbitrary program (its leaf count is ignored).
Cycles baseline_cycles(const Program& program, const SimParams& params);

// base / row.total_cycles; std::domain_error for a zero-cycle row.
double speedup(const ReportRow& row, Cycles base);

enum class SweepAxis { Size, Threads, Reps, Striping };
SweepAxis parse_sweep_axis(std::string_view text);

// One row per value, in the given order, other parameters fixed. Runs up to
// `jobs` simulations concurrently (0 = hardware concurrency).
std::vector<ReportRow> sweep(SweepAxis axis, const std::vector<std::string>& values, int case_id,
                             const WorkloadSpec& spec, const SimParams& params, int jobs = 0);

// Runs arbitrary independent work items concurrently; results keep order.
struct RunRequest {
  int case_id = 1;
  WorkloadSpec spec;
  SimParams params;
};
std::vector<ReportRow> run_batch(const std::vector<RunRequest>& requests, int jobs = 0);

}  // namespace nucasim
