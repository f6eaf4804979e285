#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nucasim/error.hpp"
#include "nucasim/harness.hpp"

namespace {

using namespace nucasim;

enum ExitCode : int {
  kOk = 0,
  kSimulationFault = 1,
  kUsage = 2,
  kVerification = 3,
  kConfig = 4,
};

struct RunFlags {
  std::string workload = "mergesort";
  int case_id = 8;
  std::uint64_t size = 1 << 20;
  int threads = 64;
  int reps = 1;
  std::optional<std::string> striping;
  bool no_cache = false;
  bool intermediate_only = false;
  std::uint64_t seed = 1;
  std::string params_file;
  std::string format = "csv";
  std::string output;
  bool with_speedup = false;
  int jobs = 0;
};

void add_run_flags(CLI::App& app, RunFlags& f, bool with_case) {
  app.add_option("--workload", f.workload, "Workload kind")
      ->check(CLI::IsMember({"microbench", "mergesort"}));
  if (with_case) app.add_option("--case", f.case_id, "Experiment case 1..8")->required();
  app.add_option("--size", f.size, "Input elements n");
  app.add_option("--threads", f.threads, "Worker (leaf) thread count m");
  app.add_option("--reps", f.reps, "Micro-benchmark repetitions");
  app.add_option("--striping", f.striping, "Memory striping across controllers")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_flag("--no-cache", f.no_cache, "Disable L2 caching");
  app.add_flag("--localised-only-intermediate", f.intermediate_only,
               "Merge into fresh buffers without localising the leaves");
  app.add_option("--seed", f.seed, "Input and scheduler seed")->required();
  app.add_option("--params", f.params_file, "key=value parameter file");
  app.add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("-o,--output", f.output, "Write the report here instead of stdout");
  app.add_flag("--speedup", f.with_speedup, "Also run the single-thread baseline");
  app.add_option("--jobs", f.jobs, "Concurrent simulations (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
}

WorkloadSpec make_spec(const RunFlags& f) {
  WorkloadSpec spec;
  spec.kind = parse_workload_kind(f.workload);
  spec.n = f.size;
  spec.m = f.threads;
  spec.reps = f.reps;
  spec.intermediate_step = f.intermediate_only;
  spec.rng_seed = f.seed;
  return spec;
}

SimParams make_params(const RunFlags& f) {
  SimParams p = f.params_file.empty() ? SimParams{} : load_params_file(f.params_file);
  if (f.striping) p.sim.striping = *f.striping == "on";
  if (f.no_cache) p.sim.cache.caches_enabled = false;
  return p;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void attach_speedup(std::vector<ReportRow>& rows, const WorkloadSpec& spec,
                    const SimParams& params) {
  // One baseline per distinct n; the other axes do not change it.
  std::vector<std::pair<std::uint64_t, Cycles>> cache;
  for (auto& r : rows) {
    std::optional<Cycles> base;
    for (const auto& [n, c] : cache) {
      if (n == r.n) base = c;
    }
    if (!base) {
      WorkloadSpec s = spec;
      s.n = r.n;
      s.reps = r.reps;
      base = baseline(s, params);
      cache.emplace_back(r.n, *base);
    }
    r.speedup_vs_base = speedup(r, *base);
  }
}

void emit(const std::vector<ReportRow>& rows, const RunFlags& f) {
  const std::string text = format_rows(rows, f.format);
  if (f.output.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(f.output, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + f.output + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tiled NUCA manycore simulator"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Run one case");
  add_run_flags(*run_cmd, run_flags, true);

  RunFlags sweep_flags;
  std::string axis;
  std::string values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one case over a list of values");
  add_run_flags(*sweep_cmd, sweep_flags, true);
  sweep_cmd->add_option("--axis", axis, "Swept parameter")
      ->required()
      ->check(CLI::IsMember({"size", "threads", "reps", "striping"}));
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required();

  RunFlags base_flags;
  auto* base_cmd = app.add_subcommand("baseline", "Single thread, default hashing and scheduling");
  add_run_flags(*base_cmd, base_flags, false);

  RunFlags preset_flags;
  std::string preset;
  auto* preset_cmd = app.add_subcommand(
      "preset", "case-matrix: merge sort, all cases, m in {1,2,4,...,64}, with speed-up");
  add_run_flags(*preset_cmd, preset_flags, false);
  preset_cmd->add_option("name", preset, "Preset name")
      ->required()
      ->check(CLI::IsMember({"case-matrix"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) {
      const WorkloadSpec spec = make_spec(run_flags);
      const SimParams params = make_params(run_flags);
      std::vector<ReportRow> rows{run_case(run_flags.case_id, spec, params)};
      if (run_flags.with_speedup) attach_speedup(rows, spec, params);
      emit(rows, run_flags);
    } else if (*sweep_cmd) {
      const WorkloadSpec spec = make_spec(sweep_flags);
      const SimParams params = make_params(sweep_flags);
      std::vector<ReportRow> rows = sweep(parse_sweep_axis(axis), split_values(values),
                                          sweep_flags.case_id, spec, params, sweep_flags.jobs);
      if (sweep_flags.with_speedup) attach_speedup(rows, spec, params);
      emit(rows, sweep_flags);
    } else if (*base_cmd) {
      const WorkloadSpec spec = make_spec(base_flags);
      emit({baseline_row(spec, make_params(base_flags))}, base_flags);
    } else if (*preset_cmd) {
      WorkloadSpec spec = make_spec(preset_flags);
      spec.kind = WorkloadKind::MergeSort;
      const SimParams params = make_params(preset_flags);
      std::vector<RunRequest> requests;
      for (int c = 1; c <= kNumCases; ++c) {
        for (int m = 1; m <= 64; m *= 2) {
          RunRequest req{c, spec, params};
          req.spec.m = m;
          requests.push_back(req);
        }
      }
      std::vector<ReportRow> rows = run_batch(requests, preset_flags.jobs);
      attach_speedup(rows, spec, params);
      emit(rows, preset_flags);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kVerification;
  } catch (const SimulationFault& e) {
    std::cerr << "simulation fault: " << e.what() << "\n";
    return kSimulationFault;
  }
  return kOk;
}
