#include "nucasim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "nucasim/error.hpp"

namespace nucasim {

namespace {

constexpr CaseConfig kCases[kNumCases] = {
    {1, false, MappingPolicy::Kind::MigratingLinux, HashMode::AllButStack},
    {2, false, MappingPolicy::Kind::MigratingLinux, HashMode::None},
    {3, false, MappingPolicy::Kind::StaticOrdered, HashMode::AllButStack},
    {4, false, MappingPolicy::Kind::StaticOrdered, HashMode::None},
    {5, true, MappingPolicy::Kind::MigratingLinux, HashMode::AllButStack},
    {6, true, MappingPolicy::Kind::MigratingLinux, HashMode::None},
    {7, true, MappingPolicy::Kind::StaticOrdered, HashMode::AllButStack},
    {8, true, MappingPolicy::Kind::StaticOrdered, HashMode::None},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("bad integer for '" + key + "': '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  double out = 0;
  is >> out;
  if (!is || !is.eof()) throw ConfigError("bad number for '" + key + "': '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("bad boolean for '" + key + "': '" + value + "'");
}

std::array<TileCoord, kNumControllers> parse_anchors(const std::string& value) {
  std::array<TileCoord, kNumControllers> anchors{};
  std::istringstream is(value);
  std::string item;
  int count = 0;
  while (std::getline(is, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos || count >= kNumControllers) {
      throw ConfigError("controller_anchors must be four x:y pairs, got '" + value + "'");
    }
    anchors[count].x = parse_integer<int>("controller_anchors", trim(item.substr(0, colon)));
    anchors[count].y = parse_integer<int>("controller_anchors", trim(item.substr(colon + 1)));
    ++count;
  }
  if (count != kNumControllers) {
    throw ConfigError("controller_anchors must be four x:y pairs, got '" + value + "'");
  }
  return anchors;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

SimConfig resolve_sim(const CaseConfig& c, const WorkloadSpec& spec, const SimParams& params) {
  if (params.hash_mode && *params.hash_mode != c.hash_mode) {
    throw ConfigError("params file pins hash_mode=" + std::string(to_string(*params.hash_mode)) +
                      " but case " + std::to_string(c.id) + " uses " +
                      std::string(to_string(c.hash_mode)));
  }
  SimConfig sc = params.sim;
  sc.hash_mode = c.hash_mode;
  sc.mesh.usable_tiles = params.usable_tiles.value_or(default_usable_tiles(spec.kind));
  sc.validate();
  return sc;
}

MappingPolicy resolve_mapping(const CaseConfig& c, const WorkloadSpec& spec,
                              const SimParams& params) {
  if (c.mapping == MappingPolicy::Kind::StaticOrdered) return MappingPolicy::static_ordered();
  return MappingPolicy::migrating(params.mapping_seed.value_or(spec.rng_seed), params.quantum,
                                  params.migrate_prob);
}

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

CaseConfig case_config(int id) {
  if (id < 1 || id > kNumCases) {
    throw UsageError("case id must be in 1..8, got " + std::to_string(id));
  }
  return kCases[id - 1];
}

int default_usable_tiles(WorkloadKind kind) { return kind == WorkloadKind::MergeSort ? 64 : 63; }

SimParams parse_params(std::istream& in) {
  SimParams p;
  SimConfig& s = p.sim;
  bool anchors_set = false;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("params line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "t_l2") s.latency.t_l2 = parse_integer<Cycles>(key, value);
    else if (key == "t_hop") s.latency.t_hop = parse_integer<Cycles>(key, value);
    else if (key == "t_dir") s.latency.t_dir = parse_integer<Cycles>(key, value);
    else if (key == "t_dram") s.latency.t_dram = parse_integer<Cycles>(key, value);
    else if (key == "t_mem_svc") s.latency.t_mem_svc = parse_integer<Cycles>(key, value);
    else if (key == "t_migrate") s.latency.t_migrate = parse_integer<Cycles>(key, value);
    else if (key == "l2_capacity") s.cache.l2_capacity = parse_integer<std::uint64_t>(key, value);
    else if (key == "associativity") s.cache.associativity = parse_integer<std::uint64_t>(key, value);
    else if (key == "caches_enabled") s.cache.caches_enabled = parse_bool(key, value);
    else if (key == "width") s.mesh.width = parse_integer<int>(key, value);
    else if (key == "height") s.mesh.height = parse_integer<int>(key, value);
    else if (key == "usable_tiles") p.usable_tiles = parse_integer<int>(key, value);
    else if (key == "controller_anchors") {
      s.mesh.controller_anchors = parse_anchors(value);
      anchors_set = true;
    }
    else if (key == "seed") p.mapping_seed = parse_integer<std::uint64_t>(key, value);
    else if (key == "quantum") p.quantum = parse_integer<Cycles>(key, value);
    else if (key == "migrate_prob") p.migrate_prob = parse_double(key, value);
    else if (key == "line_size") s.addr.line_size = parse_integer<std::uint64_t>(key, value);
    else if (key == "page_size") s.addr.page_size = parse_integer<std::uint64_t>(key, value);
    else if (key == "element_size") s.addr.element_size = parse_integer<std::uint64_t>(key, value);
    else if (key == "hash_mode") p.hash_mode = parse_hash_mode(value);
    else if (key == "striping") s.striping = parse_bool(key, value);
    else throw ConfigError("unknown params key '" + key + "' on line " + std::to_string(lineno));
  }
  if (!anchors_set) s.mesh.use_corner_anchors();
  return p;
}

SimParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open params file '" + path + "'");
  return parse_params(in);
}

std::string csv_header() {
  return "case_id,workload,n,m,reps,striping,seed,total_cycles,accesses,l2_hits,l3_hits,"
         "dram_fills,invalidations,migrations,max_home_queue_depth,max_controller_queue_depth,"
         "speedup_vs_base,localised,intermediate_step,mapping,hash_mode,t_l2,t_hop,t_dir,t_dram,"
         "t_mem_svc,t_migrate,l2_capacity,associativity,caches_enabled,line_size,page_size,width,"
         "height,usable_tiles,quantum,migrate_prob,mapping_seed";
}

std::string to_csv(const ReportRow& r) {
  std::ostringstream os;
  os << r.case_id << ',' << to_string(r.workload) << ',' << r.n << ',' << r.m << ',' << r.reps
     << ',' << (r.striping ? "on" : "off") << ',' << r.seed << ',' << r.total_cycles << ','
     << r.accesses << ',' << r.l2_hits << ',' << r.l3_hits << ',' << r.dram_fills << ','
     << r.invalidations << ',' << r.migrations << ',' << r.max_home_queue_depth << ','
     << r.max_controller_queue_depth << ','
     << (r.speedup_vs_base ? format_double(*r.speedup_vs_base) : std::string()) << ','
     << r.localised << ',' << r.intermediate_step << ',' << to_string(r.mapping) << ','
     << to_string(r.hash_mode) << ',' << r.latency.t_l2 << ',' << r.latency.t_hop << ','
     << r.latency.t_dir << ',' << r.latency.t_dram << ',' << r.latency.t_mem_svc << ','
     << r.latency.t_migrate << ',' << r.cache.l2_capacity << ',' << r.cache.associativity << ','
     << r.cache.caches_enabled << ',' << r.line_size << ',' << r.page_size << ',' << r.width
     << ',' << r.height << ',' << r.usable_tiles << ',' << r.quantum << ','
     << format_double(r.migrate_prob) << ',' << r.mapping_seed;
  return os.str();
}

std::string to_json(const std::vector<ReportRow>& rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["case_id"] = r.case_id;
    j["workload"] = std::string(to_string(r.workload));
    j["n"] = r.n;
    j["m"] = r.m;
    j["reps"] = r.reps;
    j["striping"] = r.striping;
    j["seed"] = r.seed;
    j["total_cycles"] = r.total_cycles;
    j["accesses"] = r.accesses;
    j["l2_hits"] = r.l2_hits;
    j["l3_hits"] = r.l3_hits;
    j["dram_fills"] = r.dram_fills;
    j["invalidations"] = r.invalidations;
    j["migrations"] = r.migrations;
    j["max_home_queue_depth"] = r.max_home_queue_depth;
    j["max_controller_queue_depth"] = r.max_controller_queue_depth;
    j["speedup_vs_base"] = r.speedup_vs_base ? nlohmann::ordered_json(*r.speedup_vs_base)
                                             : nlohmann::ordered_json(nullptr);
    j["localised"] = r.localised;
    j["intermediate_step"] = r.intermediate_step;
    j["mapping"] = std::string(to_string(r.mapping));
    j["hash_mode"] = std::string(to_string(r.hash_mode));
    j["t_l2"] = r.latency.t_l2;
    j["t_hop"] = r.latency.t_hop;
    j["t_dir"] = r.latency.t_dir;
    j["t_dram"] = r.latency.t_dram;
    j["t_mem_svc"] = r.latency.t_mem_svc;
    j["t_migrate"] = r.latency.t_migrate;
    j["l2_capacity"] = r.cache.l2_capacity;
    j["associativity"] = r.cache.associativity;
    j["caches_enabled"] = r.cache.caches_enabled;
    j["line_size"] = r.line_size;
    j["page_size"] = r.page_size;
    j["width"] = r.width;
    j["height"] = r.height;
    j["usable_tiles"] = r.usable_tiles;
    j["quantum"] = r.quantum;
    j["migrate_prob"] = r.migrate_prob;
    j["mapping_seed"] = r.mapping_seed;
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

std::string format_rows(const std::vector<ReportRow>& rows, std::string_view format) {
  if (format == "json") return to_json(rows);
  if (format != "csv") throw UsageError("unknown format '" + std::string(format) + "'");
  std::string out = csv_header() + "\n";
  for (const auto& r : rows) out += to_csv(r) + "\n";
  return out;
}

ReportRow run_case(int case_id, WorkloadSpec spec, const SimParams& params,
                   std::vector<std::int32_t>* output) {
  const CaseConfig c = case_config(case_id);
  spec.localised = c.localised;
  const SimConfig sc = resolve_sim(c, spec, params);
  const MappingPolicy mapping = resolve_mapping(c, spec, params);

  BuiltWorkload built = build_workload(spec, sc.addr.element_size);
  Engine engine(sc, mapping);
  const RunReport rep = engine.run(built.program);
  if (output != nullptr) *output = read_result(*built.state, engine.memory().space());
  verify(*built.state, engine.memory().space());

  const CoherenceStats& st = rep.stats;
  if (st.l2_hits + st.l3_hits + st.dram_fills != st.accesses) {
    throw std::logic_error("access counters do not add up");
  }

  ReportRow r;
  r.case_id = case_id;
  r.workload = spec.kind;
  r.n = spec.n;
  r.m = spec.m;
  r.reps = spec.kind == WorkloadKind::Microbench ? spec.reps : 0;
  r.striping = sc.striping;
  r.seed = spec.rng_seed;
  r.total_cycles = rep.total_cycles;
  r.accesses = st.accesses;
  r.l2_hits = st.l2_hits;
  r.l3_hits = st.l3_hits;
  r.dram_fills = st.dram_fills;
  r.invalidations = st.invalidations;
  r.migrations = rep.migrations;
  r.max_home_queue_depth = st.max_home_queue_depth;
  r.max_controller_queue_depth = st.max_controller_queue_depth;
  r.localised = spec.localised;
  r.intermediate_step = spec.kind == WorkloadKind::MergeSort && spec.uses_fresh_merge_buffers();
  r.mapping = mapping.kind;
  r.hash_mode = sc.hash_mode;
  r.latency = sc.latency;
  r.cache = sc.cache;
  r.line_size = sc.addr.line_size;
  r.page_size = sc.addr.page_size;
  r.width = sc.mesh.width;
  r.height = sc.mesh.height;
  r.usable_tiles = sc.mesh.usable_tiles;
  r.quantum = mapping.kind == MappingPolicy::Kind::MigratingLinux ? mapping.quantum : 0;
  r.migrate_prob = mapping.kind == MappingPolicy::Kind::MigratingLinux ? mapping.migrate_prob : 0.0;
  r.mapping_seed = mapping.kind == MappingPolicy::Kind::MigratingLinux ? mapping.seed : 0;
  for (const auto& leaf : rep.leaves) r.leaf_tiles.push_back(leaf.tile);
  return r;
}

ReportRow baseline_row(WorkloadSpec spec, const SimParams& params) {
  spec.m = 1;
  ReportRow r = run_case(1, spec, params);
  r.speedup_vs_base = 1.0;
  return r;
}

Cycles baseline(WorkloadSpec spec, const SimParams& params) {
  return baseline_row(std::move(spec), params).total_cycles;
}

Cycles baseline_cycles(const Program& program, const SimParams& params) {
  const CaseConfig c = case_config(1);
  WorkloadSpec dummy;
  dummy.m = 1;
  const SimConfig sc = resolve_sim(c, dummy, params);
  Program single = program;
  single.leaves = 1;
  return run(single, resolve_mapping(c, dummy, params), sc).total_cycles;
}

double speedup(const ReportRow& row, Cycles base) {
  if (row.total_cycles == 0) throw std::domain_error("speedup of a zero-cycle run");
  return static_cast<double>(base) / static_cast<double>(row.total_cycles);
}

SweepAxis parse_sweep_axis(std::string_view text) {
  if (text == "size") return SweepAxis::Size;
  if (text == "threads") return SweepAxis::Threads;
  if (text == "reps") return SweepAxis::Reps;
  if (text == "striping") return SweepAxis::Striping;
  throw UsageError("unknown sweep axis '" + std::string(text) + "'");
}

std::vector<ReportRow> run_batch(const std::vector<RunRequest>& requests, int jobs) {
  std::vector<ReportRow> rows(requests.size());
  parallel_for(requests.size(), jobs, [&](std::size_t i) {
    rows[i] = run_case(requests[i].case_id, requests[i].spec, requests[i].params);
  });
  return rows;
}

std::vector<ReportRow> sweep(SweepAxis axis, const std::vector<std::string>& values, int case_id,
                             const WorkloadSpec& spec, const SimParams& params, int jobs) {
  if (values.empty()) throw UsageError("sweep needs at least one value");
  case_config(case_id);
  std::vector<RunRequest> requests;
  for (const auto& raw : values) {
    RunRequest req{case_id, spec, params};
    const std::string v = trim(raw);
    try {
      switch (axis) {
        case SweepAxis::Size:
          req.spec.n = parse_integer<std::uint64_t>("size", v);
          break;
        case SweepAxis::Threads:
          req.spec.m = parse_integer<int>("threads", v);
          break;
        case SweepAxis::Reps:
          req.spec.reps = parse_integer<int>("reps", v);
          break;
        case SweepAxis::Striping:
          if (v != "on" && v != "off") throw ConfigError("striping must be on or off");
          req.params.sim.striping = v == "on";
          break;
      }
    } catch (const ConfigError& e) {
      throw UsageError(std::string("invalid sweep value: ") + e.what());
    }
    requests.push_back(std::move(req));
  }
  return run_batch(requests, jobs);
}

}  // namespace nucasim
