#include "nucasim/workloads.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <random>
#include <sstream>
#include <string>

#include "nucasim/error.hpp"

namespace nucasim {

std::string_view to_string(WorkloadKind kind) {
  return kind == WorkloadKind::Microbench ? "microbench" : "mergesort";
}

WorkloadKind parse_workload_kind(std::string_view text) {
  if (text == "microbench") return WorkloadKind::Microbench;
  if (text == "mergesort") return WorkloadKind::MergeSort;
  throw UsageError("unknown workload '" + std::string(text) + "'");
}

void WorkloadSpec::validate() const {
  if (m < 1) throw ConfigError("thread count must be at least 1");
  if (n < static_cast<std::uint64_t>(m)) {
    throw ConfigError("n = " + std::to_string(n) + " is smaller than the thread count " +
                      std::to_string(m));
  }
  if (reps < 0) throw ConfigError("reps must be non-negative");
  if (kind == WorkloadKind::MergeSort && !std::has_single_bit(static_cast<unsigned>(m))) {
    throw ConfigError("merge sort needs a power-of-two thread count, got " + std::to_string(m));
  }
}

std::vector<std::int32_t> generate_input(std::uint64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::int32_t> v(n);
  for (auto& x : v) x = static_cast<std::int32_t>(static_cast<std::uint32_t>(rng()));
  return v;
}

std::pair<std::uint64_t, std::uint64_t> microbench_chunk(std::uint64_t n, int m, int leaf) {
  const std::uint64_t chunk = (n + static_cast<std::uint64_t>(m) - 1) / static_cast<std::uint64_t>(m);
  const std::uint64_t first = std::min(n, chunk * static_cast<std::uint64_t>(leaf));
  const std::uint64_t last = std::min(n, first + chunk);
  return {first, last};
}

Task<> bulk_copy(SimThread& t, Addr dst, Addr src, std::uint64_t count, std::uint64_t elem) {
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::int32_t v = co_await t.read(src + i * elem);
    co_await t.write(dst + i * elem, v);
  }
}

Task<> merge(SimThread& t, Addr left, std::uint64_t nl, Addr right, std::uint64_t nr, Addr dest,
             bool copy_back, std::uint64_t elem) {
  std::uint64_t i = 0;
  std::uint64_t j = 0;
  std::uint64_t k = 0;
  // Heads are held in registers; each element is read once.
  std::int32_t a = nl > 0 ? co_await t.read(left) : 0;
  std::int32_t b = nr > 0 ? co_await t.read(right) : 0;
  while (i < nl && j < nr) {
    if (a <= b) {
      co_await t.write(dest + k++ * elem, a);
      if (++i < nl) {
        [[maybe_unused]] const std::int32_t prev = a;
        a = co_await t.read(left + i * elem);
        assert(prev <= a && "merge input not sorted");
      }
    } else {
      co_await t.write(dest + k++ * elem, b);
      if (++j < nr) {
        [[maybe_unused]] const std::int32_t prev = b;
        b = co_await t.read(right + j * elem);
        assert(prev <= b && "merge input not sorted");
      }
    }
  }
  while (i < nl) {
    co_await t.write(dest + k++ * elem, a);
    if (++i < nl) a = co_await t.read(left + i * elem);
  }
  while (j < nr) {
    co_await t.write(dest + k++ * elem, b);
    if (++j < nr) b = co_await t.read(right + j * elem);
  }
  if (copy_back) co_await bulk_copy(t, left, dest, nl + nr, elem);
}

Task<> serial_mergesort(SimThread& t, Addr data, Addr scratch, std::uint64_t size,
                        std::uint64_t elem) {
  if (size < 2) co_return;
  const std::uint64_t half = size / 2;
  if (half >= 2) co_await serial_mergesort(t, data, scratch, half, elem);
  if (size - half >= 2) co_await serial_mergesort(t, data + half * elem, scratch, size - half, elem);
  co_await merge(t, data, half, data + half * elem, size - half, scratch, true, elem);
}

namespace {

using StatePtr = std::shared_ptr<WorkloadState>;

Task<> microbench_leaf(SimThread& t, StatePtr st, int leaf) {
  t.mark_leaf();
  const WorkloadSpec& spec = st->spec;
  const std::uint64_t e = st->element_size;
  const auto [first, last] = microbench_chunk(spec.n, spec.m, leaf);
  const std::uint64_t count = last - first;
  if (count == 0) co_return;

  Addr src = st->input_base + first * e;
  std::optional<RegionId> copy;
  if (spec.localised) {
    const Region r = t.allocate(count * e);
    copy = r.id;
    co_await bulk_copy(t, r.base, src, count, e);
    src = r.base;
  }
  const Addr dst = st->output_base + first * e;
  for (int rep = 0; rep < spec.reps; ++rep) {
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::int32_t v = co_await t.read(src + i * e);
      co_await t.write(dst + i * e, v);
    }
  }
  if (st->on_leaf_buffer) st->on_leaf_buffer(t, src, count);
  if (copy) t.release(*copy);
}

Task<> microbench_root(SimThread& t, StatePtr st) {
  const std::uint64_t n = st->spec.n;
  const std::uint64_t e = st->element_size;
  st->input_base = t.allocate(n * e).base;
  st->output_base = t.allocate(n * e).base;
  for (std::uint64_t i = 0; i < n; ++i) co_await t.write(st->input_base + i * e, st->input[i]);

  std::vector<ThreadBody> leaves;
  leaves.reserve(static_cast<std::size_t>(st->spec.m));
  for (int i = 0; i < st->spec.m; ++i) {
    leaves.emplace_back([st, i](SimThread& c) { return microbench_leaf(c, st, i); });
  }
  co_await t.fork(std::move(leaves));
}

// Recursive fork-join merge sort. Splits size into size/2 and size - size/2
// and threads into threads/2 and threads - threads/2, down to one thread.
Task<Buffer> sort_parallel(SimThread& t, StatePtr st, Addr input, Addr scratch,
                           std::uint64_t size, int threads);

Task<> sort_child(SimThread& t, StatePtr st, Addr input, Addr scratch, std::uint64_t size,
                  int threads, std::shared_ptr<std::array<Buffer, 2>> out, int slot) {
  (*out)[static_cast<std::size_t>(slot)] =
      co_await sort_parallel(t, st, input, scratch, size, threads);
}

Task<Buffer> sort_leaf(SimThread& t, StatePtr st, Addr input, Addr scratch, std::uint64_t size) {
  t.mark_leaf();
  const std::uint64_t e = st->element_size;
  Buffer result{input, std::nullopt};
  if (st->spec.localised) {
    // One local region: the copy of the slice followed by its own scratch.
    const Region r = t.allocate(2 * size * e);
    co_await bulk_copy(t, r.base, input, size, e);
    result = Buffer{r.base, r.id};
    scratch = r.base + size * e;
  }
  co_await serial_mergesort(t, result.base, scratch, size, e);
  if (st->on_leaf_buffer) st->on_leaf_buffer(t, result.base, size);
  co_return result;
}

Task<Buffer> sort_parallel(SimThread& t, StatePtr st, Addr input, Addr scratch,
                           std::uint64_t size, int threads) {
  if (threads == 1) co_return co_await sort_leaf(t, st, input, scratch, size);

  const std::uint64_t e = st->element_size;
  const std::uint64_t half = size / 2;
  const int left_threads = threads / 2;
  auto parts = std::make_shared<std::array<Buffer, 2>>();
  std::vector<ThreadBody> children;
  children.emplace_back([=](SimThread& c) {
    return sort_child(c, st, input, scratch, half, left_threads, parts, 0);
  });
  children.emplace_back([=](SimThread& c) {
    return sort_child(c, st, input + half * e, scratch + half * e, size - half,
                      threads - left_threads, parts, 1);
  });
  co_await t.fork(std::move(children));

  const Buffer left = (*parts)[0];
  const Buffer right = (*parts)[1];
  if (!st->spec.uses_fresh_merge_buffers()) {
    co_await merge(t, left.base, half, right.base, size - half, scratch, true, e);
    co_return Buffer{input, std::nullopt};
  }
  const Region ext = t.allocate(size * e);
  const Buffer merged{ext.base, ext.id};
  co_await merge(t, left.base, half, right.base, size - half, merged.base, false, e);
  if (left.owned) t.release(*left.owned);
  if (right.owned) t.release(*right.owned);
  co_return merged;
}

Task<> mergesort_root(SimThread& t, StatePtr st) {
  const std::uint64_t n = st->spec.n;
  const std::uint64_t e = st->element_size;
  const Region array0 = t.allocate(n * e);
  const RegionId array0_id = array0.id;
  st->input_base = array0.base;
  const Region scratch0 = t.allocate(n * e);
  const RegionId scratch0_id = scratch0.id;
  const Addr scratch_base = scratch0.base;
  for (std::uint64_t i = 0; i < n; ++i) co_await t.write(st->input_base + i * e, st->input[i]);

  const Buffer result = co_await sort_parallel(t, st, st->input_base, scratch_base, n, st->spec.m);
  t.release(scratch0_id);
  // The sorted copy replaces array0, which is freed.
  if (result.owned) t.release(array0_id);
  st->result_base = result.base;
}

}  // namespace

BuiltWorkload build_microbench(const WorkloadSpec& spec, std::uint64_t element_size) {
  if (spec.kind != WorkloadKind::Microbench) throw ConfigError("not a micro-benchmark spec");
  spec.validate();
  auto st = std::make_shared<WorkloadState>();
  st->spec = spec;
  st->element_size = element_size;
  st->input = generate_input(spec.n, spec.rng_seed);
  Program p;
  p.leaves = spec.m;
  p.root = [st](SimThread& t) { return microbench_root(t, st); };
  return {std::move(p), st};
}

BuiltWorkload build_mergesort(const WorkloadSpec& spec, std::uint64_t element_size) {
  if (spec.kind != WorkloadKind::MergeSort) throw ConfigError("not a merge sort spec");
  spec.validate();
  auto st = std::make_shared<WorkloadState>();
  st->spec = spec;
  st->element_size = element_size;
  st->input = generate_input(spec.n, spec.rng_seed);
  Program p;
  p.leaves = spec.m;
  p.root = [st](SimThread& t) { return mergesort_root(t, st); };
  return {std::move(p), st};
}

BuiltWorkload build_workload(const WorkloadSpec& spec, std::uint64_t element_size) {
  return spec.kind == WorkloadKind::Microbench ? build_microbench(spec, element_size)
                                               : build_mergesort(spec, element_size);
}

std::vector<std::int32_t> read_result(const WorkloadState& state, const AddressSpace& space) {
  const Addr base =
      state.spec.kind == WorkloadKind::MergeSort ? state.result_base : state.output_base;
  std::vector<std::int32_t> out(state.spec.n);
  for (std::uint64_t i = 0; i < state.spec.n; ++i) out[i] = space.load(base + i * state.element_size);
  return out;
}

void verify(const WorkloadState& state, const AddressSpace& space) {
  const std::vector<std::int32_t> got = read_result(state, space);
  std::vector<std::int32_t> want;
  if (state.spec.kind == WorkloadKind::MergeSort) {
    want = state.input;
    std::sort(want.begin(), want.end());
  } else if (state.spec.reps >= 1) {
    want = state.input;
  } else {
    want.assign(state.spec.n, 0);
  }

  std::uint64_t mismatches = 0;
  std::uint64_t first = 0;
  for (std::uint64_t i = 0; i < got.size(); ++i) {
    if (got[i] != want[i]) {
      if (mismatches++ == 0) first = i;
    }
  }
  if (mismatches == 0) return;
  std::ostringstream msg;
  msg << to_string(state.spec.kind) << " output wrong at " << mismatches << " of " << got.size()
      << " positions; first at index " << first << ": expected " << want[first] << ", got "
      << got[first];
  throw VerificationError(msg.str());
}

}  // namespace nucasim
