#pragma once

#include <cstddef>
#include <functional>

namespace contlim {

/// Worker count used by grid scans. Defaults to 1; the CLI sets it from --threads.
void set_thread_count(int n);
int thread_count();

/// Runs body(begin, end) over a static partition of [0, n). Chunks are
/// contiguous and assigned by index, so reductions that combine per-chunk
/// results in chunk order are deterministic for any thread count.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& body);

struct IndexedMax {
  double value = -1.0;
  std::size_t index = 0;
};

/// max_i f(i) with ties resolved to the smallest index.
IndexedMax parallel_max(std::size_t n, const std::function<double(std::size_t)>& f);

}  // namespace contlim
