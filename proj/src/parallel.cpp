#include "contlim/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>
#include <vector>

namespace contlim {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads = std::max(1, n); }

int thread_count() { return g_threads; }

void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, int)>& body) {
  const int workers = static_cast<int>(std::min<std::size_t>(g_threads, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&body, begin, end, w] { body(begin, end, w); });
  }
  for (auto& t : pool) t.join();
}

IndexedMax parallel_max(std::size_t n, const std::function<double(std::size_t)>& f) {
  std::vector<IndexedMax> partial(std::max(1, thread_count()));
  parallel_chunks(n, [&](std::size_t begin, std::size_t end, int worker) {
    IndexedMax best;
    best.value = -std::numeric_limits<double>::infinity();
    best.index = begin;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = f(i);
      if (v > best.value) {
        best.value = v;
        best.index = i;
      }
    }
    partial[worker] = best;
  });
  IndexedMax out;
  out.value = -std::numeric_limits<double>::infinity();
  const int used = static_cast<int>(std::min<std::size_t>(partial.size(), std::max<std::size_t>(n, 1)));
  for (int w = 0; w < used; ++w) {
    if (partial[w].value > out.value) out = partial[w];
  }
  return out;
}

}  // namespace contlim
