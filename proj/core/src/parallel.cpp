#include "arable/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace arable {
namespace {
std::atomic<std::size_t> g_max_threads{0};
}

void set_max_threads(std::size_t n) { g_max_threads = n; }

std::size_t max_threads() {
  std::size_t n = g_max_threads.load();
  if (n == 0) n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return n;
}

void parallel_chunks(std::size_t n_chunks, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(max_threads(), n_chunks);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n_chunks; ++k) fn(k);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < n_chunks; k += workers) fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

void parallel_range(std::size_t n, std::size_t block,
                    const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  block = std::max<std::size_t>(1, block);
  const std::size_t chunks = (n + block - 1) / block;
  parallel_chunks(chunks, [&](std::size_t k) {
    const std::size_t begin = k * block;
    fn(begin, std::min(n, begin + block));
  });
}

}  // namespace arable
