#include "tsci/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsci {
namespace {

std::atomic<unsigned> g_max_threads{std::max(1u, std::thread::hardware_concurrency())};
thread_local bool t_inside_parallel = false;

}  // namespace

void set_max_threads(unsigned n) noexcept { g_max_threads.store(std::max(1u, n)); }

unsigned max_threads() noexcept { return g_max_threads.load(); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t workers = std::min<std::size_t>(max_threads(), count);
  if (workers <= 1 || t_inside_parallel) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    t_inside_parallel = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
      }
    }
    t_inside_parallel = false;
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();

  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tsci
