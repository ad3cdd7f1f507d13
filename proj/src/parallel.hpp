#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace geofactor::detail {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write
/// results into slot i and reduce afterwards in index order, so the outcome
/// never depends on the schedule.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn)
{
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1)
  {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++)
      {
        try
        {
          fn(i);
        }
        catch (...)
        {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure)
            failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace geofactor::detail
