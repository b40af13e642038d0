#include "qr/kernel/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace qr::kernel {

std::size_t thread_count() {
  static const std::size_t count = [] {
    if (const char* env = std::getenv("QR_THREADS"); env != nullptr) {
      try {
        const long v = std::stol(env);
        if (v >= 1) return static_cast<std::size_t>(v);
      } catch (const std::exception&) {
      }
    }
    return static_cast<std::size_t>(std::max(1u, std::thread::hardware_concurrency()));
  }();
  return count;
}

namespace {
thread_local bool in_worker = false;
}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn, std::size_t min_chunk) {
  if (n == 0) return;
  const std::size_t workers =
      in_worker ? 1 : std::min(thread_count(), (n + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  auto body = [&](std::size_t w, std::size_t begin, std::size_t end) {
    const bool outer = in_worker;
    in_worker = true;
    try {
      fn(begin, end);
    } catch (...) {
      errors[w] = std::current_exception();
    }
    in_worker = outer;
  };
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin < end) threads.emplace_back(body, w, begin, end);
    }
    body(0, 0, std::min(n, chunk));
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace qr::kernel
