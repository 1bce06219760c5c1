#pragma once

#include <exception>
#include <mutex>

namespace fjres::detail {

// OpenMP loop over [0, n) that captures the first exception and rethrows it
// on the calling thread.
template <class Body>
void parallel_for(int n, Body&& body) {
  std::exception_ptr error;
  std::mutex mutex;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace fjres::detail
