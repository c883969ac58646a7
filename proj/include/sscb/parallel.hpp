#pragma once

#include <cstddef>
#include <functional>

namespace sscb {

/// Runs body(i) for i in [0, count) on up to `workers` threads. Work items are
/// claimed dynamically; callers write results by index so the outcome never
/// depends on the worker count. The first exception thrown is rethrown.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

/// Worker count from an explicit value, else SSCB_WORKERS, else 1.
std::size_t resolve_workers(std::size_t requested);

}  // namespace sscb
