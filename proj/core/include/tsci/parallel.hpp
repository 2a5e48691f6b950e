#pragma once

#include <cstddef>
#include <functional>

namespace tsci {

/// Upper bound on worker threads for library-internal loops. Defaults to the
/// hardware concurrency; the CLI's --threads flag sets it.
void set_max_threads(unsigned n) noexcept;
unsigned max_threads() noexcept;

/// Runs body(i) for i in [0, count) on at most max_threads() workers, handing
/// out indices dynamically. A parallel_for nested inside another
/// runs serially on the calling worker. The first exception thrown by any
/// body is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace tsci
