#pragma once

namespace rslimits {

// Execution policy for the data-parallel kernels. `Serial` runs the plain
// reference loop; `Parallel` runs the OpenMP kernel. Parallel kernels reduce
// over fixed-size chunks in index order, so their output does not depend on
// the thread count.
enum class Exec { Serial, Parallel };

// Sets the OpenMP thread count when n > 0. Returns the count in effect.
int set_thread_count(int n);
int thread_count();

}  // namespace rslimits
