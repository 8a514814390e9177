#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace evsched {

// Batch-sized Eigen temporaries sit just above glibc's default mmap
// threshold, so each update would map and unmap pages. Keep them on the heap.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 4 << 20);
  mallopt(M_TRIM_THRESHOLD, 8 << 20);
#endif
}

}  // namespace evsched
