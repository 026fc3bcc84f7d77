#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace protofsl {

// Activation buffers of a training step run to hundreds of megabytes. glibc
// serves blocks that large with fresh mmap calls by default, so every step
// pays page faults again; keeping them on the heap lets freed blocks be reused.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace protofsl
