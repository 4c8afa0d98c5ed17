#pragma once

#if __has_include(<malloc.h>)
#include <malloc.h>
#endif

namespace fnclust {

/// Keeps large freed blocks in the heap so per-step training buffers are reused
/// instead of being mapped and zero-filled again. No effect outside glibc.
inline void retain_freed_memory() {
#if defined(M_MMAP_THRESHOLD) && defined(M_TRIM_THRESHOLD) && defined(M_TOP_PAD)
    mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
    mallopt(M_TOP_PAD, 256 * 1024 * 1024);
#endif
}

}  // namespace fnclust
