#pragma once

// OpenMP shims. Kernels use NAVCRAFTER_OMP(...) so the library also builds
// without OpenMP; every parallel kernel has a *_serial twin used as reference.

#if defined(_OPENMP)
#include <omp.h>
#define NAVCRAFTER_PRAGMA(X) _Pragma(#X)
#define NAVCRAFTER_OMP(ARGS) NAVCRAFTER_PRAGMA(omp ARGS)
#else
#define NAVCRAFTER_OMP(ARGS)
inline int omp_get_max_threads() { return 1; }
inline int omp_get_thread_num() { return 0; }
inline int omp_get_num_threads() { return 1; }
#endif

namespace navcrafter {

inline int max_threads() { return omp_get_max_threads(); }

}  // namespace navcrafter
