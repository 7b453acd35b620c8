#pragma once

#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace smac {

enum class ExecMode { Serial, Parallel };

// Runs f(i) for i in [0, n). The parallel path is OpenMP; callers must make
// f(i) independent across i (own RNG stream, own output slot), which also
// makes serial and parallel execution bit-identical. The serial path is the
// reference used in tests.
template <class F>
void for_each_index(int n, ExecMode mode, F&& f) {
#ifdef _OPENMP
    if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
#else
    (void)mode;
#endif
    for (int i = 0; i < n; ++i) f(i);
}

inline int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace smac
