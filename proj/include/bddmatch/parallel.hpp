#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bddmatch {

    // Static-schedule loop over [0, n). Work items must write disjoint outputs;
    // reductions happen afterwards in index order so results do not depend on
    // the thread count.
    template<typename F>
    void parallel_for(std::size_t n, [[maybe_unused]] int threads, F&& f)
    {
#ifdef _OPENMP
        if(threads > 1 && n > 1) {
            const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(threads)
            for(long long k = 0; k < count; ++k)
                f(static_cast<std::size_t>(k));
            return;
        }
#endif
        for(std::size_t k = 0; k < n; ++k)
            f(k);
    }

}
