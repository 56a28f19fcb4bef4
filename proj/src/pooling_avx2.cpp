#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "vgr/pooling.hpp"

namespace vgr::detail {

// Channel-blocked AVX2 variant. Lanes are independent channels and every
// channel accumulates window cells in the same order as the scalar kernel,
// so results are bit-identical to pool_window_scalar.
void pool_window_avx2(const float* in, int rows, int cols, int row_pitch, int cell_stride,
                      int nch, float* out) {
    const double count = double(rows) * cols;
    const __m256d vcount = _mm256_set1_pd(count);

    int ch = 0;
    for (; ch + 4 <= nch; ch += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (int r = 0; r < rows; ++r) {
            const float* row = in + size_t(r) * row_pitch + ch;
            for (int c = 0; c < cols; ++c) {
                __m128 v = _mm_loadu_ps(row + size_t(c) * cell_stride);
                acc = _mm256_add_pd(acc, _mm256_cvtps_pd(v));
            }
        }
        __m128 mean = _mm256_cvtpd_ps(_mm256_div_pd(acc, vcount));
        _mm_storeu_ps(out + ch, mean);
    }
    if (ch < nch) {
        pool_window_scalar(in + ch, rows, cols, row_pitch, cell_stride, nch - ch, out + ch);
    }
}

}  // namespace vgr::detail

#endif
