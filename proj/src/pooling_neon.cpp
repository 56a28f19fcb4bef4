#if defined(__aarch64__)

#include <arm_neon.h>

#include "vgr/pooling.hpp"

namespace vgr::detail {

// Channel-blocked NEON variant, bit-identical to the scalar kernel: lanes are
// independent channels accumulating in float64, same order as scalar.
void pool_window_neon(const float* in, int rows, int cols, int row_pitch, int cell_stride,
                      int nch, float* out) {
    const double count = double(rows) * cols;
    const float64x2_t vcount = vdupq_n_f64(count);

    int ch = 0;
    for (; ch + 2 <= nch; ch += 2) {
        float64x2_t acc = vdupq_n_f64(0.0);
        for (int r = 0; r < rows; ++r) {
            const float* row = in + size_t(r) * row_pitch + ch;
            for (int c = 0; c < cols; ++c) {
                float32x2_t v = vld1_f32(row + size_t(c) * cell_stride);
                acc = vaddq_f64(acc, vcvt_f64_f32(v));
            }
        }
        float32x2_t mean = vcvt_f32_f64(vdivq_f64(acc, vcount));
        vst1_f32(out + ch, mean);
    }
    if (ch < nch) {
        pool_window_scalar(in + ch, rows, cols, row_pitch, cell_stride, nch - ch, out + ch);
    }
}

}  // namespace vgr::detail

#endif
