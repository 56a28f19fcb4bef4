#include "vgr/pooling.hpp"

namespace vgr::detail {

void pool_window_scalar(const float* in, int rows, int cols, int row_pitch, int cell_stride,
                        int nch, float* out) {
    const double count = double(rows) * cols;
    for (int ch = 0; ch < nch; ++ch) {
        double acc = 0.0;
        for (int r = 0; r < rows; ++r) {
            const float* row = in + size_t(r) * row_pitch + ch;
            for (int c = 0; c < cols; ++c) {
                acc += row[size_t(c) * cell_stride];
            }
        }
        out[ch] = float(acc / count);
    }
}

}  // namespace vgr::detail
