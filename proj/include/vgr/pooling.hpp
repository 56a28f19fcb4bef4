#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vgr {

// Row-major grid of feature cells; each cell holds `channels` floats.
struct TokenGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> values;  // height * width * channels, row-major

    TokenGrid() = default;
    TokenGrid(int h, int w, int c) : height(h), width(w), channels(c), values(size_t(h) * w * c) {}

    size_t cell_count() const { return size_t(height) * width; }
    size_t value_count() const { return cell_count() * channels; }

    float* cell(int r, int c) { return values.data() + (size_t(r) * width + c) * channels; }
    const float* cell(int r, int c) const {
        return values.data() + (size_t(r) * width + c) * channels;
    }

    float at(int r, int c, int ch = 0) const { return cell(r, c)[ch]; }

    TokenGrid slice(int row_start, int row_end, int col_start, int col_end) const;
};

enum class PoolBackend {
    automatic,  // best available at runtime
    scalar,
    avx2,
    neon,
};

// Non-overlapping mean pooling. A trailing partial window averages over its
// actual members; output dims are ceil(height/stride) x ceil(width/stride).
// All backends accumulate per channel in double, in the same order, so their
// results are bit-identical.
TokenGrid pool_grid(const TokenGrid& grid, int stride, PoolBackend backend = PoolBackend::automatic);

// The backend `automatic` resolves to on this machine.
PoolBackend active_pool_backend();
const char* pool_backend_name(PoolBackend b);
bool pool_backend_available(PoolBackend b);

namespace detail {
// Mean over one window, one output cell: sums window cells channel-wise.
// in points at the first cell of the window; rows/cols give the window extent,
// cell_stride the float distance between horizontally adjacent cells, and nch
// the channel count to emit.
void pool_window_scalar(const float* in, int rows, int cols, int row_pitch, int cell_stride,
                        int nch, float* out);
#if defined(__x86_64__) || defined(_M_X64)
void pool_window_avx2(const float* in, int rows, int cols, int row_pitch, int cell_stride,
                      int nch, float* out);
#endif
#if defined(__aarch64__)
void pool_window_neon(const float* in, int rows, int cols, int row_pitch, int cell_stride,
                      int nch, float* out);
#endif
}  // namespace detail

}  // namespace vgr
