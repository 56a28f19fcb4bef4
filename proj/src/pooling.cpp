#include "vgr/pooling.hpp"

#include <algorithm>
#include <stdexcept>

namespace vgr {

using WindowKernel = void (*)(const float*, int, int, int, int, int, float*);

static WindowKernel resolve_kernel(PoolBackend backend) {
    switch (backend) {
        case PoolBackend::scalar:
            return detail::pool_window_scalar;
#if defined(__x86_64__) || defined(_M_X64)
        case PoolBackend::avx2:
            if (!pool_backend_available(PoolBackend::avx2)) {
                throw std::runtime_error("pool_grid: AVX2 not supported on this CPU");
            }
            return detail::pool_window_avx2;
#endif
#if defined(__aarch64__)
        case PoolBackend::neon:
            return detail::pool_window_neon;
#endif
        case PoolBackend::automatic:
            return resolve_kernel(active_pool_backend());
        default:
            throw std::runtime_error("pool_grid: backend not available on this platform");
    }
}

bool pool_backend_available(PoolBackend b) {
    switch (b) {
        case PoolBackend::automatic:
        case PoolBackend::scalar:
            return true;
        case PoolBackend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") != 0;
#else
            return false;
#endif
        case PoolBackend::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

PoolBackend active_pool_backend() {
#if defined(__x86_64__) || defined(_M_X64)
    if (pool_backend_available(PoolBackend::avx2)) return PoolBackend::avx2;
#endif
#if defined(__aarch64__)
    return PoolBackend::neon;
#endif
    return PoolBackend::scalar;
}

const char* pool_backend_name(PoolBackend b) {
    switch (b) {
        case PoolBackend::automatic: return "auto";
        case PoolBackend::scalar: return "scalar";
        case PoolBackend::avx2: return "avx2";
        case PoolBackend::neon: return "neon";
    }
    return "unknown";
}

TokenGrid TokenGrid::slice(int row_start, int row_end, int col_start, int col_end) const {
    if (row_start < 0 || col_start < 0 || row_end > height || col_end > width ||
        row_start >= row_end || col_start >= col_end) {
        throw std::out_of_range("TokenGrid::slice: range outside grid");
    }
    TokenGrid out(row_end - row_start, col_end - col_start, channels);
    for (int r = 0; r < out.height; ++r) {
        const float* src = cell(row_start + r, col_start);
        std::copy(src, src + size_t(out.width) * channels, out.cell(r, 0));
    }
    return out;
}

TokenGrid pool_grid(const TokenGrid& grid, int stride, PoolBackend backend) {
    if (stride < 1) {
        throw std::invalid_argument("pool_grid: stride must be >= 1");
    }
    if (stride == 1) {
        return grid;
    }
    WindowKernel kernel = resolve_kernel(backend);

    const int out_h = (grid.height + stride - 1) / stride;
    const int out_w = (grid.width + stride - 1) / stride;
    const int row_pitch = grid.width * grid.channels;

    TokenGrid out(out_h, out_w, grid.channels);
    for (int orow = 0; orow < out_h; ++orow) {
        const int r0 = orow * stride;
        const int wrows = std::min(stride, grid.height - r0);
        for (int ocol = 0; ocol < out_w; ++ocol) {
            const int c0 = ocol * stride;
            const int wcols = std::min(stride, grid.width - c0);
            kernel(grid.cell(r0, c0), wrows, wcols, row_pitch, grid.channels, grid.channels,
                   out.cell(orow, ocol));
        }
    }
    return out;
}

}  // namespace vgr
