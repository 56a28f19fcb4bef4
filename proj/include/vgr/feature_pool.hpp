#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vgr/geometry.hpp"
#include "vgr/pooling.hpp"

namespace vgr {

// Minimal interleaved pixel buffer. Content is only inspected by real
// encoders; the toy encoder ignores it entirely.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<uint8_t> pixels;  // row-major, interleaved

    bool empty() const { return width <= 0 || height <= 0; }
};

// Nearest-neighbor resize, enough for crop/snapshot preparation.
Image resize_image(const Image& img, int new_w, int new_h);
Image crop_image(const Image& img, const PixelBox& box);

// Reads binary PPM (P6) as a convenience input path.
Image read_ppm(const std::string& path);
void write_ppm(const Image& img, const std::string& path);

// Crop layout chosen for an input image: rows x cols crops of p x p pixels.
struct GridSpec {
    int rows = 1;
    int cols = 1;
    int resized_w = 0;  // cols * p
    int resized_h = 0;  // rows * p
    int original_w = 0;
    int original_h = 0;

    int crop_count() const { return rows * cols; }
    bool snapshot_only() const { return rows == 1 && cols == 1; }
};

struct PoolingConfig {
    int snapshot_stride = 2;
    int local_stride = 4;
    int replay_stride = 2;
    PoolBackend backend = PoolBackend::automatic;
};

inline constexpr int kDefaultMaxCrops = 16;

// Chooses the crop grid with minimal aspect-ratio distortion, tie-broken by
// covered image area, then by fewer crops.
GridSpec select_grid(int original_w, int original_h, int patch_size, int max_crops);

// Per-crop encoder contract: one (p/s) x (p/s) x c grid per crop. The snapshot
// is encoded as crop (0, 0) with snapshot=true.
class CropEncoder {
  public:
    virtual ~CropEncoder() = default;
    virtual int cells_per_side() const = 0;
    virtual int channels() const = 0;
    virtual TokenGrid encode(const Image& crop, int crop_row, int crop_col, bool snapshot) = 0;
};

// Deterministic stand-in for the vision encoder + adapter: cell (r, c) of the
// assembled map gets value r * 1000 + c, broadcast over channels. Makes every
// replay slice exactly predictable.
class ToyCoordinateEncoder : public CropEncoder {
  public:
    ToyCoordinateEncoder(int cells_per_side = 24, int channels = 4)
        : cells_(cells_per_side), channels_(channels) {}

    int cells_per_side() const override { return cells_; }
    int channels() const override { return channels_; }
    TokenGrid encode(const Image& crop, int crop_row, int crop_col, bool snapshot) override;

    static double cell_value(int global_row, int global_col) {
        return global_row * 1000.0 + global_col;
    }

  private:
    int cells_;
    int channels_;
};

// Replay memory: the unified map S over the full resized image plus the
// pooled token sequences that feed the language model.
struct FeaturePool {
    TokenGrid unified;                       // (H/s) x (W/s) x c
    TokenGrid pooled_snapshot;               // snapshot grid pooled at snapshot_stride
    std::vector<TokenGrid> pooled_locals;    // one per crop, row-major crop order; empty for 1x1 grids
    GridSpec grid;
    PoolingConfig pooling;
    ImageFrame frame;

    int snapshot_token_count() const { return int(pooled_snapshot.cell_count()); }
    int local_token_count() const;
    int input_token_count() const { return snapshot_token_count() + local_token_count(); }
};

// Partitions the resized image into crops, encodes each plus the snapshot,
// assembles S, and precomputes the pooled input-token sequences.
FeaturePool build_pool(const Image& resized, const GridSpec& grid, CropEncoder& encoder,
                       const PoolingConfig& pooling);

// Builds a pool without pixel data (toy/synthetic encoders only).
FeaturePool build_pool(const GridSpec& grid, CropEncoder& encoder, const PoolingConfig& pooling);

// Slices S by the box (nearest-cell rounding), pools at replay_stride, and
// flattens row-major. Always at least one token.
TokenGrid replay_slice(const FeaturePool& pool, const PixelBox& box);
std::vector<float> replay_tokens(const FeaturePool& pool, const PixelBox& box);
int replay_token_count(const FeaturePool& pool, const PixelBox& box);

struct BudgetReport {
    int snapshot_tokens = 0;
    int local_tokens = 0;
    int total = 0;
    int baseline_total = 0;
    double ratio = 0.0;
};

// Token accounting for a crop count; baseline is 1 snapshot + baseline_crops
// crops with no pooling.
BudgetReport token_budget(int crop_count, int cells_per_side, const PoolingConfig& pooling,
                          int baseline_crops = 4);
BudgetReport token_budget(const GridSpec& grid, const ImageFrame& frame,
                          const PoolingConfig& pooling, int baseline_crops = 4);

// Flat binary layout (all little-endian): 6 x u32 header
// [height, width, channels, snapshot_stride, local_stride, replay_stride]
// followed by height*width*channels f32 values of S, row-major. Grid and
// frame metadata go to a JSON sidecar at path + ".json".
void save_pool(const FeaturePool& pool, const std::string& path);
FeaturePool load_pool(const std::string& path);

}  // namespace vgr
