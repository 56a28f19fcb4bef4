#include "vgr/feature_pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace vgr {

Image resize_image(const Image& img, int new_w, int new_h) {
    if (img.empty() || new_w <= 0 || new_h <= 0) {
        throw std::invalid_argument("resize_image: empty image or non-positive target size");
    }
    Image out;
    out.width = new_w;
    out.height = new_h;
    out.channels = img.channels;
    out.pixels.resize(size_t(new_w) * new_h * img.channels);
    for (int y = 0; y < new_h; ++y) {
        int sy = std::min(int(int64_t(y) * img.height / new_h), img.height - 1);
        for (int x = 0; x < new_w; ++x) {
            int sx = std::min(int(int64_t(x) * img.width / new_w), img.width - 1);
            const uint8_t* src = img.pixels.data() + (size_t(sy) * img.width + sx) * img.channels;
            uint8_t* dst = out.pixels.data() + (size_t(y) * new_w + x) * img.channels;
            std::memcpy(dst, src, img.channels);
        }
    }
    return out;
}

Image crop_image(const Image& img, const PixelBox& box) {
    int x1 = std::clamp(int(std::lround(box.x1)), 0, img.width);
    int x2 = std::clamp(int(std::lround(box.x2)), 0, img.width);
    int y1 = std::clamp(int(std::lround(box.y1)), 0, img.height);
    int y2 = std::clamp(int(std::lround(box.y2)), 0, img.height);
    if (x2 <= x1 || y2 <= y1) {
        return {};  // zero-area crop
    }
    Image out;
    out.width = x2 - x1;
    out.height = y2 - y1;
    out.channels = img.channels;
    out.pixels.resize(size_t(out.width) * out.height * img.channels);
    for (int y = 0; y < out.height; ++y) {
        const uint8_t* src = img.pixels.data() + (size_t(y1 + y) * img.width + x1) * img.channels;
        std::memcpy(out.pixels.data() + size_t(y) * out.width * img.channels, src,
                    size_t(out.width) * img.channels);
    }
    return out;
}

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_ppm: cannot open " + path);
    std::string magic;
    int w, h, maxval;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0) {
        throw std::runtime_error("read_ppm: unsupported PPM: " + path);
    }
    in.get();  // single whitespace after header
    Image img;
    img.width = w;
    img.height = h;
    img.channels = 3;
    img.pixels.resize(size_t(w) * h * 3);
    in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (!in) throw std::runtime_error("read_ppm: truncated payload: " + path);
    return img;
}

void write_ppm(const Image& img, const std::string& path) {
    if (img.channels != 3) throw std::invalid_argument("write_ppm: need 3-channel image");
    std::ofstream out(path, std::ios::binary);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (!out) throw std::runtime_error("write_ppm: write failed: " + path);
}

GridSpec select_grid(int original_w, int original_h, int patch_size, int max_crops) {
    if (original_w <= 0 || original_h <= 0 || patch_size <= 0 || max_crops < 1) {
        throw std::invalid_argument("select_grid: bad arguments");
    }
    const double image_aspect = double(original_w) / original_h;

    GridSpec best;
    double best_distortion = 0;
    int64_t best_area = -1;
    bool have = false;
    for (int rows = 1; rows <= max_crops; ++rows) {
        for (int cols = 1; rows * cols <= max_crops; ++cols) {
            double distortion = std::fabs(std::log(double(cols) / rows) - std::log(image_aspect));
            int64_t covered = int64_t(std::min(original_w, cols * patch_size)) *
                              std::min(original_h, rows * patch_size);
            bool better = false;
            if (!have) {
                better = true;
            } else if (distortion < best_distortion - 1e-12) {
                better = true;
            } else if (distortion < best_distortion + 1e-12) {
                if (covered > best_area) {
                    better = true;
                } else if (covered == best_area &&
                           rows * cols < best.rows * best.cols) {
                    better = true;
                }
            }
            if (better) {
                best.rows = rows;
                best.cols = cols;
                best_distortion = distortion;
                best_area = covered;
                have = true;
            }
        }
    }
    best.resized_w = best.cols * patch_size;
    best.resized_h = best.rows * patch_size;
    best.original_w = original_w;
    best.original_h = original_h;
    return best;
}

static void check_encoder_output(const TokenGrid& g, int cells, int channels, const char* what) {
    if (g.height != cells || g.width != cells || g.channels != channels ||
        g.values.size() != g.value_count()) {
        throw std::runtime_error(std::string("build_pool: encoder contract violation on ") + what);
    }
    for (float v : g.values) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string("build_pool: non-finite encoder output on ") + what);
        }
    }
}

TokenGrid ToyCoordinateEncoder::encode(const Image&, int crop_row, int crop_col, bool snapshot) {
    TokenGrid g(cells_, cells_, channels_);
    const int base_r = snapshot ? 0 : crop_row * cells_;
    const int base_c = snapshot ? 0 : crop_col * cells_;
    for (int r = 0; r < cells_; ++r) {
        for (int c = 0; c < cells_; ++c) {
            float v = float(cell_value(base_r + r, base_c + c));
            float* cellp = g.cell(r, c);
            std::fill(cellp, cellp + channels_, v);
        }
    }
    return g;
}

static FeaturePool assemble(const Image* resized, const GridSpec& grid, CropEncoder& encoder,
                            const PoolingConfig& pooling) {
    const int cells = encoder.cells_per_side();
    const int channels = encoder.channels();
    const int p = grid.resized_w / grid.cols;

    FeaturePool pool;
    pool.grid = grid;
    pool.pooling = pooling;
    pool.frame = ImageFrame{grid.resized_w, grid.resized_h, p, p / cells};
    if (!pool.frame.valid()) {
        throw std::runtime_error("build_pool: grid/encoder geometry mismatch");
    }

    pool.unified = TokenGrid(grid.rows * cells, grid.cols * cells, channels);
    Image empty;
    for (int cr = 0; cr < grid.rows; ++cr) {
        for (int cc = 0; cc < grid.cols; ++cc) {
            Image crop;
            if (resized) {
                crop = crop_image(*resized, PixelBox{double(cc * p), double(cr * p),
                                                    double((cc + 1) * p), double((cr + 1) * p)});
            }
            TokenGrid enc = encoder.encode(resized ? crop : empty, cr, cc, false);
            check_encoder_output(enc, cells, channels, "local crop");
            for (int r = 0; r < cells; ++r) {
                const float* src = enc.cell(r, 0);
                std::copy(src, src + size_t(cells) * channels,
                          pool.unified.cell(cr * cells + r, cc * cells));
            }
            if (!grid.snapshot_only()) {
                pool.pooled_locals.push_back(pool_grid(enc, pooling.local_stride, pooling.backend));
            }
        }
    }

    Image snapshot_img;
    if (resized) snapshot_img = resize_image(*resized, p, p);
    TokenGrid snap = encoder.encode(resized ? snapshot_img : empty, 0, 0, true);
    check_encoder_output(snap, cells, channels, "snapshot");
    pool.pooled_snapshot = pool_grid(snap, pooling.snapshot_stride, pooling.backend);

    return pool;
}

FeaturePool build_pool(const Image& resized, const GridSpec& grid, CropEncoder& encoder,
                       const PoolingConfig& pooling) {
    if (resized.width != grid.resized_w || resized.height != grid.resized_h) {
        throw std::invalid_argument("build_pool: image dimensions do not match grid");
    }
    return assemble(&resized, grid, encoder, pooling);
}

FeaturePool build_pool(const GridSpec& grid, CropEncoder& encoder, const PoolingConfig& pooling) {
    return assemble(nullptr, grid, encoder, pooling);
}

int FeaturePool::local_token_count() const {
    int n = 0;
    for (const auto& g : pooled_locals) n += int(g.cell_count());
    return n;
}

TokenGrid replay_slice(const FeaturePool& pool, const PixelBox& box) {
    CellRange range = to_patch_indices(box, pool.frame);
    TokenGrid region = pool.unified.slice(range.row_start, range.row_end,
                                          range.col_start, range.col_end);
    return pool_grid(region, pool.pooling.replay_stride, pool.pooling.backend);
}

std::vector<float> replay_tokens(const FeaturePool& pool, const PixelBox& box) {
    return replay_slice(pool, box).values;
}

int replay_token_count(const FeaturePool& pool, const PixelBox& box) {
    return int(replay_slice(pool, box).cell_count());
}

static int pooled_side(int cells, int stride) { return (cells + stride - 1) / stride; }

BudgetReport token_budget(int crop_count, int cells_per_side, const PoolingConfig& pooling,
                          int baseline_crops) {
    BudgetReport r;
    int snap_side = pooled_side(cells_per_side, pooling.snapshot_stride);
    int local_side = pooled_side(cells_per_side, pooling.local_stride);
    r.snapshot_tokens = snap_side * snap_side;
    r.local_tokens = crop_count * local_side * local_side;
    r.total = r.snapshot_tokens + r.local_tokens;
    r.baseline_total = (1 + baseline_crops) * cells_per_side * cells_per_side;
    r.ratio = r.baseline_total > 0 ? double(r.total) / r.baseline_total : 0.0;
    return r;
}

BudgetReport token_budget(const GridSpec& grid, const ImageFrame& frame,
                          const PoolingConfig& pooling, int baseline_crops) {
    int crops = grid.snapshot_only() ? 0 : grid.crop_count();
    return token_budget(crops, frame.cells_per_crop_side(), pooling, baseline_crops);
}

static void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

static uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void save_pool(const FeaturePool& pool, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_pool: cannot open " + path);
    put_u32(out, uint32_t(pool.unified.height));
    put_u32(out, uint32_t(pool.unified.width));
    put_u32(out, uint32_t(pool.unified.channels));
    put_u32(out, uint32_t(pool.pooling.snapshot_stride));
    put_u32(out, uint32_t(pool.pooling.local_stride));
    put_u32(out, uint32_t(pool.pooling.replay_stride));
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(pool.unified.values.data()),
              std::streamsize(pool.unified.values.size() * 4));
    if (!out) throw std::runtime_error("save_pool: write failed: " + path);

    nlohmann::json meta = {
        {"grid", {{"rows", pool.grid.rows},
                  {"cols", pool.grid.cols},
                  {"resized_w", pool.grid.resized_w},
                  {"resized_h", pool.grid.resized_h},
                  {"original_w", pool.grid.original_w},
                  {"original_h", pool.grid.original_h}}},
        {"frame", {{"width", pool.frame.width},
                   {"height", pool.frame.height},
                   {"patch_size", pool.frame.patch_size},
                   {"patch_stride", pool.frame.patch_stride}}},
    };
    std::ofstream side(path + ".json");
    side << meta.dump(2) << "\n";
    if (!side) throw std::runtime_error("save_pool: sidecar write failed: " + path);
}

FeaturePool load_pool(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_pool: cannot open " + path);
    FeaturePool pool;
    uint32_t h = get_u32(in), w = get_u32(in), c = get_u32(in);
    pool.pooling.snapshot_stride = int(get_u32(in));
    pool.pooling.local_stride = int(get_u32(in));
    pool.pooling.replay_stride = int(get_u32(in));
    if (!in) throw std::runtime_error("load_pool: truncated header: " + path);
    pool.unified = TokenGrid(int(h), int(w), int(c));
    in.read(reinterpret_cast<char*>(pool.unified.values.data()),
            std::streamsize(pool.unified.values.size() * 4));
    if (!in) throw std::runtime_error("load_pool: truncated payload: " + path);

    std::ifstream side(path + ".json");
    if (!side) throw std::runtime_error("load_pool: missing sidecar: " + path + ".json");
    nlohmann::json meta = nlohmann::json::parse(side);
    pool.grid.rows = meta["grid"]["rows"];
    pool.grid.cols = meta["grid"]["cols"];
    pool.grid.resized_w = meta["grid"]["resized_w"];
    pool.grid.resized_h = meta["grid"]["resized_h"];
    pool.grid.original_w = meta["grid"]["original_w"];
    pool.grid.original_h = meta["grid"]["original_h"];
    pool.frame.width = meta["frame"]["width"];
    pool.frame.height = meta["frame"]["height"];
    pool.frame.patch_size = meta["frame"]["patch_size"];
    pool.frame.patch_stride = meta["frame"]["patch_stride"];

    // Pooled snapshot/local sequences are derivable; the on-disk contract
    // carries only S. Rebuild them lazily from S when needed.
    return pool;
}

}  // namespace vgr
