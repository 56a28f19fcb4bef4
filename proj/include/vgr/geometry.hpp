#pragma once

#include <cmath>
#include <string>

namespace vgr {

// Corner-form box in pixel coordinates of the resized image frame.
struct PixelBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }

    bool operator==(const PixelBox&) const = default;
};

// Half-open ranges of feature-cell indices into the unified map.
struct CellRange {
    int row_start = 0, row_end = 0;
    int col_start = 0, col_end = 0;

    int rows() const { return row_end - row_start; }
    int cols() const { return col_end - col_start; }
    bool empty() const { return rows() <= 0 || cols() <= 0; }

    bool operator==(const CellRange&) const = default;
};

// Normalized center-form box, every component in [0, 1].
struct CenterBox {
    double x_c = 0, y_c = 0, w = 0, h = 0;

    bool operator==(const CenterBox&) const = default;
};

// Geometry of the resized image: W and H are multiples of the crop size p,
// and p is a multiple of the vision patch stride s.
struct ImageFrame {
    int width = 336;
    int height = 336;
    int patch_size = 336;   // p
    int patch_stride = 14;  // s

    int cell_rows() const { return height / patch_stride; }
    int cell_cols() const { return width / patch_stride; }
    int cells_per_crop_side() const { return patch_size / patch_stride; }

    bool valid() const {
        return width > 0 && height > 0 && patch_size > 0 && patch_stride > 0 &&
               width % patch_size == 0 && height % patch_size == 0 &&
               patch_size % patch_stride == 0;
    }
};

enum class BoxError {
    none,
    malformed,      // non-finite coordinate
    out_of_frame,   // zero area after clamping to the frame
    invalid_frame,  // frame fails its own invariants
};

struct BoxResult {
    PixelBox box;
    BoxError error = BoxError::none;

    bool ok() const { return error == BoxError::none; }
};

const char* box_error_name(BoxError e);

// Swap-repairs reversed corners, clamps to the frame, rejects non-finite input.
BoxResult validate_box(double x1, double y1, double x2, double y2, const ImageFrame& frame);

// Maps a pixel box to feature-cell index ranges via nearest-integer rounding
// of edge/stride. An empty range is repaired to the single cell containing the
// box midpoint so a replay request always covers at least one cell.
CellRange to_patch_indices(const PixelBox& box, const ImageFrame& frame);

enum class BoxForm { corner, center };

// Corner form divides by (W, H); center form is ((x1+x2)/2W, (y1+y2)/2H, w/W, h/H).
CenterBox normalize_box(const PixelBox& box, const ImageFrame& frame, BoxForm form = BoxForm::center);

PixelBox denormalize_box(const CenterBox& box, const ImageFrame& frame, BoxForm form = BoxForm::center);

// Moves each side outward by margin_fraction of the corresponding extent,
// then clamps to the frame.
PixelBox expand_box(const PixelBox& box, const ImageFrame& frame, double margin_fraction);

inline constexpr double kDefaultExpandMargin = 0.1;

// Maps a box in original-image coordinates into the resized frame.
PixelBox rescale_box(const PixelBox& box, int orig_w, int orig_h, const ImageFrame& frame);

CenterBox corners_to_center(const PixelBox& box);
PixelBox center_to_corners(const CenterBox& box);

}  // namespace vgr
