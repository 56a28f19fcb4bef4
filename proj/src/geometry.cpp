#include "vgr/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace vgr {

const char* box_error_name(BoxError e) {
    switch (e) {
        case BoxError::none: return "none";
        case BoxError::malformed: return "malformed";
        case BoxError::out_of_frame: return "out_of_frame";
        case BoxError::invalid_frame: return "invalid_frame";
    }
    return "unknown";
}

BoxResult validate_box(double x1, double y1, double x2, double y2, const ImageFrame& frame) {
    if (!frame.valid()) {
        return {{}, BoxError::invalid_frame};
    }
    if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
        return {{}, BoxError::malformed};
    }
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);

    PixelBox box;
    box.x1 = std::clamp(x1, 0.0, double(frame.width));
    box.x2 = std::clamp(x2, 0.0, double(frame.width));
    box.y1 = std::clamp(y1, 0.0, double(frame.height));
    box.y2 = std::clamp(y2, 0.0, double(frame.height));

    // A box entirely outside the frame collapses to a zero-area sliver on the
    // border; that is a rejection, while a merely thin box inside is not.
    bool outside = (x2 <= 0 && x1 <= 0) || (x1 >= frame.width && x2 >= frame.width) ||
                   (y2 <= 0 && y1 <= 0) || (y1 >= frame.height && y2 >= frame.height);
    if (outside) {
        return {box, BoxError::out_of_frame};
    }
    return {box, BoxError::none};
}

static int round_to_cell(double coord, int stride) {
    return int(std::floor(coord / stride + 0.5));
}

CellRange to_patch_indices(const PixelBox& box, const ImageFrame& frame) {
    if (frame.patch_stride <= 0 || !frame.valid()) {
        throw std::invalid_argument("to_patch_indices: invalid frame");
    }
    const int s = frame.patch_stride;
    const int max_row = frame.cell_rows();
    const int max_col = frame.cell_cols();

    CellRange r;
    r.row_start = std::clamp(round_to_cell(box.y1, s), 0, max_row);
    r.row_end = std::clamp(round_to_cell(box.y2, s), 0, max_row);
    r.col_start = std::clamp(round_to_cell(box.x1, s), 0, max_col);
    r.col_end = std::clamp(round_to_cell(box.x2, s), 0, max_col);

    // Degenerate-box repair: widen an empty range to the one cell holding the
    // box midpoint, so replay always yields at least one token.
    if (r.row_end <= r.row_start) {
        int mid = std::clamp(int(std::floor((box.y1 + box.y2) / 2.0 / s)), 0, max_row - 1);
        r.row_start = mid;
        r.row_end = mid + 1;
    }
    if (r.col_end <= r.col_start) {
        int mid = std::clamp(int(std::floor((box.x1 + box.x2) / 2.0 / s)), 0, max_col - 1);
        r.col_start = mid;
        r.col_end = mid + 1;
    }
    return r;
}

CenterBox normalize_box(const PixelBox& box, const ImageFrame& frame, BoxForm form) {
    if (frame.width <= 0 || frame.height <= 0) {
        throw std::invalid_argument("normalize_box: zero-size frame");
    }
    const double w = frame.width, h = frame.height;
    if (form == BoxForm::corner) {
        return {box.x1 / w, box.y1 / h, box.x2 / w, box.y2 / h};
    }
    return {(box.x1 + box.x2) / (2 * w), (box.y1 + box.y2) / (2 * h),
            (box.x2 - box.x1) / w, (box.y2 - box.y1) / h};
}

PixelBox denormalize_box(const CenterBox& box, const ImageFrame& frame, BoxForm form) {
    if (frame.width <= 0 || frame.height <= 0) {
        throw std::invalid_argument("denormalize_box: zero-size frame");
    }
    const double w = frame.width, h = frame.height;
    if (form == BoxForm::corner) {
        return {box.x_c * w, box.y_c * h, box.w * w, box.h * h};
    }
    return {(box.x_c - box.w / 2) * w, (box.y_c - box.h / 2) * h,
            (box.x_c + box.w / 2) * w, (box.y_c + box.h / 2) * h};
}

PixelBox expand_box(const PixelBox& box, const ImageFrame& frame, double margin_fraction) {
    const double dx = margin_fraction * box.width();
    const double dy = margin_fraction * box.height();
    PixelBox out;
    out.x1 = std::clamp(box.x1 - dx, 0.0, double(frame.width));
    out.x2 = std::clamp(box.x2 + dx, 0.0, double(frame.width));
    out.y1 = std::clamp(box.y1 - dy, 0.0, double(frame.height));
    out.y2 = std::clamp(box.y2 + dy, 0.0, double(frame.height));
    return out;
}

PixelBox rescale_box(const PixelBox& box, int orig_w, int orig_h, const ImageFrame& frame) {
    if (orig_w <= 0 || orig_h <= 0) {
        throw std::invalid_argument("rescale_box: zero-size original frame");
    }
    const double sx = double(frame.width) / orig_w;
    const double sy = double(frame.height) / orig_h;
    return {box.x1 * sx, box.y1 * sy, box.x2 * sx, box.y2 * sy};
}

CenterBox corners_to_center(const PixelBox& box) {
    return {(box.x1 + box.x2) / 2, (box.y1 + box.y2) / 2, box.x2 - box.x1, box.y2 - box.y1};
}

PixelBox center_to_corners(const CenterBox& box) {
    return {box.x_c - box.w / 2, box.y_c - box.h / 2, box.x_c + box.w / 2, box.y_c + box.h / 2};
}

}  // namespace vgr
