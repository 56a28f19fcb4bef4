#include "vgr/det_loss.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace vgr {

double l1_loss(const CenterBox& pred, const CenterBox& gt) {
    return std::fabs(pred.x_c - gt.x_c) + std::fabs(pred.y_c - gt.y_c) +
           std::fabs(pred.w - gt.w) + std::fabs(pred.h - gt.h);
}

namespace {

struct GiouParts {
    double inter, uni, enclosing;
};

GiouParts giou_parts(const PixelBox& p, const PixelBox& g) {
    double ap = std::max(p.area(), 0.0);
    double ag = std::max(g.area(), 0.0);
    double iw = std::max(0.0, std::min(p.x2, g.x2) - std::max(p.x1, g.x1));
    double ih = std::max(0.0, std::min(p.y2, g.y2) - std::max(p.y1, g.y1));
    double inter = iw * ih;
    double uni = std::max(ap + ag - inter, kAreaEpsilon);
    double cw = std::max(p.x2, g.x2) - std::min(p.x1, g.x1);
    double ch = std::max(p.y2, g.y2) - std::min(p.y1, g.y1);
    double enclosing = std::max(cw * ch, kAreaEpsilon);
    return {inter, uni, enclosing};
}

}  // namespace

double giou_loss(const PixelBox& pred, const PixelBox& gt) {
    GiouParts v = giou_parts(pred, gt);
    // 1 - (IoU - (C - U)/C) == 2 - I/U - U/C
    return 2.0 - v.inter / v.uni - v.uni / v.enclosing;
}

LossValue det_loss(const CenterBox& pred, const CenterBox& gt, double beta) {
    LossValue out;
    out.beta = beta;
    out.l1 = l1_loss(pred, gt);
    out.giou = giou_loss(center_to_corners(pred), center_to_corners(gt));
    out.total = out.l1 + beta * out.giou;
    return out;
}

namespace {

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// d(giou_loss)/d(pred corners), piecewise closed form.
std::array<double, 4> giou_grad_corners(const PixelBox& p, const PixelBox& g) {
    GiouParts v = giou_parts(p, g);
    const double pw = p.x2 - p.x1, ph = p.y2 - p.y1;
    const double iw = std::min(p.x2, g.x2) - std::max(p.x1, g.x1);
    const double ih = std::min(p.y2, g.y2) - std::max(p.y1, g.y1);
    const bool overlap = iw > 0 && ih > 0;

    // intersection partials
    double dI[4] = {0, 0, 0, 0};  // d/d{p.x1, p.y1, p.x2, p.y2}
    if (overlap) {
        if (p.x1 > g.x1) dI[0] = -ih;
        if (p.y1 > g.y1) dI[1] = -iw;
        if (p.x2 < g.x2) dI[2] = ih;
        if (p.y2 < g.y2) dI[3] = iw;
    }
    // pred-area partials
    double dA[4] = {-ph, -pw, ph, pw};
    // union partials (only when not clamped at the epsilon floor)
    double dU[4];
    const bool uni_live = v.uni > kAreaEpsilon;
    for (int i = 0; i < 4; ++i) dU[i] = uni_live ? dA[i] - dI[i] : 0.0;
    // enclosing-box partials
    const double cw = std::max(p.x2, g.x2) - std::min(p.x1, g.x1);
    const double ch = std::max(p.y2, g.y2) - std::min(p.y1, g.y1);
    double dC[4] = {0, 0, 0, 0};
    if (v.enclosing > kAreaEpsilon) {
        if (p.x1 < g.x1) dC[0] = -ch;
        if (p.y1 < g.y1) dC[1] = -cw;
        if (p.x2 > g.x2) dC[2] = ch;
        if (p.y2 > g.y2) dC[3] = cw;
    }

    // loss = 2 - I/U - U/C
    std::array<double, 4> grad;
    for (int i = 0; i < 4; ++i) {
        double d_iou = (dI[i] * v.uni - v.inter * dU[i]) / (v.uni * v.uni);
        double d_uc = (dU[i] * v.enclosing - v.uni * dC[i]) / (v.enclosing * v.enclosing);
        grad[i] = -d_iou - d_uc;
    }
    return grad;
}

}  // namespace

std::array<double, 4> det_loss_grad(const CenterBox& pred, const CenterBox& gt, double beta) {
    std::array<double, 4> grad = {
        sign(pred.x_c - gt.x_c),
        sign(pred.y_c - gt.y_c),
        sign(pred.w - gt.w),
        sign(pred.h - gt.h),
    };

    auto gc = giou_grad_corners(center_to_corners(pred), center_to_corners(gt));
    // corners (x1, y1, x2, y2) in terms of (x_c, y_c, w, h)
    grad[0] += beta * (gc[0] + gc[2]);
    grad[1] += beta * (gc[1] + gc[3]);
    grad[2] += beta * (-gc[0] / 2 + gc[2] / 2);
    grad[3] += beta * (-gc[1] / 2 + gc[3] / 2);
    return grad;
}

double grad_check_point(const CenterBox& pred, const CenterBox& gt, double beta, double eps) {
    auto analytic = det_loss_grad(pred, gt, beta);
    double max_rel = 0;
    auto component = [](CenterBox& b, int i) -> double& {
        switch (i) {
            case 0: return b.x_c;
            case 1: return b.y_c;
            case 2: return b.w;
            default: return b.h;
        }
    };
    for (int i = 0; i < 4; ++i) {
        CenterBox lo = pred, hi = pred;
        component(lo, i) -= eps;
        component(hi, i) += eps;
        double fd = (det_loss(hi, gt, beta).total - det_loss(lo, gt, beta).total) / (2 * eps);
        double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-6});
        max_rel = std::max(max_rel, std::fabs(analytic[i] - fd) / denom);
    }
    return max_rel;
}

GradCheckReport grad_check(int trials, double beta, double eps, double tolerance, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> center(0.2, 0.8);
    std::uniform_real_distribution<double> extent(0.05, 0.35);
    const double margin = 10 * eps;

    GradCheckReport report;
    while (report.trials < trials) {
        CenterBox pred{center(rng), center(rng), extent(rng), extent(rng)};
        CenterBox gt{center(rng), center(rng), extent(rng), extent(rng)};

        // keep clear of l1 kinks and coincident corner coordinates
        bool near_kink = std::fabs(pred.x_c - gt.x_c) < margin ||
                         std::fabs(pred.y_c - gt.y_c) < margin ||
                         std::fabs(pred.w - gt.w) < margin || std::fabs(pred.h - gt.h) < margin;
        PixelBox pc = center_to_corners(pred), gc = center_to_corners(gt);
        const double pcs[4] = {pc.x1, pc.y1, pc.x2, pc.y2};
        const double gcs[4] = {gc.x1, gc.y1, gc.x2, gc.y2};
        for (int i = 0; i < 4 && !near_kink; ++i) {
            if (std::fabs(pcs[i] - gcs[i]) < margin) near_kink = true;
        }
        // intersection-edge transitions are kinks too
        if (!near_kink) {
            double iw = std::min(pc.x2, gc.x2) - std::max(pc.x1, gc.x1);
            double ih = std::min(pc.y2, gc.y2) - std::max(pc.y1, gc.y1);
            if (std::fabs(iw) < margin || std::fabs(ih) < margin) near_kink = true;
        }
        if (near_kink) continue;

        report.max_rel_error = std::max(report.max_rel_error,
                                        grad_check_point(pred, gt, beta, eps));
        ++report.trials;
    }
    report.passed = report.max_rel_error < tolerance;
    return report;
}

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

DetectionHead::DetectionHead(int hidden_dim, uint64_t seed, int depth)
    : hidden_dim_(hidden_dim), depth_(depth) {
    if (hidden_dim < 1 || depth < 1) {
        throw std::invalid_argument("DetectionHead: hidden_dim and depth must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> init(0.0, 1.0 / std::sqrt(double(hidden_dim)));
    for (int layer = 0; layer < depth; ++layer) {
        int out_dim = layer == depth - 1 ? 4 : hidden_dim;
        std::vector<double> w(size_t(out_dim) * hidden_dim);
        for (double& x : w) x = init(rng);
        weights_.push_back(std::move(w));
        biases_.push_back(std::vector<double>(out_dim, 0.0));
    }
}

void DetectionHead::zero_parameters() {
    for (auto& w : weights_) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : biases_) std::fill(b.begin(), b.end(), 0.0);
}

CenterBox DetectionHead::forward(const std::vector<double>& hidden) const {
    if (int(hidden.size()) != hidden_dim_) {
        throw std::invalid_argument("DetectionHead::forward: hidden dimension mismatch");
    }
    std::vector<double> act = hidden;
    for (size_t layer = 0; layer < weights_.size(); ++layer) {
        const int out_dim = int(biases_[layer].size());
        std::vector<double> next(out_dim);
        for (int o = 0; o < out_dim; ++o) {
            double acc = biases_[layer][o];
            const double* row = weights_[layer].data() + size_t(o) * hidden_dim_;
            for (int i = 0; i < hidden_dim_; ++i) acc += row[i] * act[i];
            next[o] = layer + 1 < weights_.size() ? std::max(acc, 0.0) : sigmoid(acc);
        }
        act = std::move(next);
    }
    return {act[0], act[1], act[2], act[3]};
}

}  // namespace vgr
