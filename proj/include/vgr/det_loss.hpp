#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vgr/geometry.hpp"

namespace vgr {

inline constexpr double kDefaultDetBeta = 2.0;
inline constexpr double kAreaEpsilon = 1e-12;  // floor on areas inside IoU

struct LossValue {
    double l1 = 0;
    double giou = 0;
    double total = 0;
    double beta = kDefaultDetBeta;
};

// Sum of absolute center-form component differences.
double l1_loss(const CenterBox& pred, const CenterBox& gt);

// 1 - (IoU - (C - Union)/C), C the smallest box enclosing both. Corner-form
// inputs, scale invariant; zero-area degenerate boxes hit the epsilon floor.
double giou_loss(const PixelBox& pred, const PixelBox& gt);

// Combined objective: l1 + beta * giou, boxes in normalized center form.
LossValue det_loss(const CenterBox& pred, const CenterBox& gt, double beta = kDefaultDetBeta);

// Closed-form gradient of det_loss w.r.t. the four pred components.
std::array<double, 4> det_loss_grad(const CenterBox& pred, const CenterBox& gt,
                                    double beta = kDefaultDetBeta);

struct GradCheckReport {
    int trials = 0;
    double max_rel_error = 0;
    bool passed = false;
};

// Central finite differences against det_loss_grad at one point.
double grad_check_point(const CenterBox& pred, const CenterBox& gt, double beta, double eps);

// Randomized sweep over non-degenerate pairs kept away from l1 kinks and
// coincident-edge non-smoothness.
GradCheckReport grad_check(int trials, double beta, double eps = 1e-5, double tolerance = 1e-3,
                           uint64_t seed = 0x5eed);

// Single affine (optionally deeper) regression head squashing to [0, 1]
// through a logistic sigmoid.
class DetectionHead {
  public:
    DetectionHead(int hidden_dim, uint64_t seed, int depth = 1);

    CenterBox forward(const std::vector<double>& hidden) const;

    int hidden_dim() const { return hidden_dim_; }
    int depth() const { return depth_; }

    // Zeroed parameters map everything to (0.5, 0.5, 0.5, 0.5).
    void zero_parameters();

  private:
    int hidden_dim_;
    int depth_;
    // depth-1 hidden layers (hidden_dim x hidden_dim, ReLU) then a 4-row output layer
    std::vector<std::vector<double>> weights_;  // per layer, row-major
    std::vector<std::vector<double>> biases_;
};

}  // namespace vgr
