// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "mvrecon/splat.hpp"

namespace mvr::detail {

/// Intermediate quantities of the EWA projection, kept for the backward pass.
struct ProjectionTerms {
    Vec3 cam_point;              // t = W p + T
    Mat3 rotation;               // R(q), normalized quaternion
    Vec3 scale;                  // exp(log_scale)
    Mat3 cov3;                   // R S S R^T
    Eigen::Matrix<double, 2, 3> jacobian; // d(pixel)/d(t)
    Eigen::Matrix2d cov2;        // J W cov3 W^T J^T + eps I
    Vec2 mean2;
};

ProjectionTerms projection_terms(const Vec3& position, const Vec3& log_scale, const Quat& rotation,
                                 const Camera& cam, double cov_epsilon);

/// -2 ln(0.01): squared Mahalanobis radius of the 99%-mass ellipse.
inline constexpr double kMass99 = 9.210340371976184;

} // namespace mvr::detail
