// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/geom.hpp"

#include "mvrecon/error.hpp"

#include <cmath>
#include <string>

namespace mvr {

Eigen::Matrix4d Rigid::matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
}

Rigid Rigid::from_matrix(const Eigen::Matrix4d& m) {
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Rigid look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 view = target - eye;
    if (view.norm() < 1e-12)
        throw InputError("look_at: eye and target coincide");
    const Vec3 forward = view.normalized();
    const Vec3 side = forward.cross(up);
    if (side.norm() < 1e-9 * std::max(1.0, up.norm()))
        throw InputError("look_at: up vector is parallel to the viewing direction");
    const Vec3 right = side.normalized();
    const Vec3 down = forward.cross(right);

    Rigid pose;
    pose.rotation.row(0) = right.transpose();
    pose.rotation.row(1) = down.transpose();
    pose.rotation.row(2) = forward.transpose();
    pose.translation = -(pose.rotation * eye);
    return pose;
}

Camera::Camera(int width, int height, double fx, double fy, double cx, double cy, const Rigid& world_to_camera)
    : width_(width), height_(height), fx_(fx), fy_(fy), cx_(cx), cy_(cy), pose_(world_to_camera) {
    if (width < 1 || height < 1)
        throw InputError("camera: image size must be at least 1x1");
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
        throw InputError("camera: focal lengths must be positive and finite");
    if (!std::isfinite(cx) || !std::isfinite(cy) || !pose_.translation.allFinite())
        throw InputError("camera: non-finite intrinsics or translation");
    const Mat3& r = pose_.rotation;
    if (!r.allFinite() || !(r * r.transpose()).isApprox(Mat3::Identity(), 1e-6) ||
        std::abs(r.determinant() - 1.0) > 1e-6)
        throw InputError("camera: rotation must be orthonormal with determinant +1");
}

Vec3 Camera::position() const { return -(pose_.rotation.transpose() * pose_.translation); }

Vec3 Camera::forward() const { return pose_.rotation.row(2).transpose(); }

Vec3 Camera::ray_direction(const Vec2& pixel) const {
    const Vec3 local((pixel.x() - cx_) / fx_, (pixel.y() - cy_) / fy_, 1.0);
    return (pose_.rotation.transpose() * local).normalized();
}

void OrbitConfig::validate() const {
    if (n_views < 1)
        throw InputError("orbit: n_views must be >= 1 (got " + std::to_string(n_views) + ")");
    if (!(distance > 0.0) || !std::isfinite(distance))
        throw InputError("orbit: distance must be positive");
    if (!(fov_y > 0.0 && fov_y < std::numbers::pi))
        throw InputError("orbit: fov_y must lie in (0, pi)");
    if (resolution < 1)
        throw InputError("orbit: resolution must be >= 1");
    if (!std::isfinite(elevation) || std::abs(std::cos(elevation)) < 1e-9)
        throw InputError("orbit: elevation must be finite and not +-pi/2");
}

double focal_from_fov(double fov_y, int height) { return 0.5 * height / std::tan(0.5 * fov_y); }

Camera orbit_camera(const OrbitConfig& cfg, double azimuth) {
    cfg.validate();
    const double ce = std::cos(cfg.elevation);
    const Vec3 eye(cfg.distance * ce * std::sin(azimuth), cfg.distance * std::sin(cfg.elevation),
                   cfg.distance * ce * std::cos(azimuth));
    const double f = focal_from_fov(cfg.fov_y, cfg.resolution);
    const double c = 0.5 * cfg.resolution;
    return Camera(cfg.resolution, cfg.resolution, f, f, c, c, look_at(eye, Vec3::Zero(), Vec3::UnitY()));
}

std::vector<Camera> orbit_cameras(const OrbitConfig& cfg) {
    cfg.validate();
    std::vector<Camera> cams;
    cams.reserve(cfg.n_views);
    for (int k = 0; k < cfg.n_views; ++k)
        cams.push_back(orbit_camera(cfg, 2.0 * std::numbers::pi * k / cfg.n_views));
    return cams;
}

std::optional<Projection> project(const Camera& camera, const Vec3& p) {
    const Vec3 q = camera.world_to_camera().apply(p);
    if (q.z() <= kNearEpsilon)
        return std::nullopt;
    return Projection{{camera.fx() * q.x() / q.z() + camera.cx(), camera.fy() * q.y() / q.z() + camera.cy()},
                      q.z()};
}

Vec3 unproject(const Camera& camera, const Vec2& pixel, double depth) {
    const Vec3 q((pixel.x() - camera.cx()) / camera.fx() * depth, (pixel.y() - camera.cy()) / camera.fy() * depth,
                 depth);
    return camera.camera_to_world().apply(q);
}

} // namespace mvr
