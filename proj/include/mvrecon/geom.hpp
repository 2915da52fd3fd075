// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// Pinhole cameras and the orbit rig.
//
// Conventions: right-handed world with +y up. In the camera frame x points right,
// y points down and the camera looks along +z. Pixel (i, j) covers [i, i+1) x [j, j+1),
// so its center is at (i + 0.5, j + 0.5).
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <numbers>
#include <optional>
#include <vector>

namespace mvr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Depth below which a point counts as behind the camera.
inline constexpr double kNearEpsilon = 1e-4;

/// Rigid transform x -> rotation * x + translation.
struct Rigid {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Rigid inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
    Eigen::Matrix4d matrix() const;
    static Rigid from_matrix(const Eigen::Matrix4d& m);
};

/// World-to-camera transform looking from `eye` at `target`. Throws InputError when
/// eye == target or `up` is parallel to the viewing direction.
Rigid look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

class Camera {
  public:
    Camera(int width, int height, double fx, double fy, double cx, double cy, const Rigid& world_to_camera);

    int width() const { return width_; }
    int height() const { return height_; }
    double fx() const { return fx_; }
    double fy() const { return fy_; }
    double cx() const { return cx_; }
    double cy() const { return cy_; }
    const Rigid& world_to_camera() const { return pose_; }
    Rigid camera_to_world() const { return pose_.inverse(); }

    /// Camera center in world coordinates.
    Vec3 position() const;
    /// Viewing direction (+z of the camera frame) in world coordinates.
    Vec3 forward() const;

    /// World-space unit direction of the ray through a (continuous) pixel position.
    Vec3 ray_direction(const Vec2& pixel) const;

  private:
    int width_;
    int height_;
    double fx_, fy_, cx_, cy_;
    Rigid pose_;
};

struct OrbitConfig {
    int n_views = 18;
    double distance = 2.0;
    double elevation = 0.0;
    double fov_y = 50.0 * std::numbers::pi / 180.0;
    int resolution = 512;

    void validate() const;
};

/// Focal length in pixels for a vertical field of view over `height` pixels.
double focal_from_fov(double fov_y, int height);

/// Camera at the given azimuth/elevation on the orbit, looking at the origin.
Camera orbit_camera(const OrbitConfig& cfg, double azimuth);

/// cfg.n_views cameras at azimuth 2*pi*k/n_views, all aimed at the origin.
std::vector<Camera> orbit_cameras(const OrbitConfig& cfg);

struct Projection {
    Vec2 pixel;
    double depth;
};

/// Pinhole projection. Empty when the point's depth is <= kNearEpsilon.
std::optional<Projection> project(const Camera& camera, const Vec3& p);

/// Inverse of project(): the world point at `depth` along the ray through `pixel`.
Vec3 unproject(const Camera& camera, const Vec2& pixel, double depth);

} // namespace mvr
