#pragma once

#include "stss/scene/image.hpp"
#include "stss/scene/scene_spec.hpp"

#include <cstddef>
#include <vector>

namespace stss::scene {

// G-buffer channel layout (9 channels).
inline constexpr std::size_t kGBufferChannels = 9;
inline constexpr std::size_t kBaseColor = 0; // 3ch
inline constexpr std::size_t kNormal = 3;    // 3ch, world space
inline constexpr std::size_t kDepth = 6;
inline constexpr std::size_t kMetallic = 7;
inline constexpr std::size_t kRoughness = 8;

// Depth written for background pixels.
inline constexpr double kSkyDepth = 1.0e4;

// Pinhole camera. Image coordinates (u, v) are continuous with pixel (x, y)
// covering [x, x+1) x [y, y+1); v grows downward.
struct Camera {
  Vec3 eye = Vec3::Zero();
  Vec3 right{1.0, 0.0, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  Vec3 forward{0.0, 0.0, -1.0};
  double focal = 1.0; // pixels
  std::size_t width = 0;
  std::size_t height = 0;

  static Camera at(const CameraPath& path, double t, std::size_t width, std::size_t height);
  Vec3 ray_dir(double u, double v) const; // unit length
  // Returns false when p is behind the camera.
  bool project(const Vec3& p, double& u, double& v) const;
  bool project_direction(const Vec3& d, double& u, double& v) const;
  double view_depth(const Vec3& p) const { return (p - eye).dot(forward); }
};

struct Hit {
  double distance = 0.0;
  int object = -1; // -1 = background
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  Vec3 local = Vec3::Zero(); // hit point in object space
};

Hit intersect(const SceneSpec& scene, double t, const Vec3& origin, const Vec3& dir);

// Object-space point of object i mapped to world space at time t.
Vec3 object_to_world(const SceneObject& obj, double t, const Vec3& local);

// Surface albedo of an object at an object-space point (checker textures).
Vec3 surface_albedo(const SceneObject& obj, const Vec3& local);

struct GBufferFrame {
  Image gbuffer;                // 9ch
  std::vector<int> object_ids;  // per pixel, -1 on background
};

// One primary ray per pixel through the pixel center.
GBufferFrame render_gbuffer(const SceneSpec& scene, double t, std::size_t width, std::size_t height);

struct BrdfTerms {
  Vec3 diffuse = Vec3::Zero();
  Vec3 specular = Vec3::Zero();
};

// Metallic/roughness BRDF: Lambertian (1-metallic)*albedo/pi plus GGX
// specular with Smith-Schlick geometry and Schlick Fresnel (F0 = 0.04 mixed
// toward albedo by metallic). n, l, v are unit vectors.
BrdfTerms brdf_terms(const Vec3& albedo, double metallic, double roughness, const Vec3& n, const Vec3& l,
                     const Vec3& v);

// Radiance leaving point p toward eye under the given lights.
Vec3 shade_point(const std::vector<Light>& lights, const Vec3& p, const Vec3& n, const Vec3& albedo, double metallic,
                 double roughness, const Vec3& eye);

// L_o = sum_i L_i * f_r * max(cos theta_i, 0) over the scene lights;
// background pixels (zero normal) get the sky color. Positions are
// reconstructed from depth with the camera at time t.
Image shade(const Image& gbuffer, const SceneSpec& scene, double t);
Image shade_with_lights(const Image& gbuffer, const SceneSpec& scene, double t, const std::vector<Light>& lights);

// Motion from frame t to frame t-k: channels (dx, dy, valid). dx/dy map each
// pixel center of frame t to the source location in frame t-k, in pixels.
// valid = 0 where the point is off-screen or not visible at t-k.
Image motion_field(const SceneSpec& scene, double t, int k, std::size_t width, std::size_t height);

} // namespace stss::scene
