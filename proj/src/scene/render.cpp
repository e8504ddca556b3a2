#include "stss/scene/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace stss::scene {
namespace {

constexpr double kHitEps = 1e-6;

Vec3 rotate_y(const Vec3& p, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * p.x() + s * p.z(), p.y(), -s * p.x() + c * p.z()};
}

bool hit_sphere(double radius, const Vec3& o, const Vec3& d, double& dist, Vec3& n) {
  const double b = o.dot(d);
  const double c = o.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  double s = -b - sq;
  if (s <= kHitEps) s = -b + sq;
  if (s <= kHitEps) return false;
  dist = s;
  n = (o + s * d) / radius;
  return true;
}

bool hit_box(const Vec3& half, const Vec3& o, const Vec3& d, double& dist, Vec3& n) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  int axis0 = -1, axis1 = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < -half[a] || o[a] > half[a]) return false;
      continue;
    }
    double ta = (-half[a] - o[a]) / d[a];
    double tb = (half[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    if (ta > t0) { t0 = ta; axis0 = a; }
    if (tb < t1) { t1 = tb; axis1 = a; }
    if (t0 > t1) return false;
  }
  int axis;
  if (t0 > kHitEps) {
    dist = t0;
    axis = axis0;
  } else if (t1 > kHitEps) {
    dist = t1;
    axis = axis1;
  } else {
    return false;
  }
  if (axis < 0) return false;
  n = Vec3::Zero();
  const Vec3 p = o + dist * d;
  n[axis] = p[axis] > 0.0 ? 1.0 : -1.0;
  return true;
}

} // namespace

Vec3 surface_albedo(const SceneObject& obj, const Vec3& local) {
  const auto& m = obj.material;
  if (m.checker_scale <= 0.0) return m.base_color;
  long parity = 0;
  const double s = m.checker_scale;
  switch (obj.kind) {
    case ShapeKind::Plane:
      parity = static_cast<long>(std::floor(local.x() * s)) + static_cast<long>(std::floor(local.z() * s));
      break;
    case ShapeKind::Sphere: {
      const Vec3 u = local.normalized();
      const double theta = std::acos(std::clamp(u.y(), -1.0, 1.0));
      const double phi = std::atan2(u.z(), u.x()) + std::numbers::pi;
      parity = static_cast<long>(std::floor(theta / std::numbers::pi * 2.0 * s)) +
               static_cast<long>(std::floor(phi / (2.0 * std::numbers::pi) * 4.0 * s));
      break;
    }
    case ShapeKind::Box: {
      // Offset keeps the faces off the cell boundaries.
      const Vec3 q = local * s + Vec3::Constant(1e-3 + 0.5);
      parity = static_cast<long>(std::floor(q.x())) + static_cast<long>(std::floor(q.y())) +
               static_cast<long>(std::floor(q.z()));
      break;
    }
  }
  return (parity & 1) ? m.alt_color : m.base_color;
}

namespace {

// Point on the camera ray through (u, v) at the given view depth.
Vec3 reconstruct(const Camera& cam, double u, double v, double depth) {
  const Vec3 d = cam.ray_dir(u, v);
  return cam.eye + d * (depth / d.dot(cam.forward));
}

// Pixel-center coordinates; the slack absorbs round-off on the border pixels.
bool in_sample_bounds(double x, double y, std::size_t w, std::size_t h) {
  constexpr double slack = 1e-3;
  return x >= -slack && y >= -slack && x <= static_cast<double>(w - 1) + slack &&
         y <= static_cast<double>(h - 1) + slack;
}

} // namespace

Camera Camera::at(const CameraPath& path, double t, std::size_t width, std::size_t height) {
  Camera c;
  c.width = width;
  c.height = height;
  c.eye = path.motion.position(t);
  const double yaw = path.motion.yaw(t);
  const double pitch = path.pitch;
  c.forward = Vec3(std::sin(yaw) * std::cos(pitch), std::sin(pitch), -std::cos(yaw) * std::cos(pitch));
  c.right = Vec3(std::cos(yaw), 0.0, std::sin(yaw));
  c.up = c.right.cross(c.forward);
  c.focal = (static_cast<double>(height) / 2.0) / std::tan(path.fov_y_deg * std::numbers::pi / 360.0);
  return c;
}

Vec3 Camera::ray_dir(double u, double v) const {
  const double xc = (u - static_cast<double>(width) / 2.0) / focal;
  const double yc = (static_cast<double>(height) / 2.0 - v) / focal;
  return (forward + xc * right + yc * up).normalized();
}

bool Camera::project(const Vec3& p, double& u, double& v) const { return project_direction(p - eye, u, v); }

bool Camera::project_direction(const Vec3& d, double& u, double& v) const {
  const double zc = d.dot(forward);
  if (zc <= 1e-9) return false;
  u = static_cast<double>(width) / 2.0 + focal * d.dot(right) / zc;
  v = static_cast<double>(height) / 2.0 - focal * d.dot(up) / zc;
  return true;
}

Vec3 object_to_world(const SceneObject& obj, double t, const Vec3& local) {
  if (obj.kind == ShapeKind::Plane) return local;
  return rotate_y(local, obj.motion.yaw(t)) + obj.motion.position(t);
}

Hit intersect(const SceneSpec& scene, double t, const Vec3& origin, const Vec3& dir) {
  Hit best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& obj = scene.objects[i];
    double dist = 0.0;
    Vec3 n_local;
    Vec3 local;
    if (obj.kind == ShapeKind::Plane) {
      if (std::abs(dir.y()) < 1e-12) continue;
      dist = (obj.plane_height - origin.y()) / dir.y();
      if (dist <= kHitEps || dist >= best.distance) continue;
      local = origin + dist * dir;
      n_local = Vec3(0.0, origin.y() > obj.plane_height ? 1.0 : -1.0, 0.0);
      best.distance = dist;
      best.object = static_cast<int>(i);
      best.local = local;
      best.point = local;
      best.normal = n_local;
      continue;
    }
    const double yaw = obj.motion.yaw(t);
    const Vec3 o = rotate_y(origin - obj.motion.position(t), -yaw);
    const Vec3 d = rotate_y(dir, -yaw);
    const bool hit = obj.kind == ShapeKind::Sphere ? hit_sphere(obj.radius, o, d, dist, n_local)
                                                   : hit_box(obj.half_extents, o, d, dist, n_local);
    if (!hit || dist >= best.distance) continue;
    best.distance = dist;
    best.object = static_cast<int>(i);
    best.local = o + dist * d;
    best.point = origin + dist * dir;
    best.normal = rotate_y(n_local, yaw).normalized();
  }
  if (best.object < 0) best.distance = std::numeric_limits<double>::infinity();
  return best;
}

GBufferFrame render_gbuffer(const SceneSpec& scene, double t, std::size_t width, std::size_t height) {
  GBufferFrame out;
  out.gbuffer = Image(kGBufferChannels, height, width);
  out.object_ids.assign(width * height, -1);
  const Camera cam = Camera::at(scene.camera, t, width, height);
  Image& g = out.gbuffer;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const Vec3 dir = cam.ray_dir(x + 0.5, y + 0.5);
      const Hit hit = intersect(scene, t, cam.eye, dir);
      if (hit.object < 0) {
        g.at(kDepth, y, x) = static_cast<float>(kSkyDepth);
        continue;
      }
      const auto& obj = scene.objects[hit.object];
      out.object_ids[y * width + x] = hit.object;
      const Vec3 albedo = surface_albedo(obj, hit.local);
      for (int c = 0; c < 3; ++c) {
        g.at(kBaseColor + c, y, x) = static_cast<float>(albedo[c]);
        g.at(kNormal + c, y, x) = static_cast<float>(hit.normal[c]);
      }
      g.at(kDepth, y, x) = static_cast<float>(cam.view_depth(hit.point));
      g.at(kMetallic, y, x) = static_cast<float>(obj.material.metallic);
      g.at(kRoughness, y, x) = static_cast<float>(obj.material.roughness);
    }
  }
  return out;
}

BrdfTerms brdf_terms(const Vec3& albedo, double metallic, double roughness, const Vec3& n, const Vec3& l,
                     const Vec3& v) {
  BrdfTerms out;
  const double nl = n.dot(l);
  const double nv = n.dot(v);
  if (nl <= 0.0) return out;
  out.diffuse = (1.0 - metallic) * albedo / std::numbers::pi;
  if (nv <= 0.0) return out;
  const Vec3 h = (l + v).normalized();
  const double nh = std::max(n.dot(h), 0.0);
  const double vh = std::max(v.dot(h), 0.0);
  const double alpha = std::max(roughness * roughness, 1e-3);
  const double a2 = alpha * alpha;
  const double denom = nh * nh * (a2 - 1.0) + 1.0;
  const double D = a2 / (std::numbers::pi * denom * denom);
  const double kg = (roughness + 1.0) * (roughness + 1.0) / 8.0;
  const double G = (nl / (nl * (1.0 - kg) + kg)) * (nv / (nv * (1.0 - kg) + kg));
  const Vec3 f0 = Vec3::Constant(0.04) * (1.0 - metallic) + albedo * metallic;
  const Vec3 F = f0 + (Vec3::Ones() - f0) * std::pow(1.0 - vh, 5.0);
  out.specular = F * (D * G / (4.0 * nl * nv));
  return out;
}

Vec3 shade_point(const std::vector<Light>& lights, const Vec3& p, const Vec3& n, const Vec3& albedo, double metallic,
                 double roughness, const Vec3& eye) {
  const Vec3 v = (eye - p).normalized();
  Vec3 lo = Vec3::Zero();
  for (const auto& light : lights) {
    Vec3 l;
    Vec3 radiance = light.color;
    if (light.kind == LightKind::Directional) {
      l = -light.direction.normalized();
    } else {
      const Vec3 to = light.position - p;
      const double d2 = std::max(to.squaredNorm(), 1e-6);
      l = to / std::sqrt(d2);
      radiance = light.color / d2;
    }
    const double cos_i = n.dot(l);
    if (cos_i <= 0.0) continue;
    const BrdfTerms f = brdf_terms(albedo, metallic, roughness, n, l, v);
    lo += radiance.cwiseProduct(f.diffuse + f.specular) * cos_i;
  }
  return lo;
}

Image shade_with_lights(const Image& gbuffer, const SceneSpec& scene, double t, const std::vector<Light>& lights) {
  const std::size_t h = gbuffer.height, w = gbuffer.width;
  Image out(3, h, w);
  const Camera cam = Camera::at(scene.camera, t, w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const Vec3 n(gbuffer.at(kNormal, y, x), gbuffer.at(kNormal + 1, y, x), gbuffer.at(kNormal + 2, y, x));
      if (n.squaredNorm() < 0.25) {
        for (int c = 0; c < 3; ++c) out.at(c, y, x) = static_cast<float>(scene.sky[c]);
        continue;
      }
      const Vec3 albedo(gbuffer.at(kBaseColor, y, x), gbuffer.at(kBaseColor + 1, y, x),
                        gbuffer.at(kBaseColor + 2, y, x));
      const double metallic = gbuffer.at(kMetallic, y, x);
      const double roughness = gbuffer.at(kRoughness, y, x);
      const Vec3 p = reconstruct(cam, x + 0.5, y + 0.5, gbuffer.at(kDepth, y, x));
      const Vec3 lo = shade_point(lights, p, n.normalized(), albedo, metallic, roughness, cam.eye);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = static_cast<float>(std::max(lo[c], 0.0));
    }
  }
  return out;
}

Image shade(const Image& gbuffer, const SceneSpec& scene, double t) {
  return shade_with_lights(gbuffer, scene, t, scene.lights);
}

Image motion_field(const SceneSpec& scene, double t, int k, std::size_t width, std::size_t height) {
  Image out(3, height, width);
  const double ts = t - k;
  const Camera cam = Camera::at(scene.camera, t, width, height);
  const Camera prev = Camera::at(scene.camera, ts, width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const Vec3 dir = cam.ray_dir(x + 0.5, y + 0.5);
      const Hit hit = intersect(scene, t, cam.eye, dir);
      // Re-project at t through the same path as t-k so identical poses give
      // exactly zero displacement.
      double u = x + 0.5, v = y + 0.5;
      double us = 0.0, vs = 0.0;
      bool projected = false;
      bool valid = false;
      if (hit.object < 0) {
        cam.project_direction(dir, u, v);
        projected = prev.project_direction(dir, us, vs);
        if (projected && in_sample_bounds(us - 0.5, vs - 0.5, width, height))
          valid = intersect(scene, ts, prev.eye, prev.ray_dir(us, vs)).object < 0;
      } else {
        const auto& obj = scene.objects[hit.object];
        cam.project(object_to_world(obj, t, hit.local), u, v);
        const Vec3 q = object_to_world(obj, ts, hit.local);
        projected = prev.project(q, us, vs);
        if (projected && in_sample_bounds(us - 0.5, vs - 0.5, width, height)) {
          const Hit back = intersect(scene, ts, prev.eye, prev.ray_dir(us, vs));
          const double expected = (q - prev.eye).norm();
          valid = back.object == hit.object && std::abs(back.distance - expected) <= 1e-3 * expected;
        }
      }
      if (projected) {
        out.at(0, y, x) = static_cast<float>(us - u);
        out.at(1, y, x) = static_cast<float>(vs - v);
      }
      out.at(2, y, x) = valid ? 1.0f : 0.0f;
    }
  }
  return out;
}

} // namespace stss::scene
