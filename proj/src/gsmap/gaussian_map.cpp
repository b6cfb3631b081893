#include "splatfuse/gsmap/gaussian_map.hpp"

#include <Eigen/Geometry>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace splatfuse {

std::vector<Gaussian> init_gaussians(const Keyframe& kf,
                                     const ProxyDepth& proxy,
                                     const Camera& camera, int stride) {
  if (stride < 1) throw DomainError("init_gaussians: stride must be >= 1");
  if (proxy.depth.width() != kf.image.width() ||
      proxy.depth.height() != kf.image.height())
    throw DomainError("init_gaussians: proxy/image size mismatch");

  std::vector<Gaussian> out;
  for (int y = 0; y < proxy.depth.height(); y += stride)
    for (int x = 0; x < proxy.depth.width(); x += stride) {
      const double depth = proxy.depth.at(x, y);
      if (!(depth > 0.0) || !std::isfinite(depth)) continue;
      Gaussian g;
      const Vec3 local = camera.unproject_depth(
          Vec2(static_cast<double>(x), static_cast<double>(y)), depth);
      g.mean = kf.pose.apply(local);
      g.color = kf.image.at(x, y);
      // Isotropic footprint: one strided pixel at this depth.
      const double s = depth * stride / camera.fx;
      g.log_scales = Vec3::Constant(std::log(s));
      g.opacity_logit = 0.0;  // opacity 0.5
      g.anchor_kf = kf.id;
      out.push_back(g);
    }
  return out;
}

void deform_map(GaussianMap& map,
                const std::map<int, std::pair<Pose, Pose>>& pose_updates) {
  for (Gaussian& g : map.gaussians) {
    if (g.anchor_kf < 0) throw DomainError("deform_map: dangling anchor");
    const auto it = pose_updates.find(g.anchor_kf);
    if (it == pose_updates.end()) continue;
    const Pose& before = it->second.first;
    const Pose& after = it->second.second;
    if (before == after) continue;  // keep no-op updates bit-identical
    const Pose correction = after * before.inverse();
    g.mean = correction.apply(g.mean);
    g.rotation = correction.rotation * g.rotation;
  }
}

namespace {

constexpr char kMagic[4] = {'C', 'S', 'P', 'L'};
constexpr std::uint32_t kVersion = 1;

void put_f32(std::ostream& os, double v) {
  const float f = static_cast<float>(v);
  os.write(reinterpret_cast<const char*>(&f), sizeof(f));
}

float get_f32(std::istream& is) {
  float f = 0.0f;
  is.read(reinterpret_cast<char*>(&f), sizeof(f));
  return f;
}

}  // namespace

void save_map(const GaussianMap& map, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("save_map: cannot open " + path);
  os.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t count = map.gaussians.size();
  os.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const Gaussian& g : map.gaussians) {
    for (int i = 0; i < 3; ++i) put_f32(os, g.mean(i));
    Eigen::Quaterniond q(g.rotation);
    q.normalize();
    put_f32(os, q.x());
    put_f32(os, q.y());
    put_f32(os, q.z());
    put_f32(os, q.w());
    for (int i = 0; i < 3; ++i) put_f32(os, g.log_scales(i));
    put_f32(os, g.opacity_logit);
    for (int i = 0; i < 3; ++i) put_f32(os, g.color(i));
    const std::uint32_t anchor = static_cast<std::uint32_t>(g.anchor_kf);
    os.write(reinterpret_cast<const char*>(&anchor), sizeof(anchor));
  }
  if (!os) throw DomainError("save_map: write failed for " + path);
}

GaussianMap load_map(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("load_map: cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DomainError("load_map: bad magic in " + path);
  std::uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!is || version != kVersion)
    throw DomainError("load_map: unsupported version");
  std::uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&count), sizeof(count));

  GaussianMap map;
  map.gaussians.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    Gaussian g;
    for (int i = 0; i < 3; ++i) g.mean(i) = get_f32(is);
    const double qx = get_f32(is), qy = get_f32(is), qz = get_f32(is),
                 qw = get_f32(is);
    Eigen::Quaterniond q(qw, qx, qy, qz);
    q.normalize();
    g.rotation = q.toRotationMatrix();
    for (int i = 0; i < 3; ++i) g.log_scales(i) = get_f32(is);
    g.opacity_logit = get_f32(is);
    for (int i = 0; i < 3; ++i) g.color(i) = get_f32(is);
    std::uint32_t anchor = 0;
    is.read(reinterpret_cast<char*>(&anchor), sizeof(anchor));
    if (!is) throw DomainError("load_map: truncated file " + path);
    g.anchor_kf = static_cast<int>(anchor);
    map.gaussians.push_back(g);
  }
  map.rebuild_anchor_index();
  return map;
}

void save_point_cloud(const GaussianMap& map, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DomainError("save_point_cloud: cannot open " + path);
  os.precision(9);
  for (const Gaussian& g : map.gaussians)
    os << g.mean(0) << ' ' << g.mean(1) << ' ' << g.mean(2) << ' '
       << g.color(0) << ' ' << g.color(1) << ' ' << g.color(2) << '\n';
  if (!os) throw DomainError("save_point_cloud: write failed for " + path);
}

}  // namespace splatfuse
