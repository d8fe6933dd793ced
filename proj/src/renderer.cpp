#include <treadkit/renderer.hpp>

#include <treadkit/errors.hpp>
#include <treadkit/imaging.hpp>
#include <treadkit/parallel.hpp>
#include <treadkit/transform.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace treadkit {

void RenderParams::validate() const {
    if (!(ambient >= 0.0) || !(bulb_weight >= 0.0)) {
        throw ArgumentError("render: ambient and bulb weight must be non-negative");
    }
    if (!(ao_strength >= 0.0 && ao_strength <= 1.0)) {
        throw ArgumentError("render: ao_strength must lie in [0, 1]");
    }
    if (!(ao_depth > 0.0)) throw ArgumentError("render: ao_depth must be positive");
    if (!(z_scale >= 0.0)) throw ArgumentError("render: z_scale must be non-negative");
}

Vec3 Bulb::direction() const {
    const double ce = cos_deg(elevation_deg);
    return {ce * cos_deg(azimuth_deg), ce * sin_deg(azimuth_deg), sin_deg(elevation_deg)};
}

LightConfig light_config(int index, const RenderParams& params) {
    if (index < 0 || index >= kLightCount) {
        throw ArgumentError("light index " + std::to_string(index) + " outside [0, 16]");
    }
    LightConfig cfg;
    cfg.index = index;
    cfg.ambient = params.ambient;
    cfg.bulb_weight = params.bulb_weight;
    if (index >= 1 && index <= 8) {
        cfg.bulbs.push_back({45.0 * (index - 1), params.bulb_elevation});
    } else if (index >= 9) {
        const double a = 45.0 * (index - 9);
        cfg.bulbs.push_back({a, params.bulb_elevation});
        cfg.bulbs.push_back({a + 120.0, params.bulb_elevation});
    }
    return cfg;
}

std::vector<LightConfig> light_table(const RenderParams& params) {
    std::vector<LightConfig> out;
    for (int i = 0; i < kLightCount; ++i) out.push_back(light_config(i, params));
    return out;
}

NormalMap normals_from_depth(const DepthGrid& depth, double z_scale) {
    const int w = depth.width();
    const int h = depth.height();
    NormalMap out(w, h);
    auto gradient = [](double lo, double mid, double hi, int pos, int size) {
        if (size < 2) return 0.0;
        if (pos == 0) return hi - mid;
        if (pos == size - 1) return mid - lo;
        return (hi - lo) * 0.5;
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = depth(x, y);
            const double gx = gradient(x > 0 ? depth(x - 1, y) : c, c, x + 1 < w ? depth(x + 1, y) : c, x, w);
            const double gy = gradient(y > 0 ? depth(x, y - 1) : c, c, y + 1 < h ? depth(x, y + 1) : c, y, h);
            const double a = -z_scale * gx;
            const double b = -z_scale * gy;
            const double norm = std::sqrt(a * a + b * b + 1.0);
            out(x, y) = {a / norm, b / norm, 1.0 / norm};
        }
    }
    return out;
}

RgbGrid render(const DepthGrid& depth, const RgbGrid& albedo, const LightConfig& light,
               const RegionMask& mask, const RenderParams& params) {
    require_same_shape(depth, albedo, "render");
    require_same_shape(depth, mask, "render");
    params.validate();
    const int w = depth.width();
    const int h = depth.height();
    RgbGrid out(w, h, Rgb{1.0, 1.0, 1.0});
    if (!mask.any()) return out;

    const NormalMap normals = normals_from_depth(depth, params.z_scale);
    const GrayGrid local = local_mean_depth(depth, mask, params.ao_window);
    std::vector<Vec3> dirs;
    for (const Bulb& b : light.bulbs) dirs.push_back(b.direction());

    parallel_for(
        static_cast<std::size_t>(h),
        [&](std::size_t row) {
            const int y = static_cast<int>(row);
            for (int x = 0; x < w; ++x) {
                if (!mask(x, y)) continue;
                // The box-sum mean of a constant patch can differ from it in the last bits.
                double rel = depth(x, y) - local(x, y);
                if (std::abs(rel) <= 1e-12 * std::max(1.0, std::abs(depth(x, y)))) rel = 0.0;
                const double occ = std::clamp(rel / params.ao_depth, 0.0, 1.0);
                double shade = light.ambient * (1.0 - params.ao_strength * occ);
                const Vec3& n = normals(x, y);
                for (const Vec3& l : dirs) {
                    shade += light.bulb_weight * std::max(0.0, n[0] * l[0] + n[1] * l[1] + n[2] * l[2]);
                }
                shade = std::clamp(shade, 0.0, 1.0);
                Rgb& px = out(x, y);
                const Rgb& a = albedo(x, y);
                for (int c = 0; c < 3; ++c) px[c] = std::clamp(a[c] * shade, 0.0, 1.0);
            }
        },
        params.threads);
    return out;
}

RgbGrid render(const DepthGrid& depth, const AlbedoMap& albedo, const LightConfig& light,
               const RegionMask& mask, const RenderParams& params) {
    return render(depth, albedo.image, light, mask, params);
}

} // namespace treadkit
