#pragma once

#include <treadkit/appearance.hpp>
#include <treadkit/grid.hpp>

#include <array>
#include <vector>

namespace treadkit {

using Vec3 = std::array<double, 3>;
/// Unit surface normals, z towards the camera. x right, y down (image axes).
using NormalMap = Grid<Vec3>;

struct RenderParams {
    double ambient = 0.75;
    double bulb_weight = 0.35;     // w per bulb
    double ao_strength = 0.5;      // beta
    double ao_depth = 0.1;         // h0, depth units
    double bulb_elevation = 45.0;  // degrees above the tread plane
    double z_scale = 20.0;         // px per depth unit
    int ao_window = 45;            // local-mean window for the occlusion term
    unsigned threads = 0;

    void validate() const;
};

/// Directional bulb. Azimuth in degrees measured in image axes: 0 points
/// along +x, 90 along +y (down on screen).
struct Bulb {
    double azimuth_deg = 0.0;
    double elevation_deg = 45.0;

    Vec3 direction() const;
};

struct LightConfig {
    int index = 0;
    std::vector<Bulb> bulbs;
    double ambient = 0.75;
    double bulb_weight = 0.35;
};

/// Index 0: ambient only. 1..8: one bulb at azimuth 45*(index-1).
/// 9..16: two bulbs at 45*(index-9) and 120 degrees further.
LightConfig light_config(int index, const RenderParams& params = {});
std::vector<LightConfig> light_table(const RenderParams& params = {});
constexpr int kLightCount = 17;

/// Central differences inside, one-sided at the borders;
/// n ~ (-z*dd/dx, -z*dd/dy, 1), normalized.
NormalMap normals_from_depth(const DepthGrid& depth, double z_scale);

/// albedo * clamp(ambient*AO + sum_b w*max(0, n.l_b), 0, 1) inside the mask,
/// white outside, where AO = 1 - beta*clamp((depth - d_l)/h0, 0, 1) and d_l is
/// the mask-normalized local mean depth. Results are clamped to [0, 1].
/// Throws ArgumentError on shape mismatches.
RgbGrid render(const DepthGrid& depth, const RgbGrid& albedo, const LightConfig& light,
               const RegionMask& mask, const RenderParams& params = {});
RgbGrid render(const DepthGrid& depth, const AlbedoMap& albedo, const LightConfig& light,
               const RegionMask& mask, const RenderParams& params = {});

} // namespace treadkit
