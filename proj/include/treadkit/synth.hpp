#pragma once

#include <treadkit/grid.hpp>

#include <cstdint>
#include <vector>

namespace treadkit {

/// Parameters of the print-to-depth pipeline. Depth convention: 0 = contact,
/// larger = farther from the ground; every stage keeps values in [0, 1].
struct SynthDepthConfig {
    // Foreground detection: ink hue band (degrees) and minimum saturation/value.
    double hue_min_deg = 10.0;
    double hue_max_deg = 50.0;
    double min_saturation = 0.3;
    double min_value = 0.2;
    double hull_radius = 15.0;  // alpha-shape radius in px

    double blur_sigma = 2.0;      // denoising blur, also the texture high-pass scale
    double sigmoid_gain = 10.0;   // k
    double sigmoid_center = 0.5;  // x0
    double texture_amp = 0.15;    // alpha
    int bevel_width = 0;          // px, 0 = off
    double depth_scale = 0.5;     // non-contact level after cleaning
    double local_curv_amp = 0.2;
    double local_curv_sigma = 5.0;
    double global_curv_amp = 0.3;
    double global_curv_width = 40.0;  // px

    std::uint64_t rng_seed = 0;  // seed the variant parameters were drawn from

    /// Throws ArgumentError when an amplitude, width or sigma is negative.
    void validate() const;
};

/// Ranges sampled per variant by synth_variants. Bevels are switched on with
/// probability bevel_probability and then drawn from [bevel_min, bevel_max].
struct SynthRanges {
    double blur_sigma_min = 1.5, blur_sigma_max = 2.5;
    double sigmoid_gain_min = 8.0, sigmoid_gain_max = 12.0;
    double texture_amp_min = 0.05, texture_amp_max = 0.25;
    double bevel_probability = 0.7;
    int bevel_min = 2, bevel_max = 6;
    double local_curv_amp_min = 0.1, local_curv_amp_max = 0.2;
    double global_curv_amp_min = 0.15, global_curv_amp_max = 0.3;
    double global_curv_width_min = 30.0, global_curv_width_max = 50.0;
};

/// Pixels whose hue falls in the ink band, closed by a disk of radius
/// cfg.hull_radius (the raster alpha-hull) with interior holes filled.
/// Throws DataError when no pixel is ink coloured.
RegionMask mask_from_print(const RgbGrid& print, const SynthDepthConfig& cfg = {});

/// Morphological closing with a Euclidean disk followed by hole filling.
RegionMask concave_hull(const RegionMask& fg, double radius);
RegionMask fill_holes(const RegionMask& m);

/// Gray-scale print: luminance stretched to [0, 1] over the masked pixels,
/// so ink maps towards 0 (contact) and paper towards 1.
GrayGrid print_to_gray(const RgbGrid& print, const RegionMask& mask);

/// sigmoid(k * (blur(print_gray, sigma) - x0)) inside the mask, 1 outside.
GrayGrid clean_print(const GrayGrid& print_gray, const RegionMask& mask,
                     const SynthDepthConfig& cfg = {});

/// depth + alpha * (print_gray - blur(print_gray, sigma)), clamped to [0, 1].
GrayGrid add_texture(const GrayGrid& depth, const GrayGrid& print_gray, double alpha,
                     double sigma = 2.0);

/// Slanted block edges: contact pixels (depth < contact_below) within `width`
/// px of a non-contact pixel rise linearly towards `top`:
/// depth + (top - depth) * max(0, 1 - d / (width + 1)), d = EDT of the contact set.
GrayGrid add_bevels(const GrayGrid& depth, int width, double contact_below = 0.5,
                    double top = 1.0);

/// Adds amp * blur(EDT(non-contact)^2, sigma) / max, so the field peaks at amp
/// in the middle of wide non-contact areas. Pixels outside `mask` count as
/// boundary and receive nothing. Result clamped to [0, 1].
GrayGrid add_local_curvature(const GrayGrid& depth, double amp, double sigma = 5.0,
                             double contact_below = 0.5, const RegionMask* mask = nullptr);

/// depth + amp * (1 - min(EDT(mask) / width, 1))^2, clamped to [0, 1].
GrayGrid add_global_curvature(const GrayGrid& depth, const RegionMask& mask, double amp,
                              double width);

struct SynthVariant {
    DepthGrid depth;
    RegionMask mask;
    PrintMask contact;  // binarized cleaned print inside the mask
    SynthDepthConfig config;
};

/// Full pipeline for one configuration. Background (outside the mask) is 1.
SynthVariant synthesize_depth(const RgbGrid& print, const SynthDepthConfig& cfg);

/// Pipeline on a precomputed mask (the mask does not depend on the sampled ranges).
SynthVariant synthesize_depth(const RgbGrid& print, const RegionMask& mask,
                              const SynthDepthConfig& cfg);

/// n in [10, 15] variants with per-variant parameters drawn from `ranges`.
/// Variant i uses its own RNG stream of `seed`, so output is independent of
/// the thread count.
std::vector<SynthVariant> synth_variants(const RgbGrid& print, int n, std::uint64_t seed,
                                         const SynthDepthConfig& base = {},
                                         const SynthRanges& ranges = {}, unsigned threads = 0);
std::vector<SynthVariant> synth_variants(const RgbGrid& print, const RegionMask& mask, int n,
                                         std::uint64_t seed, const SynthDepthConfig& base = {},
                                         const SynthRanges& ranges = {}, unsigned threads = 0);

/// Draws variant `index`'s configuration from `ranges` (deterministic in seed/index).
SynthDepthConfig sample_config(const SynthDepthConfig& base, const SynthRanges& ranges,
                               std::uint64_t seed, std::uint64_t index);

} // namespace treadkit
