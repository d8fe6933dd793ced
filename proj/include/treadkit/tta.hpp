#pragma once

#include <treadkit/grid.hpp>
#include <treadkit/transform.hpp>

#include <vector>

namespace treadkit {

/// The 23 augmentation specs in canonical order: flip-h, flip-v, flip-hv;
/// rotations +5, +10, -5, -10; scalings 0.5, 0.8, 1.5, 1.8; then each flip
/// (h, v, hv) combined with each rotation (+5, +10, -5, -10).
const std::vector<TransformSpec>& tta_specs();
constexpr int kTtaVariantCount = 23;

struct TtaVariant {
    TransformSpec spec;
    RgbGrid image;
    RegionMask mask;
};

/// Flips and rotations keep the canvas size (geom_transform); scalings resize
/// the image to round(scale * size), so the predictor runs at that resolution.
std::vector<TtaVariant> make_variants(const RgbGrid& img, const RegionMask& mask,
                                      unsigned threads = 0);

/// Size of the variant image produced for `spec` from a width x height input.
std::pair<int, int> variant_size(const TransformSpec& spec, int width, int height);

struct VariantDepth {
    DepthGrid depth;
    TransformSpec spec;
};

/// Brings every variant prediction back to the original frame and averages it
/// with the original prediction per pixel, counting only pixels that map back
/// from inside the variant's valid support. Pixels outside `mask` keep the
/// original value. Throws ArgumentError unless the specs are exactly the 23
/// canonical ones (any order) with matching sizes.
DepthGrid merge_predictions(const DepthGrid& original, const std::vector<VariantDepth>& variants,
                            const RegionMask& mask, unsigned threads = 0);

/// The variant depth mapped back to the original frame, plus its valid pixels.
Warped<double> variant_to_original(const DepthGrid& variant_depth, const TransformSpec& spec,
                                   int width, int height);

} // namespace treadkit
