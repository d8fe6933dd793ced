#pragma once

#include <treadkit/grid.hpp>

#include <string>

namespace treadkit {

enum class Flip { None, Horizontal, Vertical, Both };

/// A geometric transform about the image centre: flip first, then rotate,
/// then scale. Positive angles rotate counter-clockwise as displayed (y down).
/// The set covers the augmentation specs (flips, rotations, scalings and
/// flip+rotation combinations); every spec has an inverse spec.
struct TransformSpec {
    Flip flip = Flip::None;
    double rotation_deg = 0.0;
    double scale = 1.0;

    static TransformSpec flip_only(Flip f) { return {f, 0.0, 1.0}; }
    static TransformSpec rotate(double deg) { return {Flip::None, deg, 1.0}; }
    static TransformSpec scaling(double f) { return {Flip::None, 0.0, f}; }
    static TransformSpec flip_rotate(Flip f, double deg) { return {f, deg, 1.0}; }

    bool is_pure_flip() const { return rotation_deg == 0.0 && scale == 1.0; }

    TransformSpec inverse() const;

    /// Canonical short name: "flip-h", "rot+5", "scale0.5", "flip-v+rot-10", "identity".
    std::string name() const;
    /// Parses a name produced by name(). Throws ArgumentError on anything else.
    static TransformSpec parse(const std::string& name);

    friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

/// Transformed raster plus the pixels whose source lay inside the valid input support.
template <typename T>
struct Warped {
    Grid<T> image;
    RegionMask valid;
};

/// Same-size canvas transform. Flips are exact pixel permutations; rotations
/// and scalings sample bilinearly. Pixels whose bilinear taps leave the image
/// (or touch an invalid input pixel) are zero and flagged invalid.
Warped<double> geom_transform(const GrayGrid& img, const TransformSpec& t);
Warped<double> geom_transform(const GrayGrid& img, const RegionMask& valid_in,
                              const TransformSpec& t);
Warped<Rgb> geom_transform(const RgbGrid& img, const TransformSpec& t);
RegionMask geom_transform_mask(const RegionMask& mask, const TransformSpec& t);

/// Inverse of geom_transform: geom_transform(img, t.inverse()).
Warped<double> inverse_transform(const GrayGrid& img, const RegionMask& valid_in,
                                 const TransformSpec& t);

/// Exact trigonometry in degrees: multiples of 90 give exact 0/1, and
/// symmetric angles give exactly negated results.
double cos_deg(double deg);
double sin_deg(double deg);

} // namespace treadkit
