#pragma once

#include <treadkit/grid.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace treadkit {

/// sRGB (D65, gamma-encoded, [0,1]) to CIE L*a*b*.
Rgb srgb_to_lab(const Rgb& c);
/// Inverse of srgb_to_lab; the result is not clamped to the sRGB gamut.
Rgb lab_to_srgb(const Rgb& lab);

/// n points of dimension `dim`, stored row by row.
struct PointSet {
    int dim = 0;
    std::vector<double> coords;

    std::size_t size() const { return dim > 0 ? coords.size() / static_cast<std::size_t>(dim) : 0; }
    const double* at(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(dim); }
};

struct MeanShiftOptions {
    double tolerance = 1e-4;      // stop when a point moves less than this
    int max_iterations = 100;
    double merge_fraction = 0.5;  // converged points closer than fraction * bandwidth share a mode
    unsigned threads = 0;
};

struct MeanShiftResult {
    PointSet modes;                 // ordered by descending support, then lexicographically
    std::vector<int> assignment;    // mode index per input point
    std::vector<std::size_t> support;  // points per mode
};

/// Flat-kernel mean shift: every point climbs to the mean of the input points
/// within `bandwidth` until it moves less than the tolerance. The result does
/// not depend on the order of the input points. Throws ArgumentError on empty
/// input or a non-positive bandwidth.
MeanShiftResult mean_shift(const PointSet& points, double bandwidth,
                           const MeanShiftOptions& options = {});

struct PaletteEntry {
    Rgb color{};
    double proportion = 0.0;
};

/// Primary colours of a tread and the fraction of pixels each covers.
struct Palette {
    std::vector<PaletteEntry> entries;

    /// Throws ArgumentError unless non-empty with positive proportions summing to 1 (±1e-6).
    void validate() const;
};

/// Mean shift over the masked RGB pixels (raster order, every k-th pixel so at
/// most `max_points` are used). Entries sorted by descending proportion.
Palette extract_palette(const RgbGrid& img, const RegionMask& mask, double bandwidth = 0.08,
                        std::size_t max_points = 20000);

/// Per-pixel segment ids (-1 outside the mask) and one colour per id.
struct SegmentMap {
    Grid<int> labels;
    std::vector<Rgb> colors;

    std::size_t segment_count() const { return colors.size(); }
};

struct AlbedoMap {
    RgbGrid image;  // piecewise constant inside the mask, white outside
    SegmentMap segments;
};

struct ComposeOptions {
    /// Depth below this is contact; unset = midpoint of the masked depth range.
    std::optional<double> contact_threshold;
    double watershed_sigma = 2.0;
};

/// Tread elements from the depth map (connected contact components plus a
/// watershed split of the non-contact remainder), coloured from the palette
/// so the realized area fractions track the palette proportions: segments
/// are visited largest first (seeded shuffle among equal areas) and each goes
/// to the colour with the largest remaining area deficit.
AlbedoMap compose_albedo(const DepthGrid& depth, const RegionMask& mask, const Palette& palette,
                         std::uint64_t seed, const ComposeOptions& options = {});

/// Colour assignment used by compose_albedo: palette index per segment area.
std::vector<int> assign_palette(const std::vector<std::size_t>& areas, const Palette& palette,
                                std::uint64_t seed);

struct PseudoAlbedoOptions {
    double l_scale = 0.15;
    int work_width = 67;
    int work_height = 150;
    double bandwidth = 10.0;      // scaled-LAB units
    std::size_t min_segment = 20;  // px at working resolution
    double merge_distance = 8.0;  // scaled-LAB units
    int max_iterations = 10;
    unsigned threads = 0;
};

struct PseudoAlbedo {
    AlbedoMap albedo;
    int iterations = 0;          // refinement passes that ran
    std::size_t initial_segments = 0;
};

/// Approximate piecewise-constant reflectance of a real tread photo: mean
/// shift in LAB with a damped L channel at a reduced working size, iterative
/// merging of small similar neighbours, then per-segment mean RGB at full size.
/// Throws DataError on an empty mask.
PseudoAlbedo pseudo_albedo(const RgbGrid& img, const RegionMask& mask,
                           const PseudoAlbedoOptions& options = {});

/// 4-connected components of equal labels; pixels with label < 0 stay -1.
Grid<int> connected_components(const Grid<int>& labels, int* count = nullptr);

} // namespace treadkit
