#pragma once

#include <treadkit/grid.hpp>

#include <vector>

namespace treadkit {

/// Normalized 1-D Gaussian taps truncated at ceil(3 sigma). sigma must be > 0.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur, kernel truncated at 3 sigma, replicate border.
/// sigma == 0 returns the input unchanged; negative sigma throws ArgumentError.
GrayGrid gaussian_blur(const GrayGrid& img, double sigma);

/// Sum over a (2r+1)^2 square window clipped to the image (zero padding).
GrayGrid box_sum(const GrayGrid& img, int radius);

/// Mask-normalized local mean: boxsum(depth*mask) / boxsum(mask) over a
/// window x window square, 0 where the window holds no mask pixel.
/// `window` must be odd and >= 1.
GrayGrid local_mean_depth(const DepthGrid& depth, const RegionMask& mask, int window = 45);

/// Nearest-rank percentile of the masked values (p in [0, 100]).
/// Throws DomainError on an empty mask.
double percentile(const DepthGrid& depth, const RegionMask& mask, double p);

/// Exact Euclidean distance from every pixel to the nearest false pixel.
/// A mask with no false pixel yields max(width, height) everywhere.
GrayGrid euclidean_distance_transform(const RegionMask& fg);

/// Bilinear resize using pixel-centre alignment, border clamped.
GrayGrid resize_bilinear(const GrayGrid& img, int width, int height);
RgbGrid resize_bilinear(const RgbGrid& img, int width, int height);

/// Nearest-neighbour resize (labels, masks).
template <typename T>
Grid<T> resize_nearest(const Grid<T>& img, int width, int height) {
    Grid<T> out(width, height);
    for (int y = 0; y < height; ++y) {
        int sy = std::min(img.height() - 1,
                          static_cast<int>((static_cast<long long>(y) * img.height()) / height));
        for (int x = 0; x < width; ++x) {
            int sx = std::min(img.width() - 1,
                              static_cast<int>((static_cast<long long>(x) * img.width()) / width));
            out(x, y) = img(sx, sy);
        }
    }
    return out;
}

RegionMask resize_mask(const RegionMask& mask, int width, int height);

/// Luminance of an sRGB-encoded colour (Rec. 601 weights).
double luminance(const Rgb& c);
GrayGrid to_gray(const RgbGrid& img);

/// Min-max rescale of the masked values to [0, 1]; outside the mask is left as is.
/// A constant masked field maps to 0.
DepthGrid normalize_in_mask(const DepthGrid& depth, const RegionMask& mask);

} // namespace treadkit
