#pragma once

#include <treadkit/grid.hpp>

#include <array>
#include <vector>

namespace treadkit {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

struct Correspondence {
    Point2 src;
    Point2 dst;
};

using Correspondences = std::vector<Correspondence>;

/// U(r) as a function of r^2: r^2 log r^2, with U(0) = 0.
double tps_kernel(double r2);

/// Regularized thin-plate spline f with f(src_i) ~ dst_i. Stored as a
/// displacement d(p) = f(p) - p = a0 + a1*x + a2*y + sum_i w_i U(|p - c_i|)
/// so an identity fit is exactly zero.
struct TpsWarp {
    std::vector<Point2> control;
    std::vector<double> wx, wy;
    std::array<double, 3> ax{}, ay{};  // displacement affine part
    double lambda = 0.0;
    double condition = 0.0;  // estimated condition number of the solved system

    Point2 operator()(const Point2& p) const;
    Point2 displacement(const Point2& p) const;

    /// Affine part of f itself: {c, dx/dx, dx/dy} per output coordinate.
    std::array<double, 3> affine_x() const { return {ax[0], 1.0 + ax[1], ax[2]}; }
    std::array<double, 3> affine_y() const { return {ay[0], ay[1], 1.0 + ay[2]}; }

    /// max over both coordinates of |sum w|, |sum w*x|, |sum w*y|.
    double side_condition_residual() const;
};

/// Solves [K + lambda*I, P; P^T, 0] [w; a] = [dst - src; 0] with
/// K_ij = U(|src_i - src_j|), P = [1 x y]. Throws ArgumentError with fewer
/// than 3 correspondences or negative lambda, NumericalError when the points
/// are collinear or the system is singular.
TpsWarp fit_tps(const Correspondences& c, double lambda = 0.5);

/// out(q) = bilinear sample of img at map(q); 0 where map(q) leaves the image.
/// `map` takes output coordinates to source coordinates.
GrayGrid warp_image(const GrayGrid& img, const TpsWarp& map, int out_width, int out_height,
                    unsigned threads = 0);

/// Moves a print (ink in [0,1]) from its own frame (src points) into the
/// tread image frame (dst points): fits the dst -> src spline and pulls.
GrayGrid align_print(const GrayGrid& print, const Correspondences& c, double lambda,
                     int out_width, int out_height, unsigned threads = 0);

/// Pixel is print iff the mean ink over the aligned prints is >= theta.
/// Needs at least two prints of equal size (ArgumentError otherwise).
PrintMask average_and_threshold(const std::vector<GrayGrid>& prints, double theta = 0.5);

} // namespace treadkit
