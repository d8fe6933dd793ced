#include <treadkit/alignment.hpp>

#include <treadkit/errors.hpp>
#include <treadkit/parallel.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace treadkit {

double tps_kernel(double r2) { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

Point2 TpsWarp::displacement(const Point2& p) const {
    double dx = ax[0] + ax[1] * p.x + ax[2] * p.y;
    double dy = ay[0] + ay[1] * p.x + ay[2] * p.y;
    for (std::size_t i = 0; i < control.size(); ++i) {
        const double ex = p.x - control[i].x;
        const double ey = p.y - control[i].y;
        const double u = tps_kernel(ex * ex + ey * ey);
        dx += wx[i] * u;
        dy += wy[i] * u;
    }
    return {dx, dy};
}

Point2 TpsWarp::operator()(const Point2& p) const {
    const Point2 d = displacement(p);
    return {p.x + d.x, p.y + d.y};
}

double TpsWarp::side_condition_residual() const {
    double worst = 0.0;
    for (const auto* w : {&wx, &wy}) {
        double s = 0.0, sx = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < control.size(); ++i) {
            s += (*w)[i];
            sx += (*w)[i] * control[i].x;
            sy += (*w)[i] * control[i].y;
        }
        worst = std::max({worst, std::abs(s), std::abs(sx), std::abs(sy)});
    }
    return worst;
}

TpsWarp fit_tps(const Correspondences& c, double lambda) {
    const auto n = static_cast<Eigen::Index>(c.size());
    if (n < 3) throw ArgumentError("fit_tps: need at least 3 correspondences, got " + std::to_string(n));
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("fit_tps: lambda must be >= 0");
    for (const auto& p : c) {
        if (!std::isfinite(p.src.x) || !std::isfinite(p.src.y) || !std::isfinite(p.dst.x) ||
            !std::isfinite(p.dst.y)) {
            throw ArgumentError("fit_tps: non-finite coordinate");
        }
    }

    // Collinearity: the centred source points must span two dimensions.
    Eigen::MatrixXd centred(n, 2);
    double mx = 0.0, my = 0.0;
    for (const auto& p : c) {
        mx += p.src.x;
        my += p.src.y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        centred(i, 0) = c[i].src.x - mx;
        centred(i, 1) = c[i].src.y - my;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred);
    const auto sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= 1e-10 * sv(0)) {
        const double cond = sv(1) > 0.0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity();
        throw NumericalError("fit_tps: control points are collinear (spread condition " +
                                 std::to_string(cond) + ")",
                             cond);
    }

    const Eigen::Index m = n + 3;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double ex = c[i].src.x - c[j].src.x;
            const double ey = c[i].src.y - c[j].src.y;
            A(i, j) = tps_kernel(ex * ex + ey * ey);
        }
        A(i, i) += lambda;
        A(i, n) = A(n, i) = 1.0;
        A(i, n + 1) = A(n + 1, i) = c[i].src.x;
        A(i, n + 2) = A(n + 2, i) = c[i].src.y;
        rhs(i, 0) = c[i].dst.x - c[i].src.x;
        rhs(i, 1) = c[i].dst.y - c[i].src.y;
    }

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    const double rcond = lu.rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!lu.isInvertible() || !(rcond > 1e-15)) {
        throw NumericalError("fit_tps: singular system (condition estimate " + std::to_string(cond) + ")",
                             cond);
    }
    Eigen::MatrixXd sol = lu.solve(rhs);
    // One step of iterative refinement tightens the side conditions.
    const Eigen::MatrixXd residual = rhs - A * sol;
    sol += lu.solve(residual);

    TpsWarp warp;
    warp.lambda = lambda;
    warp.condition = cond;
    warp.control.reserve(c.size());
    for (const auto& p : c) warp.control.push_back(p.src);
    warp.wx.resize(c.size());
    warp.wy.resize(c.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        warp.wx[i] = sol(i, 0);
        warp.wy[i] = sol(i, 1);
    }
    for (int k = 0; k < 3; ++k) {
        warp.ax[k] = sol(n + k, 0);
        warp.ay[k] = sol(n + k, 1);
    }
    return warp;
}

GrayGrid warp_image(const GrayGrid& img, const TpsWarp& map, int out_width, int out_height,
                    unsigned threads) {
    if (out_width < 1 || out_height < 1) throw ArgumentError("warp_image: output size must be positive");
    GrayGrid out(out_width, out_height, 0.0);
    if (img.empty()) return out;
    const double max_x = img.width() - 1;
    const double max_y = img.height() - 1;
    constexpr double eps = 1e-9;
    parallel_for(
        static_cast<std::size_t>(out_height),
        [&](std::size_t row) {
            const int y = static_cast<int>(row);
            for (int x = 0; x < out_width; ++x) {
                const Point2 s = map({static_cast<double>(x), static_cast<double>(y)});
                if (!(s.x >= -eps && s.x <= max_x + eps && s.y >= -eps && s.y <= max_y + eps)) continue;
                const double sx = std::clamp(s.x, 0.0, max_x);
                const double sy = std::clamp(s.y, 0.0, max_y);
                const int x0 = static_cast<int>(std::floor(sx));
                const int y0 = static_cast<int>(std::floor(sy));
                const int x1 = std::min(x0 + 1, img.width() - 1);
                const int y1 = std::min(y0 + 1, img.height() - 1);
                const double fx = sx - x0;
                const double fy = sy - y0;
                const double top = img(x0, y0) + (img(x1, y0) - img(x0, y0)) * fx;
                const double bottom = img(x0, y1) + (img(x1, y1) - img(x0, y1)) * fx;
                out(x, y) = top + (bottom - top) * fy;
            }
        },
        threads);
    return out;
}

GrayGrid align_print(const GrayGrid& print, const Correspondences& c, double lambda,
                     int out_width, int out_height, unsigned threads) {
    Correspondences reversed;
    reversed.reserve(c.size());
    for (const auto& p : c) reversed.push_back({p.dst, p.src});
    return warp_image(print, fit_tps(reversed, lambda), out_width, out_height, threads);
}

PrintMask average_and_threshold(const std::vector<GrayGrid>& prints, double theta) {
    if (prints.size() < 2) {
        throw ArgumentError("average_and_threshold: need at least 2 prints, got " +
                            std::to_string(prints.size()));
    }
    for (std::size_t k = 1; k < prints.size(); ++k) {
        require_same_shape(prints[0], prints[k], "average_and_threshold");
    }
    const auto count = static_cast<double>(prints.size());
    PrintMask out(prints[0].width(), prints[0].height());
    std::vector<double> values(prints.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t k = 0; k < prints.size(); ++k) values[k] = prints[k][i];
        // Summing in sorted order keeps the decision independent of print order.
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        out[i] = sum / count >= theta ? 1 : 0;
    }
    return out;
}

} // namespace treadkit
