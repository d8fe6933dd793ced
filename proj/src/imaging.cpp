#include <treadkit/imaging.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace treadkit {

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw ArgumentError("gaussian_kernel: sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    const double denom = 2.0 * sigma * sigma;
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(i * i) / denom);
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

GrayGrid gaussian_blur(const GrayGrid& img, double sigma) {
    if (sigma < 0.0 || std::isnan(sigma)) {
        throw ArgumentError("gaussian_blur: sigma must be >= 0, got " + std::to_string(sigma));
    }
    if (sigma == 0.0 || img.empty()) return img;

    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    const int w = img.width();
    const int h = img.height();

    GrayGrid tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                int sx = std::clamp(x + i, 0, w - 1);
                acc += k[i + r] * img(sx, y);
            }
            tmp(x, y) = acc;
        }
    }
    GrayGrid out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                int sy = std::clamp(y + i, 0, h - 1);
                acc += k[i + r] * tmp(x, sy);
            }
            out(x, y) = acc;
        }
    }
    return out;
}

GrayGrid box_sum(const GrayGrid& img, int radius) {
    if (radius < 0) throw ArgumentError("box_sum: radius must be >= 0");
    const int w = img.width();
    const int h = img.height();
    // Summed-area table with a zero row/column in front.
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    auto at = [&](int x, int y) -> double& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += img(x, y);
            at(x + 1, y + 1) = at(x + 1, y) + row;
        }
    }
    GrayGrid out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius);
        const int y1 = std::min(h, y + radius + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius);
            const int x1 = std::min(w, x + radius + 1);
            out(x, y) = at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
        }
    }
    return out;
}

GrayGrid local_mean_depth(const DepthGrid& depth, const RegionMask& mask, int window) {
    require_same_shape(depth, mask, "local_mean_depth");
    if (window < 1 || window % 2 == 0) {
        throw ArgumentError("local_mean_depth: window must be odd and >= 1, got " +
                            std::to_string(window));
    }
    const int radius = window / 2;
    GrayGrid weighted(depth.width(), depth.height());
    GrayGrid m(depth.width(), depth.height());
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (mask[i]) {
            weighted[i] = depth[i];
            m[i] = 1.0;
        }
    }
    const GrayGrid num = box_sum(weighted, radius);
    const GrayGrid den = box_sum(m, radius);
    GrayGrid out(depth.width(), depth.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        // den is an exact small integer, so a rounding residue can't masquerade as mass.
        out[i] = den[i] > 0.5 ? num[i] / den[i] : 0.0;
    }
    return out;
}

double percentile(const DepthGrid& depth, const RegionMask& mask, double p) {
    require_same_shape(depth, mask, "percentile");
    if (!(p >= 0.0 && p <= 100.0)) throw ArgumentError("percentile: p must lie in [0, 100]");
    std::vector<double> vals;
    vals.reserve(depth.size());
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (mask[i]) vals.push_back(depth[i]);
    }
    if (vals.empty()) throw DomainError("percentile: mask is empty");
    const auto n = static_cast<long long>(vals.size());
    // p * n first keeps integer-valued products exact (95 * 100 / 100 == 95).
    long long rank = static_cast<long long>(std::ceil(p * static_cast<double>(n) / 100.0));
    rank = std::clamp(rank, 1LL, n);
    auto nth = vals.begin() + (rank - 1);
    std::nth_element(vals.begin(), nth, vals.end());
    return *nth;
}

namespace {

// One pass of the lower-envelope squared distance transform
// (Felzenszwalb & Huttenlocher) over `n` samples of f.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = 0;
    v[0] = 0;
    z[0] = -inf;
    z[1] = inf;
    auto intersect = [&](int q, int p) {
        return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
    };
    for (int q = 1; q < n; ++q) {
        double s = intersect(q, v[k]);
        // z[0] is -inf, so this stops at k == 0 at the latest.
        while (s <= z[k]) {
            --k;
            s = intersect(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

} // namespace

GrayGrid euclidean_distance_transform(const RegionMask& fg) {
    const int w = fg.width();
    const int h = fg.height();
    GrayGrid out(w, h);
    if (fg.empty()) return out;
    if (fg.count() == fg.size()) {
        out.fill(static_cast<double>(std::max(w, h)));
        return out;
    }

    // Larger than any squared in-image distance, small enough to stay exact.
    const double big = 4.0 * (double(w) * w + double(h) * h) + 1.0;
    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);

    GrayGrid sq(w, h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = fg.test(x, y) ? big : 0.0;
        edt_1d(f.data(), d.data(), h, v, z);
        for (int y = 0; y < h; ++y) sq(x, y) = d[y];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = sq(x, y);
        edt_1d(f.data(), d.data(), w, v, z);
        for (int x = 0; x < w; ++x) out(x, y) = std::sqrt(d[x]);
    }
    return out;
}

namespace {

template <typename T>
T lerp_value(const T& a, const T& b, double t);

template <>
double lerp_value(const double& a, const double& b, double t) {
    return a + (b - a) * t;
}

template <>
Rgb lerp_value(const Rgb& a, const Rgb& b, double t) {
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

template <typename T>
Grid<T> resize_impl(const Grid<T>& img, int width, int height) {
    if (width <= 0 || height <= 0) throw ArgumentError("resize: target size must be positive");
    if (img.empty()) throw ArgumentError("resize: empty source image");
    if (width == img.width() && height == img.height()) return img;
    Grid<T> out(width, height);
    const double fx = double(img.width()) / width;
    const double fy = double(img.height()) / height;
    for (int y = 0; y < height; ++y) {
        double sy = std::clamp((y + 0.5) * fy - 0.5, 0.0, double(img.height() - 1));
        int y0 = static_cast<int>(std::floor(sy));
        int y1 = std::min(y0 + 1, img.height() - 1);
        double ty = sy - y0;
        for (int x = 0; x < width; ++x) {
            double sx = std::clamp((x + 0.5) * fx - 0.5, 0.0, double(img.width() - 1));
            int x0 = static_cast<int>(std::floor(sx));
            int x1 = std::min(x0 + 1, img.width() - 1);
            double tx = sx - x0;
            T top = lerp_value(img(x0, y0), img(x1, y0), tx);
            T bottom = lerp_value(img(x0, y1), img(x1, y1), tx);
            out(x, y) = lerp_value(top, bottom, ty);
        }
    }
    return out;
}

} // namespace

GrayGrid resize_bilinear(const GrayGrid& img, int width, int height) {
    return resize_impl(img, width, height);
}

RgbGrid resize_bilinear(const RgbGrid& img, int width, int height) {
    return resize_impl(img, width, height);
}

RegionMask resize_mask(const RegionMask& mask, int width, int height) {
    if (mask.width() == width && mask.height() == height) return mask;
    GrayGrid m(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) m[i] = mask[i] ? 1.0 : 0.0;
    const GrayGrid r = resize_bilinear(m, width, height);
    RegionMask out(width, height);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r[i] >= 0.5 ? 1 : 0;
    return out;
}

double luminance(const Rgb& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

GrayGrid to_gray(const RgbGrid& img) {
    GrayGrid out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = luminance(img[i]);
    return out;
}

DepthGrid normalize_in_mask(const DepthGrid& depth, const RegionMask& mask) {
    require_same_shape(depth, mask, "normalize_in_mask");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (!mask[i]) continue;
        lo = std::min(lo, depth[i]);
        hi = std::max(hi, depth[i]);
    }
    DepthGrid out = depth;
    if (!(hi >= lo)) return out;
    const double range = hi - lo;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (mask[i]) out[i] = range > 0.0 ? (depth[i] - lo) / range : 0.0;
    }
    return out;
}

} // namespace treadkit
