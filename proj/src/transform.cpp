#include <treadkit/transform.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

namespace treadkit {

double cos_deg(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a < 0) a += 360.0;
    // Fold into [0, 90] using the quadrant symmetries so that mirrored angles
    // produce bit-identical magnitudes.
    if (a <= 90.0) {
        if (a == 90.0) return 0.0;
        return std::cos(a * std::numbers::pi / 180.0);
    }
    if (a <= 180.0) return -cos_deg(180.0 - a);
    if (a <= 270.0) return -cos_deg(a - 180.0);
    return cos_deg(360.0 - a);
}

double sin_deg(double deg) { return cos_deg(90.0 - deg); }

TransformSpec TransformSpec::inverse() const {
    if (!(scale > 0.0)) throw ArgumentError("TransformSpec: scale must be positive");
    // (S R F)^-1 = S^-1 F R(-a). A reflection F conjugates R(-a) into R(a);
    // the double flip is a half turn and commutes with rotations.
    const bool reflection = flip == Flip::Horizontal || flip == Flip::Vertical;
    return {flip, reflection ? rotation_deg : -rotation_deg, 1.0 / scale};
}

namespace {

std::string format_number(double v, bool with_sign) {
    char buf[64];
    std::snprintf(buf, sizeof buf, with_sign ? "%+.10g" : "%.10g", v);
    return buf;
}

bool consume(const std::string& s, std::size_t& pos, const char* token) {
    const std::string t(token);
    if (s.compare(pos, t.size(), t) == 0) {
        pos += t.size();
        return true;
    }
    return false;
}

double parse_number(const std::string& s, std::size_t& pos, const std::string& whole) {
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ArgumentError("TransformSpec: malformed spec '" + whole + "'");
    pos += static_cast<std::size_t>(end - begin);
    return v;
}

} // namespace

std::string TransformSpec::name() const {
    std::string out;
    auto append = [&](const std::string& part) {
        if (!out.empty()) out += '+';
        out += part;
    };
    switch (flip) {
    case Flip::Horizontal: append("flip-h"); break;
    case Flip::Vertical: append("flip-v"); break;
    case Flip::Both: append("flip-hv"); break;
    case Flip::None: break;
    }
    if (rotation_deg != 0.0) append("rot" + format_number(rotation_deg, true));
    if (scale != 1.0) append("scale" + format_number(scale, false));
    return out.empty() ? "identity" : out;
}

TransformSpec TransformSpec::parse(const std::string& s) {
    TransformSpec t;
    if (s == "identity") return t;
    std::size_t pos = 0;
    bool any = false;
    if (consume(s, pos, "flip-hv")) {
        t.flip = Flip::Both;
        any = true;
    } else if (consume(s, pos, "flip-h")) {
        t.flip = Flip::Horizontal;
        any = true;
    } else if (consume(s, pos, "flip-v")) {
        t.flip = Flip::Vertical;
        any = true;
    }
    auto separator = [&] {
        if (any && pos < s.size() && !consume(s, pos, "+")) {
            throw ArgumentError("TransformSpec: malformed spec '" + s + "'");
        }
    };
    separator();
    if (consume(s, pos, "rot")) {
        t.rotation_deg = parse_number(s, pos, s);
        any = true;
        separator();
    }
    if (consume(s, pos, "scale")) {
        t.scale = parse_number(s, pos, s);
        any = true;
        if (!(t.scale > 0.0)) throw ArgumentError("TransformSpec: scale must be positive");
    }
    if (!any || pos != s.size()) throw ArgumentError("TransformSpec: malformed spec '" + s + "'");
    return t;
}

namespace {

template <typename T>
T weighted(const T& a, double wa);

template <>
double weighted(const double& a, double wa) {
    return a * wa;
}

template <>
Rgb weighted(const Rgb& a, double wa) {
    return {a[0] * wa, a[1] * wa, a[2] * wa};
}

inline void accumulate(double& acc, const double& v) { acc += v; }
inline void accumulate(Rgb& acc, const Rgb& v) {
    acc[0] += v[0];
    acc[1] += v[1];
    acc[2] += v[2];
}

template <typename T>
Warped<T> flip_exact(const Grid<T>& img, const RegionMask& valid_in, Flip f) {
    const int w = img.width();
    const int h = img.height();
    Warped<T> out{Grid<T>(w, h), RegionMask(w, h)};
    for (int y = 0; y < h; ++y) {
        const int sy = (f == Flip::Vertical || f == Flip::Both) ? h - 1 - y : y;
        for (int x = 0; x < w; ++x) {
            const int sx = (f == Flip::Horizontal || f == Flip::Both) ? w - 1 - x : x;
            out.image(x, y) = img(sx, sy);
            out.valid(x, y) = valid_in(sx, sy);
        }
    }
    return out;
}

template <typename T>
Warped<T> warp_affine(const Grid<T>& img, const RegionMask& valid_in, const TransformSpec& t) {
    if (!(t.scale > 0.0)) throw ArgumentError("geom_transform: scale must be positive");
    require_same_shape(img, valid_in, "geom_transform");
    if (t.is_pure_flip()) return flip_exact(img, valid_in, t.flip);

    const int w = img.width();
    const int h = img.height();
    const double cx = 0.5 * (w - 1);
    const double cy = 0.5 * (h - 1);
    const double c = cos_deg(t.rotation_deg);
    const double s = sin_deg(t.rotation_deg);
    const double fx = (t.flip == Flip::Horizontal || t.flip == Flip::Both) ? -1.0 : 1.0;
    const double fy = (t.flip == Flip::Vertical || t.flip == Flip::Both) ? -1.0 : 1.0;
    constexpr double eps = 1e-9;

    Warped<T> out{Grid<T>(w, h), RegionMask(w, h)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // source = centre + F * R(-a) * (p - centre) / scale
            const double ux = (x - cx) / t.scale;
            const double uy = (y - cy) / t.scale;
            const double vx = c * ux - s * uy;
            const double vy = s * ux + c * uy;
            double sx = cx + fx * vx;
            double sy = cy + fy * vy;
            if (sx < -eps || sy < -eps || sx > w - 1 + eps || sy > h - 1 + eps) continue;
            sx = std::clamp(sx, 0.0, double(w - 1));
            sy = std::clamp(sy, 0.0, double(h - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double tx = sx - x0;
            const double ty = sy - y0;
            T acc{};
            bool ok = true;
            const double wts[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
            const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
            const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
            for (int k = 0; k < 4 && ok; ++k) {
                if (wts[k] == 0.0) continue;
                if (!img.contains(xs[k], ys[k]) || !valid_in(xs[k], ys[k])) {
                    ok = false;
                    break;
                }
                accumulate(acc, weighted(img(xs[k], ys[k]), wts[k]));
            }
            if (!ok) continue;
            out.image(x, y) = acc;
            out.valid(x, y) = 1;
        }
    }
    return out;
}

} // namespace

Warped<double> geom_transform(const GrayGrid& img, const TransformSpec& t) {
    return warp_affine(img, full_mask(img.width(), img.height()), t);
}

Warped<double> geom_transform(const GrayGrid& img, const RegionMask& valid_in,
                              const TransformSpec& t) {
    return warp_affine(img, valid_in, t);
}

Warped<Rgb> geom_transform(const RgbGrid& img, const TransformSpec& t) {
    return warp_affine(img, full_mask(img.width(), img.height()), t);
}

RegionMask geom_transform_mask(const RegionMask& mask, const TransformSpec& t) {
    GrayGrid m(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) m[i] = mask[i] ? 1.0 : 0.0;
    const auto w = geom_transform(m, t);
    RegionMask out(mask.width(), mask.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (w.valid[i] && w.image[i] >= 0.5) ? 1 : 0;
    return out;
}

Warped<double> inverse_transform(const GrayGrid& img, const RegionMask& valid_in,
                                 const TransformSpec& t) {
    return warp_affine(img, valid_in, t.inverse());
}

} // namespace treadkit
