#include <treadkit/synth.hpp>

#include <treadkit/imaging.hpp>
#include <treadkit/parallel.hpp>
#include <treadkit/random.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace treadkit {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// HSV hue in degrees [0, 360), saturation and value in [0, 1].
void to_hsv(const Rgb& c, double& hue, double& sat, double& val) {
    const double mx = std::max({c[0], c[1], c[2]});
    const double mn = std::min({c[0], c[1], c[2]});
    const double delta = mx - mn;
    val = mx;
    sat = mx > 0.0 ? delta / mx : 0.0;
    if (delta <= 0.0) {
        hue = 0.0;
        return;
    }
    if (mx == c[0]) {
        hue = 60.0 * std::fmod((c[1] - c[2]) / delta, 6.0);
    } else if (mx == c[1]) {
        hue = 60.0 * ((c[2] - c[0]) / delta + 2.0);
    } else {
        hue = 60.0 * ((c[0] - c[1]) / delta + 4.0);
    }
    if (hue < 0.0) hue += 360.0;
}

bool hue_in_band(double hue, double lo, double hi) {
    if (lo <= hi) return hue >= lo && hue <= hi;
    return hue >= lo || hue <= hi;  // band wraps through 0
}

void require_non_negative(double v, const char* name) {
    if (!(v >= 0.0)) throw ArgumentError(std::string("SynthDepthConfig: ") + name + " must be >= 0");
}

} // namespace

void SynthDepthConfig::validate() const {
    require_non_negative(hull_radius, "hull_radius");
    require_non_negative(blur_sigma, "blur_sigma");
    require_non_negative(sigmoid_gain, "sigmoid_gain");
    require_non_negative(texture_amp, "texture_amp");
    require_non_negative(bevel_width, "bevel_width");
    require_non_negative(depth_scale, "depth_scale");
    require_non_negative(local_curv_amp, "local_curv_amp");
    require_non_negative(local_curv_sigma, "local_curv_sigma");
    require_non_negative(global_curv_amp, "global_curv_amp");
    if (!(global_curv_width > 0.0)) throw ArgumentError("SynthDepthConfig: global_curv_width must be > 0");
}

RegionMask fill_holes(const RegionMask& m) {
    const int w = m.width();
    const int h = m.height();
    // Flood the background from the border; unreached background is a hole.
    std::vector<std::uint8_t> outside(m.size(), 0);
    std::deque<std::size_t> queue;
    auto seed = [&](int x, int y) {
        const std::size_t i = m.index(x, y);
        if (!m[i] && !outside[i]) {
            outside[i] = 1;
            queue.push_back(i);
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        const int x = static_cast<int>(i % w);
        const int y = static_cast<int>(i / w);
        if (x > 0) seed(x - 1, y);
        if (x + 1 < w) seed(x + 1, y);
        if (y > 0) seed(x, y - 1);
        if (y + 1 < h) seed(x, y + 1);
    }
    RegionMask out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = outside[i] ? 0 : 1;
    return out;
}

RegionMask concave_hull(const RegionMask& fg, double radius) {
    if (radius < 0.0) throw ArgumentError("concave_hull: radius must be >= 0");
    if (!fg.any()) return fg;
    const int w = fg.width();
    const int h = fg.height();

    // Dilation: within `radius` of a foreground pixel.
    RegionMask background(w, h);
    for (std::size_t i = 0; i < fg.size(); ++i) background[i] = fg[i] ? 0 : 1;
    const GrayGrid to_fg = euclidean_distance_transform(background);
    RegionMask dilated(w, h);
    for (std::size_t i = 0; i < fg.size(); ++i) dilated[i] = to_fg[i] <= radius ? 1 : 0;
    if (dilated.count() == dilated.size()) return fill_holes(dilated);

    // Erosion: no non-dilated pixel within `radius`. Outside the frame counts as inside.
    const GrayGrid to_gap = euclidean_distance_transform(dilated);
    RegionMask closed(w, h);
    for (std::size_t i = 0; i < fg.size(); ++i) closed[i] = (to_gap[i] > radius || fg[i]) ? 1 : 0;
    return fill_holes(closed);
}

RegionMask mask_from_print(const RgbGrid& print, const SynthDepthConfig& cfg) {
    RegionMask ink(print.width(), print.height());
    for (std::size_t i = 0; i < print.size(); ++i) {
        double hue, sat, val;
        to_hsv(print[i], hue, sat, val);
        ink[i] = (sat >= cfg.min_saturation && val >= cfg.min_value &&
                  hue_in_band(hue, cfg.hue_min_deg, cfg.hue_max_deg))
                     ? 1
                     : 0;
    }
    if (!ink.any()) throw DataError("mask_from_print: no ink-coloured pixels found");
    return concave_hull(ink, cfg.hull_radius);
}

GrayGrid print_to_gray(const RgbGrid& print, const RegionMask& mask) {
    require_same_shape(print, mask, "print_to_gray");
    GrayGrid gray = to_gray(print);
    double lo = 1.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < gray.size(); ++i) {
        if (!mask[i]) continue;
        lo = std::min(lo, gray[i]);
        hi = std::max(hi, gray[i]);
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < gray.size(); ++i) {
        if (range > 1e-9) {
            gray[i] = clamp01((gray[i] - lo) / range);
        } else {
            gray[i] = mask[i] ? 0.0 : 1.0;
        }
    }
    return gray;
}

GrayGrid clean_print(const GrayGrid& print_gray, const RegionMask& mask,
                     const SynthDepthConfig& cfg) {
    require_same_shape(print_gray, mask, "clean_print");
    const GrayGrid blurred = gaussian_blur(print_gray, cfg.blur_sigma);
    GrayGrid out(print_gray.width(), print_gray.height(), 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask[i]) continue;
        const double z = cfg.sigmoid_gain * (blurred[i] - cfg.sigmoid_center);
        out[i] = 1.0 / (1.0 + std::exp(-z));
    }
    return out;
}

GrayGrid add_texture(const GrayGrid& depth, const GrayGrid& print_gray, double alpha,
                     double sigma) {
    require_same_shape(depth, print_gray, "add_texture");
    if (alpha < 0.0) throw ArgumentError("add_texture: alpha must be >= 0");
    if (alpha == 0.0) return depth;
    const GrayGrid low = gaussian_blur(print_gray, sigma);
    GrayGrid out(depth.width(), depth.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = clamp01(depth[i] + alpha * (print_gray[i] - low[i]));
    }
    return out;
}

GrayGrid add_bevels(const GrayGrid& depth, int width, double contact_below, double top) {
    if (width < 0) throw ArgumentError("add_bevels: width must be >= 0");
    if (width == 0) return depth;
    RegionMask contact(depth.width(), depth.height());
    for (std::size_t i = 0; i < depth.size(); ++i) contact[i] = depth[i] < contact_below ? 1 : 0;
    const GrayGrid dist = euclidean_distance_transform(contact);
    GrayGrid out = depth;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!contact[i]) continue;
        const double ramp = std::max(0.0, 1.0 - dist[i] / (width + 1.0));
        if (ramp > 0.0 && top > depth[i]) out[i] = clamp01(depth[i] + (top - depth[i]) * ramp);
    }
    return out;
}

GrayGrid add_local_curvature(const GrayGrid& depth, double amp, double sigma,
                             double contact_below, const RegionMask* mask) {
    if (amp < 0.0) throw ArgumentError("add_local_curvature: amp must be >= 0");
    if (amp == 0.0) return depth;
    if (mask) require_same_shape(depth, *mask, "add_local_curvature");
    auto inside = [&](std::size_t i) { return mask == nullptr || (*mask)[i] != 0; };

    RegionMask non_contact(depth.width(), depth.height());
    for (std::size_t i = 0; i < depth.size(); ++i) {
        non_contact[i] = (inside(i) && !(depth[i] < contact_below)) ? 1 : 0;
    }
    const GrayGrid dist = euclidean_distance_transform(non_contact);
    GrayGrid sq(depth.width(), depth.height());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = dist[i] * dist[i];
    const GrayGrid field = gaussian_blur(sq, sigma);

    double peak = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (inside(i)) peak = std::max(peak, field[i]);
    }
    if (!(peak > 0.0)) return depth;
    GrayGrid out = depth;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (inside(i)) out[i] = clamp01(depth[i] + amp * field[i] / peak);
    }
    return out;
}

GrayGrid add_global_curvature(const GrayGrid& depth, const RegionMask& mask, double amp,
                              double width) {
    require_same_shape(depth, mask, "add_global_curvature");
    if (amp < 0.0) throw ArgumentError("add_global_curvature: amp must be >= 0");
    if (!(width > 0.0)) throw ArgumentError("add_global_curvature: width must be > 0");
    if (amp == 0.0) return depth;
    const GrayGrid dist = euclidean_distance_transform(mask);
    GrayGrid out(depth.width(), depth.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = 1.0 - std::min(dist[i] / width, 1.0);
        out[i] = clamp01(depth[i] + amp * r * r);
    }
    return out;
}

SynthVariant synthesize_depth(const RgbGrid& print, const RegionMask& mask,
                              const SynthDepthConfig& cfg) {
    cfg.validate();
    require_same_shape(print, mask, "synthesize_depth");
    const GrayGrid gray = print_to_gray(print, mask);
    const GrayGrid cleaned = clean_print(gray, mask, cfg);

    SynthVariant v;
    v.mask = mask;
    v.config = cfg;
    v.contact = PrintMask(print.width(), print.height());
    for (std::size_t i = 0; i < cleaned.size(); ++i) v.contact[i] = (mask[i] && cleaned[i] < 0.5) ? 1 : 0;

    // Unit scale: contact ~0, non-contact ~1.
    GrayGrid unit = add_texture(cleaned, gray, cfg.texture_amp, cfg.blur_sigma);
    unit = add_bevels(unit, cfg.bevel_width, 0.5, 1.0);

    GrayGrid depth(unit.width(), unit.height());
    for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = unit[i] * cfg.depth_scale;
    depth = add_local_curvature(depth, cfg.local_curv_amp, cfg.local_curv_sigma,
                                0.5 * cfg.depth_scale, &mask);
    depth = add_global_curvature(depth, mask, cfg.global_curv_amp, cfg.global_curv_width);
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (!mask[i]) depth[i] = 1.0;
    }
    v.depth = std::move(depth);
    return v;
}

SynthVariant synthesize_depth(const RgbGrid& print, const SynthDepthConfig& cfg) {
    return synthesize_depth(print, mask_from_print(print, cfg), cfg);
}

SynthDepthConfig sample_config(const SynthDepthConfig& base, const SynthRanges& r,
                               std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, index);
    SynthDepthConfig c = base;
    c.blur_sigma = rng.uniform(r.blur_sigma_min, r.blur_sigma_max);
    c.sigmoid_gain = rng.uniform(r.sigmoid_gain_min, r.sigmoid_gain_max);
    c.texture_amp = rng.uniform(r.texture_amp_min, r.texture_amp_max);
    const bool bevel = rng.uniform() < r.bevel_probability;
    const int bevel_width = rng.uniform_int(r.bevel_min, r.bevel_max);
    c.bevel_width = bevel ? bevel_width : 0;
    c.local_curv_amp = rng.uniform(r.local_curv_amp_min, r.local_curv_amp_max);
    c.global_curv_amp = rng.uniform(r.global_curv_amp_min, r.global_curv_amp_max);
    c.global_curv_width = rng.uniform(r.global_curv_width_min, r.global_curv_width_max);
    c.rng_seed = seed;
    return c;
}

std::vector<SynthVariant> synth_variants(const RgbGrid& print, int n, std::uint64_t seed,
                                         const SynthDepthConfig& base, const SynthRanges& ranges,
                                         unsigned threads) {
    base.validate();
    return synth_variants(print, mask_from_print(print, base), n, seed, base, ranges, threads);
}

std::vector<SynthVariant> synth_variants(const RgbGrid& print, const RegionMask& mask, int n,
                                         std::uint64_t seed, const SynthDepthConfig& base,
                                         const SynthRanges& ranges, unsigned threads) {
    if (n < 10 || n > 15) {
        throw ArgumentError("synth_variants: n must lie in [10, 15], got " + std::to_string(n));
    }
    base.validate();
    require_same_shape(print, mask, "synth_variants");
    std::vector<SynthVariant> out(static_cast<std::size_t>(n));
    parallel_for(
        out.size(),
        [&](std::size_t i) {
            out[i] = synthesize_depth(print, mask, sample_config(base, ranges, seed, i));
        },
        threads);
    return out;
}

} // namespace treadkit
