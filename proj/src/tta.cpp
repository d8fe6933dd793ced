#include <treadkit/tta.hpp>

#include <treadkit/errors.hpp>
#include <treadkit/imaging.hpp>
#include <treadkit/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace treadkit {

const std::vector<TransformSpec>& tta_specs() {
    static const std::vector<TransformSpec> specs = [] {
        std::vector<TransformSpec> s;
        const Flip flips[] = {Flip::Horizontal, Flip::Vertical, Flip::Both};
        const double angles[] = {5.0, 10.0, -5.0, -10.0};
        for (Flip f : flips) s.push_back(TransformSpec::flip_only(f));
        for (double a : angles) s.push_back(TransformSpec::rotate(a));
        for (double k : {0.5, 0.8, 1.5, 1.8}) s.push_back(TransformSpec::scaling(k));
        for (Flip f : flips) {
            for (double a : angles) s.push_back(TransformSpec::flip_rotate(f, a));
        }
        return s;
    }();
    return specs;
}

namespace {

bool is_scaling(const TransformSpec& t) { return t.scale != 1.0; }

void check_spec(const TransformSpec& t) {
    if (is_scaling(t) && (t.flip != Flip::None || t.rotation_deg != 0.0)) {
        throw ArgumentError("tta: scaling cannot be combined with flips or rotations (" + t.name() + ")");
    }
    if (!(t.scale > 0.0)) throw ArgumentError("tta: scale must be positive");
}

} // namespace

std::pair<int, int> variant_size(const TransformSpec& spec, int width, int height) {
    if (!is_scaling(spec)) return {width, height};
    const int w = std::max(1, static_cast<int>(std::lround(spec.scale * width)));
    const int h = std::max(1, static_cast<int>(std::lround(spec.scale * height)));
    return {w, h};
}

std::vector<TtaVariant> make_variants(const RgbGrid& img, const RegionMask& mask, unsigned threads) {
    require_same_shape(img, mask, "make_variants");
    const auto& specs = tta_specs();
    std::vector<TtaVariant> out(specs.size());
    parallel_for(
        specs.size(),
        [&](std::size_t i) {
            const TransformSpec& t = specs[i];
            TtaVariant& v = out[i];
            v.spec = t;
            if (is_scaling(t)) {
                const auto [w, h] = variant_size(t, img.width(), img.height());
                v.image = resize_bilinear(img, w, h);
                v.mask = resize_mask(mask, w, h);
            } else {
                v.image = geom_transform(img, t).image;
                v.mask = geom_transform_mask(mask, t);
            }
        },
        threads);
    return out;
}

Warped<double> variant_to_original(const DepthGrid& variant_depth, const TransformSpec& spec,
                                   int width, int height) {
    check_spec(spec);
    const auto [vw, vh] = variant_size(spec, width, height);
    if (variant_depth.width() != vw || variant_depth.height() != vh) {
        throw ArgumentError("tta: depth for " + spec.name() + " is " +
                            std::to_string(variant_depth.width()) + "x" +
                            std::to_string(variant_depth.height()) + ", expected " +
                            std::to_string(vw) + "x" + std::to_string(vh));
    }
    if (is_scaling(spec)) {
        return {resize_bilinear(variant_depth, width, height), full_mask(width, height)};
    }
    // Only pixels that came from inside the original canvas carry a prediction.
    const RegionMask forward_valid =
        geom_transform(GrayGrid(width, height, 0.0), spec).valid;
    return inverse_transform(variant_depth, forward_valid, spec);
}

DepthGrid merge_predictions(const DepthGrid& original, const std::vector<VariantDepth>& variants,
                            const RegionMask& mask, unsigned threads) {
    require_same_shape(original, mask, "merge_predictions");
    const auto& specs = tta_specs();
    std::vector<int> slot(specs.size(), -1);
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const auto it = std::find(specs.begin(), specs.end(), variants[i].spec);
        if (it == specs.end()) {
            throw ArgumentError("merge_predictions: unexpected spec " + variants[i].spec.name());
        }
        const auto k = static_cast<std::size_t>(it - specs.begin());
        if (slot[k] >= 0) throw ArgumentError("merge_predictions: duplicate spec " + specs[k].name());
        slot[k] = static_cast<int>(i);
    }
    for (std::size_t k = 0; k < specs.size(); ++k) {
        if (slot[k] < 0) throw ArgumentError("merge_predictions: missing spec " + specs[k].name());
    }

    const int w = original.width();
    const int h = original.height();
    std::vector<Warped<double>> back(specs.size());
    parallel_for(
        specs.size(),
        [&](std::size_t k) {
            const VariantDepth& v = variants[static_cast<std::size_t>(slot[k])];
            back[k] = variant_to_original(v.depth, v.spec, w, h);
        },
        threads);

    // Running mean in canonical order: independent of the order variants were
    // given in, and exact when all contributions agree.
    DepthGrid out = original;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask[i]) continue;
        double mean = original[i];
        int count = 1;
        for (const auto& b : back) {
            if (!b.valid[i]) continue;
            ++count;
            mean += (b.image[i] - mean) / count;
        }
        out[i] = mean;
    }
    return out;
}

} // namespace treadkit
