#include <treadkit/errors.hpp>
#include <treadkit/tta.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace treadkit;

namespace {

DepthGrid smooth_depth(int w, int h) {
    DepthGrid d(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            d(x, y) = 0.5 + 0.2 * std::sin(0.08 * x + 0.3) * std::cos(0.06 * y) + 0.1 * x / w;
        }
    }
    return d;
}

RegionMask ellipse_mask(int w, int h, double shrink) {
    RegionMask m(w, h);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = (x - cx) / (shrink * w / 2.0), v = (y - cy) / (shrink * h / 2.0);
            m(x, y) = u * u + v * v <= 1.0 ? 1 : 0;
        }
    }
    return m;
}

RgbGrid gray_image(const DepthGrid& d) {
    RgbGrid img(d.width(), d.height());
    for (std::size_t i = 0; i < d.size(); ++i) img[i] = {d[i], d[i], d[i]};
    return img;
}

// A stand-in predictor that returns the red channel as depth.
std::vector<VariantDepth> predict(const std::vector<TtaVariant>& variants) {
    std::vector<VariantDepth> out;
    for (const auto& v : variants) {
        DepthGrid d(v.image.width(), v.image.height());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = v.image[i][0];
        out.push_back({std::move(d), v.spec});
    }
    return out;
}

std::vector<VariantDepth> constant_variants(int w, int h, double value) {
    std::vector<VariantDepth> out;
    for (const auto& s : tta_specs()) {
        const auto [vw, vh] = variant_size(s, w, h);
        out.push_back({DepthGrid(vw, vh, value), s});
    }
    return out;
}

} // namespace

TEST(TtaSpecs, CanonicalTwentyThree) {
    const auto& specs = tta_specs();
    ASSERT_EQ(specs.size(), 23u);
    std::set<std::string> names;
    int flips = 0, rotations = 0, scalings = 0, combos = 0;
    for (const auto& s : specs) {
        names.insert(s.name());
        const bool f = s.flip != Flip::None, r = s.rotation_deg != 0.0, c = s.scale != 1.0;
        flips += f && !r && !c;
        rotations += r && !f;
        scalings += c && !f && !r;
        combos += f && r;
    }
    EXPECT_EQ(names.size(), 23u);
    EXPECT_EQ(flips, 3);
    EXPECT_EQ(rotations, 4);
    EXPECT_EQ(scalings, 4);
    EXPECT_EQ(combos, 12);
    EXPECT_EQ(specs[0], TransformSpec::flip_only(Flip::Horizontal));
    EXPECT_EQ(specs[3], TransformSpec::rotate(5.0));
    EXPECT_EQ(specs[7], TransformSpec::scaling(0.5));
    EXPECT_EQ(specs[22], TransformSpec::flip_rotate(Flip::Both, -10.0));
}

TEST(MakeVariants, CountSizesAndDeterminism) {
    const DepthGrid d = smooth_depth(40, 64);
    const RgbGrid img = gray_image(d);
    const RegionMask m = ellipse_mask(40, 64, 0.9);
    const auto a = make_variants(img, m, 1);
    const auto b = make_variants(img, m, 4);
    ASSERT_EQ(a.size(), 23u);
    ASSERT_EQ(b.size(), 23u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].spec, tta_specs()[i]);
        EXPECT_EQ(a[i].image, b[i].image);
        EXPECT_EQ(a[i].mask, b[i].mask);
        const auto [w, h] = variant_size(a[i].spec, 40, 64);
        EXPECT_EQ(a[i].image.width(), w);
        EXPECT_EQ(a[i].image.height(), h);
        EXPECT_EQ(a[i].mask.width(), w);
    }
    EXPECT_EQ(variant_size(TransformSpec::scaling(1.5), 40, 64), (std::pair<int, int>{60, 96}));
    EXPECT_EQ(variant_size(TransformSpec::scaling(0.8), 41, 65), (std::pair<int, int>{33, 52}));
}

TEST(MakeVariants, HorizontalFlipOfSymmetricImage) {
    RgbGrid img(21, 12);
    for (int y = 0; y < 12; ++y) {
        for (int x = 0; x < 21; ++x) {
            const double v = std::abs(x - 10) / 10.0 * (y + 1) / 12.0;
            img(x, y) = {v, 1.0 - v, 0.5};
        }
    }
    const auto vars = make_variants(img, full_mask(21, 12));
    EXPECT_EQ(vars[0].image, img);
    EXPECT_EQ(vars[0].mask, full_mask(21, 12));
}

TEST(VariantToOriginal, FlipsAreExact) {
    const DepthGrid d = smooth_depth(33, 47);
    const auto vars = predict(make_variants(gray_image(d), full_mask(33, 47)));
    for (int i = 0; i < 3; ++i) {
        const auto back = variant_to_original(vars[i].depth, vars[i].spec, 33, 47);
        EXPECT_EQ(back.image, d) << vars[i].spec.name();
        EXPECT_EQ(back.valid, full_mask(33, 47));
    }
}

TEST(MergePredictions, RoundTripCloseToOriginal) {
    const int w = 80, h = 140;
    const DepthGrid d = smooth_depth(w, h);
    const RegionMask m = ellipse_mask(w, h, 0.9);
    const DepthGrid merged = merge_predictions(d, predict(make_variants(gray_image(d), m)), m);
    double err = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (m[i]) err += std::abs(merged[i] - d[i]);
        else EXPECT_EQ(merged[i], d[i]);
    }
    EXPECT_LT(err / static_cast<double>(m.count()), 0.02);
}

TEST(MergePredictions, ConstantStaysConstant) {
    const RegionMask m = full_mask(30, 50);
    const DepthGrid merged = merge_predictions(DepthGrid(30, 50, 0.375), constant_variants(30, 50, 0.375), m);
    for (double v : merged.values()) EXPECT_EQ(v, 0.375);
}

TEST(MergePredictions, DenominatorCountsValidPixelsOnly) {
    const int w = 30, h = 50;
    const RegionMask m = full_mask(w, h);
    const auto variants = constant_variants(w, h, 1.0);
    const DepthGrid merged = merge_predictions(DepthGrid(w, h, 0.0), variants, m);
    GrayGrid count(w, h, 0.0);
    for (const auto& v : variants) {
        const auto back = variant_to_original(v.depth, v.spec, w, h);
        for (std::size_t i = 0; i < count.size(); ++i) count[i] += back.valid[i];
    }
    EXPECT_EQ(count(15, 25), 23.0);
    EXPECT_LT(count(0, 0), 23.0);
    for (std::size_t i = 0; i < merged.size(); ++i) {
        EXPECT_NEAR(merged[i], count[i] / (count[i] + 1.0), 1e-12);
    }
}

TEST(MergePredictions, RejectsBadSpecLists) {
    const int w = 20, h = 30;
    const RegionMask m = full_mask(w, h);
    const DepthGrid d(w, h, 0.5);
    auto vars = constant_variants(w, h, 0.5);
    auto missing = vars;
    missing.pop_back();
    EXPECT_THROW(merge_predictions(d, missing, m), ArgumentError);
    auto dup = vars;
    dup.back() = dup.front();
    EXPECT_THROW(merge_predictions(d, dup, m), ArgumentError);
    auto bad_size = vars;
    bad_size[0].depth = DepthGrid(w + 1, h, 0.5);
    EXPECT_THROW(merge_predictions(d, bad_size, m), ArgumentError);
    auto extra = vars;
    extra.push_back({DepthGrid(w, h, 0.5), TransformSpec::rotate(15.0)});
    EXPECT_THROW(merge_predictions(d, extra, m), ArgumentError);
    auto shuffled = vars;
    std::swap(shuffled[0], shuffled[10]);
    EXPECT_NO_THROW(merge_predictions(d, shuffled, m));
}
