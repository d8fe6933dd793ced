#include "oracles.hpp"

#include <treadkit/errors.hpp>
#include <treadkit/imaging.hpp>
#include <treadkit/synth.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace treadkit;

namespace {

const Rgb kOrange{1.0, 0.5, 0.0};
const Rgb kWhite{1.0, 1.0, 1.0};

RgbGrid blocks_print(int w, int h, int block, int gap) {
    RgbGrid img(w, h, kWhite);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if ((x % (block + gap)) < block && (y % (block + gap)) < block) img(x, y) = kOrange;
        }
    }
    return img;
}

GrayGrid sigmoid_of(const GrayGrid& blurred, double k, double x0) {
    GrayGrid out(blurred.width(), blurred.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-k * (blurred[i] - x0)));
    return out;
}

bool in_unit(const GrayGrid& g) {
    return std::all_of(g.values().begin(), g.values().end(),
                       [](double v) { return v >= 0.0 && v <= 1.0; });
}

} // namespace

TEST(MaskFromPrint, FullyOrangeGivesFullMask) {
    EXPECT_EQ(mask_from_print(RgbGrid(12, 9, kOrange)), full_mask(12, 9));
}

TEST(MaskFromPrint, WhiteImageIsDataError) {
    EXPECT_THROW(mask_from_print(RgbGrid(12, 9, kWhite)), DataError);
}

TEST(MaskFromPrint, TwoBlobsBridgedLikeOracle) {
    RgbGrid img(60, 30, kWhite);
    RegionMask fg(60, 30);
    for (int y = 8; y < 22; ++y) {
        for (int x = 5; x < 25; ++x) { img(x, y) = kOrange; fg(x, y) = 1; }
        for (int x = 33; x < 55; ++x) { img(x, y) = kOrange; fg(x, y) = 1; }
    }
    const RegionMask m = mask_from_print(img);
    EXPECT_EQ(m, oracle::brute_closing_filled(fg, 15.0));
    int count = 0;
    {
        Grid<int> labels(60, 30, -1);
        for (std::size_t i = 0; i < m.size(); ++i) labels[i] = m[i] ? 0 : -1;
        std::vector<std::pair<int, int>> stack;
        for (int y = 0; y < 30; ++y) {
            for (int x = 0; x < 60; ++x) {
                if (labels(x, y) != 0) continue;
                ++count;
                stack.push_back({x, y});
                labels(x, y) = count;
                while (!stack.empty()) {
                    auto [cx, cy] = stack.back();
                    stack.pop_back();
                    const int nx[4] = {cx - 1, cx + 1, cx, cx};
                    const int ny[4] = {cy, cy, cy - 1, cy + 1};
                    for (int k = 0; k < 4; ++k) {
                        if (labels.contains(nx[k], ny[k]) && labels(nx[k], ny[k]) == 0) {
                            labels(nx[k], ny[k]) = count;
                            stack.push_back({nx[k], ny[k]});
                        }
                    }
                }
            }
        }
    }
    EXPECT_EQ(count, 1);
    EXPECT_TRUE(m(29, 15));  // inside the gap
}

TEST(ConcaveHull, MatchesBruteForceClosing) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 60; ++t) {
        const int w = 8 + static_cast<int>(rng() % 17);
        const int h = 8 + static_cast<int>(rng() % 17);
        const RegionMask fg = oracle::random_mask(rng, w, h, 0.15 + 0.1 * (t % 4));
        const double r = 1.0 + static_cast<double>(t % 5);
        EXPECT_EQ(concave_hull(fg, r), oracle::brute_closing_filled(fg, r)) << "trial " << t;
    }
}

TEST(FillHoles, FillsEnclosedOnly) {
    RegionMask ring(7, 7);
    for (int i = 1; i < 6; ++i) ring(i, 1) = ring(i, 5) = ring(1, i) = ring(5, i) = 1;
    const RegionMask f = fill_holes(ring);
    EXPECT_TRUE(f(3, 3));
    EXPECT_FALSE(f(0, 0));
    EXPECT_EQ(f.count(), 25u);
}

TEST(CleanPrint, ConstantHalfStaysHalf) {
    const GrayGrid out = clean_print(GrayGrid(9, 9, 0.5), full_mask(9, 9));
    for (double v : out.values()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(CleanPrint, BackgroundIsNonContact) {
    RegionMask m(5, 5);
    m(2, 2) = 1;
    const GrayGrid out = clean_print(GrayGrid(5, 5, 0.0), m);
    EXPECT_EQ(out(0, 0), 1.0);
    EXPECT_LT(out(2, 2), 0.5);
}

TEST(CleanPrint, HighGainApproachesHardThreshold) {
    std::mt19937_64 rng(3);
    const RegionMask bits = oracle::random_mask(rng, 5, 5, 0.5);
    GrayGrid g(30, 30);  // 6x6 px blocks
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 30; ++x) g(x, y) = bits(x / 6, y / 6);
    }
    SynthDepthConfig cfg;
    cfg.sigmoid_gain = 50.0;
    const GrayGrid out = clean_print(g, full_mask(30, 30), cfg);
    const GrayGrid blurred = oracle::dense_gaussian_blur(g, cfg.blur_sigma);
    int checked = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(blurred[i] - 0.5) < 0.15) continue;  // sigmoid(50*0.15) is 1 - 5.5e-4
        EXPECT_NEAR(out[i], blurred[i] > 0.5 ? 1.0 : 0.0, 1e-3);
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(CleanPrint, IsolatedNoiseIsSuppressed) {
    GrayGrid g(21, 21, 0.0);
    g(10, 10) = 1.0;
    const GrayGrid out = clean_print(g, full_mask(21, 21));
    const GrayGrid expect = sigmoid_of(oracle::dense_gaussian_blur(g, 2.0), 10.0, 0.5);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], expect[i], 1e-12);
    EXPECT_LT(*std::max_element(out.values().begin(), out.values().end()), 0.1);
}

TEST(AddTexture, IdentityCases) {
    std::mt19937_64 rng(4);
    const GrayGrid d = oracle::random_depth(rng, 16, 12);
    const GrayGrid pg = oracle::random_depth(rng, 16, 12);
    EXPECT_EQ(add_texture(d, pg, 0.0), d);
    const GrayGrid flat(16, 12, 0.3);
    const GrayGrid out = add_texture(d, flat, 0.2);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(out[i], d[i], 1e-14);
}

TEST(AddTexture, CheckerboardMatchesDirectHighPass) {
    GrayGrid pg(20, 20);
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 20; ++x) pg(x, y) = ((x + y) % 2) ? 1.0 : 0.0;
    }
    const GrayGrid d(20, 20, 0.5);
    const GrayGrid out = add_texture(d, pg, 0.15, 2.0);
    const GrayGrid low = oracle::dense_gaussian_blur(pg, 2.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_NEAR(out[i], std::clamp(0.5 + 0.15 * (pg[i] - low[i]), 0.0, 1.0), 1e-12);
    }
    EXPECT_NEAR(std::abs(out(10, 10) - 0.5), 0.15 * 0.5, 1e-3);  // high-pass of a checkerboard is about +-0.5
}

TEST(AddBevels, WidthZeroIsIdentity) {
    std::mt19937_64 rng(6);
    const GrayGrid d = oracle::random_depth(rng, 10, 10);
    EXPECT_EQ(add_bevels(d, 0), d);
}

TEST(AddBevels, StripeGetsLinearRamp) {
    GrayGrid d(20, 1, 1.0);
    for (int x = 5; x < 15; ++x) d(x, 0) = 0.0;
    const GrayGrid out = add_bevels(d, 3);
    const double expect[20] = {1, 1, 1, 1, 1, 0.75, 0.5, 0.25, 0, 0,
                               0, 0, 0.25, 0.5, 0.75, 1, 1, 1, 1, 1};
    for (int x = 0; x < 20; ++x) EXPECT_DOUBLE_EQ(out(x, 0), expect[x]) << x;
}

TEST(AddBevels, NeverLowersDepth) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        const GrayGrid d = oracle::random_depth(rng, 24, 18);
        const GrayGrid out = add_bevels(d, 1 + t % 6);
        for (std::size_t i = 0; i < d.size(); ++i) EXPECT_GE(out[i], d[i]);
        EXPECT_TRUE(in_unit(out));
    }
}

TEST(AddLocalCurvature, IdentityCases) {
    std::mt19937_64 rng(8);
    const GrayGrid d = oracle::random_depth(rng, 12, 12);
    EXPECT_EQ(add_local_curvature(d, 0.0), d);
    const GrayGrid contact(12, 12, 0.1);
    EXPECT_EQ(add_local_curvature(contact, 0.2), contact);
}

TEST(AddLocalCurvature, PeaksAtRegionCentre) {
    GrayGrid d(41, 41, 0.0);
    for (int y = 0; y < 41; ++y) {
        for (int x = 0; x < 41; ++x) {
            if ((x - 20) * (x - 20) + (y - 20) * (y - 20) <= 100) d(x, y) = 0.6;
        }
    }
    const GrayGrid out = add_local_curvature(d, 0.2, 5.0);
    double best = -1.0;
    int bx = -1, by = -1;
    for (int y = 0; y < 41; ++y) {
        for (int x = 0; x < 41; ++x) {
            const double added = out(x, y) - d(x, y);
            if (added > best) { best = added; bx = x; by = y; }
        }
    }
    EXPECT_EQ(bx, 20);
    EXPECT_EQ(by, 20);
    EXPECT_NEAR(best, 0.2, 1e-12);
}

TEST(AddGlobalCurvature, FormulaAndSaturation) {
    RegionMask inner(30, 3);
    for (int x = 0; x < 30; ++x) inner(x, 1) = 1;
    const GrayGrid d(30, 3, 0.0);
    EXPECT_EQ(add_global_curvature(d, inner, 0.0, 10.0), d);
    const GrayGrid out = add_global_curvature(d, inner, 0.3, 10.0);
    EXPECT_DOUBLE_EQ(out(0, 0), 0.3);  // outside the mask: EDT 0 gains amp
    EXPECT_DOUBLE_EQ(out(15, 1), 0.3 * 0.9 * 0.9);  // one pixel from the boundary
    RegionMask wide(50, 50, 1);
    for (int i = 0; i < 50; ++i) wide(i, 0) = wide(0, i) = wide(i, 49) = wide(49, i) = 0;
    const GrayGrid out2 = add_global_curvature(GrayGrid(50, 50, 0.2), wide, 0.3, 10.0);
    EXPECT_EQ(out2(25, 25), 0.2);  // EDT >= width gains nothing
}

TEST(SynthVariants, CountContract) {
    const RgbGrid print = blocks_print(48, 48, 8, 4);
    EXPECT_THROW(synth_variants(print, 9, 1), ArgumentError);
    EXPECT_THROW(synth_variants(print, 16, 1), ArgumentError);
    EXPECT_EQ(synth_variants(print, 10, 1).size(), 10u);
    EXPECT_EQ(synth_variants(print, 15, 1).size(), 15u);
}

TEST(SynthVariants, DeterministicAndThreadIndependent) {
    const RgbGrid print = blocks_print(40, 56, 7, 5);
    const auto a = synth_variants(print, 10, 42, {}, {}, 1);
    const auto b = synth_variants(print, 10, 42, {}, {}, 4);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].depth, b[i].depth);
        EXPECT_EQ(a[i].mask, b[i].mask);
    }
    const auto c = synth_variants(print, 10, 43);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff = any_diff || !(a[i].depth == c[i].depth);
    EXPECT_TRUE(any_diff);
}

TEST(SynthVariants, PairwiseDistinctAndInRange) {
    const RgbGrid print = blocks_print(48, 48, 8, 4);
    const auto v = synth_variants(print, 12, 7);
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_TRUE(in_unit(v[i].depth));
        for (std::size_t j = i + 1; j < v.size(); ++j) EXPECT_FALSE(v[i].depth == v[j].depth);
        const SynthDepthConfig& c = v[i].config;
        const SynthRanges r;
        EXPECT_GE(c.blur_sigma, r.blur_sigma_min);
        EXPECT_LE(c.blur_sigma, r.blur_sigma_max);
        EXPECT_GE(c.texture_amp, r.texture_amp_min);
        EXPECT_LE(c.texture_amp, r.texture_amp_max);
        EXPECT_TRUE(c.bevel_width == 0 || (c.bevel_width >= r.bevel_min && c.bevel_width <= r.bevel_max));
        EXPECT_GE(c.global_curv_width, r.global_curv_width_min);
        EXPECT_LE(c.global_curv_width, r.global_curv_width_max);
    }
}

TEST(SynthesizeDepth, ContactStaysBelowNonContact) {
    // Wide blocks and gaps so interiors sit well away from every ramp.
    const int w = 200, h = 200;
    const RgbGrid print = blocks_print(w, h, 24, 24);
    const RegionMask mask = full_mask(w, h);
    const SynthVariant v = synthesize_depth(print, mask, SynthDepthConfig{});
    const GrayGrid edge = euclidean_distance_transform(RegionMask([&] {
        RegionMask inner(w, h, 1);
        for (int i = 0; i < w; ++i) inner(i, 0) = inner(i, h - 1) = 0;
        for (int i = 0; i < h; ++i) inner(0, i) = inner(w - 1, i) = 0;
        return inner;
    }()));
    double contact_max = 0.0, non_contact_min = 1.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (edge(x, y) < 45.0) continue;
            const int px = x % 48, py = y % 48;
            const bool deep_contact = px >= 6 && px < 18 && py >= 6 && py < 18;
            const bool deep_gap = (px >= 30 && px < 42) || (py >= 30 && py < 42);
            if (deep_contact) contact_max = std::max(contact_max, v.depth(x, y));
            if (deep_gap) non_contact_min = std::min(non_contact_min, v.depth(x, y));
        }
    }
    EXPECT_LT(contact_max, non_contact_min);
}

TEST(SynthDepthConfig, RejectsNegativeValues) {
    SynthDepthConfig c;
    c.texture_amp = -0.1;
    EXPECT_THROW(c.validate(), ArgumentError);
    c = {};
    c.bevel_width = -1;
    EXPECT_THROW(c.validate(), ArgumentError);
}
