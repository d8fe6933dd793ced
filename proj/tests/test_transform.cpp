#include <treadkit/errors.hpp>
#include <treadkit/transform.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace treadkit;

namespace {

GrayGrid ramp(int w, int h) {
    GrayGrid g(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) g(x, y) = x + 100.0 * y;
    }
    return g;
}

GrayGrid smooth(int w, int h) {
    GrayGrid g(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) g(x, y) = 0.5 + 0.3 * std::sin(0.15 * x) * std::cos(0.11 * y);
    }
    return g;
}

} // namespace

TEST(TrigDegrees, ExactAtQuadrants) {
    EXPECT_EQ(cos_deg(0), 1.0);
    EXPECT_EQ(cos_deg(90), 0.0);
    EXPECT_EQ(cos_deg(180), -1.0);
    EXPECT_EQ(sin_deg(90), 1.0);
    EXPECT_EQ(sin_deg(-90), -1.0);
    EXPECT_EQ(cos_deg(135), -cos_deg(45));
    EXPECT_EQ(sin_deg(-10), -sin_deg(10));
    EXPECT_EQ(cos_deg(-10), cos_deg(10));
}

TEST(TransformSpec, NamesRoundTrip) {
    const TransformSpec specs[] = {
        TransformSpec::flip_only(Flip::Horizontal), TransformSpec::flip_only(Flip::Both),
        TransformSpec::rotate(-10),                 TransformSpec::scaling(0.5),
        TransformSpec::flip_rotate(Flip::Vertical, 5), TransformSpec{}};
    for (const auto& s : specs) EXPECT_EQ(TransformSpec::parse(s.name()), s) << s.name();
    EXPECT_EQ(TransformSpec::flip_only(Flip::Horizontal).name(), "flip-h");
    EXPECT_EQ(TransformSpec::rotate(5).name(), "rot+5");
    EXPECT_EQ(TransformSpec::scaling(1.8).name(), "scale1.8");
    EXPECT_EQ(TransformSpec::flip_rotate(Flip::Vertical, -10).name(), "flip-v+rot-10");
    EXPECT_THROW(TransformSpec::parse("rot"), ArgumentError);
    EXPECT_THROW(TransformSpec::parse("flip-x"), ArgumentError);
}

TEST(GeomTransform, FlipsArePermutations) {
    const GrayGrid g = ramp(5, 3);
    const auto h = geom_transform(g, TransformSpec::flip_only(Flip::Horizontal));
    const auto v = geom_transform(g, TransformSpec::flip_only(Flip::Vertical));
    const auto b = geom_transform(g, TransformSpec::flip_only(Flip::Both));
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 5; ++x) {
            EXPECT_EQ(h.image(x, y), g(4 - x, y));
            EXPECT_EQ(v.image(x, y), g(x, 2 - y));
            EXPECT_EQ(b.image(x, y), g(4 - x, 2 - y));
        }
    }
    EXPECT_EQ(h.valid.count(), h.valid.size());
}

TEST(GeomTransform, InverseOfFlipRestoresExactly) {
    const GrayGrid g = smooth(12, 9);
    for (Flip f : {Flip::Horizontal, Flip::Vertical, Flip::Both}) {
        const auto t = TransformSpec::flip_only(f);
        const auto fwd = geom_transform(g, t);
        const auto back = inverse_transform(fwd.image, fwd.valid, t);
        EXPECT_EQ(back.image, g);
    }
}

TEST(GeomTransform, RotationIsCounterClockwiseOnScreen) {
    // A bright pixel right of centre moves up (smaller y) under a +90 rotation.
    GrayGrid g(11, 11, 0.0);
    g(8, 5) = 1.0;
    const auto r = geom_transform(g, TransformSpec::rotate(90));
    EXPECT_NEAR(r.image(5, 2), 1.0, 1e-12);
}

TEST(GeomTransform, InverseSpecComposesToIdentity) {
    const GrayGrid g = smooth(40, 30);
    const TransformSpec specs[] = {TransformSpec::rotate(10), TransformSpec::flip_rotate(Flip::Horizontal, 5),
                                   TransformSpec::flip_rotate(Flip::Both, -10), TransformSpec::scaling(1.5)};
    for (const auto& t : specs) {
        const auto fwd = geom_transform(g, t);
        const auto back = inverse_transform(fwd.image, fwd.valid, t);
        double err = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!back.valid[i]) continue;
            err += std::abs(back.image[i] - g[i]);
            ++n;
        }
        ASSERT_GT(n, 0) << t.name();
        EXPECT_LT(err / n, 0.01) << t.name();
    }
}

TEST(GeomTransform, OutOfSupportIsZeroAndInvalid) {
    const GrayGrid g(20, 20, 1.0);
    const auto r = geom_transform(g, TransformSpec::scaling(0.5));
    EXPECT_EQ(r.image(0, 0), 0.0);
    EXPECT_FALSE(r.valid(0, 0));
    EXPECT_TRUE(r.valid(10, 10));
    EXPECT_NEAR(r.image(10, 10), 1.0, 1e-12);
}

TEST(TransformSpec, InverseOfReflectionKeepsAngle) {
    const auto t = TransformSpec::flip_rotate(Flip::Horizontal, 5);
    EXPECT_EQ(t.inverse().rotation_deg, 5.0);
    EXPECT_EQ(TransformSpec::rotate(5).inverse().rotation_deg, -5.0);
    EXPECT_EQ(TransformSpec::flip_rotate(Flip::Both, 5).inverse().rotation_deg, -5.0);
    EXPECT_EQ(TransformSpec::scaling(0.5).inverse().scale, 2.0);
}
