#include <treadkit/alignment.hpp>
#include <treadkit/errors.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace treadkit;

namespace {

Correspondences random_correspondences(std::mt19937_64& rng, int n, double jitter) {
    std::uniform_real_distribution<double> pos(0.0, 100.0);
    std::uniform_real_distribution<double> noise(-jitter, jitter);
    Correspondences c;
    for (int i = 0; i < n; ++i) {
        const Point2 s{pos(rng), pos(rng)};
        c.push_back({s, {1.02 * s.x + 0.01 * s.y + 2.0 + noise(rng), -0.015 * s.x + 0.98 * s.y - 1.0 + noise(rng)}});
    }
    return c;
}

double residual_ss(const TpsWarp& w, const Correspondences& c) {
    double ss = 0.0;
    for (const auto& p : c) {
        const Point2 f = w(p.src);
        ss += (f.x - p.dst.x) * (f.x - p.dst.x) + (f.y - p.dst.y) * (f.y - p.dst.y);
    }
    return ss;
}

} // namespace

TEST(TpsKernel, Values) {
    EXPECT_EQ(tps_kernel(0.0), 0.0);
    EXPECT_DOUBLE_EQ(tps_kernel(1.0), 0.0);
    EXPECT_DOUBLE_EQ(tps_kernel(4.0), 4.0 * std::log(4.0));
}

TEST(FitTps, IdentityGivesZeroDisplacement) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> pos(0.0, 100.0);
    Correspondences c;
    for (int i = 0; i < 12; ++i) {
        const Point2 p{pos(rng), pos(rng)};
        c.push_back({p, p});
    }
    for (double lambda : {0.0, 0.5, 10.0}) {
        const TpsWarp w = fit_tps(c, lambda);
        double worst = 0.0;
        for (int y = 0; y < 100; ++y) {
            for (int x = 0; x < 100; ++x) {
                const Point2 d = w.displacement({double(x), double(y)});
                worst = std::max({worst, std::abs(d.x), std::abs(d.y)});
            }
        }
        EXPECT_LE(worst, 1e-9);
        EXPECT_LE(w.side_condition_residual(), 1e-8);
    }
}

TEST(FitTps, TranslationIsPureAffine) {
    Correspondences c;
    for (const Point2 p : {Point2{0, 0}, Point2{10, 0}, Point2{0, 10}, Point2{10, 12}}) {
        c.push_back({p, {p.x + 3.0, p.y - 2.0}});
    }
    const TpsWarp w = fit_tps(c, 0.5);
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_LE(std::abs(w.wx[i]), 1e-8);
        EXPECT_LE(std::abs(w.wy[i]), 1e-8);
    }
    EXPECT_NEAR(w.affine_x()[0], 3.0, 1e-9);
    EXPECT_NEAR(w.affine_x()[1], 1.0, 1e-9);
    EXPECT_NEAR(w.affine_x()[2], 0.0, 1e-9);
    EXPECT_NEAR(w.affine_y()[0], -2.0, 1e-9);
    EXPECT_NEAR(w.affine_y()[2], 1.0, 1e-9);
    const Point2 q = w({55.0, -7.0});
    EXPECT_NEAR(q.x, 58.0, 1e-9);
    EXPECT_NEAR(q.y, -9.0, 1e-9);
}

TEST(FitTps, NearZeroLambdaInterpolates) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 10; ++t) {
        const Correspondences c = random_correspondences(rng, 6 + t, 3.0);
        const TpsWarp w = fit_tps(c, 1e-9);
        for (const auto& p : c) {
            const Point2 f = w(p.src);
            EXPECT_NEAR(f.x, p.dst.x, 1e-6);
            EXPECT_NEAR(f.y, p.dst.y, 1e-6);
        }
        EXPECT_LE(w.side_condition_residual(), 1e-8);
    }
}

TEST(FitTps, SideConditionsOnEveryFit) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const Correspondences c = random_correspondences(rng, 3 + t % 20, 5.0);
        const TpsWarp w = fit_tps(c, (t % 4) * 0.5);
        EXPECT_LE(w.side_condition_residual(), 1e-8) << "trial " << t;
        EXPECT_GT(w.condition, 0.0);
    }
}

TEST(FitTps, ResidualShrinksAsLambdaDecreases) {
    std::mt19937_64 rng(4);
    const Correspondences c = random_correspondences(rng, 15, 4.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {100.0, 10.0, 2.0, 0.5, 0.1, 0.01, 1e-4}) {
        const double ss = residual_ss(fit_tps(c, lambda), c);
        EXPECT_LE(ss, prev + 1e-9) << "lambda " << lambda;
        prev = ss;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(FitTps, Errors) {
    Correspondences two = {{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}};
    EXPECT_THROW(fit_tps(two), ArgumentError);
    Correspondences line = {{{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}}, {{5, 5}, {5, 6}}};
    EXPECT_THROW(fit_tps(line), NumericalError);
    Correspondences ok = {{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    EXPECT_THROW(fit_tps(ok, -1.0), ArgumentError);
    ok[1].dst.x = std::nan("");
    EXPECT_THROW(fit_tps(ok), ArgumentError);
}

TEST(WarpImage, IdentityAndConstant) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GrayGrid img(30, 20);
    for (double& v : img.values()) v = u(rng);
    Correspondences c = {{{0, 0}, {0, 0}}, {{29, 0}, {29, 0}}, {{0, 19}, {0, 19}}, {{29, 19}, {29, 19}}};
    const TpsWarp id = fit_tps(c, 0.5);
    EXPECT_EQ(warp_image(img, id, 30, 20), img);

    // Shrinking map: every output pixel samples inside the constant image.
    Correspondences s;
    for (const Point2 p : {Point2{0, 0}, Point2{40, 0}, Point2{0, 40}, Point2{40, 40}, Point2{20, 25}}) {
        s.push_back({p, {5.0 + 0.5 * p.x, 3.0 + 0.4 * p.y}});
    }
    const GrayGrid flat = warp_image(GrayGrid(30, 20, 0.7), fit_tps(s, 0.5), 40, 40);
    for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 40; ++x) EXPECT_NEAR(flat(x, y), 0.7, 1e-12);
    }
}

TEST(WarpImage, OutsideSourceIsZero) {
    Correspondences c = {{{0, 0}, {50, 0}}, {{10, 0}, {60, 0}}, {{0, 10}, {50, 10}}};
    const GrayGrid out = warp_image(GrayGrid(10, 10, 1.0), fit_tps(c, 0.0), 10, 10);
    for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(AlignPrint, TranslationMovesImpulse) {
    GrayGrid print(20, 20, 0.0);
    print(7, 9) = 1.0;
    Correspondences c;
    for (const Point2 p : {Point2{0, 0}, Point2{19, 0}, Point2{0, 19}, Point2{19, 19}}) {
        c.push_back({p, {p.x + 3.0, p.y}});
    }
    const GrayGrid out = align_print(print, c, 0.5, 20, 20);
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 20; ++x) EXPECT_NEAR(out(x, y), (x == 10 && y == 9) ? 1.0 : 0.0, 1e-9);
    }
}

TEST(AverageAndThreshold, Examples) {
    PrintMask expect(3, 1);
    expect[0] = 1;
    GrayGrid a(3, 1, 0.0);
    a[0] = 1.0;
    EXPECT_EQ(average_and_threshold({a, a}), expect);

    GrayGrid b(3, 1, 0.0);
    b[1] = 1.0;
    PrintMask two(3, 1);
    two[0] = two[1] = 1;
    EXPECT_EQ(average_and_threshold({a, b}), two);  // mean 0.5 is kept

    const GrayGrid z(3, 1, 0.0);
    EXPECT_EQ(average_and_threshold({a, z, z}), PrintMask(3, 1));  // 1/3 is dropped

    EXPECT_THROW(average_and_threshold({a}), ArgumentError);
    EXPECT_THROW(average_and_threshold({a, GrayGrid(2, 1)}), ArgumentError);
}

TEST(AverageAndThreshold, PermutationInvariant) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<GrayGrid> prints(3, GrayGrid(15, 15));
        for (auto& p : prints) {
            for (double& v : p.values()) v = std::round(u(rng) * 10.0) / 10.0;
        }
        const PrintMask ref = average_and_threshold(prints);
        std::vector<int> order = {0, 1, 2};
        while (std::next_permutation(order.begin(), order.end())) {
            EXPECT_EQ(average_and_threshold({prints[order[0]], prints[order[1]], prints[order[2]]}), ref);
        }
    }
}
