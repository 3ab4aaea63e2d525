#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "flapkin/error.hpp"
#include "flapkin/geometry.hpp"

using namespace flapkin;

TEST(Point2, RejectsNonFinite) {
    EXPECT_THROW(Point2(std::nan(""), 0.0), Error);
    EXPECT_THROW(Point2(0.0, std::numeric_limits<double>::infinity()), Error);
    EXPECT_NO_THROW(Point2(1.0, -2.0));
}

TEST(Geometry, RotateQuarterTurn) {
    const Point2 p = rotate({1.0, 0.0}, kPi / 2.0);
    EXPECT_NEAR(p.x(), 0.0, 1e-15);
    EXPECT_NEAR(p.y(), 1.0, 1e-15);
}

TEST(Geometry, WrapAngleRange) {
    EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
    EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
    EXPECT_NEAR(wrap_angle(3.0 * kPi / 2.0), -kPi / 2.0, 1e-15);
    EXPECT_NEAR(unwrap_near(0.1, 6.3), 0.1 + kTwoPi, 1e-15);
}

TEST(PolygonArea, Examples) {
    const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    EXPECT_DOUBLE_EQ(polygon_area(square), 1.0);
    const std::vector<Point2> tri{{0, 0}, {1, 0}, {0, 1}};
    EXPECT_DOUBLE_EQ(polygon_area(tri), 0.5);
    const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}};
    EXPECT_DOUBLE_EQ(polygon_area(line), 0.0);
    std::vector<Point2> cw(square.rbegin(), square.rend());
    EXPECT_DOUBLE_EQ(polygon_area(cw), 1.0);
}

TEST(PolygonArea, MatchesTrapezoidDecomposition) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        // Star-shaped polygon around the origin, vertices by increasing angle.
        std::vector<Point2> poly;
        const int n = 3 + trial % 9;
        for (int i = 0; i < n; ++i) {
            const double a = kTwoPi * i / n;
            const double r = 1.0 + std::abs(u(rng));
            poly.push_back(polar(r, a) + Point2{u(rng), u(rng)} * 0.0);
        }
        double trap = 0.0;
        for (int i = 0; i < n; ++i) {
            const Point2& p = poly[i];
            const Point2& q = poly[(i + 1) % n];
            trap += (q.x() - p.x()) * (q.y() + p.y()) / 2.0;
        }
        EXPECT_NEAR(polygon_area(poly), std::abs(trap), 1e-12 * std::abs(trap));
    }
}
