#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace flapkin {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Planar point or vector in meters. Construction rejects NaN/Inf.
class Point2 {
public:
    constexpr Point2() = default;
    Point2(double x, double y);

    double x() const noexcept { return x_; }
    double y() const noexcept { return y_; }

    Point2 operator+(const Point2& o) const { return {x_ + o.x_, y_ + o.y_}; }
    Point2 operator-(const Point2& o) const { return {x_ - o.x_, y_ - o.y_}; }
    Point2 operator-() const { return {-x_, -y_}; }
    Point2 operator*(double s) const { return {x_ * s, y_ * s}; }
    Point2 operator/(double s) const { return {x_ / s, y_ / s}; }
    Point2& operator+=(const Point2& o) { return *this = *this + o; }
    Point2& operator-=(const Point2& o) { return *this = *this - o; }

    bool operator==(const Point2&) const = default;

    double norm() const { return std::hypot(x_, y_); }
    double squared_norm() const { return x_ * x_ + y_ * y_; }
    double angle() const { return std::atan2(y_, x_); }

private:
    double x_ = 0.0;
    double y_ = 0.0;
};

inline Point2 operator*(double s, const Point2& p) { return p * s; }

inline double dot(const Point2& a, const Point2& b) { return a.x() * b.x() + a.y() * b.y(); }
inline double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }
inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x() - b.x(), a.y() - b.y()); }

// z-hat cross v: rotates v by +90 degrees.
inline Point2 perp(const Point2& v) { return {-v.y(), v.x()}; }

Point2 rotate(const Point2& v, double angle);
inline Point2 polar(double radius, double angle) { return {radius * std::cos(angle), radius * std::sin(angle)}; }

// Rigid planar transform: world = origin + R(angle) * local.
struct Pose {
    Point2 origin{};
    double angle = 0.0;

    Point2 apply(const Point2& local) const { return origin + rotate(local, angle); }
    bool operator==(const Pose&) const = default;
};

// Wraps to (-pi, pi].
double wrap_angle(double angle);

// Returns the representative of `angle` (mod 2pi) closest to `reference`.
double unwrap_near(double angle, double reference);

// Absolute shoelace area of a closed polygon.
double polygon_area(std::span<const Point2> vertices);

}  // namespace flapkin
