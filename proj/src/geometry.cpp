#include "flapkin/geometry.hpp"

#include "flapkin/error.hpp"

namespace flapkin {

Point2::Point2(double x, double y) : x_(x), y_(y) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
        throw Error(ErrorCode::InvalidArgument, "Point2 components must be finite");
    }
}

Point2 rotate(const Point2& v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

double wrap_angle(double angle) {
    double w = std::remainder(angle, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

double unwrap_near(double angle, double reference) {
    return reference + wrap_angle(angle - reference);
}

double polygon_area(std::span<const Point2> vertices) {
    const std::size_t n = vertices.size();
    if (n < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = vertices[i];
        const Point2& b = vertices[(i + 1) % n];
        twice += a.x() * b.y() - b.x() * a.y();
    }
    return std::abs(twice) / 2.0;
}

}  // namespace flapkin
