#pragma once

#include <cmath>
#include <utility>

namespace gmsolve {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

using Point = Vec2;

/// 2x2 real symmetric matrix [[xx, xy], [xy, yy]].
struct SymMat2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    static constexpr SymMat2 identity() { return {1.0, 0.0, 1.0}; }
    static constexpr SymMat2 diag(double a, double b) { return {a, 0.0, b}; }

    constexpr SymMat2 operator+(const SymMat2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
    constexpr SymMat2 operator-(const SymMat2& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
    constexpr SymMat2 operator-() const { return {-xx, -xy, -yy}; }
    constexpr SymMat2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }

    constexpr double trace() const { return xx + yy; }

    /// Frobenius inner product A:B = tr(AB).
    constexpr double contract(const SymMat2& o) const { return xx * o.xx + 2.0 * xy * o.xy + yy * o.yy; }

    double frobenius() const { return std::sqrt(xx * xx + 2.0 * xy * xy + yy * yy); }

    /// Eigenvalues in ascending order.
    std::pair<double, double> eigenvalues() const {
        const double mean = 0.5 * (xx + yy);
        const double radius = std::hypot(0.5 * (xx - yy), xy);
        return {mean - radius, mean + radius};
    }

    constexpr double quadratic_form(Vec2 v) const { return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y; }

    constexpr Vec2 apply(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace gmsolve
