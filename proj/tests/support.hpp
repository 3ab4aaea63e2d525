#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flapkin/error.hpp"
#include "flapkin/io.hpp"
#include "flapkin/kinematics.hpp"
#include "flapkin/mechanism.hpp"

namespace testing_support {

using namespace flapkin;

inline std::string data_path(const std::string& name) { return std::string(FLAPKIN_DATA_DIR) + "/" + name; }

inline Mechanism two_stage() { return parse_mechanism(read_text_file(data_path("aerobat_two_stage.json"))); }

// Grashof crank-rocker with the crank as the shortest link, lengths in [1, 10].
inline FourBar random_crank_rocker(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> len(1.0, 10.0);
    for (;;) {
        FourBar fb{len(rng), len(rng), len(rng), len(rng), Point2{}};
        const double s = std::min({fb.ground, fb.crank, fb.coupler, fb.rocker});
        if (fb.crank != s) continue;
        try {
            if (grashof_classify(fb) == GrashofClass::CrankRocker) return fb;
        } catch (const Error&) {
        }
    }
}

// Independent rocker-angle oracle: scans |A - B(phi)| - b for sign changes and
// bisects, then picks the root on the requested side of the A -> O4 ray.
inline std::optional<double> rocker_angle_bisection(const FourBar& fb, double theta, Branch branch) {
    const double ax = fb.crank * std::cos(theta), ay = fb.crank * std::sin(theta);
    auto f = [&](double phi) {
        const double bx = fb.ground + fb.rocker * std::cos(phi), by = fb.rocker * std::sin(phi);
        return std::hypot(bx - ax, by - ay) - fb.coupler;
    };
    const int n = 7200;
    const double h = 2.0 * M_PI / n;
    for (int i = 0; i < n; ++i) {
        double lo = -M_PI + i * h, hi = lo + h;
        double flo = f(lo), fhi = f(hi);
        if (flo == 0.0) hi = lo;
        if (flo * fhi > 0.0) continue;
        for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
            const double mid = 0.5 * (lo + hi);
            if ((f(mid) < 0.0) == (flo < 0.0)) {
                lo = mid;
                flo = f(mid);
            } else {
                hi = mid;
            }
        }
        const double phi = 0.5 * (lo + hi);
        const double bx = fb.ground + fb.rocker * std::cos(phi), by = fb.rocker * std::sin(phi);
        const double side = (fb.ground - ax) * (by - ay) - (0.0 - ay) * (bx - ax);
        if ((side >= 0.0) == (branch == Branch::Open)) return phi;
    }
    return std::nullopt;
}

inline double angle_diff(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * M_PI)); }

}  // namespace testing_support
