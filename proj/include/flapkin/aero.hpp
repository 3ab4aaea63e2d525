#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flapkin/gait.hpp"

namespace flapkin {

struct AeroConfig {
    double density = 1.225;   // kg/m^3
    double freestream = 0.0;  // m/s, along the forward axis (out of the mechanism plane)
    std::size_t strips = 32;
    // Chord shape sampled uniformly root to tip. Scaled per sample so the
    // strips integrate to the gait's wing area. Empty means uniform.
    std::vector<double> chord_profile;
    double lift_slope = kTwoPi;  // per rad
    double cl_max = 1.2;

    void check() const;
};

struct StripState {
    double radius = 0.0;  // distance from the shoulder, m
    double width = 0.0;   // dr, m
    double chord = 0.0;   // m
    Point2 position{};
    Point2 velocity{};            // in-plane strip velocity, m/s
    Point2 normal{};              // unit stroke normal (z cross span direction)
    double normal_velocity = 0.0;  // velocity . normal
    double alpha = 0.0;            // atan2(-normal_velocity, freestream)
    double relative_speed = 0.0;   // |(freestream, normal_velocity)|
};

// Outer index: sample, inner: strip (root to tip). Velocities are circular
// central differences over the periodic gait.
std::vector<std::vector<StripState>> strip_kinematics(const GaitTrajectory& gt, const AeroConfig& cfg);

double lift_coefficient(double alpha, const AeroConfig& cfg);

struct AeroReport {
    double period = 0.0;
    std::vector<double> t;
    std::vector<double> vertical;    // N, world +y
    std::vector<double> horizontal;  // N, forward thrust
    double vertical_impulse = 0.0;   // N*s per cycle
    double horizontal_impulse = 0.0;
};

// Periodic trapezoid rule: dt * sum(values).
double periodic_trapezoid(std::span<const double> values, double dt);

AeroReport quasi_steady_forces(const GaitTrajectory& gt, const AeroConfig& cfg);

struct RankedGait {
    std::size_t index = 0;  // position in the input list
    double vertical_impulse = 0.0;
    double horizontal_impulse = 0.0;
    double mean_abs_horizontal = 0.0;  // mean |F_h| * dt over samples
};

// Descending net vertical impulse; ties by lower mean |horizontal|, then input order.
// PERIOD_MISMATCH unless all periods agree.
std::vector<RankedGait> compare_gaits(std::span<const GaitTrajectory> gaits, const AeroConfig& cfg);

// Rigid wing of fixed span flapping as plunge(t) = amplitude * sin(2 pi t / T)
// with area(t) = area * (1 - modulation * cos(2 pi t / T)). Positive
// modulation enlarges the downstroke, negative the upstroke.
GaitTrajectory sinusoidal_plunge_gait(double period, std::size_t samples, double amplitude, double span, double area,
                                      double modulation);

}  // namespace flapkin
