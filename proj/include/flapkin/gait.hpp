#pragma once

#include <span>
#include <vector>

#include "flapkin/kinematics.hpp"
#include "flapkin/mechanism.hpp"

namespace flapkin {

struct GaitSample {
    double t = 0.0;          // s
    double crank = 0.0;      // rad
    double plunge = 0.0;     // rad, unwrapped
    double extension = 0.0;  // reach / max reach over the cycle
    double area = 0.0;       // m^2
    Point2 wingtip{};
    Point2 shoulder{};
};

// One wingbeat sampled periodically: t_i = i * period / n, so the sample
// after the last one is the first sample of the next cycle.
struct GaitTrajectory {
    double period = 0.0;
    std::vector<GaitSample> samples;

    double dt() const { return period / static_cast<double>(samples.size()); }
};

struct GaitMetrics {
    double plunge_amplitude = 0.0;
    double extension_min = 0.0;
    double extension_max = 0.0;
    double area_ratio_up_down = 1.0;
    double phase_lag = 0.0;  // extension minimum minus mid-upstroke, wrapped to (-pi, pi]
    double min_transmission_angle = 0.0;
    double upstroke_fraction = 0.0;
    double retraction_duration = 0.0;  // s, extension decreasing
};

double wing_area(const Mechanism& m, const Configuration& c);

// Angle of the shoulder->wingtip ray; DEGENERATE when the two coincide.
double plunge_angle(const Mechanism& m, const Configuration& c);

// |shoulder -> wingtip| in meters.
double reach(const Mechanism& m, const Configuration& c);

// Reaches normalised by their maximum; ZERO_REACH when that maximum is 0.
std::vector<double> extension_ratios(std::span<const double> reaches);

struct GaitEvaluation {
    GaitTrajectory gait;
    std::vector<Configuration> configurations;
    std::vector<double> transmission;  // per sample, min over four-bar loops (pi/2 when none)
};

// Sweeps one crank revolution at constant rate 2*pi/period. samples >= 8.
// Propagates sweep failures as Error with the failing index in the message.
GaitEvaluation evaluate_gait(const Mechanism& m, double period, std::size_t samples, const SolveSettings& s = {});

// Builds the gait from an already solved sweep, one sample per configuration
// at t_i = i * period / n.
GaitEvaluation gait_from_configurations(const Mechanism& m, double period, std::vector<Configuration> configs);

GaitTrajectory generate_gait(const Mechanism& m, double period, std::size_t samples, const SolveSettings& s = {});

// +1 upstroke (plunge increasing), -1 downstroke, after a 3-sample circular
// majority filter on the sign of the central difference.
std::vector<int> stroke_directions(const GaitTrajectory& gt);

GaitMetrics gait_metrics(const GaitTrajectory& gt, std::span<const double> transmission);

}  // namespace flapkin
