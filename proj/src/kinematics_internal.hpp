#pragma once

#include <span>
#include <vector>

#include "chain.hpp"
#include "flapkin/kinematics.hpp"

namespace flapkin::detail {

struct NewtonOutcome {
    bool converged = false;
    ErrorCode code = ErrorCode::NoConvergence;
    bool singular_at_start = false;
    bool stalled = false;  // damping exhausted without a decrease
    int iterations = 0;
    double residual_norm = 0.0;
    std::vector<double> coords;
};

// Damped Newton on the loop residual over the free coordinates; coords[0]
// (the crank) is held fixed.
NewtonOutcome newton_close(const ChainModel& chain, std::vector<double> coords, const SolveSettings& s);

// Throws the matching Error on failure.
std::vector<double> assemble_coords(const ChainModel& chain, double theta, std::vector<double> coords,
                                    const SolveSettings& s, int* iterations);

Configuration make_configuration(const ChainModel& chain, double theta, const std::vector<double>& coords);

// Unsigned angle between u and v folded into [0, pi/2].
double folded_angle(const Point2& u, const Point2& v);

std::vector<double> loop_transmission_angles(const Mechanism& m, const Configuration& c,
                                             std::span<const FourBarLoop> loops);

}  // namespace flapkin::detail
