#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flapkin/kinematics.hpp"
#include "flapkin/mechanism.hpp"

namespace flapkin {

// Small-length flexural pivot: k = E * w * t^3 / (12 * l).
double hinge_stiffness(const HingeGeometry& hg);

// Thin-hinge regime holds when thickness <= width.
bool thin_hinge_regime(const HingeGeometry& hg);

struct PointForce {
    MarkerRef at;
    Point2 force;  // newtons, world frame
};

struct JointMoment {
    std::string joint;
    double moment = 0.0;  // N*m, acting to increase the joint angle (b minus a)
};

struct LoadCase {
    std::vector<PointForce> forces;
    std::vector<JointMoment> moments;
};

// Sum of 1/2 k (angle - rest)^2 over compliant hinges.
double elastic_energy(const Mechanism& m, const Configuration& c);

// elastic_energy minus the work of the load case.
double total_potential(const Mechanism& m, const Configuration& c, const LoadCase& load);

struct EquilibriumResult {
    Configuration configuration;
    double projected_gradient_norm = 0.0;  // of the total potential, on the closure tangent space
    double closure_residual = 0.0;
    int iterations = 0;
    std::vector<std::string> warnings;  // LARGE_DEFLECTION
};

// Quasi-static equilibrium at a fixed crank angle: stationary total potential
// subject to loop closure. Penalty continuation (x10 per stage, 5 stages)
// followed by a projected Newton polish on the KKT system.
EquilibriumResult solve_equilibrium(const Mechanism& m, double theta, const LoadCase& load,
                                    const SolveSettings& s = {},
                                    const std::optional<Configuration>& guess = std::nullopt);

}  // namespace flapkin
