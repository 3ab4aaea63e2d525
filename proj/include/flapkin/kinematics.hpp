#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flapkin/error.hpp"
#include "flapkin/mechanism.hpp"

namespace flapkin {

// Assembly circuit of a closed loop. For a four-bar, Open places the
// coupler-rocker pin to the left of the ray from crank pin to rocker pivot.
enum class Branch { Open, Crossed };

const char* to_string(Branch b);

// Pose of every link at one crank angle. `poses` is parallel to
// Mechanism::links; `branches` has one entry per loop-closing joint.
struct Configuration {
    double crank_angle = 0.0;
    std::vector<Pose> poses;
    std::vector<Branch> branches;
};

struct SolveSettings {
    double tolerance = 1e-10;  // meters
    int max_iterations = 50;
    // Optional per-loop circuit hint, consulted only at change points.
    std::vector<Branch> branch_hint;

    void check() const;
};

// Poses as drawn (Link::reference_pose), crank angle set to `theta`.
Configuration reference_configuration(const Mechanism& m, double theta = 0.0);

Point2 marker_world(const Mechanism& m, const Configuration& c, std::string_view link, std::string_view marker);
Point2 marker_world(const Mechanism& m, const Configuration& c, const MarkerRef& ref);

// --- Single four-bar, closed form ------------------------------------------

// Standard four-bar as a Mechanism: links ground, crank, coupler, rocker.
// Ground pivot of the crank at the origin, rocker pivot at (ground, 0).
// Reference poses are the closed-form solution at theta = 0 on `branch`.
Mechanism make_fourbar_mechanism(const FourBar& fb, Branch branch = Branch::Open);

struct FourBarAngles {
    double coupler = 0.0;
    double rocker = 0.0;
};

bool fourbar_assemblable(const FourBar& fb, double theta);

// Throws NotAssemblable when the crank-pin to rocker-pivot diagonal cannot close.
FourBarAngles fourbar_angles(const FourBar& fb, double theta, Branch branch);

// Configuration laid out as make_fourbar_mechanism(fb).
Configuration solve_fourbar(const FourBar& fb, double theta, Branch branch);

// Folded interior coupler-rocker angle in [0, pi/2] for a solve_fourbar layout.
double transmission_angle(const FourBar& fb, const Configuration& c);

// --- General chains, Newton on loop closure --------------------------------

// Stacked coincidence errors of the loop-closing joints (2 per loop).
Eigen::VectorXd loop_residual(const Mechanism& m, const Configuration& c);

// Coincidence errors of every joint (2 per joint, declaration order).
Eigen::VectorXd joint_mismatch(const Mechanism& m, const Configuration& c);

// Closes every loop at crank angle theta starting from `guess`. Returns the
// root reached by damped Newton iteration from the guess.
Configuration assemble(const Mechanism& m, double theta, const Configuration& guess, const SolveSettings& s = {},
                       int* iterations = nullptr);

struct SweepFailure {
    std::size_t index = 0;
    ErrorCode code = ErrorCode::NoConvergence;
    std::string message;
};

struct SweepResult {
    std::vector<Configuration> configurations;  // solved prefix
    std::optional<SweepFailure> failure;

    bool ok() const { return !failure.has_value(); }
};

// Continuation sweep over `steps` evenly spaced crank angles in
// [theta_begin, theta_end], each solve seeded by a secant prediction from the
// previous solutions. Stops at the first failing step.
SweepResult sweep(const Mechanism& m, double theta_begin, double theta_end, std::size_t steps,
                  const SolveSettings& s = {}, const std::optional<Configuration>& guess = std::nullopt);

// Closed-form sweep of a single four-bar following the root nearest to a
// linear extrapolation of the previous two. Starting exactly on a change point
// requires `initial`; otherwise BRANCH_AMBIGUOUS.
SweepResult sweep_fourbar(const FourBar& fb, double theta_begin, double theta_end, std::size_t steps,
                          std::optional<Branch> initial = Branch::Open);

struct LinkVelocity {
    Point2 linear{};  // velocity of the link origin
    double angular = 0.0;
};

// Velocities consistent with the differentiated closure constraints.
std::vector<LinkVelocity> velocities(const Mechanism& m, const Configuration& c, double crank_rate);

// Transmission angle of each four_bar_loops(m) entry, measured at the
// floating-output joint and folded into [0, pi/2].
std::vector<double> loop_transmission_angles(const Mechanism& m, const Configuration& c);

}  // namespace flapkin
