#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flapkin/gait.hpp"
#include "flapkin/mechanism.hpp"

namespace flapkin {

struct GaitWeights {
    double plunge_amplitude = 1.0;
    double extension_min = 1.0;
    double extension_max = 1.0;

    bool operator==(const GaitWeights&) const = default;
};

// Synthesis target. Angles in radians. Plunge amplitude is scored with a
// 1 rad scale, extension bounds with scale 1.
struct GaitSpec {
    double plunge_amplitude = 0.5;
    double extension_min = 0.8;
    double extension_max = 1.0;
    double area_ratio_bound = 0.9;
    double min_transmission_angle = kPi / 6.0;
    GaitWeights weights;

    void check() const;
    bool operator==(const GaitSpec&) const = default;
};

struct MarkerCoordinate {
    std::string link;
    std::string marker;
    int axis = 0;  // 0 = x, 1 = y (link-local)

    bool operator==(const MarkerCoordinate&) const = default;
};

struct HingeStiffnessTarget {
    std::string joint;

    bool operator==(const HingeStiffnessTarget&) const = default;
};

using ParameterTarget = std::variant<MarkerCoordinate, HingeStiffnessTarget>;

struct DesignParameter {
    std::string name;
    double lower = 0.0;
    double upper = 0.0;
    ParameterTarget target;

    bool operator==(const DesignParameter&) const = default;
};

struct DesignSpace {
    std::vector<DesignParameter> parameters;
    Mechanism topology;

    // EMPTY_DESIGN_SPACE when there are no parameters; InvalidArgument for bad
    // bounds or targets that do not resolve to exactly one template field.
    void check() const;
    bool operator==(const DesignSpace&) const = default;
};

// Template with the parameter values written into their fields. Reference
// poses are re-closed at crank angle 0 when possible.
Mechanism apply_parameters(const DesignSpace& space, std::span<const double> x);

// Current template values of every parameter.
std::vector<double> parameter_values(const DesignSpace& space);

inline constexpr std::size_t kObjectiveSamples = 128;

// Weighted squared metric error plus graded constraint penalties.
// Never throws for in-bounds candidates.
double objective(std::span<const double> x, const DesignSpace& space, const GaitSpec& spec);

struct ConstraintViolation {
    std::string code;  // FULL_REVOLUTION, MOBILITY, MIN_TRANSMISSION_ANGLE, EXTENSION_RANGE
    std::string message;
    double margin = 0.0;  // amount by which the constraint is missed (rad, or dimensionless)
    std::optional<std::pair<double, double>> theta_interval;  // failing crank interval, rad

    bool operator==(const ConstraintViolation&) const = default;
};

inline constexpr double kExtensionTolerance = 0.02;

std::vector<ConstraintViolation> feasibility_report(const Mechanism& m, const GaitSpec& spec);

struct SynthesisOptions {
    std::size_t population = 0;  // 0 = 15 x dimension
    unsigned threads = 0;        // 0 = FLAPKIN_THREADS or all cores
    bool polish = true;
    std::size_t polish_evaluations = 200;
};

struct SynthesisResult {
    Mechanism best;
    std::vector<double> parameters;
    double cost = 0.0;
    bool feasible = false;
    std::size_t evaluations = 0;
    std::uint64_t seed = 0;
    std::vector<ConstraintViolation> violations;
};

// Differential evolution (rand/1/bin, F = 0.7, CR = 0.9) followed by a
// bounded Nelder-Mead polish. Bit-identical for equal inputs at any thread count.
SynthesisResult synthesize(const DesignSpace& space, const GaitSpec& spec, std::size_t budget, std::uint64_t seed,
                           const SynthesisOptions& options = {});

// Resolves SynthesisOptions::threads.
unsigned resolve_threads(unsigned requested);

}  // namespace flapkin
