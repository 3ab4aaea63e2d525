#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flapkin/geometry.hpp"

namespace flapkin {

enum class LinkRole { Ground, Crank, Coupler, Rocker, Generic };

const char* to_string(LinkRole role);
std::optional<LinkRole> link_role_from_string(std::string_view name);

struct Marker {
    std::string name;
    Point2 at;  // link-local frame

    bool operator==(const Marker&) const = default;
};

struct Link {
    std::string id;
    std::vector<Marker> markers;
    LinkRole role = LinkRole::Generic;
    // Pose as drawn; seeds assembly and defines hinge rest angles.
    Pose reference_pose{};

    const Marker* find_marker(std::string_view name) const;
    bool operator==(const Link&) const = default;
};

struct MarkerRef {
    std::string link;
    std::string marker;

    bool operator==(const MarkerRef&) const = default;
};

// Living-hinge flexure dimensions (SI).
struct HingeGeometry {
    double width = 0.0;
    double thickness = 0.0;
    double length = 0.0;
    double elastic_modulus = 0.0;

    bool operator==(const HingeGeometry&) const = default;
};

struct RigidPin {
    bool operator==(const RigidPin&) const = default;
};

struct CompliantHinge {
    double stiffness = 0.0;   // N*m/rad
    double rest_angle = 0.0;  // rad, relative angle (b minus a)
    std::optional<HingeGeometry> geometry;

    bool operator==(const CompliantHinge&) const = default;
};

using JointKind = std::variant<RigidPin, CompliantHinge>;

struct Joint {
    std::string id;
    MarkerRef a;
    MarkerRef b;
    JointKind kind = RigidPin{};
    bool actuated = false;

    bool is_compliant() const { return std::holds_alternative<CompliantHinge>(kind); }
    const CompliantHinge* hinge() const { return std::get_if<CompliantHinge>(&kind); }
    bool operator==(const Joint&) const = default;
};

struct Mechanism {
    std::vector<Link> links;
    std::vector<Joint> joints;
    std::string ground;
    std::vector<MarkerRef> wing_polygon;
    MarkerRef shoulder;
    MarkerRef wingtip;

    std::optional<std::size_t> link_index(std::string_view id) const;
    std::optional<std::size_t> joint_index(std::string_view id) const;
    // Throws UnknownLink / UnknownMarker.
    const Point2& local_marker(const MarkerRef& ref) const;
    std::size_t ground_index() const;
    std::size_t actuated_joint_index() const;

    bool operator==(const Mechanism&) const = default;
};

enum class Severity { Error, Warning };

struct Violation {
    std::string code;
    std::string message;
    Severity severity = Severity::Error;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> entries;

    bool valid() const;
    bool has(std::string_view code) const;
    bool operator==(const ValidationReport&) const = default;
};

// Checks every structural invariant. Never throws; ChangePoint loops are
// reported as warnings and do not invalidate the mechanism.
ValidationReport validate_mechanism(const Mechanism& m);

// Gruebler count 3(n-1) - 2j with every joint treated as a pin.
// Throws Disconnected when the joint graph does not reach every link.
int mobility(const Mechanism& m);

struct FourBar {
    double ground = 0.0;
    double crank = 0.0;
    double coupler = 0.0;
    double rocker = 0.0;
    Point2 coupler_point{};  // coupler frame: origin at crank pin, +x toward rocker pin

    bool operator==(const FourBar&) const = default;
};

// Throws InvalidArgument unless all lengths are positive and the longest is
// shorter than the sum of the other three.
void check_fourbar(const FourBar& fb);

enum class GrashofClass { CrankRocker, DoubleCrank, DoubleRocker, ChangePoint, NonGrashof };

const char* to_string(GrashofClass c);

GrashofClass grashof_classify(const FourBar& fb);

// Breadth-first spanning tree rooted at the ground link. The actuated joint is
// always the first tree edge; remaining joints are visited in declaration order.
struct SpanningTree {
    struct Edge {
        std::size_t joint;
        std::size_t parent;  // link index
        std::size_t child;   // link index
    };
    std::vector<Edge> edges;                    // tree edges, BFS order
    std::vector<std::size_t> non_tree;          // joint indices closing loops
    std::vector<int> depth;                     // per link, -1 if unreached
    std::vector<int> discovery;                 // per link BFS order, -1 if unreached
    std::vector<std::optional<std::size_t>> parent_edge;  // per link, index into edges

    bool connected() const;
};

SpanningTree spanning_tree(const Mechanism& m);

// A four-link cycle of the link graph with its links labelled by role
// relative to the actuator: base (closest to ground), input, floating, output.
struct FourBarLoop {
    std::array<std::size_t, 4> links{};   // base, input, floating, output
    std::array<std::size_t, 4> joints{};  // base-input, input-floating, floating-output, output-base
    FourBar dimensions;
};

std::vector<FourBarLoop> four_bar_loops(const Mechanism& m);

}  // namespace flapkin
