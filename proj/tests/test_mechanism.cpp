#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace flapkin;
using namespace testing_support;

namespace {

// Topology-only chain: every link gets one marker per incident joint.
Mechanism graph_mechanism(std::size_t links, const std::vector<std::pair<std::size_t, std::size_t>>& joints) {
    Mechanism m;
    m.ground = "L0";
    for (std::size_t i = 0; i < links; ++i) {
        m.links.push_back(Link{"L" + std::to_string(i), {{"origin", {0.0, 0.0}}}, LinkRole::Generic, {}});
    }
    for (std::size_t j = 0; j < joints.size(); ++j) {
        const auto [a, b] = joints[j];
        const std::string mk = "j" + std::to_string(j);
        m.links[a].markers.push_back({mk, {1.0 + static_cast<double>(j), 0.5}});
        m.links[b].markers.push_back({mk, {0.5, 1.0 + static_cast<double>(j)}});
        m.joints.push_back(Joint{"J" + std::to_string(j), {m.links[a].id, mk}, {m.links[b].id, mk}, RigidPin{}, j == 0});
    }
    m.wing_polygon = {{"L0", "origin"}, {"L1", "origin"}, {"L2", "origin"}};
    m.shoulder = {"L0", "origin"};
    m.wingtip = {"L1", "j0"};
    return m;
}

}  // namespace

TEST(Validate, WellFormedFourBarIsEmpty) {
    const Mechanism m = make_fourbar_mechanism({6, 2, 5, 5, {}});
    const ValidationReport rep = validate_mechanism(m);
    EXPECT_TRUE(rep.entries.empty());
    EXPECT_TRUE(rep.valid());
}

TEST(Validate, TwoActuatorsReported) {
    Mechanism m = make_fourbar_mechanism({6, 2, 5, 5, {}});
    m.joints[1].actuated = true;
    EXPECT_TRUE(validate_mechanism(m).has("MULTIPLE_ACTUATORS"));
}

TEST(Validate, FiveBarMobilityTwo) {
    const Mechanism m = graph_mechanism(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
    const ValidationReport rep = validate_mechanism(m);
    EXPECT_TRUE(rep.has("MOBILITY_NOT_ONE"));
    EXPECT_FALSE(rep.valid());
}

TEST(Validate, StructuralCodes) {
    Mechanism m = make_fourbar_mechanism({6, 2, 5, 5, {}});
    Mechanism dup = m;
    dup.links[2].id = "crank";
    EXPECT_TRUE(validate_mechanism(dup).has("DUPLICATE_LINK_ID"));

    Mechanism self = m;
    self.joints[2].b = {"crank", "origin"};
    EXPECT_TRUE(validate_mechanism(self).has("SELF_JOINT"));

    Mechanism stiff = m;
    stiff.joints[3].kind = CompliantHinge{-1.0, 0.0, std::nullopt};
    EXPECT_TRUE(validate_mechanism(stiff).has("NONPOSITIVE_STIFFNESS"));

    Mechanism poly = m;
    poly.wing_polygon.resize(2);
    EXPECT_TRUE(validate_mechanism(poly).has("WING_POLYGON_TOO_SMALL"));

    Mechanism off = m;
    off.joints[0].actuated = false;
    off.joints[2].actuated = true;
    EXPECT_TRUE(validate_mechanism(off).has("ACTUATOR_NOT_ON_GROUND"));

    Mechanism none = m;
    none.joints[0].actuated = false;
    EXPECT_TRUE(validate_mechanism(none).has("NO_ACTUATOR"));

    Mechanism marker = m;
    marker.joints[2].a.marker = "nowhere";
    EXPECT_TRUE(validate_mechanism(marker).has("UNKNOWN_MARKER"));
}

TEST(Validate, IdempotentAndPure) {
    Mechanism m = make_fourbar_mechanism({6, 2, 5, 5, {}});
    m.joints[1].actuated = true;
    m.wing_polygon.clear();
    EXPECT_EQ(validate_mechanism(m), validate_mechanism(m));
}

TEST(Validate, ChangePointIsWarningOnly) {
    const Mechanism m = make_fourbar_mechanism({4, 2, 4, 2, {}});
    const ValidationReport rep = validate_mechanism(m);
    ASSERT_TRUE(rep.has("CHANGE_POINT"));
    EXPECT_TRUE(rep.valid());
}

TEST(Validate, ShippedExampleHasTwoFourBarStages) {
    const Mechanism m = two_stage();
    EXPECT_TRUE(validate_mechanism(m).valid());
    EXPECT_EQ(mobility(m), 1);
    EXPECT_EQ(four_bar_loops(m).size(), 2u);
}

TEST(Mobility, Examples) {
    EXPECT_EQ(mobility(make_fourbar_mechanism({6, 2, 5, 5, {}})), 1);
    const Mechanism watt = graph_mechanism(6, {{0, 1}, {0, 2}, {2, 3}, {3, 1}, {0, 4}, {4, 5}, {5, 1}});
    EXPECT_EQ(mobility(watt), 1);
    EXPECT_EQ(mobility(graph_mechanism(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}})), 2);
}

TEST(Mobility, DisconnectedThrows) {
    const Mechanism m = graph_mechanism(4, {{0, 1}, {2, 3}});
    try {
        mobility(m);
        FAIL() << "expected DISCONNECTED";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Disconnected);
    }
    EXPECT_TRUE(validate_mechanism(m).has("DISCONNECTED"));
}

TEST(Grashof, Examples) {
    EXPECT_EQ(grashof_classify({6, 2, 5, 5, {}}), GrashofClass::CrankRocker);
    EXPECT_EQ(grashof_classify({4, 2, 4, 2, {}}), GrashofClass::ChangePoint);
    EXPECT_EQ(grashof_classify({6, 3, 2, 4, {}}), GrashofClass::NonGrashof);
    EXPECT_EQ(grashof_classify({2, 6, 5, 5, {}}), GrashofClass::DoubleCrank);
    EXPECT_EQ(grashof_classify({6, 5, 2, 5, {}}), GrashofClass::DoubleRocker);
}

TEST(Grashof, RejectsUnassemblable) {
    EXPECT_THROW(grashof_classify({10, 1, 1, 1, {}}), Error);
    EXPECT_THROW(grashof_classify({1, 0, 1, 1, {}}), Error);
}

TEST(Grashof, ScaleInvariant) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> len(1.0, 10.0), scale(1e-3, 1e3);
    for (int i = 0; i < 500; ++i) {
        const FourBar fb{len(rng), len(rng), len(rng), len(rng), {}};
        try {
            check_fourbar(fb);
        } catch (const Error&) {
            continue;
        }
        const double s = scale(rng);
        const FourBar scaled{fb.ground * s, fb.crank * s, fb.coupler * s, fb.rocker * s, {}};
        EXPECT_EQ(grashof_classify(fb), grashof_classify(scaled));
    }
    // Exact ties survive scaling too.
    EXPECT_EQ(grashof_classify({0.4, 0.2, 0.4, 0.2, {}}), GrashofClass::ChangePoint);
    EXPECT_EQ(grashof_classify({4e3, 2e3, 4e3, 2e3, {}}), GrashofClass::ChangePoint);
}

TEST(Mobility, ValidImpliesOne) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Mechanism m = make_fourbar_mechanism(random_crank_rocker(rng));
        ASSERT_TRUE(validate_mechanism(m).valid());
        EXPECT_EQ(mobility(m), 1);
    }
}
