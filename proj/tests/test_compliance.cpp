#include <gtest/gtest.h>

#include <cmath>

#include "flapkin/compliance.hpp"
#include "support.hpp"

using namespace flapkin;
using namespace testing_support;

namespace {

Joint hinge(const std::string& id, MarkerRef a, MarkerRef b, double k, double rest = 0.0) {
    return Joint{id, std::move(a), std::move(b), CompliantHinge{k, rest, std::nullopt}, false};
}

// ground -motor- crank -h1- link1 [-h2- link2], all laid out along +x.
Mechanism serial_chain(double L0, double L1, double k1, std::optional<std::pair<double, double>> second = {}) {
    Mechanism m;
    m.ground = "ground";
    m.links.push_back(Link{"ground", {{"origin", {0, 0}}}, LinkRole::Ground, {}});
    m.links.push_back(Link{"crank", {{"origin", {0, 0}}, {"tip", {L0, 0}}}, LinkRole::Crank, {}});
    m.links.push_back(Link{"link1", {{"origin", {0, 0}}, {"tip", {L1, 0}}}, LinkRole::Generic, Pose{{L0, 0}, 0}});
    m.joints.push_back(Joint{"motor", {"ground", "origin"}, {"crank", "origin"}, RigidPin{}, true});
    m.joints.push_back(hinge("h1", {"crank", "tip"}, {"link1", "origin"}, k1));
    if (second) {
        m.links.push_back(
            Link{"link2", {{"origin", {0, 0}}, {"tip", {second->first, 0}}}, LinkRole::Generic, Pose{{L0 + L1, 0}, 0}});
        m.joints.push_back(hinge("h2", {"link1", "tip"}, {"link2", "origin"}, second->second));
    }
    m.wing_polygon = {{"ground", "origin"}, {"crank", "tip"}, {"link1", "tip"}};
    m.shoulder = {"ground", "origin"};
    m.wingtip = {"link1", "tip"};
    return m;
}

double hinge_angle(const Mechanism& m, const Configuration& c, const std::string& joint) {
    const Joint& j = m.joints[*m.joint_index(joint)];
    return c.poses[*m.link_index(j.b.link)].angle - c.poses[*m.link_index(j.a.link)].angle;
}

}  // namespace

TEST(HingeStiffness, Examples) {
    const HingeGeometry hg{0.010, 0.0006, 0.003, 2e9};
    const double inertia = 0.010 * std::pow(0.0006, 3) / 12.0;
    EXPECT_NEAR(inertia, 1.8e-13, 1e-25);
    EXPECT_NEAR(hinge_stiffness(hg), 2e9 * inertia / 0.003, 1e-15);
    // By hand: 2e9 * 1.8e-13 = 3.6e-4 N*m^2, over 3 mm gives 0.12 N*m/rad.
    EXPECT_NEAR(hinge_stiffness(hg), 0.12, 1e-12);
    HingeGeometry longer = hg;
    longer.length *= 2;
    EXPECT_NEAR(hinge_stiffness(longer), hinge_stiffness(hg) / 2, 1e-15);
    HingeGeometry thicker = hg;
    thicker.thickness *= 2;
    EXPECT_NEAR(hinge_stiffness(thicker), hinge_stiffness(hg) * 8, 1e-12);
    EXPECT_TRUE(thin_hinge_regime(hg));
    EXPECT_FALSE(thin_hinge_regime({0.001, 0.002, 0.003, 2e9}));
    EXPECT_THROW(hinge_stiffness({0.0, 0.001, 0.003, 2e9}), Error);
}

TEST(ElasticEnergy, Examples) {
    const Mechanism m = serial_chain(1.0, 1.0, 0.144);
    Configuration c = reference_configuration(m);
    EXPECT_EQ(elastic_energy(m, c), 0.0);
    c.poses[2].angle = 0.1;
    EXPECT_NEAR(elastic_energy(m, c), 7.2e-4, 1e-18);
    EXPECT_DOUBLE_EQ(elastic_energy(m, c), 0.5 * 0.144 * 0.1 * 0.1);

    const Mechanism rigid = make_fourbar_mechanism({6, 2, 5, 5, {}});
    for (double th : {0.0, 1.0, 2.0}) {
        EXPECT_EQ(elastic_energy(rigid, solve_fourbar({6, 2, 5, 5, {}}, th, Branch::Open)), 0.0);
    }
}

TEST(Equilibrium, ZeroLoadStaysAtRest) {
    const Mechanism m = serial_chain(1.0, 1.0, 0.144);
    const EquilibriumResult r = solve_equilibrium(m, 0.5, {});
    EXPECT_NEAR(hinge_angle(m, r.configuration, "h1"), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(r.configuration.poses[1].angle, 0.5);
}

TEST(Equilibrium, SingleHingeMoment) {
    const Mechanism m = serial_chain(1.0, 1.0, 0.144);
    LoadCase load;
    load.moments.push_back({"h1", 0.0144});
    const EquilibriumResult r = solve_equilibrium(m, 0.0, load);
    EXPECT_NEAR(hinge_angle(m, r.configuration, "h1"), 0.1, 1e-10);
    EXPECT_TRUE(r.warnings.empty());
    // Energy equals the integral of the restoring moment, k theta^2 / 2.
    EXPECT_NEAR(elastic_energy(m, r.configuration), 0.5 * 0.144 * 0.01, 1e-14);
}

TEST(Equilibrium, LargeDeflectionWarning) {
    const Mechanism m = serial_chain(1.0, 1.0, 0.144);
    LoadCase load;
    load.moments.push_back({"h1", 0.144 * 2.0});
    const EquilibriumResult r = solve_equilibrium(m, 0.0, load);
    EXPECT_NEAR(hinge_angle(m, r.configuration, "h1"), 2.0, 1e-9);
    ASSERT_FALSE(r.warnings.empty());
    EXPECT_EQ(r.warnings.front().rfind("LARGE_DEFLECTION", 0), 0u);
}

TEST(Equilibrium, TwoHingeChainMatchesGridSearch) {
    const double L0 = 0.02, L1 = 0.03, L2 = 0.025, k1 = 0.05, k2 = 0.03, theta = 0.4;
    const Mechanism m = serial_chain(L0, L1, k1, std::make_pair(L2, k2));
    LoadCase load;
    const Point2 F{0.4, -1.1};
    load.forces.push_back({{"link2", "tip"}, F});
    const EquilibriumResult r = solve_equilibrium(m, theta, load);

    auto potential = [&](double q1, double q2) {
        const double x = L0 * std::cos(theta) + L1 * std::cos(theta + q1) + L2 * std::cos(theta + q1 + q2);
        const double y = L0 * std::sin(theta) + L1 * std::sin(theta + q1) + L2 * std::sin(theta + q1 + q2);
        return 0.5 * k1 * q1 * q1 + 0.5 * k2 * q2 * q2 - (F.x() * x + F.y() * y);
    };
    double b1 = 0, b2 = 0, best = potential(0, 0);
    for (double q1 = -1.5; q1 <= 1.5; q1 += 1e-2) {
        for (double q2 = -1.5; q2 <= 1.5; q2 += 1e-2) {
            if (const double p = potential(q1, q2); p < best) {
                best = p;
                b1 = q1;
                b2 = q2;
            }
        }
    }
    const double c1 = b1, c2 = b2;
    for (double q1 = c1 - 0.02; q1 <= c1 + 0.02; q1 += 1e-3) {
        for (double q2 = c2 - 0.02; q2 <= c2 + 0.02; q2 += 1e-3) {
            if (const double p = potential(q1, q2); p < best) {
                best = p;
                b1 = q1;
                b2 = q2;
            }
        }
    }
    EXPECT_NEAR(hinge_angle(m, r.configuration, "h1"), b1, 2e-3);
    EXPECT_NEAR(hinge_angle(m, r.configuration, "h2"), b2, 2e-3);
    EXPECT_LE(r.projected_gradient_norm, 1e-8 * std::max(k1, k2));
    EXPECT_NEAR(total_potential(m, r.configuration, load), best, 1e-6);
}

TEST(Equilibrium, LoadLinearity) {
    const Mechanism m = serial_chain(0.02, 0.03, 0.05, std::make_pair(0.025, 0.03));
    auto deflection = [&](double alpha) {
        LoadCase load;
        load.forces.push_back({{"link2", "tip"}, Point2{0.0, -alpha}});
        const EquilibriumResult r = solve_equilibrium(m, 0.0, load);
        return std::make_pair(hinge_angle(m, r.configuration, "h1"), hinge_angle(m, r.configuration, "h2"));
    };
    const auto small = deflection(0.001);
    const auto doubled = deflection(0.002);
    EXPECT_NEAR(doubled.first / small.first, 2.0, 0.1);
    EXPECT_NEAR(doubled.second / small.second, 2.0, 0.1);
}

namespace {

// Five-bar (mobility 2): crank fixed leaves one elastic degree of freedom.
Mechanism five_bar() {
    Mechanism m;
    m.ground = "ground";
    const double theta = M_PI / 2, psi = M_PI / 2;
    const Point2 A{0, 1}, O2{4, 0};
    const Point2 B = O2 + polar(2.0, psi);
    const double d = distance(A, B), h = std::sqrt(9.0 - d * d / 4.0);
    const Point2 mid = (A + B) / 2.0;
    const Point2 C = mid + perp((B - A) / d) * h;
    m.links.push_back(Link{"ground", {{"origin", {0, 0}}, {"o2", O2}}, LinkRole::Ground, {}});
    m.links.push_back(Link{"crank", {{"origin", {0, 0}}, {"tip", {1, 0}}}, LinkRole::Crank, Pose{{0, 0}, theta}});
    m.links.push_back(Link{"l2", {{"origin", {0, 0}}, {"tip", {3, 0}}}, LinkRole::Generic, Pose{A, (C - A).angle()}});
    m.links.push_back(Link{"l3", {{"origin", {0, 0}}, {"tip", {3, 0}}}, LinkRole::Generic, Pose{C, (B - C).angle()}});
    m.links.push_back(Link{"rocker", {{"origin", {0, 0}}, {"tip", {2, 0}}}, LinkRole::Rocker, Pose{O2, psi}});
    m.joints.push_back(Joint{"motor", {"ground", "origin"}, {"crank", "origin"}, RigidPin{}, true});
    m.joints.push_back(Joint{"a", {"crank", "tip"}, {"l2", "origin"}, RigidPin{}, false});
    m.joints.push_back(hinge("c", {"l2", "tip"}, {"l3", "origin"}, 0.8, (B - C).angle() - (C - A).angle()));
    m.joints.push_back(Joint{"b", {"l3", "tip"}, {"rocker", "tip"}, RigidPin{}, false});
    m.joints.push_back(hinge("o2", {"ground", "o2"}, {"rocker", "origin"}, 0.5, psi));
    m.wing_polygon = {{"ground", "origin"}, {"crank", "tip"}, {"l3", "origin"}, {"rocker", "tip"}};
    m.shoulder = {"ground", "origin"};
    m.wingtip = {"l3", "origin"};
    return m;
}

}  // namespace

TEST(Equilibrium, ClosedFiveBarMatchesOneDimensionalSearch) {
    const Mechanism m = five_bar();
    LoadCase load;
    const Point2 F{0.03, -0.025};
    load.forces.push_back({{"l3", "origin"}, F});
    const EquilibriumResult r = solve_equilibrium(m, M_PI / 2, load);
    EXPECT_LE(r.closure_residual, 1e-10);
    EXPECT_LE(joint_mismatch(m, r.configuration).norm(), 1e-10);

    const Point2 A{0, 1}, O2{4, 0};
    const auto& hc = *m.joints[2].hinge();
    const auto& ho = *m.joints[4].hinge();
    auto potential = [&](double psi, Point2* joint_c) {
        const Point2 B = O2 + polar(2.0, psi);
        const double d = distance(A, B);
        if (d >= 6.0) return 1e9;
        const double h = std::sqrt(9.0 - d * d / 4.0);
        const Point2 C = (A + B) / 2.0 + perp((B - A) / d) * h;
        if (joint_c) *joint_c = C;
        const double qc = std::remainder((B - C).angle() - (C - A).angle() - hc.rest_angle, 2 * M_PI);
        return 0.5 * hc.stiffness * qc * qc + 0.5 * ho.stiffness * (psi - ho.rest_angle) * (psi - ho.rest_angle) -
               dot(F, C);
    };
    double best_psi = M_PI / 2, best = potential(best_psi, nullptr);
    for (double psi = 0.5; psi <= 2.6; psi += 1e-4) {
        if (const double p = potential(psi, nullptr); p < best) {
            best = p;
            best_psi = psi;
        }
    }
    EXPECT_NEAR(r.configuration.poses[4].angle, best_psi, 2e-3);
    Point2 c_oracle;
    potential(best_psi, &c_oracle);
    EXPECT_LE((marker_world(m, r.configuration, "l3", "origin") - c_oracle).norm(), 5e-3);
    EXPECT_LE(r.projected_gradient_norm, 1e-10 * 0.8);

    // Gradient check along the feasible curve: moving the rocker either way raises the potential.
    const double step = 1e-5;
    const double p0 = potential(r.configuration.poses[4].angle, nullptr);
    const double dp = (potential(r.configuration.poses[4].angle + step, nullptr) -
                       potential(r.configuration.poses[4].angle - step, nullptr)) / (2 * step);
    EXPECT_LE(std::abs(dp), 1e-6);
    EXPECT_NEAR(total_potential(m, r.configuration, load), p0, 1e-9);
}

TEST(Equilibrium, RigidMechanismReducesToAssembly) {
    const FourBar fb{6, 2, 5, 5, {}};
    const Mechanism m = make_fourbar_mechanism(fb);
    const EquilibriumResult r = solve_equilibrium(m, 1.0, {});
    const Configuration exact = solve_fourbar(fb, 1.0, Branch::Open);
    EXPECT_LT(angle_diff(r.configuration.poses[3].angle, exact.poses[3].angle), 1e-8);
}

TEST(Equilibrium, ShippedExampleUnderTipLoad) {
    const Mechanism m = two_stage();
    LoadCase load;
    load.forces.push_back({{"forearm", "tip"}, Point2{0.0, -0.05}});
    const EquilibriumResult r = solve_equilibrium(m, 0.3, load);
    EXPECT_LE(r.closure_residual, 1e-10);
    double kmax = 0.0;
    for (const auto& j : m.joints) {
        if (const auto* h = j.hinge()) kmax = std::max(kmax, h->stiffness);
    }
    EXPECT_LE(r.projected_gradient_norm, 1e-10 * kmax);
}
