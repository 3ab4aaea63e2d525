// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cli_runner.hpp"
#include "flapkin/aero.hpp"
#include "flapkin/compliance.hpp"
#include "flapkin/gait.hpp"
#include "flapkin/synthesis.hpp"
#include "support.hpp"

using namespace flapkin;
using namespace testing_support;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<FourBar> linkages() {
    std::mt19937_64 rng(20240601);
    std::vector<FourBar> out;
    for (int i = 0; i < 100; ++i) out.push_back(random_crank_rocker(rng));
    return out;
}

Outcome closure_suite() {
    double worst = 0.0, jump = 0.0, drift = 0.0;
    int failures = 0;
    for (const FourBar& fb : linkages()) {
        const Mechanism m = make_fourbar_mechanism(fb);
        const SweepResult sw = sweep(m, 0.0, kTwoPi, 361);
        if (!sw.ok()) {
            ++failures;
            continue;
        }
        const Branch start = sw.configurations.front().branches.front();
        for (std::size_t i = 0; i < sw.configurations.size(); ++i) {
            worst = std::max(worst, loop_residual(m, sw.configurations[i]).norm());
            // Distance from the closed form on the starting branch; large only after a flip.
            const Configuration fixed = solve_fourbar(fb, sw.configurations[i].crank_angle, start);
            drift = std::max(drift, angle_diff(sw.configurations[i].poses[3].angle, fixed.poses[3].angle));
            if (i > 0) {
                jump = std::max(jump, angle_diff(sw.configurations[i].poses[3].angle, sw.configurations[i - 1].poses[3].angle));
            }
        }
    }
    return {failures == 0 && worst <= 1e-9 && jump < 0.2,
            fmt("failed sweeps %d, max residual %.3g m, max rocker step %.4f rad (limit 0.2), "
                "max deviation from fixed-branch closed form %.2g rad",
                failures, worst, jump, drift)};
}

Outcome oracle_equivalence() {
    double worst = 0.0;
    int failures = 0;
    for (const FourBar& fb : linkages()) {
        const Mechanism m = make_fourbar_mechanism(fb);
        const SweepResult sw = sweep(m, 0.0, kTwoPi, 361);
        for (int k = 0; k < 32; ++k) {
            const double th = kTwoPi * k / 32.0;
            // Seed from the last whole degree of the continuation sweep.
            const auto deg = static_cast<std::size_t>(std::floor(rad_to_deg(th)));
            try {
                const Configuration c = assemble(m, th, sw.configurations.at(deg));
                const Configuration exact = solve_fourbar(fb, th, Branch::Open);
                for (std::size_t l = 0; l < c.poses.size(); ++l) {
                    worst = std::max(worst, angle_diff(c.poses[l].angle, exact.poses[l].angle));
                }
            } catch (const std::exception&) {
                ++failures;
            }
        }
    }
    return {failures == 0 && worst <= 1e-8, fmt("failures %d, max angle discrepancy %.3g rad", failures, worst)};
}

Outcome velocity_check() {
    const double h = 1e-6;
    double worst = 0.0;
    int checked = 0, skipped = 0;
    for (const FourBar& fb : linkages()) {
        const Mechanism m = make_fourbar_mechanism(fb);
        for (int k = 0; k < 32; ++k) {
            const double th = kTwoPi * (k + 0.25) / 32.0;
            const Configuration c = solve_fourbar(fb, th, Branch::Open);
            if (transmission_angle(fb, c) < 1e-3) {
                ++skipped;
                continue;
            }
            const Configuration cp = assemble(m, th + h, c), cm = assemble(m, th - h, c);
            const auto v = velocities(m, c, 1.0);
            double num = 0.0, den = 0.0;
            for (std::size_t l = 0; l < v.size(); ++l) {
                const double w = (cp.poses[l].angle - cm.poses[l].angle) / (2 * h);
                const Point2 lin = (cp.poses[l].origin - cm.poses[l].origin) / (2 * h);
                num += std::pow(v[l].angular - w, 2) + (v[l].linear - lin).squared_norm();
                den += w * w + lin.squared_norm();
            }
            worst = std::max(worst, std::sqrt(num / den));
            ++checked;
        }
    }
    return {worst <= 1e-4, fmt("%d samples (%d singular skipped), max relative error %.3g", checked, skipped, worst)};
}

Outcome parallelogram() {
    const FourBar fb{4, 2, 4, 2, {}};
    const SweepResult sw = sweep_fourbar(fb, 0.0, kTwoPi, 3601, Branch::Open);
    double worst = 0.0;
    for (const auto& c : sw.configurations) worst = std::max(worst, angle_diff(c.poses[3].angle, c.crank_angle));
    return {sw.ok() && worst <= 1e-12, fmt("%zu samples, max |rocker - crank| %.3g rad", sw.configurations.size(), worst)};
}

Outcome compliance() {
    const double L0 = 0.02, L1 = 0.03, L2 = 0.025, k1 = 0.05, k2 = 0.03, theta = 0.4;
    const Point2 F{0.4, -1.1};
    Mechanism m;
    m.ground = "ground";
    m.links.push_back(Link{"ground", {{"origin", {0, 0}}}, LinkRole::Ground, {}});
    m.links.push_back(Link{"crank", {{"origin", {0, 0}}, {"tip", {L0, 0}}}, LinkRole::Crank, {}});
    m.links.push_back(Link{"upper", {{"origin", {0, 0}}, {"tip", {L1, 0}}}, LinkRole::Generic, Pose{{L0, 0}, 0}});
    m.links.push_back(Link{"lower", {{"origin", {0, 0}}, {"tip", {L2, 0}}}, LinkRole::Generic, Pose{{L0 + L1, 0}, 0}});
    m.joints.push_back(Joint{"motor", {"ground", "origin"}, {"crank", "origin"}, RigidPin{}, true});
    m.joints.push_back(Joint{"h1", {"crank", "tip"}, {"upper", "origin"}, CompliantHinge{k1, 0.0, {}}, false});
    m.joints.push_back(Joint{"h2", {"upper", "tip"}, {"lower", "origin"}, CompliantHinge{k2, 0.0, {}}, false});
    m.wing_polygon = {{"ground", "origin"}, {"crank", "tip"}, {"lower", "tip"}};
    m.shoulder = {"ground", "origin"};
    m.wingtip = {"lower", "tip"};
    LoadCase load;
    load.forces.push_back({{"lower", "tip"}, F});
    const EquilibriumResult r = solve_equilibrium(m, theta, load);
    const double q1 = r.configuration.poses[2].angle - r.configuration.poses[1].angle;
    const double q2 = r.configuration.poses[3].angle - r.configuration.poses[2].angle;

    auto potential = [&](double a, double b) {
        const double x = L0 * std::cos(theta) + L1 * std::cos(theta + a) + L2 * std::cos(theta + a + b);
        const double y = L0 * std::sin(theta) + L1 * std::sin(theta + a) + L2 * std::sin(theta + a + b);
        return 0.5 * k1 * a * a + 0.5 * k2 * b * b - (F.x() * x + F.y() * y);
    };
    double g1 = 0, g2 = 0, best = potential(0, 0);
    for (double a = -1.5; a <= 1.5; a += 1e-2) {
        for (double b = -1.5; b <= 1.5; b += 1e-2) {
            if (const double p = potential(a, b); p < best) {
                best = p;
                g1 = a;
                g2 = b;
            }
        }
    }
    const double c1 = g1, c2 = g2;
    for (double a = c1 - 0.02; a <= c1 + 0.02; a += 1e-3) {
        for (double b = c2 - 0.02; b <= c2 + 0.02; b += 1e-3) {
            if (const double p = potential(a, b); p < best) {
                best = p;
                g1 = a;
                g2 = b;
            }
        }
    }
    const double err = std::max(std::abs(q1 - g1), std::abs(q2 - g2));
    const double kmax = std::max(k1, k2);
    return {err <= 2e-3 && r.projected_gradient_norm <= 1e-8 * kmax,
            fmt("max angle error vs grid %.3g rad, projected gradient %.3g (limit %.3g)", err, r.projected_gradient_norm,
                1e-8 * kmax)};
}

Outcome articulation() {
    const GaitEvaluation ev = evaluate_gait(two_stage(), 0.1, 128);
    const GaitMetrics gm = gait_metrics(ev.gait, ev.transmission);
    const double width = gm.extension_max - gm.extension_min;
    return {width >= 0.15 && gm.area_ratio_up_down <= 0.9 && gm.min_transmission_angle >= deg_to_rad(30.0),
            fmt("extension width %.4f, area ratio up/down %.4f, min transmission %.2f deg", width,
                gm.area_ratio_up_down, rad_to_deg(gm.min_transmission_angle))};
}

Outcome aero_sign() {
    AeroConfig cfg;
    cfg.freestream = 3.0;
    const std::vector<GaitTrajectory> gaits{
        sinusoidal_plunge_gait(0.1, 200, 0.6, 0.3, 0.02, 0.3),
        sinusoidal_plunge_gait(0.1, 200, 0.6, 0.3, 0.02, 0.0),
        sinusoidal_plunge_gait(0.1, 200, 0.6, 0.3, 0.02, -0.3),
    };
    const AeroReport in = quasi_steady_forces(gaits[0], cfg);
    const AeroReport flat = quasi_steady_forces(gaits[1], cfg);
    const AeroReport anti = quasi_steady_forces(gaits[2], cfg);
    double peak = 0.0;
    for (double f : flat.vertical) peak = std::max(peak, std::abs(f) * gaits[1].dt());
    const auto ranked = compare_gaits(gaits, cfg);
    const bool order = ranked[0].index == 0 && ranked[1].index == 1 && ranked[2].index == 2;
    return {in.vertical_impulse > 0.0 && anti.vertical_impulse < 0.0 &&
                std::abs(flat.vertical_impulse) <= 1e-10 * peak && order,
            fmt("impulse in-phase %.4g, constant %.3g (peak sample %.3g), anti-phase %.4g N*s; ranking %s",
                in.vertical_impulse, flat.vertical_impulse, peak, anti.vertical_impulse, order ? "ok" : "wrong")};
}

Outcome recovery() {
    const DesignSpace space = parse_design_space(read_text_file(data_path("fourbar_space.json")));
    const GaitEvaluation ev = evaluate_gait(space.topology, 1.0, kObjectiveSamples);
    const GaitMetrics gm = gait_metrics(ev.gait, ev.transmission);
    GaitSpec spec;
    spec.plunge_amplitude = gm.plunge_amplitude;
    spec.extension_min = gm.extension_min;
    spec.extension_max = gm.extension_max;
    spec.area_ratio_bound = 2.0;
    spec.min_transmission_angle = 0.3;
    int good = 0;
    double slowest = 0.0, worst_cost = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto t0 = std::chrono::steady_clock::now();
        const SynthesisResult r = synthesize(space, spec, 6000, seed);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        slowest = std::max(slowest, secs);
        worst_cost = std::max(worst_cost, r.cost);
        good += r.cost <= 1e-4 && secs < 60.0;
        std::printf("  seed %2llu: cost %.3g, %.1f s\n", static_cast<unsigned long long>(seed), r.cost, secs);
    }
    return {good >= 9 && slowest < 60.0,
            fmt("%d/10 seeds reach cost <= 1e-4, worst cost %.3g, slowest run %.1f s", good, worst_cost, slowest)};
}

Outcome determinism() {
    const std::string mech = "'" + data_path("aerobat_two_stage.json") + "'";
    const std::string synth = "synthesize '" + data_path("fourbar_space.json") + "' '" +
                              data_path("fourbar_spec.json") + "' --budget 1200 --seed 17 --out ";
    const auto dir = std::filesystem::temp_directory_path() / ("flapkin_accept_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const std::vector<std::string> cmds{"sweep " + mech + " --steps 360", "gait " + mech + " --period 0.1 --samples 128"};
    std::vector<std::string> mismatched;
    for (const auto& cmd : cmds) {
        const CliRun a = run_cli("--threads 1 " + cmd), b = run_cli("--threads 1 " + cmd), c = run_cli("--threads 8 " + cmd);
        if (a.exit != 0 || a.out.empty() || a.out != b.out || a.out != c.out) mismatched.push_back(cmd.substr(0, 5));
    }
    std::vector<std::string> bests;
    std::vector<std::string> outs;
    for (const std::string threads : {"1", "1", "8"}) {
        const auto path = dir / ("best_" + std::to_string(bests.size()) + ".json");
        const CliRun r = run_cli("--threads " + threads + " " + synth + "'" + path.string() + "'");
        bests.push_back(std::filesystem::exists(path) ? slurp(path) : "");
        outs.push_back(r.out);
    }
    std::filesystem::remove_all(dir);
    if (bests[0].empty() || bests[0] != bests[1] || bests[0] != bests[2] || outs[0] != outs[1] || outs[0] != outs[2]) {
        mismatched.push_back("synthesize");
    }
    std::string which;
    for (const auto& s : mismatched) which += " " + s;
    return {mismatched.empty(), mismatched.empty() ? "sweep, gait, synthesize byte-identical (threads 1, 1, 8)"
                                                   : "mismatch:" + which};
}

Outcome timing() {
    const GaitTrajectory gt = generate_gait(two_stage(), 0.1, 256);
    std::size_t hi = 0, lo = 0;
    for (std::size_t i = 0; i < gt.samples.size(); ++i) {
        if (gt.samples[i].extension > gt.samples[hi].extension) hi = i;
        if (gt.samples[i].extension < gt.samples[lo].extension) lo = i;
    }
    double dur = gt.samples[lo].t - gt.samples[hi].t;
    if (dur < 0.0) dur += gt.period;
    // Extension must actually fall over that window.
    bool falling = true;
    for (std::size_t i = hi; i != lo; i = (i + 1) % gt.samples.size()) {
        const std::size_t j = (i + 1) % gt.samples.size();
        falling &= gt.samples[j].extension <= gt.samples[i].extension + 1e-3;
    }
    return {dur <= 0.06 && falling, fmt("retraction from t=%.4f s to t=%.4f s lasts %.4f s%s", gt.samples[hi].t,
                                        gt.samples[lo].t, dur, falling ? "" : " (not monotone)")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"closure suite", closure_suite},
        {"oracle equivalence", oracle_equivalence},
        {"velocity check", velocity_check},
        {"parallelogram exactness", parallelogram},
        {"compliance equilibrium", compliance},
        {"single-wingbeat articulation", articulation},
        {"aerodynamic sign test", aero_sign},
        {"synthesis recovery", recovery},
        {"determinism", determinism},
        {"timing realization", timing},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
