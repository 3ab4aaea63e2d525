#include "flapkin/kinematics.hpp"

#include <algorithm>
#include <limits>

#include <Eigen/Dense>

#include "chain.hpp"
#include "kinematics_internal.hpp"

namespace flapkin {

using detail::ChainModel;

const char* to_string(Branch b) { return b == Branch::Open ? "open" : "crossed"; }

void SolveSettings::check() const {
    if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "solver tolerance must be positive");
    if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be at least 1");
}

Configuration reference_configuration(const Mechanism& m, double theta) {
    Configuration c;
    c.crank_angle = theta;
    c.poses.reserve(m.links.size());
    for (const auto& link : m.links) c.poses.push_back(link.reference_pose);
    return c;
}

Point2 marker_world(const Mechanism& m, const Configuration& c, std::string_view link, std::string_view marker) {
    const auto li = m.link_index(link);
    if (!li) throw Error(ErrorCode::UnknownMarker, "unknown link '" + std::string(link) + "'");
    const Marker* mk = m.links[*li].find_marker(marker);
    if (!mk) {
        throw Error(ErrorCode::UnknownMarker,
                    "link '" + std::string(link) + "' has no marker '" + std::string(marker) + "'");
    }
    if (*li >= c.poses.size()) throw Error(ErrorCode::InvalidArgument, "configuration does not cover every link");
    return c.poses[*li].apply(mk->at);
}

Point2 marker_world(const Mechanism& m, const Configuration& c, const MarkerRef& ref) {
    return marker_world(m, c, ref.link, ref.marker);
}

// --- closed-form four-bar ---------------------------------------------------

namespace {

struct Diagonal {
    Point2 crank_pin;
    Point2 rocker_pivot;
    double length;
    double angle;
};

Diagonal diagonal(const FourBar& fb, double theta) {
    const Point2 a = polar(fb.crank, theta);
    const Point2 o4{fb.ground, 0.0};
    const Point2 d = o4 - a;
    return {a, o4, d.norm(), d.angle()};
}

double scale_of(const FourBar& fb) { return std::max({fb.ground, fb.crank, fb.coupler, fb.rocker}); }

// Area of a triangle with side lengths, numerically stable for slivers.
double triangle_area(double p, double q, double r) {
    std::array<double, 3> s{p, q, r};
    std::sort(s.begin(), s.end(), std::greater<>());
    const double x = s[0], y = s[1], z = s[2];
    const double prod = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
    return prod > 0.0 ? 0.25 * std::sqrt(prod) : 0.0;
}

// Interior angle at the crank pin between the diagonal and the coupler.
double coupler_half_angle(const FourBar& fb, const Diagonal& diag) {
    const double b = fb.coupler, c = fb.rocker, d = diag.length;
    const double cos_g = (b * b + d * d - c * c) / (2.0 * b * d);
    const double sin_g = 2.0 * triangle_area(b, c, d) / (b * d);
    return std::atan2(sin_g, cos_g);
}

}  // namespace

bool fourbar_assemblable(const FourBar& fb, double theta) {
    check_fourbar(fb);
    const Diagonal diag = diagonal(fb, theta);
    const double slack = 1e-12 * scale_of(fb);
    return diag.length > slack && diag.length >= std::abs(fb.coupler - fb.rocker) - slack &&
           diag.length <= fb.coupler + fb.rocker + slack;
}

FourBarAngles fourbar_angles(const FourBar& fb, double theta, Branch branch) {
    if (!fourbar_assemblable(fb, theta)) {
        throw Error(ErrorCode::NotAssemblable, "four-bar cannot close at crank angle " + std::to_string(theta));
    }
    const Diagonal diag = diagonal(fb, theta);
    const double gamma = coupler_half_angle(fb, diag);
    FourBarAngles out;
    out.coupler = branch == Branch::Open ? diag.angle + gamma : diag.angle - gamma;
    const Point2 pin = diag.crank_pin + polar(fb.coupler, out.coupler);
    out.rocker = (pin - diag.rocker_pivot).angle();
    return out;
}

Configuration solve_fourbar(const FourBar& fb, double theta, Branch branch) {
    const FourBarAngles ang = fourbar_angles(fb, theta, branch);
    Configuration c;
    c.crank_angle = theta;
    c.poses = {Pose{},
               Pose{Point2{}, theta},
               Pose{polar(fb.crank, theta), ang.coupler},
               Pose{Point2{fb.ground, 0.0}, ang.rocker}};
    c.branches = {branch};
    return c;
}

Mechanism make_fourbar_mechanism(const FourBar& fb, Branch branch) {
    check_fourbar(fb);
    Mechanism m;
    m.ground = "ground";
    m.links = {
        Link{"ground", {{"origin", {0.0, 0.0}}, {"rocker_pivot", {fb.ground, 0.0}}}, LinkRole::Ground, {}},
        Link{"crank", {{"origin", {0.0, 0.0}}, {"tip", {fb.crank, 0.0}}}, LinkRole::Crank, {}},
        Link{"coupler",
             {{"origin", {0.0, 0.0}}, {"rocker_pin", {fb.coupler, 0.0}}, {"point", fb.coupler_point}},
             LinkRole::Coupler,
             {}},
        Link{"rocker", {{"origin", {0.0, 0.0}}, {"tip", {fb.rocker, 0.0}}}, LinkRole::Rocker, {}},
    };
    m.joints = {
        Joint{"motor", {"ground", "origin"}, {"crank", "origin"}, RigidPin{}, true},
        Joint{"rocker_pivot", {"ground", "rocker_pivot"}, {"rocker", "origin"}, RigidPin{}, false},
        Joint{"crank_pin", {"crank", "tip"}, {"coupler", "origin"}, RigidPin{}, false},
        Joint{"coupler_pin", {"coupler", "rocker_pin"}, {"rocker", "tip"}, RigidPin{}, false},
    };
    m.wing_polygon = {{"ground", "origin"}, {"crank", "tip"}, {"rocker", "tip"}, {"ground", "rocker_pivot"}};
    m.shoulder = {"rocker", "origin"};
    m.wingtip = {"rocker", "tip"};

    if (fourbar_assemblable(fb, 0.0)) {
        const Configuration c = solve_fourbar(fb, 0.0, branch);
        for (std::size_t i = 0; i < m.links.size(); ++i) m.links[i].reference_pose = c.poses[i];
    } else {
        m.links[3].reference_pose = Pose{Point2{fb.ground, 0.0}, 0.0};
    }
    return m;
}

double transmission_angle(const FourBar& fb, const Configuration& c) {
    if (c.poses.size() != 4) throw Error(ErrorCode::InvalidArgument, "expected a four-bar configuration");
    const Point2 crank_pin = c.poses[1].apply({fb.crank, 0.0});
    const Point2 rocker_pin = c.poses[2].apply({fb.coupler, 0.0});
    const Point2 rocker_pivot = c.poses[3].origin;
    return detail::folded_angle(crank_pin - rocker_pin, rocker_pivot - rocker_pin);
}

namespace detail {

double folded_angle(const Point2& u, const Point2& v) {
    const double mu = std::atan2(std::abs(cross(u, v)), dot(u, v));
    return mu > kPi / 2.0 ? kPi - mu : mu;
}

}  // namespace detail

// --- Newton assembly ----------------------------------------------------------

Eigen::VectorXd loop_residual(const Mechanism& m, const Configuration& c) {
    const ChainModel chain(m);
    if (c.poses.size() != m.links.size()) {
        throw Error(ErrorCode::InvalidArgument, "configuration does not cover every link");
    }
    return chain.residual(c.poses);
}

Eigen::VectorXd joint_mismatch(const Mechanism& m, const Configuration& c) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(2 * m.joints.size()));
    for (std::size_t j = 0; j < m.joints.size(); ++j) {
        const Point2 d = marker_world(m, c, m.joints[j].a) - marker_world(m, c, m.joints[j].b);
        r(static_cast<Eigen::Index>(2 * j)) = d.x();
        r(static_cast<Eigen::Index>(2 * j + 1)) = d.y();
    }
    return r;
}

namespace detail {

namespace {

bool has_change_point_loop(const Mechanism& m) {
    for (const auto& loop : four_bar_loops(m)) {
        try {
            if (grashof_classify(loop.dimensions) == GrashofClass::ChangePoint) return true;
        } catch (const Error&) {
        }
    }
    return false;
}

// Newton step for J * dq = -r on the free coordinates. Empty optional when singular.
std::optional<Eigen::VectorXd> newton_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& r) {
    constexpr double kSingular = 1e-12;
    if (jac.rows() == jac.cols()) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        if (!(lu.rcond() > kSingular)) return std::nullopt;
        return Eigen::VectorXd(lu.solve(-r));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || !(sv(sv.size() - 1) > kSingular * sv(0))) return std::nullopt;
    return Eigen::VectorXd(svd.solve(-r));
}

}  // namespace

NewtonOutcome newton_close(const ChainModel& chain, std::vector<double> coords, const SolveSettings& s) {
    NewtonOutcome out;
    const auto nfree = static_cast<Eigen::Index>(chain.free_count());
    auto poses = chain.forward(coords);
    Eigen::VectorXd r = chain.residual(poses);
    double norm = r.norm();

    auto apply = [&](const std::vector<double>& base, const Eigen::VectorXd& step, double t) {
        std::vector<double> next = base;
        for (Eigen::Index i = 0; i < nfree; ++i) next[static_cast<std::size_t>(i + 1)] += t * step(i);
        return next;
    };

    if (norm <= s.tolerance) {
        out.converged = true;
        out.coords = std::move(coords);
        return out;
    }
    for (int it = 1; it <= s.max_iterations; ++it) {
        out.iterations = it;
        const Eigen::MatrixXd jac = chain.jacobian(poses).rightCols(nfree);
        const auto step = newton_step(jac, r);
        if (!step) {
            out.code = ErrorCode::SingularJacobian;
            out.singular_at_start = it == 1;
            out.coords = std::move(coords);
            out.residual_norm = norm;
            return out;
        }
        // Damping: halve until the residual decreases, at most 20 halvings.
        double t = 1.0;
        bool accepted = false;
        std::vector<double> trial;
        std::vector<Pose> trial_poses;
        Eigen::VectorXd trial_r;
        for (int h = 0; h <= 20; ++h, t *= 0.5) {
            trial = apply(coords, *step, t);
            trial_poses = chain.forward(trial);
            trial_r = chain.residual(trial_poses);
            if (trial_r.norm() < norm) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.code = ErrorCode::NoConvergence;
            out.stalled = true;
            out.coords = std::move(coords);
            out.residual_norm = norm;
            return out;
        }
        coords = std::move(trial);
        poses = std::move(trial_poses);
        r = std::move(trial_r);
        norm = r.norm();
        if (norm <= s.tolerance) {
            // One undamped polish step; quadratic convergence makes it nearly free accuracy.
            const Eigen::MatrixXd pj = chain.jacobian(poses).rightCols(nfree);
            if (const auto polish = newton_step(pj, r)) {
                auto pc = apply(coords, *polish, 1.0);
                const Eigen::VectorXd pr = chain.residual(chain.forward(pc));
                if (pr.norm() < norm) {
                    coords = std::move(pc);
                    norm = pr.norm();
                }
            }
            out.converged = true;
            out.coords = std::move(coords);
            out.residual_norm = norm;
            return out;
        }
    }
    out.code = ErrorCode::NoConvergence;
    out.coords = std::move(coords);
    out.residual_norm = norm;
    return out;
}

Configuration make_configuration(const ChainModel& chain, double theta, const std::vector<double>& coords) {
    Configuration c;
    c.crank_angle = theta;
    c.poses = chain.forward(coords);
    c.branches = chain.branches(c.poses);
    return c;
}

// Steps off a bifurcation along the Jacobian null direction and keeps the
// nearest root whose circuits match the hint. coords[0] is the crank angle.
std::vector<double> hinted_root(const ChainModel& chain, const std::vector<double>& coords, const SolveSettings& s) {
    const auto nfree = static_cast<Eigen::Index>(chain.free_count());
    const Eigen::MatrixXd jac = chain.jacobian(chain.forward(coords)).rightCols(nfree);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
    const Eigen::VectorXd null_dir = svd.matrixV().col(nfree - 1);
    SolveSettings plain = s;
    plain.branch_hint.clear();
    std::optional<std::vector<double>> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (double eps : {1e-3, -1e-3, 1e-2, -1e-2, 1e-1, -1e-1}) {
        std::vector<double> start = coords;
        for (Eigen::Index i = 0; i < nfree; ++i) start[static_cast<std::size_t>(i + 1)] += eps * null_dir(i);
        NewtonOutcome trial = newton_close(chain, start, plain);
        if (!trial.converged) continue;
        if (chain.branches(chain.forward(trial.coords)) != s.branch_hint) continue;
        double dist = 0.0;
        for (std::size_t i = 0; i < coords.size(); ++i) dist += std::abs(trial.coords[i] - coords[i]);
        if (dist < best_dist) {
            best_dist = dist;
            best = trial.coords;
        }
    }
    if (!best) throw Error(ErrorCode::BranchAmbiguous, "no root near the change point matches the branch hint");
    return *best;
}

bool jacobian_singular(const ChainModel& chain, const std::vector<double>& coords) {
    const auto nfree = static_cast<Eigen::Index>(chain.free_count());
    if (nfree == 0) return false;
    const Eigen::MatrixXd jac = chain.jacobian(chain.forward(coords)).rightCols(nfree);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    const auto& sv = svd.singularValues();
    return sv.size() == 0 || sv(sv.size() - 1) <= 1e-9 * sv(0);
}

std::vector<double> assemble_coords(const ChainModel& chain, double theta, std::vector<double> coords,
                                    const SolveSettings& s, int* iterations) {
    coords[0] = theta;
    NewtonOutcome out = newton_close(chain, coords, s);
    if (iterations) *iterations = out.iterations;
    if (out.converged) return std::move(out.coords);

    if (out.code == ErrorCode::SingularJacobian && out.singular_at_start) {
        const Mechanism& m = chain.mechanism();
        if (s.branch_hint.empty()) {
            if (has_change_point_loop(m)) {
                throw Error(ErrorCode::BranchAmbiguous,
                            "singular start at a change point; supply a branch hint");
            }
            throw Error(ErrorCode::SingularJacobian, "constraint Jacobian is singular at the initial guess");
        }
        return hinted_root(chain, coords, s);
    }
    switch (out.code) {
        case ErrorCode::SingularJacobian:
            throw Error(out.code, "constraint Jacobian became singular (dead-center configuration)");
        default:
            if (out.stalled) {
                throw Error(ErrorCode::NoConvergence,
                            "residual stopped decreasing after 20 step halvings at theta=" + std::to_string(theta));
            }
            throw Error(ErrorCode::NoConvergence,
                        "Newton iteration did not converge within " + std::to_string(s.max_iterations) +
                            " iterations");
    }
}

}  // namespace detail

Configuration assemble(const Mechanism& m, double theta, const Configuration& guess, const SolveSettings& s,
                       int* iterations) {
    s.check();
    const ChainModel chain(m);
    if (guess.poses.size() != m.links.size()) {
        throw Error(ErrorCode::InvalidArgument, "guess does not cover every link");
    }
    std::vector<double> coords = chain.coordinates(guess.poses);
    const bool crank_exact = std::abs(coords[0] - theta) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                                                 std::max(1.0, std::abs(theta));
    if (crank_exact && joint_mismatch(m, guess).norm() <= s.tolerance) {
        if (iterations) *iterations = 0;
        Configuration c = guess;
        c.crank_angle = theta;
        c.branches = chain.branches(c.poses);
        return c;
    }
    const auto solved = detail::assemble_coords(chain, theta, std::move(coords), s, iterations);
    return detail::make_configuration(chain, theta, solved);
}

SweepResult sweep(const Mechanism& m, double theta_begin, double theta_end, std::size_t steps,
                  const SolveSettings& s, const std::optional<Configuration>& guess) {
    if (steps < 2) throw Error(ErrorCode::InvalidArgument, "sweep needs at least 2 steps");
    s.check();
    const ChainModel chain(m);
    const Configuration seed = guess ? *guess : reference_configuration(m, theta_begin);
    if (seed.poses.size() != m.links.size()) throw Error(ErrorCode::InvalidArgument, "guess does not cover every link");

    SweepResult result;
    result.configurations.reserve(steps);
    std::vector<double> prev, prev2;
    const double span = theta_end - theta_begin;
    const bool change_point = detail::has_change_point_loop(m);
    bool leaving_change_point = false;
    for (std::size_t k = 0; k < steps; ++k) {
        const double theta =
            k + 1 == steps ? theta_end : theta_begin + span * static_cast<double>(k) / static_cast<double>(steps - 1);
        std::vector<double> start;
        if (k == 0) {
            start = chain.coordinates(seed.poses);
        } else if (k == 1) {
            start = prev;
        } else {
            start.resize(prev.size());
            for (std::size_t i = 0; i < prev.size(); ++i) start[i] = 2.0 * prev[i] - prev2[i];
        }
        try {
            std::vector<double> seed_coords = start;
            auto solved = detail::assemble_coords(chain, theta, std::move(start), s, nullptr);
            if (k == 0 && change_point && detail::jacobian_singular(chain, solved)) {
                if (s.branch_hint.empty()) {
                    throw Error(ErrorCode::BranchAmbiguous, "sweep starts on a change point; supply a branch hint");
                }
                leaving_change_point = true;
            } else if (k == 1 && leaving_change_point &&
                       chain.branches(chain.forward(solved)) != s.branch_hint) {
                seed_coords[0] = theta;
                solved = detail::hinted_root(chain, seed_coords, s);
            }
            result.configurations.push_back(detail::make_configuration(chain, theta, solved));
            prev2 = std::move(prev);
            prev = std::move(solved);
        } catch (const Error& e) {
            result.failure = SweepFailure{k, e.code(), e.what()};
            break;
        }
    }
    return result;
}

SweepResult sweep_fourbar(const FourBar& fb, double theta_begin, double theta_end, std::size_t steps,
                          std::optional<Branch> initial) {
    if (steps < 2) throw Error(ErrorCode::InvalidArgument, "sweep needs at least 2 steps");
    check_fourbar(fb);
    SweepResult result;
    const double span = theta_end - theta_begin;
    const double collinear_tol = 1e-9;
    for (std::size_t k = 0; k < steps; ++k) {
        const double theta =
            k + 1 == steps ? theta_end : theta_begin + span * static_cast<double>(k) / static_cast<double>(steps - 1);
        if (!fourbar_assemblable(fb, theta)) {
            result.failure = SweepFailure{k, ErrorCode::NotAssemblable,
                                          "four-bar cannot close at crank angle " + std::to_string(theta)};
            break;
        }
        const FourBarAngles open = fourbar_angles(fb, theta, Branch::Open);
        const FourBarAngles crossed = fourbar_angles(fb, theta, Branch::Crossed);
        Branch pick;
        FourBarAngles chosen;
        if (k == 0) {
            const bool coincide = std::abs(wrap_angle(open.coupler - crossed.coupler)) < collinear_tol;
            if (coincide && !initial) {
                result.failure = SweepFailure{k, ErrorCode::BranchAmbiguous,
                                              "sweep starts on a change point; supply an initial branch"};
                break;
            }
            pick = initial.value_or(Branch::Open);
            chosen = pick == Branch::Open ? open : crossed;
        } else {
            const auto& c1 = result.configurations.back().poses;
            double pc = c1[2].angle, pr = c1[3].angle;
            if (k >= 2) {
                const auto& c0 = result.configurations[k - 2].poses;
                pc = 2.0 * c1[2].angle - c0[2].angle;
                pr = 2.0 * c1[3].angle - c0[3].angle;
            }
            auto dist = [&](const FourBarAngles& a) {
                return std::hypot(wrap_angle(a.coupler - pc), wrap_angle(a.rocker - pr));
            };
            pick = dist(open) <= dist(crossed) ? Branch::Open : Branch::Crossed;
            chosen = pick == Branch::Open ? open : crossed;
            chosen.coupler = unwrap_near(chosen.coupler, c1[2].angle);
            chosen.rocker = unwrap_near(chosen.rocker, c1[3].angle);
        }
        Configuration c;
        c.crank_angle = theta;
        c.poses = {Pose{}, Pose{Point2{}, theta}, Pose{polar(fb.crank, theta), chosen.coupler},
                   Pose{Point2{fb.ground, 0.0}, chosen.rocker}};
        c.branches = {pick};
        result.configurations.push_back(std::move(c));
    }
    return result;
}

std::vector<LinkVelocity> velocities(const Mechanism& m, const Configuration& c, double crank_rate) {
    const ChainModel chain(m);
    if (c.poses.size() != m.links.size()) throw Error(ErrorCode::InvalidArgument, "configuration does not cover every link");
    const auto nfree = static_cast<Eigen::Index>(chain.free_count());
    Eigen::VectorXd rates = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(chain.coordinate_count()));
    rates(0) = crank_rate;
    if (chain.constraint_count() > 0 && nfree > 0) {
        const Eigen::MatrixXd jac = chain.jacobian(c.poses);
        const Eigen::VectorXd rhs = -jac.col(0) * crank_rate;
        const Eigen::MatrixXd jf = jac.rightCols(nfree);
        std::optional<Eigen::VectorXd> qdot;
        if (jf.rows() == jf.cols()) {
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(jf);
            if (lu.rcond() > 1e-12) qdot = lu.solve(rhs);
        } else {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(jf, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const auto& sv = svd.singularValues();
            if (sv.size() > 0 && sv(sv.size() - 1) > 1e-12 * sv(0)) qdot = svd.solve(rhs);
        }
        if (!qdot) throw Error(ErrorCode::SingularJacobian, "velocity solve is singular (dead-center configuration)");
        rates.tail(nfree) = *qdot;
    }
    std::vector<LinkVelocity> out(m.links.size());
    for (std::size_t l = 0; l < m.links.size(); ++l) {
        double omega = 0.0;
        Point2 v{};
        for (std::size_t e : chain.path(l)) {
            const double rate = chain.edge_sign(e) * rates(static_cast<Eigen::Index>(e));
            omega += rate;
            v += perp(c.poses[l].origin - chain.pivot(c.poses, e)) * rate;
        }
        out[l] = LinkVelocity{v, omega};
    }
    return out;
}

namespace detail {

std::vector<double> loop_transmission_angles(const Mechanism& m, const Configuration& c,
                                             std::span<const FourBarLoop> loops) {
    std::vector<double> out;
    out.reserve(loops.size());
    for (const auto& loop : loops) {
        auto at = [&](std::size_t joint) { return marker_world(m, c, m.joints[joint].a); };
        const Point2 pin = at(loop.joints[2]);
        out.push_back(folded_angle(at(loop.joints[1]) - pin, at(loop.joints[3]) - pin));
    }
    return out;
}

}  // namespace detail

std::vector<double> loop_transmission_angles(const Mechanism& m, const Configuration& c) {
    return detail::loop_transmission_angles(m, c, four_bar_loops(m));
}

}  // namespace flapkin
