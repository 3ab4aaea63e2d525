#include "flapkin/compliance.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "chain.hpp"
#include "kinematics_internal.hpp"

namespace flapkin {

using detail::ChainModel;

double hinge_stiffness(const HingeGeometry& hg) {
    for (double v : {hg.width, hg.thickness, hg.length, hg.elastic_modulus}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::InvalidArgument, "hinge geometry values must be positive and finite");
        }
    }
    const double second_moment = hg.width * hg.thickness * hg.thickness * hg.thickness / 12.0;
    return hg.elastic_modulus * second_moment / hg.length;
}

bool thin_hinge_regime(const HingeGeometry& hg) { return hg.thickness <= hg.width; }

double elastic_energy(const Mechanism& m, const Configuration& c) {
    double energy = 0.0;
    for (const auto& joint : m.joints) {
        const auto* hinge = joint.hinge();
        if (!hinge) continue;
        const auto la = m.link_index(joint.a.link);
        const auto lb = m.link_index(joint.b.link);
        if (!la || !lb) throw Error(ErrorCode::UnknownLink, "joint '" + joint.id + "' references an unknown link");
        const double deflection = c.poses.at(*lb).angle - c.poses.at(*la).angle - hinge->rest_angle;
        energy += 0.5 * hinge->stiffness * deflection * deflection;
    }
    return energy;
}

namespace {

double load_work(const Mechanism& m, const Configuration& c, const LoadCase& load) {
    double work = 0.0;
    for (const auto& f : load.forces) work += dot(f.force, marker_world(m, c, f.at));
    for (const auto& mo : load.moments) {
        const auto ji = m.joint_index(mo.joint);
        if (!ji) throw Error(ErrorCode::UnknownJoint, "load references unknown joint '" + mo.joint + "'");
        const Joint& j = m.joints[*ji];
        work += mo.moment * (c.poses.at(*m.link_index(j.b.link)).angle - c.poses.at(*m.link_index(j.a.link)).angle);
    }
    return work;
}

void check_load(const Mechanism& m, const LoadCase& load) {
    for (const auto& f : load.forces) (void)m.local_marker(f.at);
    for (const auto& mo : load.moments) {
        if (!m.joint_index(mo.joint)) throw Error(ErrorCode::UnknownJoint, "load references unknown joint '" + mo.joint + "'");
        if (!std::isfinite(mo.moment)) throw Error(ErrorCode::InvalidArgument, "joint moment must be finite");
    }
}

// Total potential with its gradient and Hessian over the free coordinates.
class Potential {
public:
    Potential(const ChainModel& chain, const LoadCase& load) : chain_(chain), load_(load) {
        const Mechanism& m = chain.mechanism();
        for (std::size_t j = 0; j < m.joints.size(); ++j) {
            if (const auto* h = m.joints[j].hinge()) {
                hinges_.push_back({j, h->stiffness, h->rest_angle, chain.joint_angle_gradient(j).tail(nfree())});
                k_max_ = std::max(k_max_, h->stiffness);
            }
        }
        for (const auto& f : load.forces) force_links_.push_back(*m.link_index(f.at.link));
        for (const auto& mo : load.moments) {
            moment_grads_.push_back(chain.joint_angle_gradient(*m.joint_index(mo.joint)).tail(nfree()));
        }
    }

    Eigen::Index nfree() const { return static_cast<Eigen::Index>(chain_.free_count()); }
    double k_max() const { return k_max_; }

    double value(std::span<const Pose> poses) const {
        double v = 0.0;
        for (const auto& h : hinges_) {
            const double d = chain_.joint_angle(poses, h.joint) - h.rest;
            v += 0.5 * h.k * d * d;
        }
        for (std::size_t i = 0; i < load_.forces.size(); ++i) {
            v -= dot(load_.forces[i].force, chain_.world(poses, load_.forces[i].at));
        }
        for (std::size_t i = 0; i < load_.moments.size(); ++i) {
            v -= load_.moments[i].moment * chain_.joint_angle(poses, *chain_.mechanism().joint_index(load_.moments[i].joint));
        }
        return v;
    }

    Eigen::VectorXd gradient(std::span<const Pose> poses) const {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(nfree());
        for (const auto& h : hinges_) {
            g += h.k * (chain_.joint_angle(poses, h.joint) - h.rest) * h.grad.transpose();
        }
        for (std::size_t i = 0; i < load_.forces.size(); ++i) {
            const Point2 p = chain_.world(poses, load_.forces[i].at);
            const Eigen::MatrixXd gp = chain_.point_gradient(poses, force_links_[i], p).rightCols(nfree());
            const Eigen::Vector2d f{load_.forces[i].force.x(), load_.forces[i].force.y()};
            g -= gp.transpose() * f;
        }
        for (std::size_t i = 0; i < load_.moments.size(); ++i) {
            g -= load_.moments[i].moment * moment_grads_[i].transpose();
        }
        return g;
    }

    Eigen::MatrixXd hessian(std::span<const Pose> poses) const {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(nfree(), nfree());
        for (const auto& hg : hinges_) h += hg.k * hg.grad.transpose() * hg.grad;
        for (std::size_t i = 0; i < load_.forces.size(); ++i) {
            const Point2 p = chain_.world(poses, load_.forces[i].at);
            h -= chain_.point_hessian(poses, force_links_[i], p, load_.forces[i].force).bottomRightCorner(nfree(), nfree());
        }
        return h;
    }

private:
    struct Hinge {
        std::size_t joint;
        double k;
        double rest;
        Eigen::RowVectorXd grad;
    };
    const ChainModel& chain_;
    const LoadCase& load_;
    std::vector<Hinge> hinges_;
    std::vector<std::size_t> force_links_;
    std::vector<Eigen::RowVectorXd> moment_grads_;
    double k_max_ = 0.0;
};

std::vector<double> step_coords(const std::vector<double>& base, const Eigen::VectorXd& step, double t) {
    std::vector<double> next = base;
    for (Eigen::Index i = 0; i < step.size(); ++i) next[static_cast<std::size_t>(i + 1)] += t * step(i);
    return next;
}

// Component of g orthogonal to the row space of the constraint Jacobian.
Eigen::VectorXd project_gradient(const Eigen::VectorXd& g, const Eigen::MatrixXd& jac) {
    if (jac.rows() == 0) return g;
    const Eigen::VectorXd lambda = jac.transpose().colPivHouseholderQr().solve(g);
    return g - jac.transpose() * lambda;
}

// Regularised Newton minimisation of potential + mu/2 |r|^2.
int minimise_penalty(const ChainModel& chain, const Potential& pot, double mu, std::vector<double>& coords,
                     int max_iterations, double gtol) {
    const Eigen::Index n = pot.nfree();
    auto merit = [&](const std::vector<double>& q) {
        const auto poses = chain.forward(q);
        return pot.value(poses) + 0.5 * mu * chain.residual(poses).squaredNorm();
    };
    int it = 0;
    for (; it < max_iterations; ++it) {
        const auto poses = chain.forward(coords);
        const Eigen::VectorXd r = chain.residual(poses);
        const Eigen::MatrixXd jac = chain.jacobian(poses).rightCols(n);
        const Eigen::VectorXd g = pot.gradient(poses) + mu * jac.transpose() * r;
        if (g.norm() <= gtol) break;
        Eigen::MatrixXd h = pot.hessian(poses) + mu * jac.transpose() * jac;
        if (r.size() > 0) h += mu * chain.residual_hessian(poses, r).bottomRightCorner(n, n);

        Eigen::VectorXd step;
        double shift = 0.0;
        const double hscale = std::max(1e-300, h.diagonal().cwiseAbs().maxCoeff());
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::LLT<Eigen::MatrixXd> llt(h + shift * Eigen::MatrixXd::Identity(n, n));
            if (llt.info() == Eigen::Success) {
                step = llt.solve(-g);
                break;
            }
            shift = shift == 0.0 ? 1e-10 * hscale : shift * 10.0;
        }
        if (step.size() == 0) step = -g / hscale;

        const double f0 = merit(coords);
        const double slope = g.dot(step);
        double t = 1.0;
        bool moved = false;
        for (int h2 = 0; h2 <= 30; ++h2, t *= 0.5) {
            auto trial = step_coords(coords, step, t);
            if (merit(trial) <= f0 + 1e-4 * t * slope) {
                coords = std::move(trial);
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return it;
}

}  // namespace

double total_potential(const Mechanism& m, const Configuration& c, const LoadCase& load) {
    return elastic_energy(m, c) - load_work(m, c, load);
}

EquilibriumResult solve_equilibrium(const Mechanism& m, double theta, const LoadCase& load, const SolveSettings& s,
                                    const std::optional<Configuration>& guess) {
    s.check();
    check_load(m, load);
    const ChainModel chain(m);
    const Configuration seed = guess ? *guess : reference_configuration(m, theta);
    if (seed.poses.size() != m.links.size()) throw Error(ErrorCode::InvalidArgument, "guess does not cover every link");

    const bool any_hinge = std::any_of(m.joints.begin(), m.joints.end(), [](const Joint& j) { return j.is_compliant(); });
    EquilibriumResult result;
    if (!any_hinge) {
        result.configuration = assemble(m, theta, seed, s, &result.iterations);
        result.closure_residual = loop_residual(m, result.configuration).norm();
        return result;
    }

    const Potential pot(chain, load);
    const Eigen::Index n = pot.nfree();
    std::vector<double> coords = chain.coordinates(seed.poses);
    coords[0] = theta;

    double length = 1e-9;
    for (const auto& link : m.links) {
        for (const auto& mk : link.markers) length = std::max(length, mk.at.norm());
    }
    const double stationarity_tol = s.tolerance * pot.k_max();

    // Penalty continuation.
    double mu = pot.k_max() / (length * length);
    for (int stage = 0; stage < 5; ++stage, mu *= 10.0) {
        result.iterations += minimise_penalty(chain, pot, mu, coords, s.max_iterations, stationarity_tol);
    }

    // Projected Newton polish on the KKT system.
    const Eigen::Index nc = static_cast<Eigen::Index>(chain.constraint_count());
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nc);
    auto kkt_norm = [&](const std::vector<double>& q, const Eigen::VectorXd& lam) {
        const auto poses = chain.forward(q);
        const Eigen::MatrixXd jac = chain.jacobian(poses).rightCols(n);
        const Eigen::VectorXd g = pot.gradient(poses) + jac.transpose() * lam;
        return g.norm() + pot.k_max() / length * chain.residual(poses).norm();
    };
    {
        const auto poses = chain.forward(coords);
        const Eigen::MatrixXd jac = chain.jacobian(poses).rightCols(n);
        if (nc > 0) lambda = -(jac.transpose().colPivHouseholderQr().solve(pot.gradient(poses)));
    }
    bool converged = false;
    for (int it = 0; it <= s.max_iterations; ++it) {
        const auto poses = chain.forward(coords);
        const Eigen::VectorXd r = chain.residual(poses);
        const Eigen::MatrixXd jac = chain.jacobian(poses).rightCols(n);
        const Eigen::VectorXd g = pot.gradient(poses);
        const Eigen::VectorXd pg = project_gradient(g, jac);
        if (pg.norm() <= stationarity_tol && r.norm() <= s.tolerance) {
            converged = true;
            result.projected_gradient_norm = pg.norm();
            result.closure_residual = r.norm();
            break;
        }
        if (it == s.max_iterations) break;
        ++result.iterations;

        Eigen::MatrixXd h = pot.hessian(poses);
        if (nc > 0) h += chain.residual_hessian(poses, lambda).bottomRightCorner(n, n);
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + nc, n + nc);
        kkt.topLeftCorner(n, n) = h;
        kkt.topRightCorner(n, nc) = jac.transpose();
        kkt.bottomLeftCorner(nc, n) = jac;
        Eigen::VectorXd rhs(n + nc);
        rhs.head(n) = -g;
        rhs.tail(nc) = -r;
        const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
        const Eigen::VectorXd dq = sol.head(n);
        const Eigen::VectorXd new_lambda = sol.tail(nc);

        const double before = kkt_norm(coords, lambda);
        double t = 1.0;
        bool moved = false;
        for (int h2 = 0; h2 <= 20; ++h2, t *= 0.5) {
            auto trial = step_coords(coords, dq, t);
            const Eigen::VectorXd trial_lambda = lambda + t * (new_lambda - lambda);
            if (kkt_norm(trial, trial_lambda) < before) {
                coords = std::move(trial);
                lambda = trial_lambda;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    if (!converged) {
        throw Error(ErrorCode::NoConvergence, "equilibrium solve did not reach stationarity");
    }

    result.configuration = detail::make_configuration(chain, theta, coords);
    for (const auto& joint : m.joints) {
        const auto* h = joint.hinge();
        if (!h) continue;
        const double defl = result.configuration.poses[*m.link_index(joint.b.link)].angle -
                            result.configuration.poses[*m.link_index(joint.a.link)].angle - h->rest_angle;
        if (std::abs(defl) > kPi / 2.0) {
            result.warnings.push_back("LARGE_DEFLECTION " + joint.id);
        }
    }
    return result;
}

}  // namespace flapkin
