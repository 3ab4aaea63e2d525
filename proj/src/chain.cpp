#include "chain.hpp"

#include <algorithm>

namespace flapkin::detail {

ChainModel::ChainModel(const Mechanism& m) : mech_(&m) {
    ground_ = m.ground_index();
    const auto tree = spanning_tree(m);
    if (!tree.connected()) {
        throw Error(ErrorCode::Disconnected, "joint graph does not connect every link to ground");
    }
    if (tree.edges.empty() || !m.joints[tree.edges.front().joint].actuated) {
        throw Error(ErrorCode::InvalidArgument, "mechanism needs an actuated joint attached to ground");
    }

    for (const auto& e : tree.edges) {
        const Joint& j = m.joints[e.joint];
        const bool child_is_b = *m.link_index(j.b.link) == e.child;
        const MarkerRef& parent_ref = child_is_b ? j.a : j.b;
        const MarkerRef& child_ref = child_is_b ? j.b : j.a;
        edges_.push_back({e.joint, e.parent, e.child, m.local_marker(parent_ref), m.local_marker(child_ref),
                          child_is_b ? 1.0 : -1.0});
    }
    for (std::size_t jt : tree.non_tree) {
        const Joint& j = m.joints[jt];
        const std::size_t la = *m.link_index(j.a.link);
        const std::size_t lb = *m.link_index(j.b.link);
        Loop loop{jt, la, lb, m.local_marker(j.a), m.local_marker(j.b), la, lb};
        if (tree.discovery[lb] < tree.discovery[la]) std::swap(loop.early, loop.late);
        loops_.push_back(loop);
    }

    parent_edge_ = tree.parent_edge;
    paths_.assign(m.links.size(), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        // BFS order guarantees the parent's path is complete.
        paths_[edges_[e].child] = paths_[edges_[e].parent];
        paths_[edges_[e].child].push_back(e);
    }
}

std::vector<Pose> ChainModel::forward(std::span<const double> coords) const {
    std::vector<Pose> poses(link_count());
    poses[ground_] = Pose{};
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const Edge& edge = edges_[e];
        const Pose& parent = poses[edge.parent];
        const double angle = parent.angle + edge.sign * coords[e];
        const Point2 pin = parent.apply(edge.parent_marker);
        poses[edge.child] = Pose{pin - rotate(edge.child_marker, angle), angle};
    }
    return poses;
}

std::vector<double> ChainModel::coordinates(std::span<const Pose> poses) const {
    std::vector<double> coords(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const Edge& edge = edges_[e];
        coords[e] = edge.sign * (poses[edge.child].angle - poses[edge.parent].angle);
    }
    return coords;
}

Point2 ChainModel::world(std::span<const Pose> poses, const MarkerRef& ref) const {
    return poses[*mech_->link_index(ref.link)].apply(mech_->local_marker(ref));
}

Point2 ChainModel::pivot(std::span<const Pose> poses, std::size_t e) const {
    return poses[edges_[e].parent].apply(edges_[e].parent_marker);
}

Eigen::VectorXd ChainModel::residual(std::span<const Pose> poses) const {
    Eigen::VectorXd r(constraint_count());
    for (std::size_t k = 0; k < loops_.size(); ++k) {
        const Loop& loop = loops_[k];
        const Point2 d = poses[loop.link_a].apply(loop.marker_a) - poses[loop.link_b].apply(loop.marker_b);
        r(2 * k) = d.x();
        r(2 * k + 1) = d.y();
    }
    return r;
}

Eigen::MatrixXd ChainModel::point_gradient(std::span<const Pose> poses, std::size_t link, const Point2& p) const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(coordinate_count()));
    for (std::size_t e : paths_[link]) {
        const Point2 v = perp(p - pivot(poses, e)) * edges_[e].sign;
        g(0, static_cast<Eigen::Index>(e)) = v.x();
        g(1, static_cast<Eigen::Index>(e)) = v.y();
    }
    return g;
}

Eigen::MatrixXd ChainModel::point_hessian(std::span<const Pose> poses, std::size_t link, const Point2& p,
                                          const Point2& w) const {
    const auto n = static_cast<Eigen::Index>(coordinate_count());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    const auto& path = paths_[link];
    // d2p/dqi dqj = -si sj (p - pivot of the joint farther from ground).
    for (std::size_t u = 0; u < path.size(); ++u) {
        for (std::size_t v = u; v < path.size(); ++v) {
            const std::size_t ei = path[u];
            const std::size_t ej = path[v];
            const double val = -edges_[ei].sign * edges_[ej].sign * dot(w, p - pivot(poses, ej));
            h(static_cast<Eigen::Index>(ei), static_cast<Eigen::Index>(ej)) = val;
            h(static_cast<Eigen::Index>(ej), static_cast<Eigen::Index>(ei)) = val;
        }
    }
    return h;
}

Eigen::MatrixXd ChainModel::jacobian(std::span<const Pose> poses) const {
    Eigen::MatrixXd jac(constraint_count(), coordinate_count());
    for (std::size_t k = 0; k < loops_.size(); ++k) {
        const Loop& loop = loops_[k];
        const Point2 pa = poses[loop.link_a].apply(loop.marker_a);
        const Point2 pb = poses[loop.link_b].apply(loop.marker_b);
        jac.middleRows(static_cast<Eigen::Index>(2 * k), 2) =
            point_gradient(poses, loop.link_a, pa) - point_gradient(poses, loop.link_b, pb);
    }
    return jac;
}

Eigen::MatrixXd ChainModel::residual_hessian(std::span<const Pose> poses, const Eigen::VectorXd& lambda) const {
    const auto n = static_cast<Eigen::Index>(coordinate_count());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < loops_.size(); ++k) {
        const Loop& loop = loops_[k];
        const Point2 w{lambda(static_cast<Eigen::Index>(2 * k)), lambda(static_cast<Eigen::Index>(2 * k + 1))};
        const Point2 pa = poses[loop.link_a].apply(loop.marker_a);
        const Point2 pb = poses[loop.link_b].apply(loop.marker_b);
        h += point_hessian(poses, loop.link_a, pa, w) - point_hessian(poses, loop.link_b, pb, w);
    }
    return h;
}

double ChainModel::joint_angle(std::span<const Pose> poses, std::size_t joint) const {
    const Joint& j = mech_->joints[joint];
    return poses[*mech_->link_index(j.b.link)].angle - poses[*mech_->link_index(j.a.link)].angle;
}

Eigen::RowVectorXd ChainModel::joint_angle_gradient(std::size_t joint) const {
    const Joint& j = mech_->joints[joint];
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(coordinate_count()));
    for (std::size_t e : paths_[*mech_->link_index(j.b.link)]) g(static_cast<Eigen::Index>(e)) += edges_[e].sign;
    for (std::size_t e : paths_[*mech_->link_index(j.a.link)]) g(static_cast<Eigen::Index>(e)) -= edges_[e].sign;
    return g;
}

std::vector<Branch> ChainModel::branches(std::span<const Pose> poses) const {
    std::vector<Branch> out;
    out.reserve(loops_.size());
    for (const Loop& loop : loops_) {
        const Point2 joint = poses[loop.link_a].apply(loop.marker_a);
        auto parent_pivot = [&](std::size_t link) {
            return pivot(poses, *parent_edge_[link]);
        };
        const Point2 p_late = parent_pivot(loop.late);
        const Point2 p_early = parent_pivot(loop.early);
        out.push_back(cross(p_early - p_late, joint - p_late) >= 0.0 ? Branch::Open : Branch::Crossed);
    }
    return out;
}

}  // namespace flapkin::detail
