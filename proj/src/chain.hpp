#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flapkin/kinematics.hpp"
#include "flapkin/mechanism.hpp"

namespace flapkin::detail {

// Reduced-coordinate view of a mechanism: one relative angle per spanning-tree
// joint (coordinate 0 is the crank), link poses by forward kinematics, and the
// non-tree joints as closure constraints.
//
// Joint angle convention: q = angle(link b) - angle(link a).
class ChainModel {
public:
    explicit ChainModel(const Mechanism& m);

    const Mechanism& mechanism() const { return *mech_; }
    std::size_t link_count() const { return mech_->links.size(); }
    std::size_t coordinate_count() const { return edges_.size(); }
    std::size_t free_count() const { return edges_.size() - 1; }
    std::size_t constraint_count() const { return 2 * loops_.size(); }

    std::vector<Pose> forward(std::span<const double> coords) const;
    std::vector<double> coordinates(std::span<const Pose> poses) const;

    // Stacked world-frame mismatch (a minus b) of every non-tree joint.
    Eigen::VectorXd residual(std::span<const Pose> poses) const;
    // d residual / d coords, all coordinates including the crank.
    Eigen::MatrixXd jacobian(std::span<const Pose> poses) const;

    // Relative angle of any joint, and its gradient row w.r.t. coordinates.
    double joint_angle(std::span<const Pose> poses, std::size_t joint) const;
    Eigen::RowVectorXd joint_angle_gradient(std::size_t joint) const;

    // d(world point rigidly attached to `link`)/d coords, 2 x coordinate_count.
    Eigen::MatrixXd point_gradient(std::span<const Pose> poses, std::size_t link, const Point2& world) const;
    // sum_k w_k d^2 p_k / dq_i dq_j for the same attached point.
    Eigen::MatrixXd point_hessian(std::span<const Pose> poses, std::size_t link, const Point2& world,
                                  const Point2& weight) const;

    // Hessian of the constraint residual contracted with multipliers.
    Eigen::MatrixXd residual_hessian(std::span<const Pose> poses, const Eigen::VectorXd& multipliers) const;

    std::vector<Branch> branches(std::span<const Pose> poses) const;

    Point2 world(std::span<const Pose> poses, const MarkerRef& ref) const;

    // Parent-side pivot of tree edge e in world coordinates.
    Point2 pivot(std::span<const Pose> poses, std::size_t e) const;

    const std::vector<std::size_t>& path(std::size_t link) const { return paths_[link]; }
    double edge_sign(std::size_t e) const { return edges_[e].sign; }
    std::size_t edge_joint(std::size_t e) const { return edges_[e].joint; }

private:
    struct Edge {
        std::size_t joint;
        std::size_t parent;
        std::size_t child;
        Point2 parent_marker;
        Point2 child_marker;
        double sign;  // +1 when the child is link b of the joint
    };
    struct Loop {
        std::size_t joint;
        std::size_t link_a, link_b;
        Point2 marker_a, marker_b;
        std::size_t early, late;  // link discovered first / second
    };

    const Mechanism* mech_;
    std::size_t ground_;
    std::vector<Edge> edges_;
    std::vector<Loop> loops_;
    std::vector<std::vector<std::size_t>> paths_;  // per link, edges root->leaf
    std::vector<std::optional<std::size_t>> parent_edge_;
};

}  // namespace flapkin::detail
