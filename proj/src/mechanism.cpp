#include "flapkin/mechanism.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <unordered_set>

#include "flapkin/error.hpp"

namespace flapkin {

const char* to_string(LinkRole role) {
    switch (role) {
        case LinkRole::Ground: return "ground";
        case LinkRole::Crank: return "crank";
        case LinkRole::Coupler: return "coupler";
        case LinkRole::Rocker: return "rocker";
        case LinkRole::Generic: return "generic";
    }
    return "generic";
}

std::optional<LinkRole> link_role_from_string(std::string_view name) {
    for (auto role : {LinkRole::Ground, LinkRole::Crank, LinkRole::Coupler, LinkRole::Rocker,
                      LinkRole::Generic}) {
        if (name == to_string(role)) return role;
    }
    return std::nullopt;
}

const Marker* Link::find_marker(std::string_view name) const {
    for (const auto& marker : markers) {
        if (marker.name == name) return &marker;
    }
    return nullptr;
}

std::optional<std::size_t> Mechanism::link_index(std::string_view id) const {
    for (std::size_t i = 0; i < links.size(); ++i) {
        if (links[i].id == id) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> Mechanism::joint_index(std::string_view id) const {
    for (std::size_t i = 0; i < joints.size(); ++i) {
        if (joints[i].id == id) return i;
    }
    return std::nullopt;
}

const Point2& Mechanism::local_marker(const MarkerRef& ref) const {
    const auto li = link_index(ref.link);
    if (!li) throw Error(ErrorCode::UnknownLink, "unknown link '" + ref.link + "'");
    const Marker* marker = links[*li].find_marker(ref.marker);
    if (!marker) {
        throw Error(ErrorCode::UnknownMarker,
                    "link '" + ref.link + "' has no marker '" + ref.marker + "'");
    }
    return marker->at;
}

std::size_t Mechanism::ground_index() const {
    const auto gi = link_index(ground);
    if (!gi) throw Error(ErrorCode::UnknownLink, "ground link '" + ground + "' not found");
    return *gi;
}

std::size_t Mechanism::actuated_joint_index() const {
    for (std::size_t j = 0; j < joints.size(); ++j) {
        if (joints[j].actuated) return j;
    }
    throw Error(ErrorCode::InvalidArgument, "mechanism has no actuated joint");
}

bool ValidationReport::valid() const {
    return std::none_of(entries.begin(), entries.end(),
                        [](const Violation& v) { return v.severity == Severity::Error; });
}

bool ValidationReport::has(std::string_view code) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const Violation& v) { return v.code == code; });
}

namespace {

bool ref_resolves(const Mechanism& m, const MarkerRef& ref) {
    const auto li = m.link_index(ref.link);
    return li && m.links[*li].find_marker(ref.marker) != nullptr;
}

// Endpoints of a joint as link indices, or nullopt if either link is unknown.
std::optional<std::pair<std::size_t, std::size_t>> joint_links(const Mechanism& m, const Joint& j) {
    const auto a = m.link_index(j.a.link);
    const auto b = m.link_index(j.b.link);
    if (!a || !b) return std::nullopt;
    return std::make_pair(*a, *b);
}

}  // namespace

bool SpanningTree::connected() const {
    return std::all_of(depth.begin(), depth.end(), [](int d) { return d >= 0; });
}

SpanningTree spanning_tree(const Mechanism& m) {
    SpanningTree tree;
    const std::size_t n = m.links.size();
    tree.depth.assign(n, -1);
    tree.discovery.assign(n, -1);
    tree.parent_edge.assign(n, std::nullopt);

    const auto root = m.link_index(m.ground);
    if (!root) return tree;

    std::vector<std::size_t> order;
    order.reserve(m.joints.size());
    for (std::size_t j = 0; j < m.joints.size(); ++j) {
        if (m.joints[j].actuated) order.push_back(j);
    }
    for (std::size_t j = 0; j < m.joints.size(); ++j) {
        if (!m.joints[j].actuated) order.push_back(j);
    }

    std::vector<bool> used(m.joints.size(), false);
    std::deque<std::size_t> queue{*root};
    int discovered = 0;
    tree.depth[*root] = 0;
    tree.discovery[*root] = discovered++;

    while (!queue.empty()) {
        const std::size_t link = queue.front();
        queue.pop_front();
        for (std::size_t j : order) {
            if (used[j]) continue;
            const auto ends = joint_links(m, m.joints[j]);
            if (!ends || ends->first == ends->second) continue;
            std::size_t other;
            if (ends->first == link) {
                other = ends->second;
            } else if (ends->second == link) {
                other = ends->first;
            } else {
                continue;
            }
            used[j] = true;
            if (tree.depth[other] >= 0) {
                tree.non_tree.push_back(j);
                continue;
            }
            tree.depth[other] = tree.depth[link] + 1;
            tree.discovery[other] = discovered++;
            tree.parent_edge[other] = tree.edges.size();
            tree.edges.push_back({j, link, other});
            queue.push_back(other);
        }
    }
    return tree;
}

int mobility(const Mechanism& m) {
    const auto tree = spanning_tree(m);
    if (m.links.empty() || !tree.connected()) {
        throw Error(ErrorCode::Disconnected, "joint graph does not connect every link to ground");
    }
    const int n = static_cast<int>(m.links.size());
    const int j = static_cast<int>(m.joints.size());
    return 3 * (n - 1) - 2 * j;
}

void check_fourbar(const FourBar& fb) {
    const std::array<double, 4> len{fb.ground, fb.crank, fb.coupler, fb.rocker};
    for (double l : len) {
        if (!(l > 0.0) || !std::isfinite(l)) {
            throw Error(ErrorCode::InvalidArgument, "four-bar lengths must be positive and finite");
        }
    }
    const double longest = *std::max_element(len.begin(), len.end());
    const double total = len[0] + len[1] + len[2] + len[3];
    if (!(longest < total - longest)) {
        throw Error(ErrorCode::InvalidArgument,
                    "four-bar cannot assemble: longest link exceeds the sum of the others");
    }
}

const char* to_string(GrashofClass c) {
    switch (c) {
        case GrashofClass::CrankRocker: return "CrankRocker";
        case GrashofClass::DoubleCrank: return "DoubleCrank";
        case GrashofClass::DoubleRocker: return "DoubleRocker";
        case GrashofClass::ChangePoint: return "ChangePoint";
        case GrashofClass::NonGrashof: return "NonGrashof";
    }
    return "NonGrashof";
}

GrashofClass grashof_classify(const FourBar& fb) {
    check_fourbar(fb);
    const std::array<double, 4> len{fb.ground, fb.crank, fb.coupler, fb.rocker};
    std::array<double, 4> sorted = len;
    std::sort(sorted.begin(), sorted.end());
    const double sl = sorted[0] + sorted[3];
    const double pq = sorted[1] + sorted[2];
    // Relative tie tolerance so that scaled copies classify identically.
    const double eps = 1e-12 * (sl + pq);
    if (std::abs(sl - pq) <= eps) return GrashofClass::ChangePoint;
    if (sl > pq) return GrashofClass::NonGrashof;

    const double s = sorted[0];
    if (fb.ground == s) return GrashofClass::DoubleCrank;
    if (fb.coupler == s) return GrashofClass::DoubleRocker;
    // Crank or rocker shortest: the shortest side link fully rotates.
    return GrashofClass::CrankRocker;
}

std::vector<FourBarLoop> four_bar_loops(const Mechanism& m) {
    std::vector<FourBarLoop> loops;
    const auto tree = spanning_tree(m);
    const std::size_t n = m.links.size();

    struct Edge {
        std::size_t joint, a, b;
    };
    std::vector<Edge> edges;
    for (std::size_t j = 0; j < m.joints.size(); ++j) {
        const auto ends = joint_links(m, m.joints[j]);
        if (ends && ends->first != ends->second) edges.push_back({j, ends->first, ends->second});
    }
    auto between = [&](std::size_t u, std::size_t v) -> std::optional<std::size_t> {
        for (const auto& e : edges) {
            if ((e.a == u && e.b == v) || (e.a == v && e.b == u)) return e.joint;
        }
        return std::nullopt;
    };
    auto rank = [&](std::size_t link) {
        const int d = tree.depth[link] < 0 ? 1 << 20 : tree.depth[link];
        const int o = tree.discovery[link] < 0 ? 1 << 20 : tree.discovery[link];
        return std::make_pair(d, o);
    };

    std::set<std::array<std::size_t, 4>> seen;
    for (std::size_t l0 = 0; l0 < n; ++l0) {
        for (std::size_t l1 = 0; l1 < n; ++l1) {
            for (std::size_t l2 = 0; l2 < n; ++l2) {
                for (std::size_t l3 = 0; l3 < n; ++l3) {
                    if (l0 == l1 || l0 == l2 || l0 == l3 || l1 == l2 || l1 == l3 || l2 == l3) continue;
                    const auto j01 = between(l0, l1);
                    const auto j12 = between(l1, l2);
                    const auto j23 = between(l2, l3);
                    const auto j30 = between(l3, l0);
                    if (!j01 || !j12 || !j23 || !j30) continue;
                    std::array<std::size_t, 4> key{*j01, *j12, *j23, *j30};
                    std::sort(key.begin(), key.end());
                    if (!seen.insert(key).second) continue;

                    // Rotate so the base comes first, then orient toward the earlier-discovered neighbour.
                    std::array<std::size_t, 4> cyc{l0, l1, l2, l3};
                    std::size_t base_pos = 0;
                    for (std::size_t k = 1; k < 4; ++k) {
                        if (rank(cyc[k]) < rank(cyc[base_pos])) base_pos = k;
                    }
                    std::rotate(cyc.begin(), cyc.begin() + static_cast<long>(base_pos), cyc.end());
                    if (rank(cyc[3]) < rank(cyc[1])) std::swap(cyc[1], cyc[3]);

                    FourBarLoop loop;
                    loop.links = cyc;
                    for (std::size_t k = 0; k < 4; ++k) {
                        loop.joints[k] = *between(cyc[k], cyc[(k + 1) % 4]);
                    }
                    auto marker_on = [&](std::size_t joint, std::size_t link) -> const Point2& {
                        const Joint& jt = m.joints[joint];
                        return m.local_marker(*m.link_index(jt.a.link) == link ? jt.a : jt.b);
                    };
                    if (!ref_resolves(m, m.joints[loop.joints[0]].a) ||
                        !ref_resolves(m, m.joints[loop.joints[0]].b) ||
                        !ref_resolves(m, m.joints[loop.joints[1]].a) ||
                        !ref_resolves(m, m.joints[loop.joints[1]].b) ||
                        !ref_resolves(m, m.joints[loop.joints[2]].a) ||
                        !ref_resolves(m, m.joints[loop.joints[2]].b) ||
                        !ref_resolves(m, m.joints[loop.joints[3]].a) ||
                        !ref_resolves(m, m.joints[loop.joints[3]].b)) {
                        continue;
                    }
                    // links: base, input, floating, output; joints[k] joins links[k] and links[k+1].
                    auto side = [&](std::size_t k) {
                        const std::size_t link = loop.links[k];
                        return distance(marker_on(loop.joints[(k + 3) % 4], link),
                                        marker_on(loop.joints[k], link));
                    };
                    loop.dimensions.ground = side(0);
                    loop.dimensions.crank = side(1);
                    loop.dimensions.coupler = side(2);
                    loop.dimensions.rocker = side(3);
                    loops.push_back(loop);
                }
            }
        }
    }
    return loops;
}

ValidationReport validate_mechanism(const Mechanism& m) {
    ValidationReport report;
    auto error = [&](std::string code, std::string message) {
        report.entries.push_back({std::move(code), std::move(message), Severity::Error});
    };

    std::unordered_set<std::string> link_ids;
    for (const auto& link : m.links) {
        if (!link_ids.insert(link.id).second) error("DUPLICATE_LINK_ID", "duplicate link id '" + link.id + "'");
        if (link.markers.empty()) {
            error("NO_MARKERS", "link '" + link.id + "' has no markers");
            continue;
        }
        std::unordered_set<std::string> names;
        for (const auto& marker : link.markers) {
            if (!names.insert(marker.name).second) {
                error("DUPLICATE_MARKER", "link '" + link.id + "' repeats marker '" + marker.name + "'");
            }
        }
        if (!link.find_marker("origin")) {
            error("MISSING_ORIGIN", "link '" + link.id + "' lacks the required 'origin' marker");
        }
        if (!std::isfinite(link.reference_pose.angle)) {
            error("NONFINITE_POSE", "link '" + link.id + "' has a non-finite reference angle");
        }
    }

    const auto ground = m.link_index(m.ground);
    if (!ground) error("UNKNOWN_GROUND", "ground link '" + m.ground + "' is not defined");

    std::unordered_set<std::string> joint_ids;
    int actuators = 0;
    for (const auto& joint : m.joints) {
        if (!joint_ids.insert(joint.id).second) error("DUPLICATE_JOINT_ID", "duplicate joint id '" + joint.id + "'");
        for (const MarkerRef* ref : {&joint.a, &joint.b}) {
            if (!m.link_index(ref->link)) {
                error("UNKNOWN_LINK", "joint '" + joint.id + "' references unknown link '" + ref->link + "'");
            } else if (!ref_resolves(m, *ref)) {
                error("UNKNOWN_MARKER", "joint '" + joint.id + "' references unknown marker '" +
                                            ref->link + "." + ref->marker + "'");
            }
        }
        if (joint.a.link == joint.b.link) error("SELF_JOINT", "joint '" + joint.id + "' connects a link to itself");
        if (const auto* hinge = joint.hinge()) {
            if (!(hinge->stiffness > 0.0) || !std::isfinite(hinge->stiffness)) {
                error("NONPOSITIVE_STIFFNESS", "hinge '" + joint.id + "' must have positive finite stiffness");
            }
            if (!std::isfinite(hinge->rest_angle)) {
                error("NONFINITE_REST_ANGLE", "hinge '" + joint.id + "' has a non-finite rest angle");
            }
        }
        if (joint.actuated) {
            ++actuators;
            if (joint.a.link != m.ground && joint.b.link != m.ground) {
                error("ACTUATOR_NOT_ON_GROUND", "actuated joint '" + joint.id + "' does not attach to ground");
            }
        }
    }
    if (actuators == 0) error("NO_ACTUATOR", "mechanism has no actuated joint");
    if (actuators > 1) error("MULTIPLE_ACTUATORS", "mechanism has " + std::to_string(actuators) + " actuated joints");

    if (ground) {
        const auto tree = spanning_tree(m);
        if (!tree.connected()) {
            error("DISCONNECTED", "joint graph does not connect every link to ground");
        } else {
            const int dof = mobility(m);
            if (dof != 1) error("MOBILITY_NOT_ONE", "Gruebler mobility is " + std::to_string(dof));
        }
    }

    if (m.wing_polygon.size() < 3) {
        error("WING_POLYGON_TOO_SMALL", "wing polygon needs at least 3 vertices");
    }
    for (const auto& ref : m.wing_polygon) {
        if (!ref_resolves(m, ref)) error("UNKNOWN_MARKER", "wing polygon vertex '" + ref.link + "." + ref.marker + "' not found");
    }
    if (!ref_resolves(m, m.shoulder)) error("UNKNOWN_MARKER", "shoulder marker '" + m.shoulder.link + "." + m.shoulder.marker + "' not found");
    if (!ref_resolves(m, m.wingtip)) error("UNKNOWN_MARKER", "wingtip marker '" + m.wingtip.link + "." + m.wingtip.marker + "' not found");

    if (ground) {
        for (const auto& loop : four_bar_loops(m)) {
            try {
                if (grashof_classify(loop.dimensions) == GrashofClass::ChangePoint) {
                    report.entries.push_back(
                        {"CHANGE_POINT",
                         "four-bar loop through '" + m.links[loop.links[2]].id +
                             "' is a change-point linkage; branch is ambiguous at the collinear pose",
                         Severity::Warning});
                }
            } catch (const Error&) {
                // Degenerate loop dimensions are caught by assembly, not topology checks.
            }
        }
    }
    return report;
}

}  // namespace flapkin
