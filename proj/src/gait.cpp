#include "flapkin/gait.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "kinematics_internal.hpp"

namespace flapkin {

double wing_area(const Mechanism& m, const Configuration& c) {
    std::vector<Point2> vertices;
    vertices.reserve(m.wing_polygon.size());
    for (const auto& ref : m.wing_polygon) vertices.push_back(marker_world(m, c, ref));
    return polygon_area(vertices);
}

double plunge_angle(const Mechanism& m, const Configuration& c) {
    const Point2 ray = marker_world(m, c, m.wingtip) - marker_world(m, c, m.shoulder);
    if (ray.norm() <= 1e-12) throw Error(ErrorCode::Degenerate, "shoulder and wingtip coincide");
    return ray.angle();
}

double reach(const Mechanism& m, const Configuration& c) {
    return distance(marker_world(m, c, m.wingtip), marker_world(m, c, m.shoulder));
}

std::vector<double> extension_ratios(std::span<const double> reaches) {
    const double max_reach = reaches.empty() ? 0.0 : *std::max_element(reaches.begin(), reaches.end());
    if (!(max_reach > 0.0)) throw Error(ErrorCode::ZeroReach, "maximum shoulder-to-wingtip reach is zero");
    std::vector<double> out;
    out.reserve(reaches.size());
    for (double r : reaches) out.push_back(std::clamp(r / max_reach, 0.0, 1.0));
    return out;
}

GaitEvaluation gait_from_configurations(const Mechanism& m, double period, std::vector<Configuration> configs) {
    const std::size_t samples = configs.size();
    const double n = static_cast<double>(samples);
    GaitEvaluation ev;
    ev.gait.period = period;
    ev.gait.samples.resize(samples);
    const auto loops = four_bar_loops(m);
    std::vector<double> reaches(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const Configuration& c = configs[i];
        GaitSample& g = ev.gait.samples[i];
        g.t = period * static_cast<double>(i) / n;
        g.crank = c.crank_angle;
        g.shoulder = marker_world(m, c, m.shoulder);
        g.wingtip = marker_world(m, c, m.wingtip);
        g.plunge = plunge_angle(m, c);
        if (i > 0) g.plunge = unwrap_near(g.plunge, ev.gait.samples[i - 1].plunge);
        g.area = wing_area(m, c);
        reaches[i] = distance(g.wingtip, g.shoulder);
        const auto mus = detail::loop_transmission_angles(m, c, loops);
        ev.transmission.push_back(mus.empty() ? kPi / 2.0 : *std::min_element(mus.begin(), mus.end()));
    }
    const auto ext = extension_ratios(reaches);
    for (std::size_t i = 0; i < samples; ++i) ev.gait.samples[i].extension = ext[i];
    ev.configurations = std::move(configs);
    return ev;
}

GaitEvaluation evaluate_gait(const Mechanism& m, double period, std::size_t samples, const SolveSettings& s) {
    if (samples < 8) throw Error(ErrorCode::InvalidArgument, "a gait needs at least 8 samples");
    if (!(period > 0.0) || !std::isfinite(period)) throw Error(ErrorCode::InvalidArgument, "period must be positive");
    const double n = static_cast<double>(samples);
    SweepResult sw = sweep(m, 0.0, kTwoPi * (n - 1.0) / n, samples, s);
    if (!sw.ok()) {
        throw Error(sw.failure->code,
                    "gait sweep failed at sample " + std::to_string(sw.failure->index) + ": " + sw.failure->message);
    }
    return gait_from_configurations(m, period, std::move(sw.configurations));
}

GaitTrajectory generate_gait(const Mechanism& m, double period, std::size_t samples, const SolveSettings& s) {
    return evaluate_gait(m, period, samples, s).gait;
}

namespace {

std::vector<int> majority_signs(const std::vector<double>& series) {
    const std::size_t n = series.size();
    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = wrap_angle(series[(i + 1) % n] - series[(i + n - 1) % n]);
        raw[i] = d > 0.0 ? 1 : -1;
    }
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int sum = raw[(i + n - 1) % n] + raw[i] + raw[(i + 1) % n];
        out[i] = sum > 0 ? 1 : -1;
    }
    return out;
}

}  // namespace

std::vector<int> stroke_directions(const GaitTrajectory& gt) {
    std::vector<double> plunge;
    plunge.reserve(gt.samples.size());
    for (const auto& s : gt.samples) plunge.push_back(s.plunge);
    return majority_signs(plunge);
}

GaitMetrics gait_metrics(const GaitTrajectory& gt, std::span<const double> transmission) {
    const std::size_t n = gt.samples.size();
    if (n < 8) throw Error(ErrorCode::InvalidArgument, "gait metrics need at least 8 samples");
    const auto dirs = stroke_directions(gt);
    const auto ups = static_cast<std::size_t>(std::count(dirs.begin(), dirs.end(), 1));
    if (ups == 0 || ups == n) throw Error(ErrorCode::NoStrokeReversal, "plunge is monotone; no stroke reversal");

    GaitMetrics out;
    const auto [pmin, pmax] = std::minmax_element(gt.samples.begin(), gt.samples.end(),
                                                  [](const auto& a, const auto& b) { return a.plunge < b.plunge; });
    out.plunge_amplitude = (pmax->plunge - pmin->plunge) / 2.0;

    const auto [emin, emax] = std::minmax_element(gt.samples.begin(), gt.samples.end(),
                                                  [](const auto& a, const auto& b) { return a.extension < b.extension; });
    out.extension_min = emin->extension;
    out.extension_max = emax->extension;

    double up_area = 0.0, down_area = 0.0;
    for (std::size_t i = 0; i < n; ++i) (dirs[i] > 0 ? up_area : down_area) += gt.samples[i].area;
    up_area /= static_cast<double>(ups);
    down_area /= static_cast<double>(n - ups);
    if (down_area > 0.0) {
        out.area_ratio_up_down = up_area / down_area;
    } else {
        out.area_ratio_up_down = up_area > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
    out.upstroke_fraction = static_cast<double>(ups) / static_cast<double>(n);

    const auto i_lo = static_cast<std::size_t>(pmin - gt.samples.begin());
    const auto i_hi = static_cast<std::size_t>(pmax - gt.samples.begin());
    const auto i_emin = static_cast<std::size_t>(emin - gt.samples.begin());
    const auto i_emax = static_cast<std::size_t>(emax - gt.samples.begin());
    const double nd = static_cast<double>(n);
    const double mid_up = static_cast<double>(i_lo) + static_cast<double>((i_hi + n - i_lo) % n) / 2.0;
    out.phase_lag = wrap_angle(kTwoPi * (static_cast<double>(i_emin) - mid_up) / nd);
    out.retraction_duration = gt.dt() * static_cast<double>((i_emin + n - i_emax) % n);

    out.min_transmission_angle =
        transmission.empty() ? kPi / 2.0 : *std::min_element(transmission.begin(), transmission.end());
    return out;
}

}  // namespace flapkin
