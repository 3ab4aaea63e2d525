#include "flapkin/aero.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flapkin/error.hpp"

namespace flapkin {

void AeroConfig::check() const {
    if (!(density > 0.0) || !std::isfinite(density)) throw Error(ErrorCode::InvalidArgument, "density must be positive");
    if (!std::isfinite(freestream)) throw Error(ErrorCode::InvalidArgument, "freestream must be finite");
    if (strips < 4) throw Error(ErrorCode::InvalidArgument, "at least 4 strips are required");
    for (double c : chord_profile) {
        if (!(c >= 0.0) || !std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "chords must be finite and >= 0");
    }
    if (!(cl_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "cl_max must be positive");
}

namespace {

double shape_at(const std::vector<double>& profile, double s) {
    if (profile.empty()) return 1.0;
    if (profile.size() == 1) return profile.front();
    const double x = s * static_cast<double>(profile.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(x), profile.size() - 2);
    const double f = x - static_cast<double>(i);
    return profile[i] * (1.0 - f) + profile[i + 1] * f;
}

}  // namespace

std::vector<std::vector<StripState>> strip_kinematics(const GaitTrajectory& gt, const AeroConfig& cfg) {
    cfg.check();
    const std::size_t n = gt.samples.size();
    if (n < 8) throw Error(ErrorCode::InvalidArgument, "strip kinematics need at least 8 samples");
    const std::size_t ns = cfg.strips;
    const double dt = gt.dt();

    std::vector<double> frac(ns), shape(ns);
    for (std::size_t j = 0; j < ns; ++j) {
        frac[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(ns);
        shape[j] = shape_at(cfg.chord_profile, frac[j]);
    }
    const double mean_shape = std::accumulate(shape.begin(), shape.end(), 0.0) / static_cast<double>(ns);

    auto strip_point = [&](std::size_t k, std::size_t j) {
        const auto& s = gt.samples[k];
        return s.shoulder + (s.wingtip - s.shoulder) * frac[j];
    };

    std::vector<std::vector<StripState>> out(n, std::vector<StripState>(ns));
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = gt.samples[k];
        const Point2 span = s.wingtip - s.shoulder;
        const double r = span.norm();
        const Point2 dir = r > 0.0 ? span / r : Point2{1.0, 0.0};
        const Point2 normal = perp(dir);
        const double dr = r / static_cast<double>(ns);
        const double chord_scale = r > 0.0 && mean_shape > 0.0 ? s.area / (r * mean_shape) : 0.0;
        for (std::size_t j = 0; j < ns; ++j) {
            StripState& st = out[k][j];
            st.radius = frac[j] * r;
            st.width = dr;
            st.chord = shape[j] * chord_scale;
            st.position = strip_point(k, j);
            st.velocity = (strip_point((k + 1) % n, j) - strip_point((k + n - 1) % n, j)) / (2.0 * dt);
            st.normal = normal;
            st.normal_velocity = dot(st.velocity, normal);
            st.alpha = std::atan2(-st.normal_velocity, cfg.freestream);
            st.relative_speed = std::hypot(cfg.freestream, st.normal_velocity);
        }
    }
    return out;
}

double lift_coefficient(double alpha, const AeroConfig& cfg) {
    return std::clamp(cfg.lift_slope * alpha, -cfg.cl_max, cfg.cl_max);
}

double periodic_trapezoid(std::span<const double> values, double dt) {
    return dt * std::accumulate(values.begin(), values.end(), 0.0);
}

AeroReport quasi_steady_forces(const GaitTrajectory& gt, const AeroConfig& cfg) {
    const auto strips = strip_kinematics(gt, cfg);
    AeroReport rep;
    rep.period = gt.period;
    const std::size_t n = gt.samples.size();
    rep.t.resize(n);
    rep.vertical.assign(n, 0.0);
    rep.horizontal.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        rep.t[k] = gt.samples[k].t;
        for (const StripState& st : strips[k]) {
            if (st.relative_speed == 0.0 || st.chord == 0.0) continue;
            const double lift = 0.5 * cfg.density * st.relative_speed * st.relative_speed * st.chord * st.width *
                                lift_coefficient(st.alpha, cfg);
            // Lift is normal to the relative wind (-U, -v_n) in the (forward, normal) plane.
            const double along_normal = lift * cfg.freestream / st.relative_speed;
            const double along_forward = -lift * st.normal_velocity / st.relative_speed;
            rep.vertical[k] += along_normal * st.normal.y();
            rep.horizontal[k] += along_forward;
        }
    }
    rep.vertical_impulse = periodic_trapezoid(rep.vertical, gt.dt());
    rep.horizontal_impulse = periodic_trapezoid(rep.horizontal, gt.dt());
    return rep;
}

std::vector<RankedGait> compare_gaits(std::span<const GaitTrajectory> gaits, const AeroConfig& cfg) {
    if (gaits.size() < 2) throw Error(ErrorCode::InvalidArgument, "compare_gaits needs at least two gaits");
    for (const auto& g : gaits) {
        if (std::abs(g.period - gaits.front().period) > 1e-12 * std::abs(gaits.front().period)) {
            throw Error(ErrorCode::PeriodMismatch, "gaits have different periods");
        }
    }
    std::vector<RankedGait> out;
    out.reserve(gaits.size());
    for (std::size_t i = 0; i < gaits.size(); ++i) {
        const AeroReport rep = quasi_steady_forces(gaits[i], cfg);
        double abs_sum = 0.0;
        for (double f : rep.horizontal) abs_sum += std::abs(f);
        const double n = static_cast<double>(rep.horizontal.size());
        out.push_back({i, rep.vertical_impulse, rep.horizontal_impulse, abs_sum * gaits[i].dt() / n});
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedGait& a, const RankedGait& b) {
        if (a.vertical_impulse != b.vertical_impulse) return a.vertical_impulse > b.vertical_impulse;
        return a.mean_abs_horizontal < b.mean_abs_horizontal;
    });
    return out;
}

GaitTrajectory sinusoidal_plunge_gait(double period, std::size_t samples, double amplitude, double span, double area,
                                      double modulation) {
    if (!(period > 0.0) || samples < 8 || !(span > 0.0) || !(area >= 0.0) || std::abs(modulation) >= 1.0) {
        throw Error(ErrorCode::InvalidArgument, "invalid sinusoidal gait parameters");
    }
    GaitTrajectory gt;
    gt.period = period;
    gt.samples.resize(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        const double phase = kTwoPi * static_cast<double>(k) / static_cast<double>(samples);
        GaitSample& s = gt.samples[k];
        s.t = period * static_cast<double>(k) / static_cast<double>(samples);
        s.crank = phase;
        s.plunge = amplitude * std::sin(phase);
        s.extension = 1.0;
        s.area = area * (1.0 - modulation * std::cos(phase));
        s.shoulder = Point2{};
        s.wingtip = polar(span, s.plunge);
    }
    return gt;
}

}  // namespace flapkin
