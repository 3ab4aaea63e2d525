#include "flapkin/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "flapkin/error.hpp"
#include "flapkin/kinematics.hpp"

namespace flapkin {

void GaitSpec::check() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "gait spec: " + what); };
    if (!std::isfinite(plunge_amplitude) || plunge_amplitude < 0.0) bad("plunge_amplitude must be finite and >= 0");
    if (!(extension_min >= 0.0 && extension_min < extension_max && extension_max <= 1.0)) {
        bad("extension range must satisfy 0 <= min < max <= 1");
    }
    if (!(area_ratio_bound > 0.0) || !std::isfinite(area_ratio_bound)) bad("area_ratio_bound must be positive");
    if (!(min_transmission_angle >= 0.0 && min_transmission_angle <= kPi / 2.0)) {
        bad("min_transmission_angle must lie in [0, pi/2]");
    }
    const std::array<double, 3> w{weights.plunge_amplitude, weights.extension_min, weights.extension_max};
    for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v)) bad("weights must be finite and nonnegative");
    }
    if (w[0] + w[1] + w[2] <= 0.0) bad("weights must not all be zero");
}

namespace {

std::string describe(const ParameterTarget& t) {
    if (const auto* mc = std::get_if<MarkerCoordinate>(&t)) {
        return mc->link + "." + mc->marker + (mc->axis == 0 ? ".x" : ".y");
    }
    return std::get<HingeStiffnessTarget>(t).joint + ".stiffness";
}

Marker& marker_of(Mechanism& m, const MarkerCoordinate& mc) {
    const auto li = m.link_index(mc.link);
    if (!li) throw Error(ErrorCode::UnknownLink, "parameter targets unknown link '" + mc.link + "'");
    for (auto& marker : m.links[*li].markers) {
        if (marker.name == mc.marker) return marker;
    }
    throw Error(ErrorCode::UnknownMarker, "parameter targets unknown marker '" + mc.link + "." + mc.marker + "'");
}

CompliantHinge& hinge_of(Mechanism& m, const HingeStiffnessTarget& hs) {
    const auto ji = m.joint_index(hs.joint);
    if (!ji) throw Error(ErrorCode::UnknownJoint, "parameter targets unknown joint '" + hs.joint + "'");
    auto* hinge = std::get_if<CompliantHinge>(&m.joints[*ji].kind);
    if (!hinge) throw Error(ErrorCode::InvalidArgument, "joint '" + hs.joint + "' is not a compliant hinge");
    return *hinge;
}

double get_field(Mechanism& m, const ParameterTarget& t) {
    if (const auto* mc = std::get_if<MarkerCoordinate>(&t)) {
        const Point2& at = marker_of(m, *mc).at;
        return mc->axis == 0 ? at.x() : at.y();
    }
    return hinge_of(m, std::get<HingeStiffnessTarget>(t)).stiffness;
}

void set_field(Mechanism& m, const ParameterTarget& t, double v) {
    if (const auto* mc = std::get_if<MarkerCoordinate>(&t)) {
        Marker& marker = marker_of(m, *mc);
        marker.at = mc->axis == 0 ? Point2{v, marker.at.y()} : Point2{marker.at.x(), v};
        return;
    }
    CompliantHinge& hinge = hinge_of(m, std::get<HingeStiffnessTarget>(t));
    hinge.stiffness = v;
    hinge.geometry.reset();
}

double mean_weight(const GaitSpec& spec) {
    return (spec.weights.plunge_amplitude + spec.weights.extension_min + spec.weights.extension_max) / 3.0;
}

}  // namespace

void DesignSpace::check() const {
    if (parameters.empty()) throw Error(ErrorCode::EmptyDesignSpace, "design space has no parameters");
    std::vector<std::string> seen;
    Mechanism scratch = topology;
    for (const auto& p : parameters) {
        if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper)) {
            throw Error(ErrorCode::InvalidArgument, "parameter '" + p.name + "' needs finite bounds with lower < upper");
        }
        if (const auto* mc = std::get_if<MarkerCoordinate>(&p.target); mc && mc->axis != 0 && mc->axis != 1) {
            throw Error(ErrorCode::InvalidArgument, "parameter '" + p.name + "' axis must be x or y");
        }
        if (const auto* hs = std::get_if<HingeStiffnessTarget>(&p.target); hs && !(p.lower > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "stiffness parameter '" + p.name + "' needs a positive lower bound");
        }
        get_field(scratch, p.target);
        const std::string key = describe(p.target);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            throw Error(ErrorCode::InvalidArgument, "two parameters map to " + key);
        }
        seen.push_back(key);
    }
}

namespace {

Mechanism write_parameters(const DesignSpace& space, std::span<const double> x) {
    if (x.size() != space.parameters.size()) {
        throw Error(ErrorCode::InvalidArgument, "parameter vector has the wrong dimension");
    }
    Mechanism m = space.topology;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& p = space.parameters[i];
        if (!(x[i] >= p.lower && x[i] <= p.upper)) {
            throw Error(ErrorCode::InvalidArgument, "parameter '" + p.name + "' is out of bounds");
        }
        set_field(m, p.target, x[i]);
    }
    return m;
}

}  // namespace

Mechanism apply_parameters(const DesignSpace& space, std::span<const double> x) {
    Mechanism m = write_parameters(space, x);
    try {
        const Configuration c = assemble(m, 0.0, reference_configuration(m));
        for (std::size_t i = 0; i < m.links.size(); ++i) m.links[i].reference_pose = c.poses[i];
    } catch (const Error&) {
        // Unassemblable at 0: keep the template poses.
    }
    return m;
}

std::vector<double> parameter_values(const DesignSpace& space) {
    Mechanism m = space.topology;
    std::vector<double> out;
    out.reserve(space.parameters.size());
    for (const auto& p : space.parameters) out.push_back(get_field(m, p.target));
    return out;
}

double objective(std::span<const double> x, const DesignSpace& space, const GaitSpec& spec) {
    const Mechanism m = write_parameters(space, x);
    const double wbar = mean_weight(spec);
    const std::size_t n = kObjectiveSamples;
    const double nd = static_cast<double>(n);

    int mob = 1;
    try {
        mob = mobility(m);
    } catch (const Error&) {
        return (1e6 + 1.0) * wbar;
    }

    SweepResult sw = sweep(m, 0.0, kTwoPi * (nd - 1.0) / nd, n);
    if (!sw.ok()) {
        const double failed = static_cast<double>(n - sw.failure->index) / nd;
        return (1e6 + failed) * wbar;
    }

    GaitMetrics g;
    try {
        const GaitEvaluation ev = gait_from_configurations(m, 1.0, std::move(sw.configurations));
        g = gait_metrics(ev.gait, ev.transmission);
    } catch (const Error&) {
        return 1e5 * wbar;
    }

    auto sq = [](double v) { return v * v; };
    double cost = spec.weights.plunge_amplitude * sq(g.plunge_amplitude - spec.plunge_amplitude) +
                  spec.weights.extension_min * sq(g.extension_min - spec.extension_min) +
                  spec.weights.extension_max * sq(g.extension_max - spec.extension_max);

    double violation = std::max(0.0, spec.min_transmission_angle - g.min_transmission_angle);
    violation += std::max(0.0, g.area_ratio_up_down - spec.area_ratio_bound);
    violation += std::abs(static_cast<double>(mob - 1));
    const double penalty = 1e3 * wbar * violation;
    cost += std::isfinite(penalty) ? penalty : 1e5 * wbar;
    return cost;
}

std::vector<ConstraintViolation> feasibility_report(const Mechanism& m, const GaitSpec& spec) {
    std::vector<ConstraintViolation> out;
    try {
        const int mob = mobility(m);
        if (mob != 1) {
            out.push_back({"MOBILITY", "mobility is " + std::to_string(mob) + ", expected 1",
                           std::abs(static_cast<double>(mob - 1)), std::nullopt});
        }
    } catch (const Error& e) {
        out.push_back({"MOBILITY", e.what(), 1.0, std::nullopt});
        return out;
    }

    // Half-degree offset keeps the samples off exact change points.
    constexpr std::size_t steps = 360;
    const double h = kTwoPi / static_cast<double>(steps);
    const double start = 0.5 * h;
    SweepResult fwd = sweep(m, start, start + h * static_cast<double>(steps - 1), steps);
    if (!fwd.ok()) {
        const SweepResult back = sweep(m, start, start - h * static_cast<double>(steps - 1), steps);
        double lo = start + h * static_cast<double>(fwd.failure->index);
        double hi = back.ok() ? lo : kTwoPi + start - h * static_cast<double>(back.failure->index);
        if (fwd.failure->index == 0) {
            lo = 0.0;
            hi = kTwoPi;
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "no assembly for crank angles in [%.6g, %.6g] rad (%s)", lo, hi,
                      to_string(fwd.failure->code));
        out.push_back({"FULL_REVOLUTION", buf, hi - lo, std::make_pair(lo, hi)});
        return out;
    }

    try {
        const GaitEvaluation ev = gait_from_configurations(m, 1.0, std::move(fwd.configurations));
        const double mu = *std::min_element(ev.transmission.begin(), ev.transmission.end());
        if (mu < spec.min_transmission_angle) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "minimum transmission angle %.6g rad below %.6g rad", mu,
                          spec.min_transmission_angle);
            out.push_back({"MIN_TRANSMISSION_ANGLE", buf, spec.min_transmission_angle - mu, std::nullopt});
        }
        double emin = 1.0, emax = 0.0;
        for (const auto& s : ev.gait.samples) {
            emin = std::min(emin, s.extension);
            emax = std::max(emax, s.extension);
        }
        const double dev = std::max(std::abs(emin - spec.extension_min), std::abs(emax - spec.extension_max));
        if (dev > kExtensionTolerance) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "extension range [%.6g, %.6g] misses target [%.6g, %.6g]", emin, emax,
                          spec.extension_min, spec.extension_max);
            out.push_back({"EXTENSION_RANGE", buf, dev - kExtensionTolerance, std::nullopt});
        }
    } catch (const Error& e) {
        out.push_back({"EXTENSION_RANGE", e.what(), 1.0, std::nullopt});
    }
    return out;
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FLAPKIN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using Vec = std::vector<double>;

// Costs are written by index, so the result does not depend on scheduling.
void evaluate_batch(const std::vector<Vec>& xs, std::size_t count, std::vector<double>& costs, unsigned threads,
                    const DesignSpace& space, const GaitSpec& spec) {
    costs.assign(count, 0.0);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                costs[i] = objective(xs[i], space, spec);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (nt <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (unsigned t = 0; t < nt; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : rng_(seed) {}
    double operator()() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>((*this)() * static_cast<double>(n))); }

private:
    std::mt19937_64 rng_;
};

struct Best {
    Vec x;
    double cost = std::numeric_limits<double>::infinity();

    void offer(const Vec& cand, double c) {
        if (c < cost) {
            cost = c;
            x = cand;
        }
    }
};

void nelder_mead(const DesignSpace& space, const GaitSpec& spec, Best& best, std::size_t max_evals,
                 std::size_t& evals) {
    const std::size_t d = space.parameters.size();
    auto clamp = [&](Vec v) {
        for (std::size_t k = 0; k < d; ++k) v[k] = std::clamp(v[k], space.parameters[k].lower, space.parameters[k].upper);
        return v;
    };
    std::size_t used = 0;
    auto f = [&](const Vec& v) {
        const double c = objective(v, space, spec);
        ++used;
        ++evals;
        best.offer(v, c);
        return c;
    };

    std::vector<Vec> simplex{best.x};
    std::vector<double> fs{best.cost};
    for (std::size_t k = 0; k < d && used < max_evals; ++k) {
        Vec v = best.x;
        const auto& p = space.parameters[k];
        const double step = 0.05 * (p.upper - p.lower);
        v[k] = v[k] + step <= p.upper ? v[k] + step : v[k] - step;
        simplex.push_back(v);
        fs.push_back(f(v));
    }
    if (simplex.size() != d + 1) return;

    std::vector<std::size_t> order(d + 1);
    while (used < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        const std::size_t lo = order.front(), hi = order.back(), second = order[d - 1];
        if (fs[hi] - fs[lo] <= 1e-15 * (1.0 + std::abs(fs[lo]))) break;

        Vec centroid(d, 0.0);
        for (std::size_t i : order) {
            if (i == hi) continue;
            for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[i][k] / static_cast<double>(d);
        }
        auto along = [&](double t) {
            Vec v(d);
            for (std::size_t k = 0; k < d; ++k) v[k] = centroid[k] + t * (simplex[hi][k] - centroid[k]);
            return clamp(v);
        };

        const Vec xr = along(-1.0);
        const double fr = f(xr);
        if (fr < fs[lo]) {
            if (used >= max_evals) break;
            const Vec xe = along(-2.0);
            const double fe = f(xe);
            if (fe < fr) {
                simplex[hi] = xe;
                fs[hi] = fe;
            } else {
                simplex[hi] = xr;
                fs[hi] = fr;
            }
            continue;
        }
        if (fr < fs[second]) {
            simplex[hi] = xr;
            fs[hi] = fr;
            continue;
        }
        if (used >= max_evals) break;
        const Vec xc = fr < fs[hi] ? along(-0.5) : along(0.5);
        const double fc = f(xc);
        if (fc < std::min(fr, fs[hi])) {
            simplex[hi] = xc;
            fs[hi] = fc;
            continue;
        }
        for (std::size_t i : order) {
            if (i == lo || used >= max_evals) continue;
            for (std::size_t k = 0; k < d; ++k) simplex[i][k] = simplex[lo][k] + 0.5 * (simplex[i][k] - simplex[lo][k]);
            fs[i] = f(simplex[i]);
        }
    }
}

}  // namespace

SynthesisResult synthesize(const DesignSpace& space, const GaitSpec& spec, std::size_t budget, std::uint64_t seed,
                           const SynthesisOptions& options) {
    space.check();
    spec.check();
    const std::size_t d = space.parameters.size();
    const std::size_t np = options.population > 0 ? options.population : 15 * d;
    if (np < 4) throw Error(ErrorCode::InvalidArgument, "population must be at least 4");
    if (budget < np) {
        throw Error(ErrorCode::BudgetTooSmall,
                    "budget " + std::to_string(budget) + " is below the population size " + std::to_string(np));
    }
    const unsigned threads = resolve_threads(options.threads);
    constexpr double F = 0.7;
    constexpr double CR = 0.9;

    Uniform u(seed);
    std::vector<Vec> pop(np, Vec(d));
    for (auto& x : pop) {
        for (std::size_t k = 0; k < d; ++k) {
            const auto& p = space.parameters[k];
            x[k] = std::min(p.upper, p.lower + u() * (p.upper - p.lower));
        }
    }
    std::vector<double> cost;
    evaluate_batch(pop, np, cost, threads, space, spec);
    std::size_t evals = np;
    Best best;
    for (std::size_t i = 0; i < np; ++i) best.offer(pop[i], cost[i]);

    std::vector<Vec> trials(np, Vec(d));
    std::vector<double> trial_cost;
    while (evals < budget) {
        const std::size_t batch = std::min(np, budget - evals);
        for (std::size_t i = 0; i < batch; ++i) {
            std::size_t r1, r2, r3;
            do r1 = u.index(np); while (r1 == i);
            do r2 = u.index(np); while (r2 == i || r2 == r1);
            do r3 = u.index(np); while (r3 == i || r3 == r1 || r3 == r2);
            const std::size_t jrand = u.index(d);
            for (std::size_t k = 0; k < d; ++k) {
                const auto& p = space.parameters[k];
                const double target = pop[i][k];
                if (u() < CR || k == jrand) {
                    double v = pop[r1][k] + F * (pop[r2][k] - pop[r3][k]);
                    if (v < p.lower) v = 0.5 * (p.lower + target);
                    if (v > p.upper) v = 0.5 * (p.upper + target);
                    trials[i][k] = v;
                } else {
                    trials[i][k] = target;
                }
            }
        }
        evaluate_batch(trials, batch, trial_cost, threads, space, spec);
        evals += batch;
        for (std::size_t i = 0; i < batch; ++i) {
            if (trial_cost[i] <= cost[i]) {
                pop[i] = trials[i];
                cost[i] = trial_cost[i];
            }
            best.offer(trials[i], trial_cost[i]);
        }
    }

    if (options.polish && options.polish_evaluations > 0) {
        nelder_mead(space, spec, best, std::min<std::size_t>(options.polish_evaluations, 200), evals);
    }

    SynthesisResult r;
    r.parameters = best.x;
    r.cost = best.cost;
    r.best = apply_parameters(space, best.x);
    r.evaluations = evals;
    r.seed = seed;
    r.violations = feasibility_report(r.best, spec);
    r.feasible = r.violations.empty();
    return r;
}

}  // namespace flapkin
