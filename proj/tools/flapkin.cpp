#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flapkin/aero.hpp"
#include "flapkin/error.hpp"
#include "flapkin/gait.hpp"
#include "flapkin/io.hpp"
#include "flapkin/kinematics.hpp"
#include "flapkin/synthesis.hpp"

using namespace flapkin;

namespace {

const char* category(ErrorCode code) {
    switch (code) {
        case ErrorCode::ValidationError:
        case ErrorCode::Disconnected:
        case ErrorCode::UnknownLink:
        case ErrorCode::UnknownMarker:
        case ErrorCode::UnknownJoint: return "VALIDATION";
        case ErrorCode::NotAssemblable:
        case ErrorCode::NoConvergence:
        case ErrorCode::SingularJacobian:
        case ErrorCode::BranchAmbiguous:
        case ErrorCode::Degenerate: return "KINEMATICS";
        case ErrorCode::ZeroReach:
        case ErrorCode::NoStrokeReversal: return "GAIT";
        case ErrorCode::EmptyDesignSpace: return "SYNTHESIS";
        case ErrorCode::PeriodMismatch: return "AERO";
        case ErrorCode::ParseError: return "PARSE";
        case ErrorCode::SchemaError: return "SCHEMA";
        case ErrorCode::IoError: return "IO";
        case ErrorCode::InvalidArgument:
        case ErrorCode::BudgetTooSmall: return "USAGE";
    }
    return "INTERNAL";
}

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError: return 3;
        case ErrorCode::InvalidArgument:
        case ErrorCode::BudgetTooSmall: return 2;
        default: return 1;
    }
}

int report(const Error& e) {
    const std::string code = e.detail().empty() ? to_string(e.code()) : e.detail();
    std::cerr << "E_" << category(e.code()) << ' ' << code << ": " << e.what() << '\n';
    return exit_code(e.code());
}

Mechanism load_mechanism(const std::string& path) { return parse_mechanism(read_text_file(path)); }

void emit(const std::string& text) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw Error(ErrorCode::IoError, "failed writing standard output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planar linkage kinematics and gait synthesis for flapping armwings"};
    app.require_subcommand(1);
    app.fallthrough();

    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads for synthesis (default: all cores)")
        ->envname("FLAPKIN_THREADS")
        ->check(CLI::PositiveNumber);
    bool degrees = false;
    app.add_flag("--deg", degrees, "Interpret angle options in degrees");

    // validate
    auto* validate = app.add_subcommand("validate", "Check a mechanism file");
    std::string validate_path;
    validate->add_option("mechanism", validate_path)->required();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Crank-angle sweep as trajectory CSV");
    std::string sweep_path;
    std::size_t sweep_steps = 0;
    double tol = 1e-10;
    std::optional<double> sweep_start, sweep_end;
    sweep_cmd->add_option("mechanism", sweep_path)->required();
    sweep_cmd->add_option("--steps", sweep_steps, "Number of crank angles (>= 2)")->required()->check(CLI::Range(2, 100000000));
    sweep_cmd->add_option("--tol", tol, "Closure tolerance in meters")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--start", sweep_start, "First crank angle (rad, or deg with --deg)");
    sweep_cmd->add_option("--end", sweep_end, "Last crank angle (default: one revolution)");

    // gait
    auto* gait_cmd = app.add_subcommand("gait", "One wingbeat as trajectory CSV");
    std::string gait_path, metrics_out;
    double period = 0.1;
    std::size_t samples = 128;
    bool want_metrics = false;
    gait_cmd->add_option("mechanism", gait_path)->required();
    gait_cmd->add_option("--period", period, "Wingbeat period in seconds")->required()->check(CLI::PositiveNumber);
    gait_cmd->add_option("--samples", samples, "Samples per wingbeat (>= 8)")->check(CLI::Range(8, 100000000));
    gait_cmd->add_flag("--metrics", want_metrics, "Write gait metrics JSON to standard error");
    gait_cmd->add_option("--metrics-out", metrics_out, "Write gait metrics JSON to this file instead");
    gait_cmd->add_option("--tol", tol, "Closure tolerance in meters")->check(CLI::PositiveNumber);

    // synthesize
    auto* synth = app.add_subcommand("synthesize", "Dimensional synthesis against a gait spec");
    std::string space_path, spec_path, out_path;
    std::size_t budget = 0, population = 0;
    std::uint64_t seed = 0;
    bool no_polish = false;
    synth->add_option("space", space_path)->required();
    synth->add_option("spec", spec_path)->required();
    synth->add_option("--budget", budget, "Objective evaluations for the global search")->required();
    synth->add_option("--seed", seed, "Random seed")->required();
    synth->add_option("--out", out_path, "Write the best mechanism here");
    synth->add_option("--population", population, "Population size (default 15 x dimension)");
    synth->add_flag("--no-polish", no_polish, "Skip the simplex polish");

    // aero
    auto* aero_cmd = app.add_subcommand("aero", "Quasi-steady force series as CSV");
    std::string aero_path;
    AeroConfig cfg;
    std::size_t aero_samples = 128;
    aero_cmd->add_option("mechanism", aero_path)->required();
    aero_cmd->add_option("--period", period, "Wingbeat period in seconds")->required()->check(CLI::PositiveNumber);
    aero_cmd->add_option("--freestream", cfg.freestream, "Freestream speed in m/s")->required();
    aero_cmd->add_option("--density", cfg.density, "Air density in kg/m^3")->check(CLI::PositiveNumber);
    aero_cmd->add_option("--samples", aero_samples, "Samples per wingbeat (>= 8)")->check(CLI::Range(8, 100000000));
    aero_cmd->add_option("--strips", cfg.strips, "Spanwise strips (>= 4)")->check(CLI::Range(4, 100000));

    // animate
    auto* animate = app.add_subcommand("animate", "Write one SVG per frame");
    std::string animate_path, out_dir;
    std::size_t frames = 0;
    animate->add_option("mechanism", animate_path)->required();
    animate->add_option("--frames", frames, "Number of frames")->required()->check(CLI::PositiveNumber);
    animate->add_option("--out-dir", out_dir, "Output directory")->required();
    animate->add_option("--samples", samples, "Gait samples (default: max(frames, 128))");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "E_USAGE ARGUMENT: " << e.what() << '\n';
        return 2;
    }

    SolveSettings settings;
    settings.tolerance = tol;
    const auto angle = [&](double v) { return degrees ? deg_to_rad(v) : v; };

    try {
        if (*validate) {
            const Mechanism m = parse_mechanism_unchecked(read_text_file(validate_path));
            const ValidationReport rep = validate_mechanism(m);
            emit(validation_report_text(rep));
            for (const auto& v : rep.entries) {
                if (v.severity == Severity::Error) {
                    std::cerr << "E_VALIDATION " << v.code << ": " << v.message << '\n';
                    return 1;
                }
            }
            return 0;
        }

        if (*sweep_cmd) {
            const Mechanism m = load_mechanism(sweep_path);
            const double n = static_cast<double>(sweep_steps);
            const double begin = sweep_start ? angle(*sweep_start) : 0.0;
            const double end = sweep_end ? angle(*sweep_end) : begin + kTwoPi * (n - 1.0) / n;
            SweepResult sw = sweep(m, begin, end, sweep_steps, settings);
            if (!sw.ok()) {
                throw Error(sw.failure->code, "sweep failed at step " + std::to_string(sw.failure->index) + ": " +
                                                  sw.failure->message);
            }
            GaitEvaluation ev = gait_from_configurations(m, 1.0, std::move(sw.configurations));
            // Unit crank rate: time is crank travel over 2 pi.
            for (auto& s : ev.gait.samples) s.t = (s.crank - begin) / kTwoPi;
            emit(trajectory_csv(ev.gait));
            return 0;
        }

        if (*gait_cmd) {
            const Mechanism m = load_mechanism(gait_path);
            const GaitEvaluation ev = evaluate_gait(m, period, samples, settings);
            if (want_metrics || !metrics_out.empty()) {
                const std::string mj = metrics_json(gait_metrics(ev.gait, ev.transmission));
                if (!metrics_out.empty()) {
                    write_text_file(metrics_out, mj);
                } else {
                    std::cerr << mj;
                }
            }
            emit(trajectory_csv(ev.gait));
            return 0;
        }

        if (*synth) {
            const DesignSpace space = parse_design_space(read_text_file(space_path));
            const GaitSpec spec = parse_gait_spec(read_text_file(spec_path));
            SynthesisOptions opts;
            opts.threads = threads;
            opts.population = population;
            opts.polish = !no_polish;
            const SynthesisResult r = synthesize(space, spec, budget, seed, opts);
            if (!out_path.empty()) write_text_file(out_path, serialize_mechanism(r.best));
            emit(synthesis_result_json(r, space));
            if (!r.feasible) {
                std::cerr << "E_SYNTHESIS INFEASIBLE: " << r.violations.size() << " hard constraint(s) violated";
                if (!r.violations.empty()) std::cerr << ", first " << r.violations.front().code;
                std::cerr << '\n';
                return 1;
            }
            return 0;
        }

        if (*aero_cmd) {
            const Mechanism m = load_mechanism(aero_path);
            const GaitTrajectory gt = generate_gait(m, period, aero_samples);
            const AeroReport rep = quasi_steady_forces(gt, cfg);
            emit(aero_csv(rep));
            char buf[128];
            std::snprintf(buf, sizeof buf, "vertical_impulse_Ns=%.12g horizontal_impulse_Ns=%.12g\n",
                          rep.vertical_impulse + 0.0, rep.horizontal_impulse + 0.0);
            std::cerr << buf;
            return 0;
        }

        if (*animate) {
            const Mechanism m = load_mechanism(animate_path);
            const std::size_t n = std::max(samples, frames);
            const GaitEvaluation ev = evaluate_gait(m, period, n);
            const auto docs = render_svg(ev, m, frames);
            std::error_code ec;
            std::filesystem::create_directories(out_dir, ec);
            if (ec) throw Error(ErrorCode::IoError, "cannot create '" + out_dir + "': " + ec.message());
            for (std::size_t f = 0; f < docs.size(); ++f) {
                char name[32];
                std::snprintf(name, sizeof name, "frame_%04zu.svg", f);
                write_text_file(std::filesystem::path(out_dir) / name, docs[f]);
            }
            return 0;
        }
    } catch (const Error& e) {
        return report(e);
    } catch (const std::exception& e) {
        std::cerr << "E_INTERNAL EXCEPTION: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
