#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "flapkin/aero.hpp"
#include "flapkin/gait.hpp"
#include "flapkin/mechanism.hpp"
#include "flapkin/synthesis.hpp"

namespace flapkin {

// IO_ERROR on failure.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// PARSE_ERROR (with line/column), SCHEMA_ERROR, or VALIDATION_ERROR whose
// detail() is the first violated invariant code.
Mechanism parse_mechanism(std::string_view text);

// Same schema checks, no validate_mechanism pass.
Mechanism parse_mechanism_unchecked(std::string_view text);

std::string serialize_mechanism(const Mechanism& m);

GaitSpec parse_gait_spec(std::string_view text);
std::string serialize_gait_spec(const GaitSpec& spec);

// {"version": 1, "parameters": [...], "template": <mechanism>}
DesignSpace parse_design_space(std::string_view text);
std::string serialize_design_space(const DesignSpace& space);

std::string synthesis_result_json(const SynthesisResult& r, const DesignSpace& space);

std::string trajectory_csv(const GaitTrajectory& gt);
std::string aero_csv(const AeroReport& rep);
std::string metrics_json(const GaitMetrics& g);
std::string validation_report_text(const ValidationReport& report);

// One SVG document per frame; frame f shows sample floor(f * n / frames).
// All frames share the viewBox of the whole cycle plus a 5% margin.
std::vector<std::string> render_svg(const GaitEvaluation& ev, const Mechanism& m, std::size_t frames);

}  // namespace flapkin
