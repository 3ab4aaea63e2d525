#include "flapkin/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flapkin/compliance.hpp"
#include "flapkin/error.hpp"

namespace flapkin {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IoError, "failed reading '" + path.string() + "'");
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

namespace {

// --- schema helpers ---------------------------------------------------------

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
    throw Error(ErrorCode::SchemaError, path + ": " + msg);
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t end = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1, col = 0;
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 0;
            } else {
                ++col;
            }
        }
        if (col == 0) col = 1;
        std::string what = e.what();
        if (const auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
    }
}

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) schema_error(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) schema_error(path, "unknown key '" + key + "'");
    }
}

const json& require(const json& obj, const std::string& path, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) schema_error(path, std::string("missing key '") + key + "'");
    return *it;
}

const json* optional_key(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) schema_error(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(path, "expected a finite number");
    return d;
}

std::string string(const json& v, const std::string& path) {
    if (!v.is_string()) schema_error(path, "expected a string");
    return v.get<std::string>();
}

bool boolean(const json& v, const std::string& path) {
    if (!v.is_boolean()) schema_error(path, "expected true or false");
    return v.get<bool>();
}

const json& array(const json& v, const std::string& path) {
    if (!v.is_array()) schema_error(path, "expected an array");
    return v;
}

MarkerRef marker_ref(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) schema_error(path, "expected [link, marker]");
    return {string(v[0], path + "[0]"), string(v[1], path + "[1]")};
}

Point2 point(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) schema_error(path, "expected [x, y]");
    return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
}

void check_version(const json& doc, const std::string& path) {
    const json& v = require(doc, path, "version");
    if (!v.is_number_integer() || v.get<long long>() != 1) schema_error(path + ".version", "unsupported version");
}

// --- mechanism --------------------------------------------------------------

Mechanism mechanism_from_json(const json& doc, const std::string& root) {
    only_keys(doc, root, {"version", "ground", "links", "joints", "wing_polygon", "shoulder", "wingtip", "hinges"});
    check_version(doc, root);
    Mechanism m;
    m.ground = string(require(doc, root, "ground"), root + ".ground");

    const json& links = array(require(doc, root, "links"), root + ".links");
    for (std::size_t i = 0; i < links.size(); ++i) {
        const std::string path = root + ".links[" + std::to_string(i) + "]";
        const json& lj = links[i];
        only_keys(lj, path, {"id", "role", "markers", "pose"});
        Link link;
        link.id = string(require(lj, path, "id"), path + ".id");
        if (const json* role = optional_key(lj, "role")) {
            const auto r = link_role_from_string(string(*role, path + ".role"));
            if (!r) schema_error(path + ".role", "unknown role '" + role->get<std::string>() + "'");
            link.role = *r;
        }
        const json& markers = array(require(lj, path, "markers"), path + ".markers");
        for (std::size_t k = 0; k < markers.size(); ++k) {
            const std::string mp = path + ".markers[" + std::to_string(k) + "]";
            only_keys(markers[k], mp, {"name", "at"});
            link.markers.push_back(
                {string(require(markers[k], mp, "name"), mp + ".name"), point(require(markers[k], mp, "at"), mp + ".at")});
        }
        if (const json* pose = optional_key(lj, "pose")) {
            if (!pose->is_array() || pose->size() != 3) schema_error(path + ".pose", "expected [x, y, angle]");
            link.reference_pose = Pose{{number((*pose)[0], path + ".pose"), number((*pose)[1], path + ".pose")},
                                       number((*pose)[2], path + ".pose")};
        }
        m.links.push_back(std::move(link));
    }

    struct PendingRest {
        std::size_t joint;
        bool given;
    };
    std::vector<PendingRest> rests;
    std::vector<bool> stiffness_given;
    const json& joints = array(require(doc, root, "joints"), root + ".joints");
    for (std::size_t i = 0; i < joints.size(); ++i) {
        const std::string path = root + ".joints[" + std::to_string(i) + "]";
        const json& jj = joints[i];
        only_keys(jj, path, {"id", "a", "b", "kind", "actuated", "stiffness", "rest_angle"});
        Joint joint;
        joint.id = string(require(jj, path, "id"), path + ".id");
        joint.a = marker_ref(require(jj, path, "a"), path + ".a");
        joint.b = marker_ref(require(jj, path, "b"), path + ".b");
        if (const json* act = optional_key(jj, "actuated")) joint.actuated = boolean(*act, path + ".actuated");
        std::string kind = "pin";
        if (const json* k = optional_key(jj, "kind")) kind = string(*k, path + ".kind");
        const json* stiffness = optional_key(jj, "stiffness");
        const json* rest = optional_key(jj, "rest_angle");
        if (kind == "pin") {
            if (stiffness || rest) schema_error(path, "stiffness and rest_angle apply only to hinges");
            stiffness_given.push_back(false);
        } else if (kind == "hinge") {
            CompliantHinge h;
            if (stiffness) h.stiffness = number(*stiffness, path + ".stiffness");
            if (rest) h.rest_angle = number(*rest, path + ".rest_angle");
            joint.kind = h;
            rests.push_back({m.joints.size(), rest != nullptr});
            stiffness_given.push_back(stiffness != nullptr);
        } else {
            schema_error(path + ".kind", "expected \"pin\" or \"hinge\"");
        }
        m.joints.push_back(std::move(joint));
    }

    if (const json* hinges = optional_key(doc, "hinges")) {
        array(*hinges, root + ".hinges");
        for (std::size_t i = 0; i < hinges->size(); ++i) {
            const std::string path = root + ".hinges[" + std::to_string(i) + "]";
            const json& hj = (*hinges)[i];
            only_keys(hj, path, {"joint", "width", "thickness", "length", "modulus"});
            const std::string id = string(require(hj, path, "joint"), path + ".joint");
            const auto ji = m.joint_index(id);
            if (!ji) schema_error(path + ".joint", "unknown joint '" + id + "'");
            auto* h = std::get_if<CompliantHinge>(&m.joints[*ji].kind);
            if (!h) schema_error(path + ".joint", "joint '" + id + "' is not a hinge");
            if (stiffness_given[*ji] || h->geometry) schema_error(path, "stiffness of '" + id + "' given twice");
            HingeGeometry g{number(require(hj, path, "width"), path + ".width"),
                            number(require(hj, path, "thickness"), path + ".thickness"),
                            number(require(hj, path, "length"), path + ".length"),
                            number(require(hj, path, "modulus"), path + ".modulus")};
            try {
                h->stiffness = hinge_stiffness(g);
            } catch (const Error& e) {
                schema_error(path, e.what());
            }
            h->geometry = g;
        }
    }
    for (std::size_t j = 0; j < m.joints.size(); ++j) {
        const auto* h = m.joints[j].hinge();
        if (h && !stiffness_given[j] && !h->geometry) {
            schema_error(root + ".joints[" + std::to_string(j) + "]", "hinge needs a stiffness or a hinges entry");
        }
    }
    // Missing rest angles default to the relative angle as drawn.
    for (const auto& pr : rests) {
        if (pr.given) continue;
        Joint& joint = m.joints[pr.joint];
        const auto la = m.link_index(joint.a.link);
        const auto lb = m.link_index(joint.b.link);
        if (la && lb) {
            std::get<CompliantHinge>(joint.kind).rest_angle =
                m.links[*lb].reference_pose.angle - m.links[*la].reference_pose.angle;
        }
    }

    const json& poly = array(require(doc, root, "wing_polygon"), root + ".wing_polygon");
    for (std::size_t i = 0; i < poly.size(); ++i) {
        m.wing_polygon.push_back(marker_ref(poly[i], root + ".wing_polygon[" + std::to_string(i) + "]"));
    }
    m.shoulder = marker_ref(require(doc, root, "shoulder"), root + ".shoulder");
    m.wingtip = marker_ref(require(doc, root, "wingtip"), root + ".wingtip");
    return m;
}

ojson ref_json(const MarkerRef& r) { return ojson::array({r.link, r.marker}); }

ojson mechanism_to_json(const Mechanism& m) {
    ojson doc;
    doc["version"] = 1;
    doc["ground"] = m.ground;
    doc["links"] = ojson::array();
    for (const auto& link : m.links) {
        ojson lj;
        lj["id"] = link.id;
        lj["role"] = to_string(link.role);
        lj["markers"] = ojson::array();
        for (const auto& mk : link.markers) {
            lj["markers"].push_back({{"name", mk.name}, {"at", {mk.at.x(), mk.at.y()}}});
        }
        const Pose& p = link.reference_pose;
        lj["pose"] = {p.origin.x(), p.origin.y(), p.angle};
        doc["links"].push_back(std::move(lj));
    }
    doc["joints"] = ojson::array();
    ojson hinges = ojson::array();
    for (const auto& joint : m.joints) {
        ojson jj;
        jj["id"] = joint.id;
        jj["a"] = ref_json(joint.a);
        jj["b"] = ref_json(joint.b);
        jj["kind"] = joint.is_compliant() ? "hinge" : "pin";
        jj["actuated"] = joint.actuated;
        if (const auto* h = joint.hinge()) {
            if (h->geometry) {
                const HingeGeometry& g = *h->geometry;
                hinges.push_back({{"joint", joint.id},
                                  {"width", g.width},
                                  {"thickness", g.thickness},
                                  {"length", g.length},
                                  {"modulus", g.elastic_modulus}});
            } else {
                jj["stiffness"] = h->stiffness;
            }
            jj["rest_angle"] = h->rest_angle;
        }
        doc["joints"].push_back(std::move(jj));
    }
    doc["wing_polygon"] = ojson::array();
    for (const auto& r : m.wing_polygon) doc["wing_polygon"].push_back(ref_json(r));
    doc["shoulder"] = ref_json(m.shoulder);
    doc["wingtip"] = ref_json(m.wingtip);
    if (!hinges.empty()) doc["hinges"] = std::move(hinges);
    return doc;
}

void validate_or_throw(const Mechanism& m) {
    const ValidationReport rep = validate_mechanism(m);
    for (const auto& v : rep.entries) {
        if (v.severity == Severity::Error) throw Error(ErrorCode::ValidationError, v.message, v.code);
    }
}

// --- gait spec / design space -----------------------------------------------

GaitSpec gait_spec_from_json(const json& doc, const std::string& root) {
    only_keys(doc, root, {"plunge_amplitude", "extension_range", "area_ratio_bound", "min_transmission_angle", "weights"});
    GaitSpec spec;
    spec.plunge_amplitude = number(require(doc, root, "plunge_amplitude"), root + ".plunge_amplitude");
    const json& range = require(doc, root, "extension_range");
    if (!range.is_array() || range.size() != 2) schema_error(root + ".extension_range", "expected [min, max]");
    spec.extension_min = number(range[0], root + ".extension_range[0]");
    spec.extension_max = number(range[1], root + ".extension_range[1]");
    if (const json* v = optional_key(doc, "area_ratio_bound")) spec.area_ratio_bound = number(*v, root + ".area_ratio_bound");
    if (const json* v = optional_key(doc, "min_transmission_angle")) {
        spec.min_transmission_angle = number(*v, root + ".min_transmission_angle");
    }
    if (const json* w = optional_key(doc, "weights")) {
        const std::string wp = root + ".weights";
        only_keys(*w, wp, {"plunge_amplitude", "extension_min", "extension_max"});
        if (const json* v = optional_key(*w, "plunge_amplitude")) spec.weights.plunge_amplitude = number(*v, wp);
        if (const json* v = optional_key(*w, "extension_min")) spec.weights.extension_min = number(*v, wp);
        if (const json* v = optional_key(*w, "extension_max")) spec.weights.extension_max = number(*v, wp);
    }
    try {
        spec.check();
    } catch (const Error& e) {
        schema_error(root, e.what());
    }
    return spec;
}

}  // namespace

Mechanism parse_mechanism_unchecked(std::string_view text) { return mechanism_from_json(parse_json(text), "$"); }

Mechanism parse_mechanism(std::string_view text) {
    Mechanism m = parse_mechanism_unchecked(text);
    validate_or_throw(m);
    return m;
}

std::string serialize_mechanism(const Mechanism& m) { return mechanism_to_json(m).dump(2) + "\n"; }

GaitSpec parse_gait_spec(std::string_view text) { return gait_spec_from_json(parse_json(text), "$"); }

std::string serialize_gait_spec(const GaitSpec& spec) {
    ojson doc;
    doc["plunge_amplitude"] = spec.plunge_amplitude;
    doc["extension_range"] = {spec.extension_min, spec.extension_max};
    doc["area_ratio_bound"] = spec.area_ratio_bound;
    doc["min_transmission_angle"] = spec.min_transmission_angle;
    doc["weights"] = {{"plunge_amplitude", spec.weights.plunge_amplitude},
                      {"extension_min", spec.weights.extension_min},
                      {"extension_max", spec.weights.extension_max}};
    return doc.dump(2) + "\n";
}

DesignSpace parse_design_space(std::string_view text) {
    const json doc = parse_json(text);
    only_keys(doc, "$", {"version", "parameters", "template"});
    check_version(doc, "$");
    DesignSpace space;
    space.topology = mechanism_from_json(require(doc, "$", "template"), "$.template");
    validate_or_throw(space.topology);
    const json& params = array(require(doc, "$", "parameters"), "$.parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string path = "$.parameters[" + std::to_string(i) + "]";
        const json& pj = params[i];
        only_keys(pj, path, {"name", "lower", "upper", "target"});
        DesignParameter p;
        p.name = string(require(pj, path, "name"), path + ".name");
        p.lower = number(require(pj, path, "lower"), path + ".lower");
        p.upper = number(require(pj, path, "upper"), path + ".upper");
        const json& tj = require(pj, path, "target");
        const std::string tp = path + ".target";
        if (!tj.is_object()) schema_error(tp, "expected an object");
        if (tj.contains("joint")) {
            only_keys(tj, tp, {"joint", "field"});
            if (string(require(tj, tp, "field"), tp + ".field") != "stiffness") {
                schema_error(tp + ".field", "only \"stiffness\" is supported");
            }
            p.target = HingeStiffnessTarget{string(tj["joint"], tp + ".joint")};
        } else {
            only_keys(tj, tp, {"link", "marker", "axis"});
            const std::string axis = string(require(tj, tp, "axis"), tp + ".axis");
            if (axis != "x" && axis != "y") schema_error(tp + ".axis", "expected \"x\" or \"y\"");
            p.target = MarkerCoordinate{string(require(tj, tp, "link"), tp + ".link"),
                                        string(require(tj, tp, "marker"), tp + ".marker"), axis == "x" ? 0 : 1};
        }
        space.parameters.push_back(std::move(p));
    }
    try {
        space.check();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::EmptyDesignSpace) throw;
        schema_error("$.parameters", e.what());
    }
    return space;
}

namespace {

ojson parameter_json(const DesignParameter& p) {
    ojson pj;
    pj["name"] = p.name;
    pj["lower"] = p.lower;
    pj["upper"] = p.upper;
    if (const auto* mc = std::get_if<MarkerCoordinate>(&p.target)) {
        pj["target"] = {{"link", mc->link}, {"marker", mc->marker}, {"axis", mc->axis == 0 ? "x" : "y"}};
    } else {
        pj["target"] = {{"joint", std::get<HingeStiffnessTarget>(p.target).joint}, {"field", "stiffness"}};
    }
    return pj;
}

}  // namespace

std::string serialize_design_space(const DesignSpace& space) {
    ojson doc;
    doc["version"] = 1;
    doc["parameters"] = ojson::array();
    for (const auto& p : space.parameters) doc["parameters"].push_back(parameter_json(p));
    doc["template"] = mechanism_to_json(space.topology);
    return doc.dump(2) + "\n";
}

std::string synthesis_result_json(const SynthesisResult& r, const DesignSpace& space) {
    ojson doc;
    doc["cost"] = r.cost;
    doc["feasible"] = r.feasible;
    doc["evaluations"] = r.evaluations;
    doc["seed"] = r.seed;
    ojson params = ojson::object();
    for (std::size_t i = 0; i < r.parameters.size() && i < space.parameters.size(); ++i) {
        params[space.parameters[i].name] = r.parameters[i];
    }
    doc["parameters"] = std::move(params);
    doc["violations"] = ojson::array();
    for (const auto& v : r.violations) {
        ojson vj{{"code", v.code}, {"message", v.message}, {"margin", v.margin}};
        if (v.theta_interval) vj["theta_interval"] = {v.theta_interval->first, v.theta_interval->second};
        doc["violations"].push_back(std::move(vj));
    }
    doc["mechanism"] = mechanism_to_json(r.best);
    return doc.dump(2) + "\n";
}

namespace {

// 12 significant digits; negative zero printed as 0.
void put(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v + 0.0);
    out += buf;
}

}  // namespace

std::string trajectory_csv(const GaitTrajectory& gt) {
    std::string out = "t_s,crank_rad,plunge_rad,extension,area_m2,wingtip_x_m,wingtip_y_m\n";
    for (const auto& s : gt.samples) {
        for (double v : {s.t, s.crank, s.plunge, s.extension, s.area, s.wingtip.x(), s.wingtip.y()}) {
            put(out, v);
            out += ',';
        }
        out.back() = '\n';
    }
    return out;
}

std::string aero_csv(const AeroReport& rep) {
    std::string out = "t_s,vertical_N,horizontal_N\n";
    for (std::size_t k = 0; k < rep.t.size(); ++k) {
        put(out, rep.t[k]);
        out += ',';
        put(out, rep.vertical[k]);
        out += ',';
        put(out, rep.horizontal[k]);
        out += '\n';
    }
    return out;
}

std::string metrics_json(const GaitMetrics& g) {
    ojson doc;
    doc["plunge_amplitude"] = g.plunge_amplitude;
    doc["extension_range"] = {g.extension_min, g.extension_max};
    doc["area_ratio_up_down"] = std::isfinite(g.area_ratio_up_down) ? ojson(g.area_ratio_up_down) : ojson(nullptr);
    doc["phase_lag"] = g.phase_lag;
    doc["min_transmission_angle"] = g.min_transmission_angle;
    doc["upstroke_fraction"] = g.upstroke_fraction;
    doc["retraction_duration"] = g.retraction_duration;
    return doc.dump(2) + "\n";
}

std::string validation_report_text(const ValidationReport& report) {
    std::string out;
    for (const auto& v : report.entries) {
        out += v.severity == Severity::Error ? "error " : "warning ";
        out += v.code + ": " + v.message + "\n";
    }
    if (report.valid()) out += "valid\n";
    return out;
}

}  // namespace flapkin
