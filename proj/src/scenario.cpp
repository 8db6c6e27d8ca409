#include "vortexgate/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "vortexgate/beam_transport.hpp"
#include "vortexgate/errors.hpp"

namespace vortexgate {

namespace {

constexpr double kPi = std::numbers::pi;
double rad(double deg) { return deg * kPi / 180.0; }
double deg(double r) { return r * 180.0 / kPi; }

// ---------------------------------------------------------------- parsing

const std::vector<std::string>& top_level_keys()
{
    static const std::vector<std::string> keys = {
        "name",           "energy_kev",       "grid.n",        "grid.extent",       "grid.extent_w0",
        "beam.waist",     "preparation",      "preparation.phi_deg", "hpp.edge_deg", "hpp.phase_step_deg",
        "hpp.amplitude",  "hpp.beam_waist_w0", "gate",         "gate.axis",         "gate.theta_deg",
        "gate.matrix",    "mc.drift",         "mc.frame_deg",  "objective.focal",   "column",
        "input.z",        "oam.m_max",        "outputs",
    };
    return keys;
}

const std::map<std::string, std::vector<std::string>>& element_keys()
{
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"drift", {"type", "length"}},
        {"round_lens", {"type", "focal_length"}},
        {"quadrupole", {"type", "focal_length", "axis_angle"}},
        {"hpp", {"type", "edge_angle", "phase_step", "amplitude_factor"}},
        {"aperture", {"type", "radius"}},
    };
    return keys;
}

std::size_t edit_distance(const std::string& a, const std::string& b)
{
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string nearest(const std::string& key, const std::vector<std::string>& valid)
{
    return *std::min_element(valid.begin(), valid.end(), [&](const std::string& x, const std::string& y) {
        return edit_distance(key, x) < edit_distance(key, y);
    });
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct Entry {
    int line = 0;
    std::string key;
    std::string value;
};

[[noreturn]] void fail(int line, const std::string& what)
{
    if (line > 0)
        throw ConfigError("line " + std::to_string(line) + ": " + what);
    throw ConfigError(what);
}

double to_number(const Entry& e)
{
    double v = 0.0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        fail(e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
    return v;
}

int to_int(const Entry& e)
{
    int v = 0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        fail(e.line, "'" + e.key + "' expects an integer, got '" + e.value + "'");
    return v;
}

std::vector<double> to_numbers(const Entry& e, std::size_t count)
{
    std::string s = e.value;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok)
        out.push_back(to_number({e.line, e.key, tok}));
    if (out.size() != count)
        fail(e.line, "'" + e.key + "' expects " + std::to_string(count) + " numbers, got " +
                         std::to_string(out.size()));
    return out;
}

std::string choice(const Entry& e, std::initializer_list<const char*> options)
{
    for (const char* o : options)
        if (e.value == o)
            return e.value;
    std::string list;
    for (const char* o : options)
        list += std::string(list.empty() ? "" : ", ") + o;
    fail(e.line, "'" + e.key + "' must be one of " + list + ", got '" + e.value + "'");
}

Element parse_element(int block_line, const std::vector<Entry>& entries)
{
    std::map<std::string, const Entry*> kv;
    for (const auto& e : entries) {
        if (kv.count(e.key))
            fail(e.line, "duplicate key '" + e.key + "' in element block");
        kv[e.key] = &e;
    }
    if (!kv.count("type"))
        fail(block_line, "element block without 'type'");
    const Entry& type = *kv["type"];
    const auto it = element_keys().find(type.value);
    if (it == element_keys().end()) {
        std::vector<std::string> names;
        for (const auto& [k, v] : element_keys())
            names.push_back(k);
        fail(type.line, "unknown element type '" + type.value + "' (did you mean '" + nearest(type.value, names) + "'?)");
    }
    for (const auto& e : entries)
        if (std::find(it->second.begin(), it->second.end(), e.key) == it->second.end())
            fail(e.line, "unknown key '" + e.key + "' for element " + type.value + " (did you mean '" +
                             nearest(e.key, it->second) + "'?)");
    auto need = [&](const char* key) -> double {
        if (!kv.count(key))
            fail(block_line, std::string("element ") + type.value + " needs '" + key + "'");
        return to_number(*kv[key]);
    };
    auto opt = [&](const char* key, double dflt) { return kv.count(key) ? to_number(*kv[key]) : dflt; };

    Element el;
    if (type.value == "drift")
        el = Drift{need("length")};
    else if (type.value == "round_lens")
        el = RoundLens{need("focal_length")};
    else if (type.value == "quadrupole")
        el = Quadrupole{need("focal_length"), opt("axis_angle", 0.0)};
    else if (type.value == "hpp")
        el = HilbertPhasePlate{opt("edge_angle", 0.0), opt("phase_step", kPi), opt("amplitude_factor", 1.0)};
    else
        el = CircularAperture{need("radius")};
    try {
        validate_element(el);
    } catch (const ContractViolation& ex) {
        fail(block_line, ex.what());
    }
    return el;
}

std::vector<std::string> auto_planes() { return {"input", "mc_in", "mc_out", "sample"}; }
std::vector<std::string> explicit_planes() { return {"input", "output"}; }

void check_name(int line, const std::string& name)
{
    if (name.empty())
        fail(line, "'name' must not be empty");
    for (char c : name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
            fail(line, "'name' may only contain letters, digits, '_', '-' and '.'");
}

std::vector<OutputRequest> parse_outputs(const Entry& e)
{
    std::vector<OutputRequest> out;
    std::string s = e.value;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
        using K = OutputRequest::Kind;
        if (tok == "summary_json")
            out.push_back({K::SummaryJson, {}});
        else if (tok == "oam_csv")
            out.push_back({K::OamCsv, {}});
        else if (tok.rfind("intensity:", 0) == 0)
            out.push_back({K::Intensity, tok.substr(10)});
        else if (tok.rfind("phase:", 0) == 0)
            out.push_back({K::Phase, tok.substr(6)});
        else
            fail(e.line, "unknown output '" + tok +
                             "' (expected summary_json, oam_csv, intensity:<plane> or phase:<plane>)");
    }
    return out;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ------------------------------------------------------------ gate algebra

struct Equatorial {
    double chi = 0.0;   // axis azimuth on the Bloch equator
    double theta = 0.0; // rotation angle in (0, pi)
};

// Writes an SU(2)-normalized gate as cos(t/2) - i sin(t/2)(cos chi X + sin chi Y).
std::optional<Equatorial> as_equatorial(const GateMatrix& g)
{
    const cplx root = std::sqrt(g.determinant());
    cplx a = g(0, 0) / root;
    cplx b = g(0, 1) / root;
    if (a.real() < 0.0) {
        a = -a;
        b = -b;
    }
    if (std::abs(a.imag()) > 1e-9)
        return std::nullopt;
    const double theta = 2.0 * std::acos(std::clamp(a.real(), -1.0, 1.0));
    if (std::sin(theta / 2.0) < 1e-9)
        return std::nullopt;
    return Equatorial{-std::arg(cplx(0.0, 1.0) * b), theta};
}

GateMatrix gate_matrix(const GateSetting& g)
{
    switch (g.kind) {
    case GateKind::Off:
        return identity_gate();
    case GateKind::Rx:
        return sqrt_not();
    case GateKind::Rotation:
        return rotation_gate(BlochVector::unit(g.axis[0], g.axis[1], g.axis[2]), rad(g.theta_deg));
    case GateKind::Matrix:
        return GateMatrix(g.matrix);
    }
    return identity_gate();
}

void validate_gate(const Scenario& s, int line)
{
    GateMatrix m = identity_gate();
    try {
        if (s.gate.kind == GateKind::Rotation) {
            const auto& a = s.gate.axis;
            const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
            if (std::abs(n - 1.0) > 1e-9)
                fail(line, "'gate.axis' must be a unit vector");
        }
        m = gate_matrix(s.gate);
    } catch (const ContractViolation& ex) {
        fail(line, std::string("gate: ") + ex.what());
    }
    if (s.explicit_column || s.gate.kind == GateKind::Off)
        return;
    const auto eq = as_equatorial(m);
    if (!eq)
        fail(line, "gate is not a rotation about an equatorial axis (or is the identity); a single mode "
                   "converter cannot realize it");
    if (eq->theta > kPi - 1e-6)
        fail(line, "gate rotation angle must stay below 180 degrees for a mode converter");
}

} // namespace

// ------------------------------------------------------------ scenario I/O

std::vector<std::string> scenario_planes(const Scenario& s)
{
    return s.explicit_column ? explicit_planes() : auto_planes();
}

Scenario parse_scenario(const std::string& text)
{
    std::map<std::string, Entry> top;
    std::vector<std::pair<int, std::vector<Entry>>> blocks;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line != "[element]")
                fail(line_no, "unknown section '" + line + "' (only [element] blocks exist)");
            blocks.emplace_back(line_no, std::vector<Entry>{});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(line_no, "expected 'key = value', got '" + line + "'");
        Entry e{line_no, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))};
        if (e.key.empty())
            fail(line_no, "missing key before '='");
        if (!blocks.empty()) {
            blocks.back().second.push_back(e);
            continue;
        }
        const auto& valid = top_level_keys();
        if (std::find(valid.begin(), valid.end(), e.key) == valid.end())
            fail(line_no, "unknown key '" + e.key + "' (did you mean '" + nearest(e.key, valid) + "'?)");
        if (top.count(e.key))
            fail(line_no, "duplicate key '" + e.key + "'");
        top.emplace(e.key, e);
    }

    std::vector<std::string> missing;
    for (const char* k : {"name", "preparation", "gate"})
        if (!top.count(k))
            missing.emplace_back(k);
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing)
            list += (list.empty() ? "" : ", ") + m;
        fail(0, "missing required keys: " + list);
    }

    auto has = [&](const char* k) { return top.count(k) > 0; };
    auto get = [&](const char* k) -> const Entry& { return top.at(k); };
    auto forbid_unless = [&](bool allowed, std::initializer_list<const char*> keys, const std::string& why) {
        if (allowed)
            return;
        for (const char* k : keys)
            if (has(k))
                fail(get(k).line, "'" + std::string(k) + "' only applies when " + why);
    };

    Scenario s;
    s.name = get("name").value;
    check_name(get("name").line, s.name);
    if (has("energy_kev")) {
        s.energy_kev = to_number(get("energy_kev"));
        if (!(s.energy_kev >= 10.0 && s.energy_kev <= 1000.0))
            fail(get("energy_kev").line, "'energy_kev' must lie in [10, 1000]");
    }
    if (has("beam.waist")) {
        s.beam_waist = to_number(get("beam.waist"));
        if (!(s.beam_waist > 0.0))
            fail(get("beam.waist").line, "'beam.waist' must be positive");
    }
    if (has("grid.n")) {
        s.grid.n = to_int(get("grid.n"));
        if (s.grid.n < 16 || s.grid.n % 2 != 0)
            fail(get("grid.n").line, "'grid.n' must be even and at least 16");
    }
    if (has("grid.extent") && has("grid.extent_w0"))
        fail(get("grid.extent_w0").line, "give either 'grid.extent' or 'grid.extent_w0', not both");
    if (has("grid.extent"))
        s.grid.extent = to_number(get("grid.extent"));
    else
        s.grid.extent = (has("grid.extent_w0") ? to_number(get("grid.extent_w0")) : kDefaultExtentInWaists) *
                        s.beam_waist;
    if (!(s.grid.extent > 0.0))
        fail(has("grid.extent") ? get("grid.extent").line : 0, "grid extent must be positive");

    const std::string prep = choice(get("preparation"), {"analytic", "hpp"});
    forbid_unless(prep == "analytic", {"preparation.phi_deg"}, "preparation = analytic");
    forbid_unless(prep == "hpp", {"hpp.edge_deg", "hpp.phase_step_deg", "hpp.amplitude", "hpp.beam_waist_w0"},
                  "preparation = hpp");
    if (prep == "analytic") {
        if (!has("preparation.phi_deg"))
            fail(get("preparation").line, "analytic preparation needs 'preparation.phi_deg'");
        s.preparation = AnalyticPreparation{to_number(get("preparation.phi_deg"))};
    } else {
        if (!has("hpp.edge_deg"))
            fail(get("preparation").line, "hpp preparation needs 'hpp.edge_deg'");
        HppPreparation h;
        h.edge_deg = to_number(get("hpp.edge_deg"));
        if (has("hpp.phase_step_deg"))
            h.phase_step_deg = to_number(get("hpp.phase_step_deg"));
        if (has("hpp.amplitude")) {
            h.amplitude = to_number(get("hpp.amplitude"));
            if (!(h.amplitude > 0.0 && h.amplitude <= 1.0))
                fail(get("hpp.amplitude").line, "'hpp.amplitude' must lie in (0, 1]");
        }
        if (has("hpp.beam_waist_w0")) {
            h.beam_waist_w0 = to_number(get("hpp.beam_waist_w0"));
            if (!(h.beam_waist_w0 > 0.0))
                fail(get("hpp.beam_waist_w0").line, "'hpp.beam_waist_w0' must be positive");
        }
        s.preparation = h;
    }

    const std::string gate = choice(get("gate"), {"off", "rx", "rotation", "matrix"});
    forbid_unless(gate == "rotation", {"gate.axis", "gate.theta_deg"}, "gate = rotation");
    forbid_unless(gate == "matrix", {"gate.matrix"}, "gate = matrix");
    if (gate == "off") {
        s.gate.kind = GateKind::Off;
    } else if (gate == "rx") {
        s.gate.kind = GateKind::Rx;
    } else if (gate == "rotation") {
        s.gate.kind = GateKind::Rotation;
        if (!has("gate.axis") || !has("gate.theta_deg"))
            fail(get("gate").line, "rotation gate needs 'gate.axis' and 'gate.theta_deg'");
        const auto a = to_numbers(get("gate.axis"), 3);
        s.gate.axis = {a[0], a[1], a[2]};
        s.gate.theta_deg = to_number(get("gate.theta_deg"));
    } else {
        s.gate.kind = GateKind::Matrix;
        if (!has("gate.matrix"))
            fail(get("gate").line, "matrix gate needs 'gate.matrix' (8 numbers: re im for u00 u01 u10 u11)");
        const auto m = to_numbers(get("gate.matrix"), 8);
        for (int i = 0; i < 4; ++i)
            s.gate.matrix[i] = cplx(m[2 * i], m[2 * i + 1]);
    }

    if (has("column"))
        s.explicit_column = choice(get("column"), {"auto", "explicit"}) == "explicit";
    forbid_unless(!s.explicit_column, {"mc.drift", "mc.frame_deg", "objective.focal"}, "column = auto");
    forbid_unless(s.explicit_column, {"input.z"}, "column = explicit");
    if (has("mc.drift") && get("mc.drift").value != "auto") {
        s.mc_drift = to_number(get("mc.drift"));
        if (!(*s.mc_drift > 0.0))
            fail(get("mc.drift").line, "'mc.drift' must be positive");
    }
    if (has("mc.frame_deg"))
        s.mc_frame_deg = to_number(get("mc.frame_deg"));
    if (has("objective.focal") && get("objective.focal").value != "auto") {
        s.objective_focal = to_number(get("objective.focal"));
        if (*s.objective_focal == 0.0)
            fail(get("objective.focal").line, "'objective.focal' must be non-zero");
    }
    if (has("input.z"))
        s.input_z = to_number(get("input.z"));
    validate_gate(s, get("gate").line);

    if (!s.explicit_column && !blocks.empty())
        fail(blocks.front().first, "[element] blocks need 'column = explicit'");
    for (const auto& [line, entries] : blocks)
        s.elements.push_back(parse_element(line, entries));
    if (s.explicit_column) {
        ColumnSpec cs{s.elements, s.grid, s.energy_kev};
        try {
            cs.validate();
        } catch (const ContractViolation& ex) {
            fail(has("column") ? get("column").line : 0, std::string("explicit column: ") + ex.what());
        }
    }

    if (has("oam.m_max")) {
        s.oam_m_max = to_int(get("oam.m_max"));
        if (s.oam_m_max < 1 || s.oam_m_max > 64)
            fail(get("oam.m_max").line, "'oam.m_max' must lie in [1, 64]");
    }
    if (has("outputs")) {
        s.outputs = parse_outputs(get("outputs"));
        const auto planes = scenario_planes(s);
        for (const auto& o : s.outputs)
            if ((o.kind == OutputRequest::Kind::Intensity || o.kind == OutputRequest::Kind::Phase) &&
                std::find(planes.begin(), planes.end(), o.plane) == planes.end())
                fail(get("outputs").line, "output plane '" + o.plane + "' does not exist (did you mean '" +
                                              nearest(o.plane, planes) + "'?)");
    } else {
        s.outputs = {{OutputRequest::Kind::SummaryJson, {}}, {OutputRequest::Kind::OamCsv, {}}};
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw ConfigError("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_scenario(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
}

std::string serialize_scenario(const Scenario& s)
{
    std::ostringstream o;
    o << "name = " << s.name << "\n";
    o << "energy_kev = " << fmt(s.energy_kev) << "\n";
    o << "grid.n = " << s.grid.n << "\n";
    o << "grid.extent = " << fmt(s.grid.extent) << "\n";
    o << "beam.waist = " << fmt(s.beam_waist) << "\n";
    if (const auto* a = std::get_if<AnalyticPreparation>(&s.preparation)) {
        o << "preparation = analytic\n";
        o << "preparation.phi_deg = " << fmt(a->phi_deg) << "\n";
    } else {
        const auto& h = std::get<HppPreparation>(s.preparation);
        o << "preparation = hpp\n";
        o << "hpp.edge_deg = " << fmt(h.edge_deg) << "\n";
        o << "hpp.phase_step_deg = " << fmt(h.phase_step_deg) << "\n";
        o << "hpp.amplitude = " << fmt(h.amplitude) << "\n";
        o << "hpp.beam_waist_w0 = " << fmt(h.beam_waist_w0) << "\n";
    }
    switch (s.gate.kind) {
    case GateKind::Off:
        o << "gate = off\n";
        break;
    case GateKind::Rx:
        o << "gate = rx\n";
        break;
    case GateKind::Rotation:
        o << "gate = rotation\n";
        o << "gate.axis = " << fmt(s.gate.axis[0]) << " " << fmt(s.gate.axis[1]) << " " << fmt(s.gate.axis[2]) << "\n";
        o << "gate.theta_deg = " << fmt(s.gate.theta_deg) << "\n";
        break;
    case GateKind::Matrix:
        o << "gate = matrix\ngate.matrix =";
        for (const auto& c : s.gate.matrix)
            o << " " << fmt(c.real()) << " " << fmt(c.imag());
        o << "\n";
        break;
    }
    if (s.explicit_column) {
        o << "column = explicit\n";
        o << "input.z = " << fmt(s.input_z) << "\n";
    } else {
        o << "column = auto\n";
        o << "mc.drift = " << (s.mc_drift ? fmt(*s.mc_drift) : "auto") << "\n";
        o << "mc.frame_deg = " << fmt(s.mc_frame_deg) << "\n";
        o << "objective.focal = " << (s.objective_focal ? fmt(*s.objective_focal) : "auto") << "\n";
    }
    o << "oam.m_max = " << s.oam_m_max << "\n";
    o << "outputs =";
    for (std::size_t i = 0; i < s.outputs.size(); ++i) {
        const auto& r = s.outputs[i];
        o << (i ? ", " : " ");
        switch (r.kind) {
        case OutputRequest::Kind::SummaryJson:
            o << "summary_json";
            break;
        case OutputRequest::Kind::OamCsv:
            o << "oam_csv";
            break;
        case OutputRequest::Kind::Intensity:
            o << "intensity:" << r.plane;
            break;
        case OutputRequest::Kind::Phase:
            o << "phase:" << r.plane;
            break;
        }
    }
    o << "\n";
    for (const auto& e : s.elements) {
        o << "\n[element]\ntype = " << element_name(e) << "\n";
        if (const auto* d = std::get_if<Drift>(&e))
            o << "length = " << fmt(d->length) << "\n";
        else if (const auto* l = std::get_if<RoundLens>(&e))
            o << "focal_length = " << fmt(l->focal_length) << "\n";
        else if (const auto* q = std::get_if<Quadrupole>(&e))
            o << "focal_length = " << fmt(q->focal_length) << "\naxis_angle = " << fmt(q->axis_angle) << "\n";
        else if (const auto* h = std::get_if<HilbertPhasePlate>(&e))
            o << "edge_angle = " << fmt(h->edge_angle) << "\nphase_step = " << fmt(h->phase_step)
              << "\namplitude_factor = " << fmt(h->amplitude_factor) << "\n";
        else if (const auto* a = std::get_if<CircularAperture>(&e))
            o << "radius = " << fmt(a->radius) << "\n";
    }
    return o.str();
}

// ------------------------------------------------------------- simulation

double lobe_axis_angle(const WaveField& f)
{
    const auto c = intensity_centroid(f);
    const GridSpec& g = f.grid();
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy) - c[1];
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix) - c[0];
            const double e = std::norm(f.at(ix, iy));
            xx += e * x * x;
            yy += e * y * y;
            xy += e * x * y;
        }
    }
    double a = 0.5 * std::atan2(2.0 * xy, xx - yy);
    if (a <= -kPi / 2.0)
        a += kPi;
    return a;
}

namespace {

struct Layout {
    WaveField input;
    ColumnSpec column;
    std::vector<std::pair<std::string, RecordPlane>> planes;
    std::string readout;
    cplx family_q; // Gaussian family the readout basis is transported from
    BlochState input_state{1.0, 0.0};
    std::optional<double> input_phi_deg;
    GateMatrix lab_gate = identity_gate();
    std::optional<ModeConverterReport> mc;
    std::optional<HilbertPhasePlate> plate;
    // QP2, applied by hand to get the field between QP2 and the objective.
    std::optional<Quadrupole> qp2;
};

double wrap_degrees(double d)
{
    d = std::fmod(d, 360.0);
    return d < 0.0 ? d + 360.0 : d;
}

Layout build_layout(const Scenario& s, Timings& t)
{
    const double lambda = electron_wavelength(s.energy_kev);
    const double k = 2.0 * kPi / lambda;
    const BeamParams p = BeamParams::from_waist(s.beam_waist, lambda);
    const double frame = rad(s.mc_frame_deg);
    const GateMatrix g = gate_matrix(s.gate);

    Layout L{WaveField(s.grid, k, 0.0, std::vector<cplx>(static_cast<std::size_t>(s.grid.n) * s.grid.n)),
             {{}, s.grid, s.energy_kev},
             {},
             {},
             {},
             state_R(),
             {},
             identity_gate(),
             {},
             {},
             {}};
    L.lab_gate = s.gate.kind == GateKind::Off ? identity_gate() : rz(2.0 * frame) * g * rz(-2.0 * frame);

    std::optional<HppPreparation> hpp;
    if (const auto* a = std::get_if<AnalyticPreparation>(&s.preparation)) {
        L.input_phi_deg = a->phi_deg;
        L.input_state = equator_state(rad(a->phi_deg));
    } else {
        hpp = std::get<HppPreparation>(s.preparation);
        L.input_phi_deg = wrap_degrees(2.0 * hpp->edge_deg - 180.0);
        L.input_state = equator_state(rad(*L.input_phi_deg));
        L.plate = HilbertPhasePlate{rad(hpp->edge_deg), rad(hpp->phase_step_deg), hpp->amplitude};
    }

    if (s.explicit_column) {
        double zr_family = p.rayleigh();
        if (hpp) {
            const BeamParams illum = BeamParams::from_waist(hpp->beam_waist_w0 * s.beam_waist, lambda);
            zr_family = illum.rayleigh() / 2.0;
            L.input = synth_gaussian(illum, s.grid, s.input_z);
            L.column.elements.push_back(*L.plate);
        } else {
            const BlochState& st = L.input_state;
            L.input = synth_superposition(p, st.a_R(), st.a_L(), s.grid, s.input_z);
        }
        L.column.elements.insert(L.column.elements.end(), s.elements.begin(), s.elements.end());
        L.family_q = cplx(s.input_z, zr_family);
        L.planes = {{"input", {s.input_z, true}}, {"output", {s.input_z + L.column.total_length(), false}}};
        L.readout = "output";
        return L;
    }

    // Auto column: [plate, condenser, drift] QP1 - drift - QP2, objective, drift to its waist.
    double target = kPi / 2.0, chi = 0.0;
    if (s.gate.kind != GateKind::Off) {
        const auto eq = as_equatorial(g);
        chi = eq->chi;
        target = eq->theta;
    }
    const double alpha = frame + chi / 2.0;
    const double d = s.mc_drift ? *s.mc_drift : symmetric_drift(p, target);
    const auto t0 = std::chrono::steady_clock::now();
    const McSolution sol = tune_mode_converter(p, d, {}, target);
    t.tune = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double sw = sol.input_waist_offset;

    double z0 = -sw;
    std::vector<Element>& el = L.column.elements;
    if (hpp) {
        const BeamParams illum = BeamParams::from_waist(hpp->beam_waist_w0 * s.beam_waist, lambda);
        const double zr_fit = illum.rayleigh() / 2.0;
        const double zr = p.rayleigh();
        const double reach = zr_fit > zr ? std::sqrt(zr * (zr_fit - zr)) : 0.0;
        if (!(reach > sw))
            fail(0, "hpp.beam_waist_w0 is too small to match the illumination onto the mode converter");
        const double fc = zr * zr_fit / reach;
        z0 = 0.0;
        L.input = synth_gaussian(illum, s.grid, 0.0);
        L.family_q = cplx(0.0, zr_fit);
        el.push_back(*L.plate);
        el.push_back(RoundLens{fc});
        el.push_back(Drift{reach - sw});
    } else {
        const BlochState& st = L.input_state;
        L.input = synth_superposition(p, st.a_R(), st.a_L(), s.grid, z0);
        L.family_q = cplx(z0, p.rayleigh());
    }
    const double z_mc = z0 + L.column.total_length();

    cplx q_after;
    if (s.gate.kind == GateKind::Off) {
        el.push_back(Drift{d});
        q_after = sol.q_in(p.rayleigh()) + d;
    } else {
        const auto mc = sol.elements(alpha);
        el.insert(el.end(), mc.begin(), mc.end());
        q_after = sol.q_out;
        L.qp2 = std::get<Quadrupole>(mc.back());
        L.mc = ModeConverterReport{sol, deg(alpha), deg(target)};
    }
    const double fo = s.objective_focal ? *s.objective_focal : p.rayleigh();
    const double lo = -thin_lens_q(q_after, fo).real();
    if (!(lo > 0.0))
        fail(0, "objective.focal does not form a waist downstream of the mode converter");
    el.push_back(RoundLens{fo});
    el.push_back(Drift{lo});

    L.planes = {{"input", {z0, true}},
                {"mc_in", {z_mc, true}},
                {"mc_out", {z_mc + d, true}},
                {"sample", {z0 + L.column.total_length(), false}}};
    L.readout = "sample";
    return L;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::ordered_json amplitudes(cplx a_R, cplx a_L)
{
    return {{"a_R", {a_R.real(), a_R.imag()}}, {"a_L", {a_L.real(), a_L.imag()}}};
}

} // namespace

Simulation simulate(const Scenario& s)
{
    const auto start = std::chrono::steady_clock::now();
    Simulation sim{};
    Layout L = build_layout(s, sim.summary.timings);
    sim.column = L.column;

    auto t0 = std::chrono::steady_clock::now();
    std::vector<RecordPlane> rp;
    for (const auto& [name, plane] : L.planes)
        rp.push_back(plane);
    ColumnRun run = run_column(L.input, L.column, rp);
    for (std::size_t i = 0; i < L.planes.size(); ++i)
        sim.planes.emplace(L.planes[i].first, std::move(run.snapshots[i]));
    if (L.qp2) {
        auto it = sim.planes.find("mc_out");
        it->second = apply_element(it->second, *L.qp2);
    }
    sim.summary.timings.propagate = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const WaveField& out = sim.planes.at(L.readout);
    const AstigmaticBeam beam = transport(AstigmaticBeam::round(L.family_q), L.column.elements);
    const cplx q = 0.5 * (beam.u.q + beam.v.q);
    const BeamParams readout = BeamParams::from_rayleigh(q.imag(), electron_wavelength(s.energy_kev));
    const WaveField basis_R = synth_lg(readout, +1, s.grid, q.real());
    const WaveField basis_L = synth_lg(readout, -1, s.grid, q.real());
    const QubitProjection proj = project_onto_qubit(out, basis_R, basis_L);

    RunSummary& r = sim.summary;
    r.name = s.name;
    r.input_phi_deg = L.input_phi_deg;
    r.predicted = apply_gate(L.lab_gate, L.input_state);
    r.measured = proj.state;
    r.raw_a_R = proj.a_R;
    r.raw_a_L = proj.a_L;
    r.fidelity = fidelity(r.predicted, r.measured);
    r.residual = proj.residual;
    r.clipped_norm = run.clipped_norm;
    r.spectrum = oam_spectrum(out, s.oam_m_max);
    r.mode_converter = L.mc;
    if (L.plate) {
        LobeReport lobes;
        const double axis = lobe_axis_angle(out);
        lobes.lobe_axis_deg = deg(axis);
        double nodal = axis + kPi / 2.0;
        if (nodal > kPi / 2.0)
            nodal -= kPi;
        lobes.nodal_line_deg = deg(nodal);
        const double nx = -std::sin(L.plate->edge_angle), ny = std::cos(L.plate->edge_angle);
        double plus = 0.0, minus = 0.0;
        for (int iy = 0; iy < s.grid.n; ++iy)
            for (int ix = 0; ix < s.grid.n; ++ix) {
                const double side = nx * s.grid.coord(ix) + ny * s.grid.coord(iy);
                const double e = std::norm(out.at(ix, iy));
                (side > 0.0 ? plus : minus) += side == 0.0 ? 0.0 : e;
            }
        lobes.attenuated_side_ratio = plus / minus;
        lobes.image_a = beam.u.ray.a;
        r.lobes = lobes;
    }
    sim.readout_plane = L.readout;
    sim.summary.timings.analyze = seconds_since(t0);
    sim.summary.timings.total = seconds_since(start);
    return sim;
}

std::string summary_json(const RunSummary& r)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["name"] = r.name;
    j["input_phi_deg"] = r.input_phi_deg ? ordered_json(*r.input_phi_deg) : ordered_json(nullptr);
    j["predicted"] = amplitudes(r.predicted.a_R(), r.predicted.a_L());
    j["measured"] = amplitudes(r.measured.a_R(), r.measured.a_L());
    j["measured_raw"] = amplitudes(r.raw_a_R, r.raw_a_L);
    j["fidelity"] = r.fidelity;
    j["residual"] = r.residual;
    j["clipped_norm"] = r.clipped_norm;

    ordered_json oam;
    oam["m_max"] = r.spectrum.m_max;
    oam["polar_norm"] = r.spectrum.polar_norm;
    const auto normalized = r.spectrum.normalized();
    ordered_json frac = ordered_json::object(), norm = ordered_json::object();
    for (int m = -3; m <= 3; ++m) {
        if (m > r.spectrum.m_max || m < -r.spectrum.m_max)
            continue;
        frac[std::to_string(m)] = r.spectrum.intensity(m) / r.spectrum.polar_norm;
        norm[std::to_string(m)] = normalized[static_cast<std::size_t>(m + r.spectrum.m_max)];
    }
    oam["fractions"] = frac;
    oam["normalized"] = norm;
    const double ip = r.spectrum.intensity(1), im = r.spectrum.intensity(-1);
    oam["purity_plus1"] = r.spectrum.fraction(1);
    oam["minus1_share"] = ip + im > 0.0 ? im / (ip + im) : 0.0;
    j["oam"] = oam;

    if (r.mode_converter) {
        const auto& m = *r.mode_converter;
        j["mode_converter"] = {{"f1", m.solution.f1},
                               {"f2", m.solution.f2},
                               {"d", m.solution.d},
                               {"input_waist_offset", m.solution.input_waist_offset},
                               {"gouy_delta", m.solution.gouy_delta},
                               {"residuals", {m.solution.residuals[0], m.solution.residuals[1]}},
                               {"method", m.solution.method},
                               {"frame_deg", m.frame_deg},
                               {"target_deg", m.target_deg}};
    } else {
        j["mode_converter"] = nullptr;
    }
    if (r.lobes) {
        j["lobes"] = {{"lobe_axis_deg", r.lobes->lobe_axis_deg},
                      {"nodal_line_deg", r.lobes->nodal_line_deg},
                      {"attenuated_side_ratio", r.lobes->attenuated_side_ratio},
                      {"image_a", r.lobes->image_a}};
    } else {
        j["lobes"] = nullptr;
    }
    return j.dump(2) + "\n";
}

std::string timings_json(const Timings& t)
{
    nlohmann::ordered_json j = {
        {"tune_s", t.tune}, {"propagate_s", t.propagate}, {"analyze_s", t.analyze}, {"total_s", t.total}};
    return j.dump(2) + "\n";
}

RunSummary run_scenario(const Scenario& s, const std::filesystem::path& out_dir)
{
    Simulation sim = simulate(s);
    std::filesystem::create_directories(out_dir);
    auto write = [&](const std::string& file, const std::string& text) {
        std::ofstream o(out_dir / file, std::ios::binary);
        o << text;
        if (!o)
            throw std::runtime_error("cannot write " + (out_dir / file).string());
    };
    write("scenario.cfg", serialize_scenario(s));
    for (const auto& o : s.outputs) {
        switch (o.kind) {
        case OutputRequest::Kind::SummaryJson:
            write("summary.json", summary_json(sim.summary));
            break;
        case OutputRequest::Kind::OamCsv:
            write("oam.csv", sim.summary.spectrum.to_csv());
            break;
        case OutputRequest::Kind::Intensity:
            render_field(sim.planes.at(o.plane), RenderKind::Intensity, out_dir / (o.plane + "_intensity.pgm"));
            break;
        case OutputRequest::Kind::Phase:
            render_field(sim.planes.at(o.plane), RenderKind::Phase, out_dir / (o.plane + "_phase.pgm"));
            break;
        }
    }
    write("timings.json", timings_json(sim.summary.timings));
    return sim.summary;
}

} // namespace vortexgate
