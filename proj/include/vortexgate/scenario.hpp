#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vortexgate/column.hpp"
#include "vortexgate/modes.hpp"
#include "vortexgate/oam.hpp"
#include "vortexgate/qubit.hpp"
#include "vortexgate/tuner.hpp"

namespace vortexgate {

// Equator state (1, e^{i phi})/sqrt2 synthesized directly in the LG basis.
struct AnalyticPreparation {
    double phi_deg = 0.0;
    bool operator==(const AnalyticPreparation&) const = default;
};

// Round Gaussian at its waist, cut by a half-plane phase plate and matched
// onto the mode-converter input by a condenser lens.
struct HppPreparation {
    double edge_deg = 0.0;
    double phase_step_deg = 180.0;
    double amplitude = 1.0;
    // Illumination waist in units of beam.waist.
    double beam_waist_w0 = 3.0;
    bool operator==(const HppPreparation&) const = default;
};

using Preparation = std::variant<AnalyticPreparation, HppPreparation>;

enum class GateKind { Off, Rx, Rotation, Matrix };

struct GateSetting {
    GateKind kind = GateKind::Rx;
    std::array<double, 3> axis{1.0, 0.0, 0.0};
    double theta_deg = 90.0;
    std::array<cplx, 4> matrix{cplx(1.0), cplx(0.0), cplx(0.0), cplx(1.0)};
    bool operator==(const GateSetting&) const = default;
};

struct OutputRequest {
    enum class Kind { SummaryJson, OamCsv, Intensity, Phase };
    Kind kind = Kind::SummaryJson;
    std::string plane; // Intensity / Phase only
    bool operator==(const OutputRequest&) const = default;
};

// All lengths in metres, all angles in degrees, exactly as written in the
// config document.
struct Scenario {
    std::string name;
    double energy_kev = 200.0;
    GridSpec grid{512, 0.0};
    double beam_waist = 50e-9;
    Preparation preparation;
    GateSetting gate;
    std::optional<double> mc_drift; // empty: symmetric drift for the gate angle
    double mc_frame_deg = 0.0;
    std::optional<double> objective_focal; // empty: the input Rayleigh length
    bool explicit_column = false;
    std::vector<Element> elements; // explicit columns only
    double input_z = 0.0;          // explicit columns only
    int oam_m_max = kDefaultMaxCharge;
    std::vector<OutputRequest> outputs;

    bool operator==(const Scenario&) const = default;
};

constexpr double kDefaultExtentInWaists = 24.0;

// Throws ConfigError with the offending line; unknown keys name the
// closest valid key.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& file);
std::string serialize_scenario(const Scenario& s);

// Plane names available for outputs.
std::vector<std::string> scenario_planes(const Scenario& s);

struct LobeReport {
    double lobe_axis_deg = 0.0;
    double nodal_line_deg = 0.0;
    // Intensity on the lab side the plate attenuates over the other side.
    double attenuated_side_ratio = 1.0;
    // A element of the ray matrix from the plate to the readout plane; its
    // sign says on which side the attenuated half is imaged.
    double image_a = 1.0;
};

struct ModeConverterReport {
    McSolution solution;
    double frame_deg = 0.0;
    double target_deg = 0.0;
};

struct Timings {
    double tune = 0.0;
    double propagate = 0.0;
    double analyze = 0.0;
    double total = 0.0;
};

struct RunSummary {
    std::string name;
    std::optional<double> input_phi_deg;
    BlochState predicted{1.0, 0.0};
    BlochState measured{1.0, 0.0};
    cplx raw_a_R;
    cplx raw_a_L;
    double fidelity = 0.0;
    double residual = 0.0;
    double clipped_norm = 0.0;
    OamSpectrum spectrum;
    std::optional<ModeConverterReport> mode_converter;
    std::optional<LobeReport> lobes;
    // Wall-clock only; kept out of summary.json so that file is reproducible.
    Timings timings;
};

struct Simulation {
    RunSummary summary;
    ColumnSpec column;
    std::map<std::string, WaveField> planes;
    // Readout plane name and the LG pair used there.
    std::string readout_plane;
};

// Deterministic pipeline without touching the file system.
Simulation simulate(const Scenario& s);

// simulate() plus every requested artifact in `out_dir`, and the resolved
// scenario as scenario.cfg.  Timings go to timings.json.
RunSummary run_scenario(const Scenario& s, const std::filesystem::path& out_dir);

std::string summary_json(const RunSummary& r);
std::string timings_json(const Timings& t);

// Angle of the major axis of the intensity second moments, in (-pi/2, pi/2].
double lobe_axis_angle(const WaveField& f);

enum class RenderKind { Intensity, Phase };

// 16-bit binary PGM at `path` plus a `.txt` sidecar with the scale.
// Intensity is linear and max-normalized; phase maps (-pi, pi] onto the full
// grey range.
void render_field(const WaveField& f, RenderKind kind, const std::filesystem::path& path);

// Reads back a 16-bit PGM written by render_field.
struct GreyImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> pixels;
};
GreyImage read_pgm(const std::filesystem::path& path);

} // namespace vortexgate
