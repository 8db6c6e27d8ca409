#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vortexgate/modes.hpp"

namespace vortexgate {

struct Drift {
    double length = 0.0;
    bool operator==(const Drift&) const = default;
};

struct RoundLens {
    double focal_length = 0.0;
    bool operator==(const RoundLens&) const = default;
};

// Thin astigmatic lens: converging along u, diverging along v, where (u, v)
// is the lab frame rotated counter-clockwise by axis_angle.
struct Quadrupole {
    double focal_length = 0.0;
    double axis_angle = 0.0;
    bool operator==(const Quadrupole&) const = default;
};

// Ideal half-plane phase plate.  The edge runs through the optic axis at
// edge_angle; the half on the left of the edge direction (n . r > 0 with
// n = (-sin, cos)) is multiplied by amplitude_factor * e^{i phase_step}.
struct HilbertPhasePlate {
    double edge_angle = 0.0;
    double phase_step = 0.0;
    double amplitude_factor = 1.0;
    bool operator==(const HilbertPhasePlate&) const = default;
};

struct CircularAperture {
    double radius = 0.0;
    bool operator==(const CircularAperture&) const = default;
};

using Element = std::variant<Drift, RoundLens, Quadrupole, HilbertPhasePlate, CircularAperture>;

// Throws ContractViolation for non-positive drifts, zero focal lengths,
// amplitude factors outside (0, 1], or non-positive aperture radii.
void validate_element(const Element& e);
std::string element_name(const Element& e);
// True for elements that remove norm (phase plate, aperture).
bool is_lossy(const Element& e);

struct ColumnSpec {
    std::vector<Element> elements;
    GridSpec grid;
    double energy_kev = 200.0;

    // Throws ContractViolation: empty list, zero total length, bad element.
    void validate() const;
    [[nodiscard]] double total_length() const;

    bool operator==(const ColumnSpec&) const = default;
};

// How free propagation treats spectral content beyond the band limit.
enum class BandLimitPolicy {
    Refuse, // throw SamplingError if the clipped energy exceeds the tolerance
    Absorb, // clip silently; the lost norm is the caller's to account for
};

struct PropagationOptions {
    BandLimitPolicy policy = BandLimitPolicy::Refuse;
    // Largest admissible clipped fraction of the field norm under Refuse.
    double tolerance = 1e-8;
};

// Band-limited angular-spectrum propagation by dz (either sign).  The pass
// band is a disc and the grid corners outside the inscribed circle absorb.
WaveField propagate_free(const WaveField& f, double dz, const PropagationOptions& opt = {});

// Fraction of the field's spectral energy lying beyond the band limit for dz.
double band_limit_clipped_fraction(const WaveField& f, double dz);

// Thin-element transmission.  Drifts are forwarded to propagate_free.
WaveField apply_element(const WaveField& f, const Element& e, const PropagationOptions& opt = {});

struct RecordPlane {
    double z = 0.0;
    // Snapshot taken before any thin element located exactly at z.
    bool upstream = false;
};

struct ColumnRun {
    std::vector<WaveField> snapshots; // in the order the planes were requested
    WaveField output;
    // Norm removed by clipping after a lossy element (not counting the
    // element's own transmission loss).
    double clipped_norm = 0.0;
};

// Walks the element list from input.z(), applying thin elements and
// propagating drifts.  Until the first lossy element the band limit is
// enforced strictly; afterwards clipped content is absorbed and reported.
ColumnRun run_column(const WaveField& input, const ColumnSpec& spec, std::span<const RecordPlane> planes);
ColumnRun run_column(const WaveField& input, const ColumnSpec& spec, std::span<const double> planes);

// Adds alpha to every quadrupole axis angle.  Throws ContractViolation when
// the column has no quadrupole.
ColumnSpec rotate_gate_frame(const ColumnSpec& spec, double alpha);

} // namespace vortexgate
