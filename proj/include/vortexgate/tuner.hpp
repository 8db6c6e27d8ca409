#pragma once

#include <array>
#include <numbers>
#include <string>
#include <vector>

#include "vortexgate/beam_transport.hpp"
#include "vortexgate/column.hpp"
#include "vortexgate/modes.hpp"

namespace vortexgate {

// Search region for the two unknowns of the converter.  A zero entry means
// "derive from the drift": f1 in [d/20, 50 d], s in [-5 d, 10 d].
struct TunerBounds {
    double f_min = 0.0;
    double f_max = 0.0;
    double s_min = 0.0;
    double s_max = 0.0;
};

// Two quadrupoles QP1(f1) - Drift(d) - QP2(f2), both with the converging
// axis along the same direction.  The input beam of Rayleigh length zR has
// its waist input_waist_offset downstream of QP1.
struct McSolution {
    double f1 = 0.0;
    double f2 = 0.0;
    double d = 0.0;
    double gouy_delta = 0.0;
    double input_waist_offset = 0.0;
    // (Gouy residual in rad, relative width mismatch at QP2)
    std::array<double, 2> residuals{};
    std::string method;
    // Beam parameter leaving QP2 (identical in both sections).
    cplx q_out;

    [[nodiscard]] cplx q_in(double rayleigh) const { return {-input_waist_offset, rayleigh}; }
    // QP1, drift, QP2 with the given axis angle.
    [[nodiscard]] std::vector<Element> elements(double axis_angle = 0.0) const;
};

// Solves for (f1, s) so that the Gouy phase difference between the
// converging and diverging sections equals `target` and the sections have
// equal widths at QP2; f2 then removes the residual astigmatism.  Throws
// InfeasibleGeometry when no solution with f1, f2 > 0 exists in bounds.
McSolution tune_mode_converter(const BeamParams& p, double d, const TunerBounds& bounds = {},
                               double target = std::numbers::pi / 2.0);

// Drift for which the mirror-symmetric converter (f1 = f2) with Gouy
// difference `target` accepts a beam of this Rayleigh length.
double symmetric_drift(const BeamParams& p, double target = std::numbers::pi / 2.0);

// Evaluates the converter for given (f1, s); f2 closes the astigmatism.
McSolution evaluate_mode_converter(const BeamParams& p, double d, double f1, double s,
                                   double target = std::numbers::pi / 2.0);

} // namespace vortexgate
