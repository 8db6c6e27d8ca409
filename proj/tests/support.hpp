#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "vortexgate/column.hpp"
#include "vortexgate/modes.hpp"
#include "vortexgate/oam.hpp"
#include "vortexgate/qubit.hpp"
#include "vortexgate/tuner.hpp"

namespace testing_support {

using namespace vortexgate;

constexpr double kPi = std::numbers::pi;
constexpr double kWaist = 50e-9;

inline double deg(double d) { return d * kPi / 180.0; }

inline double lambda200() { return electron_wavelength(200.0); }
inline BeamParams beam() { return BeamParams::from_waist(kWaist, lambda200()); }
inline GridSpec grid(int n = 512, double extent_w0 = 24.0) { return {n, extent_w0 * kWaist}; }

// Mode converter tuned for the default beam, followed by nothing.
struct Converter {
    BeamParams p = beam();
    McSolution sol;
    GridSpec g;

    explicit Converter(int n = 512) : sol(tune_mode_converter(p, symmetric_drift(p))), g(grid(n)) {}

    [[nodiscard]] ColumnSpec column(double alpha = 0.0) const { return {sol.elements(alpha), g, 200.0}; }
    [[nodiscard]] WaveField input(const BlochState& s) const
    {
        return synth_superposition(p, s.a_R(), s.a_L(), g, -sol.input_waist_offset);
    }
    [[nodiscard]] WaveField basis(int m) const
    {
        const BeamParams out = BeamParams::from_rayleigh(sol.q_out.imag(), p.wavelength());
        return synth_lg(out, m, g, sol.q_out.real());
    }
    [[nodiscard]] QubitProjection readout(const WaveField& f) const { return project_onto_qubit(f, basis(1), basis(-1)); }
};

// Second-moment width w = 2 sqrt(<x^2>) of a round beam about the axis.
inline double rms_width(const WaveField& f)
{
    const GridSpec& g = f.grid();
    double s = 0.0, sx = 0.0;
    for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix) {
            const double e = std::norm(f.at(ix, iy));
            const double x = g.coord(ix);
            s += e;
            sx += e * x * x;
        }
    return 2.0 * std::sqrt(sx / s);
}

} // namespace testing_support
