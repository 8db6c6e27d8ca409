#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "vortexgate/errors.hpp"

using namespace testing_support;

namespace {

double max_spectrum_gap(const OamSpectrum& a, const OamSpectrum& b)
{
    const auto x = a.normalized(), y = b.normalized();
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        worst = std::max(worst, std::abs(x[i] - y[i]));
    return worst;
}

} // namespace

TEST_CASE("pure LG modes have single-line spectra")
{
    const BeamParams p = beam();
    for (int m : {1, -1}) {
        const OamSpectrum s = oam_spectrum(synth_lg(p, m, grid(), 0.4 * p.rayleigh()));
        CHECK(s.fraction(m) == doctest::Approx(1.0).epsilon(1e-8));
        for (int k = -s.m_max; k <= s.m_max; ++k)
            if (k != m)
                CHECK(s.fraction(k) < 1e-8);
    }
}

TEST_CASE("HG10 splits evenly between +1 and -1")
{
    const BeamParams p = beam();
    const OamSpectrum s = oam_spectrum(synth_hg(p, HgOrientation::Hg10, grid(), -0.3 * p.rayleigh()));
    CHECK(s.fraction(1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.fraction(-1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.fraction(0) < 1e-8);
}

TEST_CASE("gate output for the 130 degree input carries 0.117 in m = -1")
{
    const BeamParams p = beam();
    const BlochState o = output_state_closed_form(deg(130.0));
    const OamSpectrum s = oam_spectrum(synth_superposition(p, o.a_R(), o.a_L(), grid(), 0.0));
    CHECK(std::abs(s.fraction(-1) - 0.117) <= 1e-3);
    CHECK(std::abs(s.fraction(-1) - std::norm(o.a_L())) <= 1e-8);
}

TEST_CASE("fast spectrum agrees with the direct quadrature oracle")
{
    const BeamParams p = beam();
    const GridSpec g = grid(256, 12.0);
    const std::vector<WaveField> cases{
        synth_lg(p, 1, g, 0.0),
        synth_hg(p, HgOrientation::Hg01, g, 0.5 * p.rayleigh()),
        synth_superposition(p, std::polar(0.3, 0.5), std::polar(std::sqrt(0.91), -0.2), g, -0.6 * p.rayleigh()),
    };
    for (const WaveField& f : cases)
        CHECK(max_spectrum_gap(oam_spectrum(f), oam_spectrum_oracle(f)) <= 1e-6);
}

TEST_CASE("spectra ignore global phase")
{
    const BeamParams p = beam();
    const WaveField f = synth_superposition(p, std::polar(0.6, 0.2), std::polar(0.8, 1.0), grid(), 0.0);
    CHECK(max_spectrum_gap(oam_spectrum(f), oam_spectrum(scaled(f, std::polar(1.0, 2.1)))) <= 1e-12);
}

TEST_CASE("spectra are unchanged by rotation and the projection phases rotate")
{
    const BeamParams p = beam();
    const GridSpec g = grid();
    const cplx aR = std::polar(0.6, 0.2), aL = std::polar(0.8, 1.0);
    const WaveField f = synth_superposition(p, aR, aL, g, 0.0);
    CHECK(max_spectrum_gap(oam_spectrum(f), oam_spectrum(rotated(f, kPi / 2.0))) <= 1e-9);

    const WaveField R = synth_lg(p, 1, g, 0.0), L = synth_lg(p, -1, g, 0.0);
    for (double beta : {0.3, 1.2, -2.0}) {
        // Rotating the field by beta multiplies the m component by e^{-i m beta}.
        const WaveField turned = synth_superposition(p, aR * std::polar(1.0, -beta), aL * std::polar(1.0, beta), g, 0.0);
        CHECK(max_spectrum_gap(oam_spectrum(f), oam_spectrum(turned)) <= 1e-8);
        const QubitProjection q0 = project_onto_qubit(f, R, L);
        const QubitProjection q1 = project_onto_qubit(turned, R, L);
        CHECK(std::remainder(std::arg(q1.a_R / q0.a_R) + beta, 2 * kPi) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(std::remainder(std::arg(q1.a_L / q0.a_L) - beta, 2 * kPi) == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("spectrum total matches the polar and Cartesian norms")
{
    const BeamParams p = beam();
    const WaveField f = synth_superposition(p, std::polar(0.6, 0.2), std::polar(0.8, 1.0), grid(), 0.0);
    const OamSpectrum s = oam_spectrum(f);
    CHECK(s.total() == doctest::Approx(s.polar_norm).epsilon(1e-6));
    CHECK(s.total() == doctest::Approx(f.norm() * f.norm()).epsilon(1e-3));
}

TEST_CASE("polar resampling of simple fields")
{
    const BeamParams p = beam();
    const GridSpec g = grid();
    const PolarField gauss = to_polar(synth_gaussian(p, g, 0.0), 128, 128);
    for (int j = 0; j < gauss.n_r; j += 8) {
        double lo = 1e300, hi = 0.0;
        for (int k = 0; k < gauss.n_phi; ++k) {
            lo = std::min(lo, std::abs(gauss.at(j, k)));
            hi = std::max(hi, std::abs(gauss.at(j, k)));
        }
        CHECK(hi - lo <= 1e-3 * std::abs(gauss.at(0, 0)));
    }

    const PolarField lg = to_polar(synth_lg(p, 1, g, 0.0), 128, 128);
    const int j = static_cast<int>(kWaist / lg.dr());
    for (int k = 0; k + 1 < lg.n_phi; ++k)
        CHECK(std::arg(lg.at(j, k + 1) / lg.at(j, k)) == doctest::Approx(2 * kPi / lg.n_phi).epsilon(1e-3));
}

TEST_CASE("polar round trip returns the field")
{
    const BeamParams p = beam();
    const WaveField f = synth_superposition(p, std::polar(0.6, 0.2), std::polar(0.8, 1.0), grid(), 0.3 * p.rayleigh());
    const PolarField pol = to_polar(f, f.grid().n / 2, kDefaultAzimuthalSamples);
    const WaveField back = to_cartesian(pol, f);
    CHECK(std::sqrt(added(back, scaled(f, -1.0)).norm() / f.norm()) <= 1e-3);
}

TEST_CASE("off-centre beams are analysed about their centroid")
{
    const BeamParams p = beam();
    const GridSpec g = grid();
    const WaveField f = synth_lg(p, 1, g, 0.0);
    // Shift by whole pixels.
    std::vector<cplx> v(f.values().size(), cplx(0.0));
    const int sx = 10, sy = -6;
    for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix) {
            const int tx = ix + sx, ty = iy + sy;
            if (tx >= 0 && tx < g.n && ty >= 0 && ty < g.n)
                v[static_cast<std::size_t>(ty) * g.n + tx] = f.at(ix, iy);
        }
    const WaveField moved = f.with_values(std::move(v));
    const auto c = intensity_centroid(moved);
    CHECK(c[0] == doctest::Approx(sx * g.pitch()).epsilon(1e-9));
    CHECK(c[1] == doctest::Approx(sy * g.pitch()).epsilon(1e-9));
    CHECK(oam_spectrum(moved).fraction(1) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("undersampled azimuth and truncated beams are refused")
{
    const BeamParams p = beam();
    const GridSpec g = grid();
    const PolarField pol = to_polar(synth_lg(p, 1, g, 0.0), 64, 32);
    CHECK_THROWS_AS(oam_spectrum(pol, 10), ContractViolation);
    CHECK_NOTHROW(oam_spectrum(pol, 7));
    const BeamParams wide = BeamParams::from_waist(8.0 * kWaist, lambda200());
    CHECK_THROWS_AS(to_polar(synth_gaussian(wide, g, 0.0), 64, 64), SamplingError);
}

TEST_CASE("averaged spectra and CSV output")
{
    const BeamParams p = beam();
    const std::vector<WaveField> planes{synth_lg(p, 1, grid(), 0.0), synth_lg(p, -1, grid(), 0.0)};
    const OamSpectrum avg = oam_spectrum_averaged(planes, 3);
    CHECK(avg.fraction(1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(avg.fraction(-1) == doctest::Approx(0.5).epsilon(1e-6));

    std::istringstream csv(avg.to_csv());
    std::string line;
    std::getline(csv, line);
    CHECK(line == "m,intensity,normalized");
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty())
            ++rows;
    CHECK(rows == 7);
}

TEST_CASE("qubit projection")
{
    const BeamParams p = beam();
    const GridSpec g = grid();
    const WaveField R = synth_lg(p, 1, g, 0.0), L = synth_lg(p, -1, g, 0.0);
    const QubitProjection h = project_onto_qubit(synth_hg(p, HgOrientation::Hg10, g, 0.0), R, L);
    CHECK(fidelity(h.state, state_H()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(h.residual) < 1e-12);
    const QubitProjection gauss = project_onto_qubit(synth_gaussian(p, g, 0.0), R, L);
    CHECK(gauss.residual == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(project_onto_qubit(R, R, R), ContractViolation);
    CHECK_THROWS_AS(project_onto_qubit(R, R, scaled(L, 2.0)), ContractViolation);
}

TEST_CASE("oracle alone on pure modes")
{
    const BeamParams p = beam();
    const GridSpec g = grid(256, 12.0);
    CHECK(oam_spectrum_oracle(synth_lg(p, -1, g, 0.0)).fraction(-1) == doctest::Approx(1.0).epsilon(1e-8));
    const WaveField f = synth_superposition(p, std::polar(0.6, 0.2), std::polar(0.8, 1.0), g, 0.0);
    CHECK(max_spectrum_gap(oam_spectrum_oracle(f), oam_spectrum_oracle(scaled(f, std::polar(1.0, -0.9)))) <= 1e-12);
}

TEST_CASE("projection onto the LG pair")
{
    const BeamParams p = beam();
    const GridSpec g = grid();
    const WaveField R = synth_lg(p, 1, g, 0.0), L = synth_lg(p, -1, g, 0.0);
    const QubitProjection r = project_onto_qubit(R, R, L);
    CHECK(std::abs(r.a_R - 1.0) < 1e-8);
    CHECK(std::abs(r.a_L) < 1e-8);
    CHECK(std::abs(r.residual) < 1e-8);

    const BlochState s = equator_state(deg(130.0));
    const QubitProjection q = project_onto_qubit(synth_superposition(p, s.a_R(), s.a_L(), g, 0.0), R, L);
    CHECK(std::abs(q.a_R - 1.0 / std::sqrt(2.0)) < 1e-6);
    CHECK(std::abs(q.a_L - std::polar(1.0 / std::sqrt(2.0), deg(130.0))) < 1e-6);
    CHECK(std::abs(q.residual) < 1e-6);
}
