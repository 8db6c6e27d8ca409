#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "vortexgate/beam_transport.hpp"
#include "vortexgate/errors.hpp"
#include "vortexgate/scenario.hpp"

using namespace testing_support;

namespace {

// Ray matrices multiplied out by hand for one principal section.
struct M2 {
    double a, b, c, d;
};
M2 mul(const M2& n, const M2& m) { return {n.a * m.a + n.b * m.c, n.a * m.b + n.b * m.d, n.c * m.a + n.d * m.c, n.c * m.b + n.d * m.d}; }
M2 lens(double f) { return {1.0, 0.0, -1.0 / f, 1.0}; }
M2 gap(double l) { return {1.0, l, 0.0, 1.0}; }
cplx abcd(const M2& m, cplx q) { return (m.a * q + m.b) / (m.c * q + m.d); }
// Gouy phase gathered through the system: -arg(A + B / q_in).
double gouy(const M2& m, cplx q) { return -std::arg(m.a + m.b / q); }

double side_ratio(const WaveField& f, double edge)
{
    const GridSpec& g = f.grid();
    double plus = 0.0, minus = 0.0;
    for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix) {
            const double s = -std::sin(edge) * g.coord(ix) + std::cos(edge) * g.coord(iy);
            if (s > 0.0)
                plus += std::norm(f.at(ix, iy));
            else if (s < 0.0)
                minus += std::norm(f.at(ix, iy));
        }
    return plus / minus;
}

} // namespace

TEST_CASE("propagated Gaussian follows w(z) over two Rayleigh lengths each way")
{
    const BeamParams p = beam();
    const GridSpec g = grid();
    const WaveField w = synth_gaussian(p, g, 0.0);
    for (double t : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0}) {
        const WaveField f = propagate_free(w, t * p.rayleigh());
        CHECK(f.z() == doctest::Approx(t * p.rayleigh()));
        CHECK(rms_width(f) == doctest::Approx(p.width(t * p.rayleigh())).epsilon(5e-3));
        CHECK(f.norm() == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("propagated LG matches the analytic mode")
{
    const BeamParams p = beam();
    const GridSpec g = grid();
    const WaveField f = propagate_free(synth_lg(p, 1, g, -0.8 * p.rayleigh()), 1.5 * p.rayleigh());
    const WaveField ref = synth_lg(p, 1, g, 0.7 * p.rayleigh());
    CHECK(std::abs(inner_product(ref, f)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("zero step is the identity and steps reverse")
{
    const BeamParams p = beam();
    const WaveField f = synth_superposition(p, std::polar(0.6, 0.2), std::polar(0.8, 1.0), grid(), 0.1 * p.rayleigh());
    const WaveField same = propagate_free(f, 0.0);
    CHECK(max_relative_difference(f, same) == 0.0);
    const WaveField back = propagate_free(propagate_free(f, 1.7 * p.rayleigh()), -1.7 * p.rayleigh());
    CHECK(max_relative_difference(f, back) < 1e-8);
}

TEST_CASE("free propagation leaves OAM spectra unchanged")
{
    const BeamParams p = beam();
    const WaveField f = synth_superposition(p, std::polar(0.6, 0.2), std::polar(0.8, 1.0), grid(), -0.5 * p.rayleigh());
    const auto a = oam_spectrum(f).normalized();
    const auto b = oam_spectrum(propagate_free(f, p.rayleigh())).normalized();
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a[i] - b[i]) < 1e-6);
}

TEST_CASE("aliasing is refused with the grid that would fix it")
{
    const BeamParams p = beam();
    const WaveField f = synth_gaussian(p, grid(64), 0.0);
    try {
        propagate_free(f, 40.0 * p.rayleigh());
        FAIL("expected a sampling error");
    } catch (const SamplingError& e) {
        CHECK(e.minimal_n() > 64);
        CHECK(std::string(e.what()).find("need n >=") != std::string::npos);
        // The suggested grid at the same pitch indeed passes.
        const GridSpec big{e.minimal_n(), e.minimal_n() * f.pitch()};
        CHECK(band_limit_clipped_fraction(synth_gaussian(p, big, 0.0), 40.0 * p.rayleigh()) <= 1e-8);
    }
    const WaveField clipped = propagate_free(f, 40.0 * p.rayleigh(), {BandLimitPolicy::Absorb, 1e-8});
    CHECK(clipped.norm() < 1.0);
}

TEST_CASE("thin elements apply their transmission functions")
{
    const BeamParams p = beam();
    const GridSpec g = grid(256, 12.0);
    const WaveField h = normalized(added(synth_hg(p, HgOrientation::Hg10, g, 0.0), synth_hg(p, HgOrientation::Hg01, g, 0.0)));
    const double f = 0.01;
    const WaveField q = apply_element(h, Quadrupole{f, 0.0});
    const double k = p.wavenumber();
    // Off-axis points on x and y pick up opposite quadratic phases.
    const int i = g.n / 2 + 20;
    const double x = g.coord(i);
    CHECK(std::arg(q.at(i, g.n / 2) / h.at(i, g.n / 2)) == doctest::Approx(std::remainder(-k * x * x / (2 * f), 2 * kPi)));
    CHECK(std::arg(q.at(g.n / 2, i) / h.at(g.n / 2, i)) == doctest::Approx(std::remainder(k * x * x / (2 * f), 2 * kPi)));
    CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-12));

    const WaveField l = apply_element(h, RoundLens{f});
    CHECK(std::arg(l.at(i, i) / h.at(i, i)) == doctest::Approx(std::remainder(-k * 2 * x * x / (2 * f), 2 * kPi)));

    const WaveField a = apply_element(h, CircularAperture{kWaist});
    CHECK(a.at(g.n / 2 + static_cast<int>(1.5 * kWaist / g.pitch()), g.n / 2) == cplx(0.0));
    CHECK(a.norm() < 1.0);
    CHECK_THROWS_AS(apply_element(h, CircularAperture{g.extent}), ContractViolation);
    CHECK_THROWS_AS(apply_element(h, Drift{-1.0}), ContractViolation);
    CHECK_THROWS_AS(apply_element(h, HilbertPhasePlate{0.0, kPi, 1.5}), ContractViolation);
}

TEST_CASE("strong lenses that alias on the grid are refused")
{
    const BeamParams p = beam();
    const WaveField f = synth_gaussian(p, grid(64), 0.0);
    CHECK_THROWS_AS(apply_element(f, RoundLens{1e-9}), SamplingError);
}

TEST_CASE("phase plate then focus gives two lobes across the edge")
{
    const double lambda = lambda200();
    const BeamParams illum = BeamParams::from_waist(3.0 * kWaist, lambda);
    const GridSpec g = grid();
    for (double edge : {0.0, deg(30.0), deg(90.0)}) {
        const double fl = illum.rayleigh();
        WaveField f = synth_gaussian(illum, g, 0.0);
        f = apply_element(f, HilbertPhasePlate{edge, kPi, 1.0});
        f = apply_element(f, RoundLens{fl});
        f = propagate_free(f, fl / 2.0, {BandLimitPolicy::Absorb, 1e-8});
        // The focus of a waist placed at the lens lies at f / 2 for zR = f.
        double axis = lobe_axis_angle(f) - (edge + kPi / 2.0);
        axis = std::remainder(axis, kPi);
        CHECK(std::abs(axis) < deg(1.0));
        CHECK(std::norm(f.at(g.n / 2, g.n / 2)) < 1e-3 * f.max_abs() * f.max_abs());
    }
}

TEST_CASE("an attenuating plate makes the lobes unequal on the side the ray matrix predicts")
{
    const double lambda = lambda200();
    const BeamParams illum = BeamParams::from_waist(3.0 * kWaist, lambda);
    const GridSpec g = grid();
    const double fl = 0.3 * illum.rayleigh();
    WaveField f = synth_gaussian(illum, g, 0.0);
    f = apply_element(f, HilbertPhasePlate{0.0, kPi, 0.8});
    f = apply_element(f, RoundLens{fl});
    // Before the focal plane (A > 0) the attenuated half stays dimmer,
    // beyond it (A < 0) the image is inverted.
    const PropagationOptions absorb{BandLimitPolicy::Absorb, 1e-8};
    CHECK(side_ratio(propagate_free(f, 0.5 * fl, absorb), 0.0) < 0.95);
    CHECK(side_ratio(propagate_free(f, 1.5 * fl, absorb), 0.0) > 1.05);
}

TEST_CASE("run_column with one drift equals propagate_free, and records planes")
{
    const BeamParams p = beam();
    const GridSpec g = grid();
    const WaveField in = synth_lg(p, 1, g, -0.5 * p.rayleigh());
    const ColumnSpec spec{{Drift{p.rayleigh()}}, g, 200.0};
    const double mid = in.z() + 0.3 * p.rayleigh();
    const std::vector<double> planes{mid, in.z(), in.z() + p.rayleigh()};
    const ColumnRun run = run_column(in, spec, planes);
    const WaveField direct = propagate_free(in, p.rayleigh());
    CHECK(max_relative_difference(direct, run.output) == 0.0);
    CHECK(max_relative_difference(propagate_free(in, 0.3 * p.rayleigh()), run.snapshots[0]) == 0.0);
    CHECK(max_relative_difference(in, run.snapshots[1]) == 0.0);
    CHECK(run.snapshots[2].z() == doctest::Approx(direct.z()));
    CHECK(run.clipped_norm == 0.0);

    const std::vector<double> outside{in.z() - p.rayleigh()};
    CHECK_THROWS_AS(run_column(in, spec, outside), ContractViolation);
    CHECK_THROWS_AS(run_column(in, ColumnSpec{{}, g, 200.0}, std::vector<double>{}), ContractViolation);
    CHECK_THROWS_AS(run_column(in, ColumnSpec{{Drift{1.0}}, g, 100.0}, std::vector<double>{}), ContractViolation);
}

TEST_CASE("columns without lossy elements conserve the norm; the converter column is linear")
{
    const Converter c;
    const ColumnSpec spec = c.column();
    const WaveField a = c.input(equator_state(0.3));
    const WaveField b = c.input(state_R());
    const ColumnRun ra = run_column(a, spec, std::vector<double>{});
    CHECK(ra.output.norm() == doctest::Approx(1.0).epsilon(1e-6));

    const cplx ca = std::polar(0.3, 0.4), cb = std::polar(1.2, -2.0);
    const WaveField mix = added(scaled(a, ca), scaled(b, cb));
    const ColumnRun rm = run_column(mix, spec, std::vector<double>{});
    const ColumnRun rb = run_column(b, spec, std::vector<double>{});
    const WaveField expect = added(scaled(ra.output, ca), scaled(rb.output, cb));
    CHECK(max_relative_difference(expect, rm.output) < 1e-8);
}

TEST_CASE("tuner reproduces the mirror-symmetric converter")
{
    const BeamParams p = beam();
    const double d = 3.0 * p.rayleigh() / std::sqrt(2.0);
    CHECK(symmetric_drift(p) == doctest::Approx(d).epsilon(1e-12));
    const McSolution s = tune_mode_converter(p, d);
    // Known symmetric member: f1 = f2 = sqrt2 d with the waist 2d/3 past QP1.
    CHECK(s.f1 == doctest::Approx(std::sqrt(2.0) * d).epsilon(1e-6));
    CHECK(s.f2 == doctest::Approx(std::sqrt(2.0) * d).epsilon(1e-6));
    CHECK(s.input_waist_offset == doctest::Approx(2.0 * d / 3.0).epsilon(1e-6));
    CHECK(std::abs(s.residuals[0]) < 1e-6);
    CHECK(std::abs(s.residuals[1]) < 1e-6);
    CHECK(std::abs(s.gouy_delta - kPi / 2.0) <= 1e-4);

    // Independent check by hand-multiplied ray matrices.
    const cplx q0(-s.input_waist_offset, p.rayleigh());
    const M2 mx = mul(lens(s.f2), mul(gap(d), lens(s.f1)));
    const M2 my = mul(lens(-s.f2), mul(gap(d), lens(-s.f1)));
    CHECK(gouy(mx, q0) - gouy(my, q0) == doctest::Approx(kPi / 2.0).epsilon(1e-9));
    const cplx qx = abcd(mx, q0), qy = abcd(my, q0);
    CHECK(std::abs(qx - qy) < 1e-9 * std::abs(qx));
    CHECK(std::abs(qx - s.q_out) < 1e-9 * std::abs(qx));
    // Output is the mirror image of the input beam.
    CHECK(qx.real() == doctest::Approx(std::sqrt(2.0) * p.rayleigh()).epsilon(1e-9));
    CHECK(qx.imag() == doctest::Approx(p.rayleigh()).epsilon(1e-9));
}

TEST_CASE("tuner handles asymmetric drifts and other targets")
{
    const BeamParams p = BeamParams::from_rayleigh(1.0, lambda200());
    struct Case {
        double d, f1, s, f2;
    };
    // Roots found independently with a general-purpose solver.
    for (const Case& c : {Case{2.0, 2.0, 1.0, 4.0}, Case{2.5, 5.0, 2.0, 2.5}, Case{3.0, 7.854, 2.618, 2.292}}) {
        const McSolution m = tune_mode_converter(p, c.d);
        CHECK(m.f1 == doctest::Approx(c.f1).epsilon(1e-3));
        CHECK(m.input_waist_offset == doctest::Approx(c.s).epsilon(1e-3));
        CHECK(m.f2 == doctest::Approx(c.f2).epsilon(1e-3));
        CHECK(std::max(std::abs(m.residuals[0]), std::abs(m.residuals[1])) < 1e-6);
        const cplx q0(-m.input_waist_offset, 1.0);
        const M2 mx = mul(lens(m.f2), mul(gap(c.d), lens(m.f1)));
        const M2 my = mul(lens(-m.f2), mul(gap(c.d), lens(-m.f1)));
        CHECK(gouy(mx, q0) - gouy(my, q0) == doctest::Approx(kPi / 2.0).epsilon(1e-9));
        CHECK(std::abs(abcd(mx, q0) - abcd(my, q0)) < 1e-9);
    }
    for (double target : {kPi / 3.0, 2.0 * kPi / 3.0}) {
        const McSolution m = tune_mode_converter(p, symmetric_drift(p, target), {}, target);
        CHECK(m.gouy_delta == doctest::Approx(target).epsilon(1e-9));
        CHECK(m.f1 == doctest::Approx(m.f2).epsilon(1e-6));
    }
}

TEST_CASE("infeasible converter geometry reports the residual landscape")
{
    const BeamParams p = BeamParams::from_rayleigh(1.0, lambda200());
    TunerBounds narrow;
    narrow.f_min = 100.0;
    narrow.f_max = 200.0;
    try {
        tune_mode_converter(p, 2.0, narrow);
        FAIL("expected infeasible geometry");
    } catch (const InfeasibleGeometry& e) {
        CHECK(std::string(e.what()).find("residual landscape") != std::string::npos);
    }
    CHECK_THROWS_AS(tune_mode_converter(p, -1.0), ContractViolation);
    CHECK_THROWS_AS(tune_mode_converter(p, 2.0, {}, kPi), ContractViolation);
}

TEST_CASE("ABCD transport follows the principal frame")
{
    const cplx q(-1.0, 2.0);
    const std::vector<Element> els{Quadrupole{3.0, 0.4}, Drift{1.0}, Quadrupole{2.0, 0.4 + kPi / 2.0}};
    const AstigmaticBeam b = transport(AstigmaticBeam::round(q), els);
    CHECK(b.frame == doctest::Approx(0.4));
    CHECK(std::abs(b.u.q - abcd(mul(lens(-2.0), mul(gap(1.0), lens(3.0))), q)) < 1e-12);
    CHECK(std::abs(b.v.q - abcd(mul(lens(2.0), mul(gap(1.0), lens(-3.0))), q)) < 1e-12);
    const std::vector<Element> skew{Quadrupole{3.0, 0.0}, Drift{1.0}, Quadrupole{2.0, 0.3}};
    CHECK_THROWS_AS(transport(AstigmaticBeam::round(q), skew), ContractViolation);
    const AstigmaticBeam half = transport(AstigmaticBeam::round(q), els, 0.5);
    CHECK(half.u.q.real() == doctest::Approx(abcd(mul(gap(0.5), lens(3.0)), q).real()));
}

TEST_CASE("the tuned converter column realizes the gate on LG inputs")
{
    const Converter c;
    const ColumnSpec spec = c.column();
    for (double phi : {0.0, 90.0, 130.0, 180.0}) {
        const WaveField out = run_column(c.input(equator_state(deg(phi))), spec, std::vector<double>{}).output;
        const QubitProjection pr = c.readout(out);
        CHECK(fidelity(pr.state, output_state_closed_form(deg(phi))) >= 0.99);
        CHECK(pr.residual <= 0.02);
    }
    const WaveField h = run_column(c.input(state_H()), spec, std::vector<double>{}).output;
    CHECK(fidelity(c.readout(h).state, state_H()) >= 0.99);
    const WaveField v = run_column(c.input(equator_state(deg(90.0))), spec, std::vector<double>{}).output;
    CHECK(oam_spectrum(v).fraction(1) >= 0.95);
}

TEST_CASE("rotating the converter frame conjugates the gate by R_Z(2 alpha)")
{
    const Converter c;
    const ColumnSpec base = c.column();
    CHECK(rotate_gate_frame(base, 0.0) == base);
    CHECK_THROWS_AS(rotate_gate_frame(ColumnSpec{{Drift{1.0}}, c.g, 200.0}, 0.1), ContractViolation);

    const double alpha = deg(30.0);
    const ColumnSpec turned = rotate_gate_frame(base, alpha);
    const GateMatrix oracle = rz(2.0 * alpha) * sqrt_not() * rz(-2.0 * alpha);
    for (double phi : {0.0, 45.0, 90.0, 200.0}) {
        const BlochState in = equator_state(deg(phi));
        const WaveField out = run_column(c.input(in), turned, std::vector<double>{}).output;
        CHECK(fidelity(c.readout(out).state, apply_gate(oracle, in)) >= 0.99);
    }

    // A quarter turn swaps the eigenphases of H and V.
    auto eigen_ratio = [&](const ColumnSpec& spec) {
        const QubitProjection h = c.readout(run_column(c.input(state_H()), spec, std::vector<double>{}).output);
        const QubitProjection v = c.readout(run_column(c.input(state_V()), spec, std::vector<double>{}).output);
        return overlap(state_H(), BlochState::normalize(h.a_R, h.a_L)) /
               overlap(state_V(), BlochState::normalize(v.a_R, v.a_L));
    };
    CHECK(std::arg(eigen_ratio(base)) == doctest::Approx(-kPi / 2.0).epsilon(1e-3));
    CHECK(std::arg(eigen_ratio(rotate_gate_frame(base, kPi / 2.0))) == doctest::Approx(kPi / 2.0).epsilon(1e-3));
}
