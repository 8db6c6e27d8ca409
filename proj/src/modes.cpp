#include "vortexgate/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vortexgate/errors.hpp"
#include "vortexgate/fft.hpp"

namespace vortexgate {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// CODATA 2018 exact / recommended values.
constexpr double kPlanck = 6.62607015e-34;
constexpr double kElectronMass = 9.1093837015e-31;
constexpr double kLightSpeed = 299792458.0;
constexpr double kElementaryCharge = 1.602176634e-19;

void require_same_grid(const WaveField& a, const WaveField& b)
{
    if (!(a.grid() == b.grid()))
        throw ContractViolation("fields live on different grids");
    if (a.wavenumber() != b.wavenumber())
        throw ContractViolation("fields carry different wavenumbers");
}

// Shared envelope for all first-order and fundamental modes:
//   (1/w) exp(-r^2/w^2) exp(i k r^2 / 2R) exp(i (k z - order * zeta))
// `poly(x, y)` supplies the transverse polynomial (1, x, y, x +- i y).
template <class Poly>
WaveField synthesize(const BeamParams& p, const GridSpec& g, double z, int gouy_order,
                     GouyConvention c, Poly&& poly)
{
    g.validate();
    const double w = p.width(z);
    if (g.extent < 8.0 * w * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "grid extent " << g.extent << " m is narrower than 8 w(z) = " << 8.0 * w << " m";
        throw SamplingError(msg.str());
    }
    const double inv_r = p.inverse_curvature(z);
    const double k = p.wavenumber();
    const double axial = std::fmod(k * z, kTwoPi) - gouy_order * p.gouy(z, c);
    const cplx axial_phase = std::polar(1.0, axial);

    std::vector<cplx> v(static_cast<std::size_t>(g.n) * g.n);
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy);
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix);
            const double r2 = x * x + y * y;
            const double amp = std::exp(-r2 / (w * w)) / w;
            const double phase = 0.5 * k * r2 * inv_r;
            v[static_cast<std::size_t>(iy) * g.n + ix] = poly(x, y) * amp * std::polar(1.0, phase) * axial_phase;
        }
    }
    return normalized(WaveField(g, k, z, std::move(v)));
}

void require_ring_resolved(const BeamParams& p, const GridSpec& g, double z)
{
    const double ring = p.width(z) / std::numbers::sqrt2;
    if (ring < 8.0 * g.pitch()) {
        const int n_min = static_cast<int>(std::ceil(8.0 * g.extent / ring));
        std::ostringstream msg;
        msg << "ring radius w(z)/sqrt2 = " << ring << " m spans fewer than 8 pixels (pitch " << g.pitch()
            << " m); need n >= " << n_min;
        throw SamplingError(msg.str(), n_min);
    }
}

} // namespace

BeamParams::BeamParams(double waist, double rayleigh, double wavenumber)
    : waist_(waist), rayleigh_(rayleigh), wavenumber_(wavenumber)
{
    if (!(waist > 0.0) || !(rayleigh > 0.0) || !(wavenumber > 0.0))
        throw ContractViolation("beam parameters must be positive");
    const double expected = 0.5 * wavenumber * waist * waist;
    if (std::abs(rayleigh - expected) > 1e-9 * expected)
        throw ContractViolation("rayleigh length inconsistent with k w0^2 / 2");
}

BeamParams BeamParams::from_waist(double waist, double wavelength)
{
    const double k = kTwoPi / wavelength;
    return {waist, 0.5 * k * waist * waist, k};
}

BeamParams BeamParams::from_rayleigh(double rayleigh, double wavelength)
{
    const double k = kTwoPi / wavelength;
    return {std::sqrt(2.0 * rayleigh / k), rayleigh, k};
}

double BeamParams::wavelength() const { return kTwoPi / wavenumber_; }

double BeamParams::width(double z) const
{
    const double t = z / rayleigh_;
    return waist_ * std::sqrt(1.0 + t * t);
}

double BeamParams::inverse_curvature(double z) const
{
    // 1/R = z / (z^2 + zR^2), finite everywhere and zero at the waist.
    return z / (z * z + rayleigh_ * rayleigh_);
}

double BeamParams::gouy(double z, GouyConvention c) const
{
    if (c == GouyConvention::Conventional)
        return std::atan(z / rayleigh_);
    if (z == 0.0)
        return std::numbers::pi / 2.0;
    return std::atan(rayleigh_ / z);
}

void GridSpec::validate() const
{
    if (n < 16 || n % 2 != 0)
        throw ContractViolation("grid size must be even and at least 16");
    if (!(extent > 0.0))
        throw ContractViolation("grid extent must be positive");
}

WaveField::WaveField(GridSpec grid, double wavenumber, double z, std::vector<cplx> values)
    : grid_(grid), wavenumber_(wavenumber), z_(z), values_(std::move(values))
{
    grid_.validate();
    if (!(wavenumber > 0.0))
        throw ContractViolation("field wavenumber must be positive");
    if (values_.size() != static_cast<std::size_t>(grid_.n) * grid_.n)
        throw ContractViolation("field size does not match grid");
}

double WaveField::norm() const
{
    double s = 0.0;
    for (const auto& v : values_)
        s += std::norm(v);
    return s * pitch() * pitch();
}

double WaveField::max_abs() const
{
    double m = 0.0;
    for (const auto& v : values_)
        m = std::max(m, std::abs(v));
    return m;
}

WaveField WaveField::with_values(std::vector<cplx> values) const
{
    return {grid_, wavenumber_, z_, std::move(values)};
}

WaveField WaveField::with_z(double z) const { return {grid_, wavenumber_, z, values_}; }

cplx inner_product(const WaveField& a, const WaveField& b)
{
    require_same_grid(a, b);
    cplx s = 0.0;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i)
        s += std::conj(av[i]) * bv[i];
    return s * a.pitch() * a.pitch();
}

WaveField scaled(const WaveField& f, cplx factor)
{
    std::vector<cplx> v(f.values().begin(), f.values().end());
    for (auto& x : v)
        x *= factor;
    return f.with_values(std::move(v));
}

WaveField added(const WaveField& a, const WaveField& b)
{
    require_same_grid(a, b);
    std::vector<cplx> v(a.values().begin(), a.values().end());
    const auto bv = b.values();
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] += bv[i];
    return a.with_values(std::move(v));
}

WaveField normalized(const WaveField& f)
{
    const double n = f.norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw ContractViolation("cannot normalize a field with zero or non-finite norm");
    return scaled(f, 1.0 / std::sqrt(n));
}

double max_relative_difference(const WaveField& a, const WaveField& b)
{
    require_same_grid(a, b);
    double d = 0.0;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i)
        d = std::max(d, std::abs(av[i] - bv[i]));
    return d / a.max_abs();
}

double intensity_l2_difference(const WaveField& a, const WaveField& b)
{
    require_same_grid(a, b);
    double num = 0.0, den = 0.0;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double ia = std::norm(av[i]);
        const double ib = std::norm(bv[i]);
        num += (ia - ib) * (ia - ib);
        den += ia * ia;
    }
    return std::sqrt(num / den);
}

WaveField rotated(const WaveField& f, double angle)
{
    const GridSpec& g = f.grid();
    const double c = std::cos(angle), s = std::sin(angle);
    const double inv_p = 1.0 / g.pitch();
    std::vector<cplx> out(f.values().size());
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy);
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix);
            // Sample the source at the point that maps onto (x, y).
            const double xs = c * x + s * y;
            const double ys = -s * x + c * y;
            const double fx = xs * inv_p + g.n / 2;
            const double fy = ys * inv_p + g.n / 2;
            const int x0 = static_cast<int>(std::floor(fx));
            const int y0 = static_cast<int>(std::floor(fy));
            if (x0 < 0 || y0 < 0 || x0 + 1 >= g.n || y0 + 1 >= g.n)
                continue;
            const double tx = fx - x0, ty = fy - y0;
            out[static_cast<std::size_t>(iy) * g.n + ix] =
                (1 - tx) * (1 - ty) * f.at(x0, y0) + tx * (1 - ty) * f.at(x0 + 1, y0) +
                (1 - tx) * ty * f.at(x0, y0 + 1) + tx * ty * f.at(x0 + 1, y0 + 1);
        }
    }
    return f.with_values(std::move(out));
}

namespace {

// Row k of `v` moves by shift(k) pixels along the row, through the DFT.
template <class Shift>
void shear_rows(std::vector<cplx>& v, int n, Shift shift)
{
    fft_rows(v, n, n, FftDirection::Forward);
    for (int row = 0; row < n; ++row) {
        const double d = shift(row);
        for (int k = 0; k < n; ++k) {
            const int ks = k < n / 2 ? k : k - n;
            v[static_cast<std::size_t>(row) * n + k] *= std::polar(1.0 / n, -2.0 * std::numbers::pi * ks * d / n);
        }
    }
    fft_rows(v, n, n, FftDirection::Backward);
}

void transpose(std::vector<cplx>& v, int n)
{
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            std::swap(v[static_cast<std::size_t>(i) * n + j], v[static_cast<std::size_t>(j) * n + i]);
}

} // namespace

WaveField rotated_spectral(const WaveField& f, double angle)
{
    const int n = f.grid().n;
    const double quarters = std::round(angle / (std::numbers::pi / 2.0));
    const double rest = angle - quarters * std::numbers::pi / 2.0;
    std::vector<cplx> v(f.values().begin(), f.values().end());
    const int q = static_cast<int>(((static_cast<long>(quarters) % 4) + 4) % 4);
    for (int t = 0; t < q; ++t) {
        // (x, y) -> (-y, x) about pixel n/2; the first row and column wrap.
        std::vector<cplx> w(v.size());
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                const int sx = iy, sy = (n - ix) % n;
                w[static_cast<std::size_t>(iy) * n + ix] = v[static_cast<std::size_t>(sy) * n + sx];
            }
        v.swap(w);
    }
    const double a = -std::tan(rest / 2.0), b = std::sin(rest);
    auto x_shear = [&] { shear_rows(v, n, [&](int row) { return a * (row - n / 2); }); };
    x_shear();
    transpose(v, n);
    shear_rows(v, n, [&](int col) { return b * (col - n / 2); });
    transpose(v, n);
    x_shear();
    return f.with_values(std::move(v));
}

WaveField synth_lg(const BeamParams& p, int m, const GridSpec& g, double z, GouyConvention c)
{
    if (m != 1 && m != -1)
        throw UnsupportedMode("only LG modes with m = +1 or m = -1 are supported");
    g.validate();
    require_ring_resolved(p, g, z);
    const double sign = m;
    return synthesize(p, g, z, 2, c, [sign](double x, double y) { return cplx(x, sign * y); });
}

WaveField synth_hg(const BeamParams& p, HgOrientation o, const GridSpec& g, double z, GouyConvention c)
{
    g.validate();
    require_ring_resolved(p, g, z);
    if (o == HgOrientation::Hg10)
        return synthesize(p, g, z, 2, c, [](double x, double) { return cplx(x, 0.0); });
    return synthesize(p, g, z, 2, c, [](double, double y) { return cplx(y, 0.0); });
}

WaveField synth_superposition(const BeamParams& p, cplx a_R, cplx a_L, const GridSpec& g, double z,
                              GouyConvention c)
{
    if (std::abs(std::norm(a_R) + std::norm(a_L) - 1.0) > 1e-9)
        throw ContractViolation("qubit amplitudes must satisfy |a_R|^2 + |a_L|^2 = 1");
    g.validate();
    require_ring_resolved(p, g, z);
    // a_R (x + iy) + a_L (x - iy) shares the LG envelope, so synthesize in one pass.
    return synthesize(p, g, z, 2, c, [a_R, a_L](double x, double y) {
        return a_R * cplx(x, y) + a_L * cplx(x, -y);
    });
}

WaveField synth_gaussian(const BeamParams& p, const GridSpec& g, double z, GouyConvention c)
{
    // The fundamental mode carries half the first-order Gouy term.
    return synthesize(p, g, z, 1, c, [](double, double) { return cplx(1.0, 0.0); });
}

double detail::de_broglie_wavelength(double energy_kev)
{
    const double e = energy_kev * 1e3 * kElementaryCharge;
    const double rest = kElectronMass * kLightSpeed * kLightSpeed;
    return kPlanck / std::sqrt(2.0 * kElectronMass * e * (1.0 + e / (2.0 * rest)));
}

double detail::nonrelativistic_wavelength(double energy_kev)
{
    const double e = energy_kev * 1e3 * kElementaryCharge;
    return kPlanck / std::sqrt(2.0 * kElectronMass * e);
}

double electron_wavelength(double energy_kev)
{
    if (!(energy_kev >= 10.0 && energy_kev <= 1000.0))
        throw ContractViolation("beam energy must lie in [10, 1000] keV");
    return detail::de_broglie_wavelength(energy_kev);
}

} // namespace vortexgate
