#include "vortexgate/oam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "vortexgate/errors.hpp"
#include "vortexgate/fft.hpp"

namespace vortexgate {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::array<double, 2> resolve_center(const WaveField& f, const PolarOptions& opt)
{
    return opt.center ? *opt.center : intensity_centroid(f);
}

// Largest radius around c that stays two pixels inside the grid, after
// checking that it encloses the required share of the norm.
double usable_radius(const WaveField& f, std::array<double, 2> c, double coverage)
{
    const GridSpec& g = f.grid();
    const double r_max = g.extent / 2.0 - std::max(std::abs(c[0]), std::abs(c[1])) - 2.0 * g.pitch();
    if (!(r_max > 0.0))
        throw SamplingError("polar origin lies too close to the grid edge");
    double inside = 0.0, total = 0.0;
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy) - c[1];
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix) - c[0];
            const double e = std::norm(f.at(ix, iy));
            total += e;
            if (x * x + y * y <= r_max * r_max)
                inside += e;
        }
    }
    if (inside < coverage * total) {
        std::ostringstream msg;
        msg << "polar grid of radius " << r_max << " m encloses only " << inside / total
            << " of the intensity (need " << coverage << "); the field is truncated by the grid";
        throw SamplingError(msg.str());
    }
    return r_max;
}

cplx bilinear(const WaveField& f, double x, double y)
{
    const GridSpec& g = f.grid();
    const double fx = x / g.pitch() + g.n / 2;
    const double fy = y / g.pitch() + g.n / 2;
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    if (x0 < 0 || y0 < 0 || x0 + 1 >= g.n || y0 + 1 >= g.n)
        return 0.0;
    const double tx = fx - x0, ty = fy - y0;
    return (1 - tx) * (1 - ty) * f.at(x0, y0) + tx * (1 - ty) * f.at(x0 + 1, y0) + (1 - tx) * ty * f.at(x0, y0 + 1) +
           tx * ty * f.at(x0 + 1, y0 + 1);
}

double keys_weight(double t)
{
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t < 1.0)
        return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0)
        return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

cplx cubic(const WaveField& f, double x, double y)
{
    const GridSpec& g = f.grid();
    const double fx = x / g.pitch() + g.n / 2;
    const double fy = y / g.pitch() + g.n / 2;
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    cplx s = 0.0;
    for (int j = -1; j <= 2; ++j) {
        const int iy = y0 + j;
        if (iy < 0 || iy >= g.n)
            continue;
        const double wy = keys_weight(fy - iy);
        for (int i = -1; i <= 2; ++i) {
            const int ix = x0 + i;
            if (ix < 0 || ix >= g.n)
                continue;
            s += wy * keys_weight(fx - ix) * f.at(ix, iy);
        }
    }
    return s;
}

void require_nyquist(int n_phi, int m_max)
{
    if (m_max < 0)
        throw ContractViolation("m_max must be non-negative");
    if (n_phi < 4 * m_max + 4) {
        std::ostringstream msg;
        msg << "n_phi = " << n_phi << " cannot resolve charges up to " << m_max << "; need n_phi >= " << 4 * m_max + 4;
        throw ContractViolation(msg.str());
    }
}

} // namespace

double PolarField::phi(int k) const { return kTwoPi * k / n_phi; }

double PolarField::norm() const
{
    double s = 0.0;
    for (int j = 0; j < n_r; ++j) {
        double ring = 0.0;
        for (int k = 0; k < n_phi; ++k)
            ring += std::norm(at(j, k));
        s += ring * r(j);
    }
    return s * dr() * kTwoPi / n_phi;
}

double OamSpectrum::intensity(int m) const
{
    if (m < -m_max || m > m_max)
        return 0.0;
    return intensities[static_cast<std::size_t>(m + m_max)];
}

double OamSpectrum::total() const
{
    double s = 0.0;
    for (double v : intensities)
        s += v;
    return s;
}

std::vector<double> OamSpectrum::normalized() const
{
    const double t = total();
    std::vector<double> out(intensities.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = t > 0.0 ? intensities[i] / t : 0.0;
    return out;
}

std::string OamSpectrum::to_csv() const
{
    const auto norm = normalized();
    std::string out = "m,intensity,normalized\n";
    char line[96];
    for (int m = -m_max; m <= m_max; ++m) {
        const auto i = static_cast<std::size_t>(m + m_max);
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", m, intensities[i], norm[i]);
        out += line;
    }
    return out;
}

std::array<double, 2> intensity_centroid(const WaveField& f)
{
    const GridSpec& g = f.grid();
    double sx = 0.0, sy = 0.0, s = 0.0;
    for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix) {
            const double e = std::norm(f.at(ix, iy));
            sx += e * g.coord(ix);
            sy += e * g.coord(iy);
            s += e;
        }
    if (!(s > 0.0))
        throw ContractViolation("field has no intensity");
    return {sx / s, sy / s};
}

PolarField to_polar(const WaveField& f, int n_r, int n_phi, const PolarOptions& opt)
{
    if (n_r < 2 || n_phi < 4)
        throw ContractViolation("polar grid needs n_r >= 2 and n_phi >= 4");
    PolarField p;
    p.n_r = n_r;
    p.n_phi = n_phi;
    p.center = resolve_center(f, opt);
    p.r_max = usable_radius(f, p.center, opt.coverage);
    p.values.resize(static_cast<std::size_t>(n_r) * n_phi);
    std::vector<double> c(n_phi), s(n_phi);
    for (int k = 0; k < n_phi; ++k) {
        c[k] = std::cos(p.phi(k));
        s[k] = std::sin(p.phi(k));
    }
    for (int j = 0; j < n_r; ++j) {
        const double r = p.r(j);
        for (int k = 0; k < n_phi; ++k)
            p.values[static_cast<std::size_t>(j) * n_phi + k] =
                bilinear(f, p.center[0] + r * c[k], p.center[1] + r * s[k]);
    }
    return p;
}

WaveField to_cartesian(const PolarField& p, const WaveField& like)
{
    const GridSpec& g = like.grid();
    // Ring -1 - j is ring j seen through the origin.
    auto sample = [&](int j, int k) {
        if (j < 0) {
            j = -1 - j;
            k += p.n_phi / 2;
        }
        j = std::min(j, p.n_r - 1);
        k = ((k % p.n_phi) + p.n_phi) % p.n_phi;
        return p.at(j, k);
    };

    std::vector<cplx> v(static_cast<std::size_t>(g.n) * g.n);
    const double dphi = kTwoPi / p.n_phi;
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy) - p.center[1];
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix) - p.center[0];
            const double r = std::hypot(x, y);
            if (r > p.r_max)
                continue;
            double phi = std::atan2(y, x);
            if (phi < 0.0)
                phi += kTwoPi;
            const double fk = phi / dphi;
            const double fj = r / p.dr() - 0.5;
            const int k0 = static_cast<int>(std::floor(fk));
            const int j0 = static_cast<int>(std::floor(fj));
            cplx val = 0.0;
            for (int a = -1; a <= 2; ++a) {
                const double wr = keys_weight(fj - (j0 + a));
                for (int b = -1; b <= 2; ++b)
                    val += wr * keys_weight(fk - (k0 + b)) * sample(j0 + a, k0 + b);
            }
            v[static_cast<std::size_t>(iy) * g.n + ix] = val;
        }
    }
    return like.with_values(std::move(v));
}

OamSpectrum oam_spectrum(const PolarField& p, int m_max)
{
    require_nyquist(p.n_phi, m_max);
    std::vector<cplx> rows = p.values;
    fft_rows(rows, p.n_phi, p.n_r, FftDirection::Forward);

    OamSpectrum out;
    out.m_max = m_max;
    out.intensities.assign(static_cast<std::size_t>(2 * m_max + 1), 0.0);
    out.polar_norm = p.norm();
    const double inv_n = 1.0 / p.n_phi;
    for (int j = 0; j < p.n_r; ++j) {
        const double w = p.r(j) * p.dr() * kTwoPi;
        for (int m = -m_max; m <= m_max; ++m) {
            const int bin = (m % p.n_phi + p.n_phi) % p.n_phi;
            const cplx cm = rows[static_cast<std::size_t>(j) * p.n_phi + bin] * inv_n;
            out.intensities[static_cast<std::size_t>(m + m_max)] += std::norm(cm) * w;
        }
    }
    return out;
}

OamSpectrum oam_spectrum(const WaveField& f, int m_max, const PolarOptions& opt)
{
    const int n_phi = std::max(kDefaultAzimuthalSamples, 4 * m_max + 4);
    return oam_spectrum(to_polar(f, f.nx() / 2, n_phi, opt), m_max);
}

OamSpectrum oam_spectrum_averaged(std::span<const WaveField> planes, int m_max, const PolarOptions& opt)
{
    if (planes.empty())
        throw ContractViolation("no planes to average");
    OamSpectrum acc;
    for (const auto& f : planes) {
        const OamSpectrum s = oam_spectrum(f, m_max, opt);
        if (acc.intensities.empty()) {
            acc = s;
            continue;
        }
        for (std::size_t i = 0; i < s.intensities.size(); ++i)
            acc.intensities[i] += s.intensities[i];
        acc.polar_norm += s.polar_norm;
    }
    const double inv = 1.0 / static_cast<double>(planes.size());
    for (auto& v : acc.intensities)
        v *= inv;
    acc.polar_norm *= inv;
    return acc;
}

OamSpectrum oam_spectrum_oracle(const WaveField& f, int m_max, const PolarOptions& opt)
{
    require_nyquist(4 * m_max + 4, m_max);
    const auto c = resolve_center(f, opt);
    const double r_max = usable_radius(f, c, opt.coverage);
    const double dr = f.pitch();
    const int n_rings = static_cast<int>(std::floor(r_max / dr));

    OamSpectrum out;
    out.m_max = m_max;
    out.intensities.assign(static_cast<std::size_t>(2 * m_max + 1), 0.0);
    std::vector<cplx> ring;
    for (int j = 0; j < n_rings; ++j) {
        const double r = (j + 0.5) * dr;
        const int n_j = std::max(4 * m_max + 4, 4 * static_cast<int>(std::ceil(kTwoPi * r / dr)));
        ring.resize(n_j);
        double ring_norm = 0.0;
        for (int k = 0; k < n_j; ++k) {
            const double phi = kTwoPi * k / n_j;
            ring[k] = cubic(f, c[0] + r * std::cos(phi), c[1] + r * std::sin(phi));
            ring_norm += std::norm(ring[k]);
        }
        const double w = r * dr * kTwoPi;
        out.polar_norm += ring_norm / n_j * w;
        for (int m = -m_max; m <= m_max; ++m) {
            cplx cm = 0.0;
            for (int k = 0; k < n_j; ++k)
                cm += ring[k] * std::polar(1.0, -kTwoPi * static_cast<double>(m) * k / n_j);
            cm /= static_cast<double>(n_j);
            out.intensities[static_cast<std::size_t>(m + m_max)] += std::norm(cm) * w;
        }
    }
    return out;
}

QubitProjection project_onto_qubit(const WaveField& f, const WaveField& basis_R, const WaveField& basis_L)
{
    const double rr = std::abs(inner_product(basis_R, basis_R) - 1.0);
    const double ll = std::abs(inner_product(basis_L, basis_L) - 1.0);
    const double rl = std::abs(inner_product(basis_R, basis_L));
    if (rr > 1e-6 || ll > 1e-6 || rl > 1e-6) {
        std::ostringstream msg;
        msg << "readout basis is not orthonormal (|<R|R>-1| = " << rr << ", |<L|L>-1| = " << ll
            << ", |<R|L>| = " << rl << ")";
        throw ContractViolation(msg.str());
    }
    const cplx a_R = inner_product(basis_R, f);
    const cplx a_L = inner_product(basis_L, f);
    const double captured = std::norm(a_R) + std::norm(a_L);
    if (!(captured > 0.0))
        throw ContractViolation("field has no component in the qubit subspace");
    return {a_R, a_L, BlochState::normalize(a_R, a_L), 1.0 - captured / f.norm()};
}

} // namespace vortexgate
