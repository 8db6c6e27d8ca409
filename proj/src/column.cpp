#include "vortexgate/column.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

#include "vortexgate/errors.hpp"
#include "vortexgate/fft.hpp"

namespace vortexgate {

namespace {

// Share of a unit pixel centred at signed distance s (pixels) from the edge
// that lies on the side nx u + ny v > -s.
double shifted_area(double nx, double ny, double s)
{
    double a = std::abs(ny), b = nx;
    if (std::abs(nx) > a) {
        a = std::abs(nx);
        b = ny;
    }
    const double alpha = 0.5 + s / a, beta = b / a;
    auto ramp = [](double t) { return t <= 0.0 ? 0.0 : t >= 1.0 ? t - 0.5 : 0.5 * t * t; };
    if (std::abs(beta) < 1e-12)
        return std::clamp(alpha, 0.0, 1.0);
    return (ramp(alpha + 0.5 * beta) - ramp(alpha - 0.5 * beta)) / beta;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kLargestSuggestedGrid = 1 << 15;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Angular frequency of FFT bin i on an n-point grid of side L.
double spatial_frequency(int i, int n, double extent)
{
    const int j = i < n / 2 ? i : i - n;
    return kTwoPi * j / extent;
}

// Band limit of the angular-spectrum transfer function beyond which its
// phase is undersampled on a grid of side `extent`.
double band_limit(double k, double dz, double extent)
{
    const double t = 2.0 * dz / extent;
    return k / std::sqrt(t * t + 1.0);
}

// The pass band is a disc, capped at the Nyquist frequency, so that the
// propagator does not prefer the grid axes.
bool outside_band(double qx, double qy, double q_lim, double pitch)
{
    const double q_cut = std::min(q_lim, std::numbers::pi / pitch);
    return qx * qx + qy * qy > q_cut * q_cut;
}

// The grid corners absorb, leaving the inscribed disc as the window, so that
// light reaching the boundary is lost the same way in every direction.
void clear_corners(std::vector<cplx>& v, const GridSpec& g)
{
    const double r2 = g.extent * g.extent / 4.0;
    for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix), y = g.coord(iy);
            if (x * x + y * y > r2)
                v[static_cast<std::size_t>(iy) * g.n + ix] = 0.0;
        }
}

std::vector<cplx> spectrum_of(const WaveField& f)
{
    std::vector<cplx> s(f.values().begin(), f.values().end());
    fft2d(s, f.nx(), FftDirection::Forward);
    return s;
}

double clipped_fraction(const std::vector<cplx>& spectrum, int n, double extent, double q_lim)
{
    double total = 0.0, outside = 0.0;
    for (int iy = 0; iy < n; ++iy) {
        const double qy = spatial_frequency(iy, n, extent);
        for (int ix = 0; ix < n; ++ix) {
            const double e = std::norm(spectrum[static_cast<std::size_t>(iy) * n + ix]);
            total += e;
            if (outside_band(spatial_frequency(ix, n, extent), qy, q_lim, extent / n))
                outside += e;
        }
    }
    return total > 0.0 ? outside / total : 0.0;
}

// Spectral frequencies are fixed by the pitch; only the band limit grows
// with the grid, so the current spectrum predicts the clipping on larger grids.
int minimal_grid(const std::vector<cplx>& spectrum, const WaveField& f, double dz, double tolerance)
{
    const int n = f.nx();
    const double k = f.wavenumber();
    for (int m = 2 * n; m <= kLargestSuggestedGrid; m *= 2) {
        const double q_lim = band_limit(k, dz, m * f.pitch());
        if (clipped_fraction(spectrum, n, f.grid().extent, q_lim) <= tolerance)
            return m;
    }
    return 0;
}

void require_phase_sampled(const WaveField& f, double focal_length, const char* what)
{
    // Steepest transmission phase gradient sits at the grid corner.
    const double r = f.grid().extent / 2.0 * std::numbers::sqrt2;
    const double per_pixel = f.wavenumber() * r * f.pitch() / std::abs(focal_length);
    if (per_pixel > std::numbers::pi) {
        const double p_max = std::numbers::pi * std::abs(focal_length) / (f.wavenumber() * r);
        const int n_min = static_cast<int>(std::ceil(f.grid().extent / p_max));
        std::ostringstream msg;
        msg << what << " with focal length " << focal_length << " m aliases on this grid (" << per_pixel
            << " rad per pixel at the edge); need n >= " << n_min << " at the same extent";
        throw SamplingError(msg.str(), n_min);
    }
}

template <class Fn>
WaveField transmit(const WaveField& f, Fn&& t)
{
    const GridSpec& g = f.grid();
    std::vector<cplx> v(f.values().begin(), f.values().end());
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy);
        for (int ix = 0; ix < g.n; ++ix)
            v[static_cast<std::size_t>(iy) * g.n + ix] *= t(g.coord(ix), y);
    }
    return f.with_values(std::move(v));
}

} // namespace

void validate_element(const Element& e)
{
    std::visit(overloaded{
                   [](const Drift& d) {
                       if (!(d.length > 0.0) || !std::isfinite(d.length))
                           throw ContractViolation("drift length must be positive");
                   },
                   [](const RoundLens& l) {
                       if (l.focal_length == 0.0 || !std::isfinite(l.focal_length))
                           throw ContractViolation("round lens focal length must be finite and non-zero");
                   },
                   [](const Quadrupole& q) {
                       if (q.focal_length == 0.0 || !std::isfinite(q.focal_length) || !std::isfinite(q.axis_angle))
                           throw ContractViolation("quadrupole focal length must be finite and non-zero");
                   },
                   [](const HilbertPhasePlate& h) {
                       if (!(h.amplitude_factor > 0.0 && h.amplitude_factor <= 1.0))
                           throw ContractViolation("phase plate amplitude factor must lie in (0, 1]");
                       if (!std::isfinite(h.edge_angle) || !std::isfinite(h.phase_step))
                           throw ContractViolation("phase plate angles must be finite");
                   },
                   [](const CircularAperture& a) {
                       if (!(a.radius > 0.0))
                           throw ContractViolation("aperture radius must be positive");
                   },
               },
               e);
}

std::string element_name(const Element& e)
{
    return std::visit(overloaded{
                          [](const Drift&) { return std::string("drift"); },
                          [](const RoundLens&) { return std::string("round_lens"); },
                          [](const Quadrupole&) { return std::string("quadrupole"); },
                          [](const HilbertPhasePlate&) { return std::string("hpp"); },
                          [](const CircularAperture&) { return std::string("aperture"); },
                      },
                      e);
}

bool is_lossy(const Element& e)
{
    return std::holds_alternative<HilbertPhasePlate>(e) || std::holds_alternative<CircularAperture>(e);
}

void ColumnSpec::validate() const
{
    if (elements.empty())
        throw ContractViolation("column has no elements");
    grid.validate();
    for (const auto& e : elements)
        validate_element(e);
    if (!(total_length() > 0.0))
        throw ContractViolation("column has zero total length");
    if (!(energy_kev >= 10.0 && energy_kev <= 1000.0))
        throw ContractViolation("beam energy must lie in [10, 1000] keV");
}

double ColumnSpec::total_length() const
{
    double s = 0.0;
    for (const auto& e : elements)
        if (const auto* d = std::get_if<Drift>(&e))
            s += d->length;
    return s;
}

double band_limit_clipped_fraction(const WaveField& f, double dz)
{
    if (dz == 0.0)
        return 0.0;
    const auto s = spectrum_of(f);
    return clipped_fraction(s, f.nx(), f.grid().extent, band_limit(f.wavenumber(), dz, f.grid().extent));
}

WaveField propagate_free(const WaveField& f, double dz, const PropagationOptions& opt)
{
    if (!std::isfinite(dz))
        throw ContractViolation("propagation distance must be finite");
    if (dz == 0.0)
        return f;

    const int n = f.nx();
    const double extent = f.grid().extent;
    const double k = f.wavenumber();
    const double q_lim = band_limit(k, dz, extent);
    auto s = spectrum_of(f);

    if (opt.policy == BandLimitPolicy::Refuse) {
        const double clipped = clipped_fraction(s, n, extent, q_lim);
        if (clipped > opt.tolerance) {
            const int n_min = minimal_grid(s, f, dz, opt.tolerance);
            std::ostringstream msg;
            msg << "propagation by " << dz << " m would clip " << clipped
                << " of the spectral energy beyond the band limit; ";
            if (n_min > 0)
                msg << "need n >= " << n_min << " at pitch " << f.pitch() << " m";
            else
                msg << "no grid up to n = " << kLargestSuggestedGrid << " at this pitch suffices";
            throw SamplingError(msg.str(), n_min);
        }
    }

    // kz - k written as -q^2 / (k + kz) to avoid cancellation for paraxial q.
    std::vector<double> qx(n);
    for (int i = 0; i < n; ++i)
        qx[i] = spatial_frequency(i, n, extent);
    const cplx carrier = std::polar(1.0 / (static_cast<double>(n) * n), std::fmod(k * dz, kTwoPi));
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            cplx& v = s[static_cast<std::size_t>(iy) * n + ix];
            if (outside_band(qx[ix], qx[iy], q_lim, f.pitch())) {
                v = 0.0;
                continue;
            }
            const double q2 = qx[ix] * qx[ix] + qx[iy] * qx[iy];
            const double kz_minus_k = -q2 / (k + std::sqrt(k * k - q2));
            v *= carrier * std::polar(1.0, dz * kz_minus_k);
        }
    }
    fft2d(s, n, FftDirection::Backward);
    clear_corners(s, f.grid());
    return WaveField(f.grid(), k, f.z() + dz, std::move(s));
}

WaveField apply_element(const WaveField& f, const Element& e, const PropagationOptions& opt)
{
    validate_element(e);
    const double k = f.wavenumber();
    return std::visit(
        overloaded{
            [&](const Drift& d) { return propagate_free(f, d.length, opt); },
            [&](const RoundLens& l) {
                require_phase_sampled(f, l.focal_length, "round lens");
                const double a = -0.5 * k / l.focal_length;
                return transmit(f, [a](double x, double y) { return std::polar(1.0, a * (x * x + y * y)); });
            },
            [&](const Quadrupole& q) {
                require_phase_sampled(f, q.focal_length, "quadrupole");
                const double a = -0.5 * k / q.focal_length;
                const double c = std::cos(q.axis_angle), s = std::sin(q.axis_angle);
                return transmit(f, [a, c, s](double x, double y) {
                    const double u = c * x + s * y;
                    const double v = -s * x + c * y;
                    return std::polar(1.0, a * (u * u - v * v));
                });
            },
            [&](const HilbertPhasePlate& h) {
                const cplx shifted = std::polar(h.amplitude_factor, h.phase_step);
                const double nx = -std::sin(h.edge_angle), ny = std::cos(h.edge_angle);
                const double inv_p = 1.0 / f.pitch();
                return transmit(f, [=](double x, double y) {
                    const double w = shifted_area(nx, ny, (nx * x + ny * y) * inv_p);
                    return (1.0 - w) + w * shifted;
                });
            },
            [&](const CircularAperture& a) {
                if (a.radius > f.grid().extent / 2.0)
                    throw ContractViolation("aperture radius exceeds the grid half-extent");
                const double r2 = a.radius * a.radius;
                return transmit(f, [r2](double x, double y) {
                    return x * x + y * y <= r2 ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
                });
            },
        },
        e);
}

ColumnRun run_column(const WaveField& input, const ColumnSpec& spec, std::span<const RecordPlane> planes)
{
    spec.validate();
    if (!(input.grid() == spec.grid))
        throw ContractViolation("input field grid differs from the column grid");
    const double k_spec = kTwoPi / electron_wavelength(spec.energy_kev);
    if (std::abs(input.wavenumber() - k_spec) > 1e-9 * k_spec)
        throw ContractViolation("input field wavenumber does not match the column beam energy");

    const double z0 = input.z();
    const double z_end = z0 + spec.total_length();
    const double eps = 1e-12 * std::max(spec.total_length(), std::abs(z0));
    for (const auto& p : planes)
        if (p.z < z0 - eps || p.z > z_end + eps)
            throw ContractViolation("record plane lies outside the column");

    std::vector<std::optional<WaveField>> shots(planes.size());
    PropagationOptions opt;
    double clipped = 0.0;
    WaveField cur = input;
    std::size_t i = 0;

    auto take_at_current = [&](bool upstream) {
        for (std::size_t j = 0; j < planes.size(); ++j)
            if (!shots[j] && planes[j].upstream == upstream && std::abs(planes[j].z - cur.z()) <= eps)
                shots[j] = cur.with_z(planes[j].z);
    };

    while (i < spec.elements.size()) {
        take_at_current(true);
        // Thin elements sharing this plane are applied together.
        while (i < spec.elements.size() && !std::holds_alternative<Drift>(spec.elements[i])) {
            cur = apply_element(cur, spec.elements[i], opt);
            if (is_lossy(spec.elements[i]))
                opt.policy = BandLimitPolicy::Absorb;
            ++i;
        }
        take_at_current(false);
        take_at_current(true);
        if (i == spec.elements.size())
            break;

        const double len = std::get<Drift>(spec.elements[i]).length;
        const double start = cur.z();
        for (std::size_t j = 0; j < planes.size(); ++j) {
            const double dz = planes[j].z - start;
            if (!shots[j] && dz > eps && dz < len - eps)
                shots[j] = propagate_free(cur, dz, opt);
        }
        const double before = cur.norm();
        cur = propagate_free(cur, len, opt).with_z(start + len);
        if (opt.policy == BandLimitPolicy::Absorb)
            clipped += std::max(0.0, before - cur.norm());
        ++i;
    }
    take_at_current(false);
    take_at_current(true);

    ColumnRun run{{}, cur, clipped};
    run.snapshots.reserve(planes.size());
    for (auto& s : shots)
        run.snapshots.push_back(s ? std::move(*s) : cur);
    return run;
}

ColumnRun run_column(const WaveField& input, const ColumnSpec& spec, std::span<const double> planes)
{
    std::vector<RecordPlane> p;
    p.reserve(planes.size());
    for (double z : planes)
        p.push_back({z, false});
    return run_column(input, spec, p);
}

ColumnSpec rotate_gate_frame(const ColumnSpec& spec, double alpha)
{
    ColumnSpec out = spec;
    bool any = false;
    for (auto& e : out.elements)
        if (auto* q = std::get_if<Quadrupole>(&e)) {
            q->axis_angle += alpha;
            any = true;
        }
    if (!any)
        throw ContractViolation("column contains no quadrupole to rotate");
    return out;
}

} // namespace vortexgate
