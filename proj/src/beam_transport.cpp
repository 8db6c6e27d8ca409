#include "vortexgate/beam_transport.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "vortexgate/errors.hpp"

namespace vortexgate {

namespace {

constexpr double kAngleTol = 1e-12;

void drift_section(GaussianSection& s, double length)
{
    s.gouy += gouy_advance(s.q, length);
    s.q = drift_q(s.q, length);
    s.ray = s.ray.then({1.0, length, 0.0, 1.0});
}

void lens_section(GaussianSection& s, double focal_length)
{
    s.q = thin_lens_q(s.q, focal_length);
    s.ray = s.ray.then({1.0, 0.0, -1.0 / focal_length, 1.0});
}

// Residue of x modulo pi in (-pi/2, pi/2].
double mod_pi(double x)
{
    double r = std::remainder(x, std::numbers::pi);
    if (r <= -std::numbers::pi / 2.0)
        r += std::numbers::pi;
    return r;
}

void apply_quadrupole(AstigmaticBeam& b, const Quadrupole& q)
{
    const double rel = mod_pi(q.axis_angle - b.frame);
    if (std::abs(rel) <= kAngleTol) {
        lens_section(b.u, q.focal_length);
        lens_section(b.v, -q.focal_length);
    } else if (std::abs(std::abs(rel) - std::numbers::pi / 2.0) <= kAngleTol) {
        lens_section(b.u, -q.focal_length);
        lens_section(b.v, q.focal_length);
    } else if (b.stigmatic()) {
        b.frame = q.axis_angle;
        lens_section(b.u, q.focal_length);
        lens_section(b.v, -q.focal_length);
    } else {
        throw ContractViolation("quadrupole axis does not match the principal frame of the astigmatic beam");
    }
}

} // namespace

RayMatrix RayMatrix::then(const RayMatrix& n) const
{
    return {n.a * a + n.b * c, n.a * b + n.b * d, n.c * a + n.d * c, n.c * b + n.d * d};
}

cplx drift_q(cplx q, double length) { return q + length; }

cplx thin_lens_q(cplx q, double focal_length) { return 1.0 / (1.0 / q - 1.0 / focal_length); }

double gouy_advance(cplx q, double length)
{
    return std::atan((q.real() + length) / q.imag()) - std::atan(q.real() / q.imag());
}

AstigmaticBeam AstigmaticBeam::round(cplx q)
{
    if (!(q.imag() > 0.0))
        throw ContractViolation("beam parameter must have a positive imaginary part");
    return {0.0, {q, 0.0, {}}, {q, 0.0, {}}};
}

bool AstigmaticBeam::stigmatic(double rel_tol) const
{
    return std::abs(u.q - v.q) <= rel_tol * std::abs(u.q);
}

AstigmaticBeam transport(const AstigmaticBeam& in, std::span<const Element> elements, double distance)
{
    AstigmaticBeam b = in;
    double z = 0.0;
    for (const auto& e : elements) {
        if (const auto* d = std::get_if<Drift>(&e)) {
            if (z + d->length > distance) {
                const double part = distance - z;
                if (part > 0.0) {
                    drift_section(b.u, part);
                    drift_section(b.v, part);
                }
                return b;
            }
            drift_section(b.u, d->length);
            drift_section(b.v, d->length);
            z += d->length;
        } else if (const auto* l = std::get_if<RoundLens>(&e)) {
            lens_section(b.u, l->focal_length);
            lens_section(b.v, l->focal_length);
        } else if (const auto* q = std::get_if<Quadrupole>(&e)) {
            apply_quadrupole(b, *q);
        }
    }
    return b;
}

AstigmaticBeam transport(const AstigmaticBeam& in, std::span<const Element> elements)
{
    return transport(in, elements, std::numeric_limits<double>::infinity());
}

} // namespace vortexgate
