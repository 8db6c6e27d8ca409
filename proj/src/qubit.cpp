#include "vortexgate/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vortexgate/errors.hpp"

namespace vortexgate {

namespace {
constexpr cplx kI{0.0, 1.0};
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
} // namespace

BlochVector BlochVector::unit(double x, double y, double z)
{
    if (std::abs(x * x + y * y + z * z - 1.0) > 1e-12)
        throw ContractViolation("Bloch axis must have unit length");
    return {x, y, z};
}

BlochState::BlochState(cplx a_R, cplx a_L) : a_R_(a_R), a_L_(a_L)
{
    if (std::abs(std::norm(a_R) + std::norm(a_L) - 1.0) > 1e-12)
        throw ContractViolation("qubit state must be normalized");
}

BlochState BlochState::normalize(cplx a_R, cplx a_L)
{
    const double n = std::sqrt(std::norm(a_R) + std::norm(a_L));
    if (!(n > 0.0))
        throw ContractViolation("cannot normalize the zero vector");
    return {a_R / n, a_L / n};
}

GateMatrix::GateMatrix(std::array<cplx, 4> entries) : m_(entries)
{
    // U^dagger U
    const cplx p00 = std::conj(m_[0]) * m_[0] + std::conj(m_[2]) * m_[2];
    const cplx p01 = std::conj(m_[0]) * m_[1] + std::conj(m_[2]) * m_[3];
    const cplx p11 = std::conj(m_[1]) * m_[1] + std::conj(m_[3]) * m_[3];
    const double err = std::max({std::abs(p00 - 1.0), std::abs(p01), std::abs(p11 - 1.0)});
    if (err > 1e-12)
        throw ContractViolation("gate matrix is not unitary");
}

cplx GateMatrix::determinant() const { return m_[0] * m_[3] - m_[1] * m_[2]; }

GateMatrix GateMatrix::adjoint() const
{
    return GateMatrix({std::conj(m_[0]), std::conj(m_[2]), std::conj(m_[1]), std::conj(m_[3])});
}

GateMatrix operator*(const GateMatrix& a, const GateMatrix& b)
{
    const auto& x = a.m_;
    const auto& y = b.m_;
    return GateMatrix({x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
                       x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]});
}

GateMatrix identity_gate() { return GateMatrix({1.0, 0.0, 0.0, 1.0}); }

GateMatrix rotation_gate(const BlochVector& axis, double theta)
{
    const BlochVector n = BlochVector::unit(axis.X, axis.Y, axis.Z);
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    // n.sigma = [[nZ, nX - i nY], [nX + i nY, -nZ]]
    return GateMatrix({cplx(c, -s * n.Z), -kI * s * cplx(n.X, -n.Y),
                       -kI * s * cplx(n.X, n.Y), cplx(c, s * n.Z)});
}

GateMatrix rz(double theta) { return rotation_gate({0.0, 0.0, 1.0}, theta); }

GateMatrix sqrt_not()
{
    return GateMatrix({kInvSqrt2, -kI * kInvSqrt2, -kI * kInvSqrt2, kInvSqrt2});
}

BlochState apply_gate(const GateMatrix& g, const BlochState& s)
{
    return BlochState::normalize(g(0, 0) * s.a_R() + g(0, 1) * s.a_L(),
                                 g(1, 0) * s.a_R() + g(1, 1) * s.a_L());
}

BlochState equator_state(double phi)
{
    const double reduced = std::remainder(phi, 2.0 * std::numbers::pi);
    return {kInvSqrt2, std::polar(kInvSqrt2, reduced)};
}

BlochState output_state_closed_form(double phi)
{
    const double a = phi / 2.0 - std::numbers::pi / 4.0;
    const cplx g = std::polar(1.0, a);
    return BlochState::normalize(g * std::cos(a), -g * std::sin(a));
}

BlochVector bloch_vector(const BlochState& s)
{
    const cplx rl = std::conj(s.a_R()) * s.a_L();
    return {2.0 * rl.real(), 2.0 * rl.imag(), std::norm(s.a_R()) - std::norm(s.a_L())};
}

cplx overlap(const BlochState& a, const BlochState& b)
{
    return std::conj(a.a_R()) * b.a_R() + std::conj(a.a_L()) * b.a_L();
}

double fidelity(const BlochState& a, const BlochState& b)
{
    return std::min(1.0, std::abs(overlap(a, b)));
}

double max_entry_error(const GateMatrix& a, const GateMatrix& b)
{
    double e = 0.0;
    for (int i = 0; i < 4; ++i)
        e = std::max(e, std::abs(a.entries()[i] - b.entries()[i]));
    return e;
}

double max_entry_error_up_to_phase(const GateMatrix& a, const GateMatrix& b)
{
    // Phase that best aligns b onto a: arg tr(b^dagger a).
    cplx t = 0.0;
    for (int i = 0; i < 4; ++i)
        t += std::conj(b.entries()[i]) * a.entries()[i];
    const cplx ph = std::abs(t) > 0.0 ? t / std::abs(t) : cplx(1.0);
    double e = 0.0;
    for (int i = 0; i < 4; ++i)
        e = std::max(e, std::abs(a.entries()[i] - ph * b.entries()[i]));
    return e;
}

BlochState state_R() { return {1.0, 0.0}; }
BlochState state_L() { return {0.0, 1.0}; }
BlochState state_H() { return {kInvSqrt2, kInvSqrt2}; }
BlochState state_V() { return {kInvSqrt2, -kInvSqrt2}; }
BlochState state_plus() { return {kInvSqrt2, kI * kInvSqrt2}; }
BlochState state_minus() { return {kInvSqrt2, -kI * kInvSqrt2}; }

} // namespace vortexgate
