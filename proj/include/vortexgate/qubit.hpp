#pragma once

#include <array>
#include <complex>

namespace vortexgate {

using cplx = std::complex<double>;

// Point on the Bloch sphere; |R> at the north pole, |L> at the south pole.
struct BlochVector {
    double X = 0.0;
    double Y = 0.0;
    double Z = 1.0;

    // Throws ContractViolation unless X^2 + Y^2 + Z^2 = 1 within 1e-12.
    static BlochVector unit(double x, double y, double z);
};

// Qubit amplitudes over {|R>, |L>} = {LG_{+1,0}, LG_{-1,0}}.
class BlochState {
public:
    // Throws ContractViolation unless |a_R|^2 + |a_L|^2 = 1 within 1e-12.
    BlochState(cplx a_R, cplx a_L);
    // Rescales arbitrary non-zero amplitudes onto the unit sphere.
    static BlochState normalize(cplx a_R, cplx a_L);

    [[nodiscard]] cplx a_R() const { return a_R_; }
    [[nodiscard]] cplx a_L() const { return a_L_; }

private:
    cplx a_R_;
    cplx a_L_;
};

// 2x2 unitary, row-major: {u00, u01, u10, u11}.
class GateMatrix {
public:
    // Throws ContractViolation if max |U^dagger U - 1| > 1e-12.
    explicit GateMatrix(std::array<cplx, 4> entries);

    [[nodiscard]] const std::array<cplx, 4>& entries() const { return m_; }
    [[nodiscard]] cplx operator()(int row, int col) const { return m_[2 * row + col]; }
    [[nodiscard]] cplx determinant() const;
    [[nodiscard]] GateMatrix adjoint() const;

    friend GateMatrix operator*(const GateMatrix& a, const GateMatrix& b);

private:
    std::array<cplx, 4> m_;
};

GateMatrix identity_gate();

// cos(theta/2) 1 - i sin(theta/2) n.sigma
GateMatrix rotation_gate(const BlochVector& axis, double theta);
GateMatrix rz(double theta);

// (1/sqrt2) [[1, -i], [-i, 1]], the mode-converter gate in its own frame.
// Numerically equal to rotation_gate(X, +pi/2).
GateMatrix sqrt_not();

BlochState apply_gate(const GateMatrix& g, const BlochState& s);

// (1, e^{i phi}) / sqrt2
BlochState equator_state(double phi);

// e^{i(phi/2 - pi/4)} (cos(phi/2 - pi/4), -sin(phi/2 - pi/4)): sqrt_not() applied
// to equator_state(phi), written out.
BlochState output_state_closed_form(double phi);

BlochVector bloch_vector(const BlochState& s);

// |<a|b>|, in [0, 1]; blind to global phase.
double fidelity(const BlochState& a, const BlochState& b);
cplx overlap(const BlochState& a, const BlochState& b);

// Largest entry-wise deviation after removing the best global phase.
double max_entry_error_up_to_phase(const GateMatrix& a, const GateMatrix& b);
double max_entry_error(const GateMatrix& a, const GateMatrix& b);

// Named basis states.
BlochState state_R();
BlochState state_L();
BlochState state_H();
BlochState state_V();
BlochState state_plus();
BlochState state_minus();

} // namespace vortexgate
