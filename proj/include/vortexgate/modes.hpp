#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vortexgate {

using cplx = std::complex<double>;

// Which arctangent the envelope's Gouy term uses.  Both differ from each
// other only by a plane-independent-of-r phase, so every relative phase
// (and therefore every qubit prediction) is identical under either.
enum class GouyConvention {
    AsPrinted,    // zeta(z) = atan(zR / z), zeta(0) = pi/2
    Conventional, // zeta(z) = atan(z / zR)
};

// Analytic Gaussian-beam parameters.  rayleigh == k * w0^2 / 2 always holds.
class BeamParams {
public:
    // Throws ContractViolation unless all three are positive and consistent
    // to 1e-9 relative.
    BeamParams(double waist, double rayleigh, double wavenumber);

    static BeamParams from_waist(double waist, double wavelength);
    static BeamParams from_rayleigh(double rayleigh, double wavelength);

    [[nodiscard]] double waist() const { return waist_; }
    [[nodiscard]] double rayleigh() const { return rayleigh_; }
    [[nodiscard]] double wavenumber() const { return wavenumber_; }
    [[nodiscard]] double wavelength() const;

    // w(z)
    [[nodiscard]] double width(double z) const;
    // 1/R(z); zero at the waist, so the curvature term vanishes there.
    [[nodiscard]] double inverse_curvature(double z) const;
    [[nodiscard]] double gouy(double z, GouyConvention c = GouyConvention::AsPrinted) const;

    bool operator==(const BeamParams&) const = default;

private:
    double waist_;
    double rayleigh_;
    double wavenumber_;
};

// Square sampling grid: n pixels per side over a physical side length.
// Pixel (i, j) sits at x = (i - n/2) * pitch, y = (j - n/2) * pitch, so the
// optical axis falls exactly on pixel (n/2, n/2).
struct GridSpec {
    int n = 512;
    double extent = 0.0;

    [[nodiscard]] double pitch() const { return extent / n; }
    [[nodiscard]] double coord(int i) const { return (i - n / 2) * pitch(); }
    // Throws ContractViolation for n < 16, odd n, or non-positive extent.
    void validate() const;

    bool operator==(const GridSpec&) const = default;
};

// Monochromatic complex scalar field at one axial plane.  Values are
// row-major with y as the slow index.  Immutable once constructed.
class WaveField {
public:
    WaveField(GridSpec grid, double wavenumber, double z, std::vector<cplx> values);

    [[nodiscard]] const GridSpec& grid() const { return grid_; }
    [[nodiscard]] int nx() const { return grid_.n; }
    [[nodiscard]] int ny() const { return grid_.n; }
    [[nodiscard]] double pitch() const { return grid_.pitch(); }
    [[nodiscard]] double z() const { return z_; }
    [[nodiscard]] double wavenumber() const { return wavenumber_; }
    [[nodiscard]] std::span<const cplx> values() const { return values_; }
    [[nodiscard]] cplx at(int ix, int iy) const { return values_[static_cast<std::size_t>(iy) * grid_.n + ix]; }

    // sum |psi|^2 * pitch^2
    [[nodiscard]] double norm() const;
    [[nodiscard]] double max_abs() const;

    [[nodiscard]] WaveField with_values(std::vector<cplx> values) const;
    [[nodiscard]] WaveField with_z(double z) const;

private:
    GridSpec grid_;
    double wavenumber_;
    double z_;
    std::vector<cplx> values_;
};

// <a|b> = sum conj(a) b pitch^2.  Grids must match.
cplx inner_product(const WaveField& a, const WaveField& b);
WaveField scaled(const WaveField& f, cplx factor);
WaveField added(const WaveField& a, const WaveField& b);
WaveField normalized(const WaveField& f);
// max |a - b| / max |a|
double max_relative_difference(const WaveField& a, const WaveField& b);
// ||a - b|| / ||a|| on the intensity maps.
double intensity_l2_difference(const WaveField& a, const WaveField& b);

// Rigid counter-clockwise rotation of the field about the optic axis by
// `angle`, sampled with bilinear interpolation (zero outside the grid).
WaveField rotated(const WaveField& f, double angle);
// Same rotation by quarter turns and three Fourier shears; exact for
// band-limited fields that vanish at the grid edge.
WaveField rotated_spectral(const WaveField& f, double angle);

enum class HgOrientation { Hg10, Hg01 };

// Normalized LG_{m,0}, m in {-1, +1}, at axial position z (relative to the
// waist).  Throws UnsupportedMode for other m, SamplingError when the grid
// does not resolve the ring or is narrower than 8 w(z).
WaveField synth_lg(const BeamParams& p, int m, const GridSpec& g, double z,
                   GouyConvention c = GouyConvention::AsPrinted);
WaveField synth_hg(const BeamParams& p, HgOrientation o, const GridSpec& g, double z,
                   GouyConvention c = GouyConvention::AsPrinted);
// a_R LG_{+1} + a_L LG_{-1}; |a_R|^2 + |a_L|^2 must be 1 within 1e-9.
WaveField synth_superposition(const BeamParams& p, cplx a_R, cplx a_L, const GridSpec& g, double z,
                              GouyConvention c = GouyConvention::AsPrinted);
// Round fundamental Gaussian (LG_{0,0}); the illumination upstream of a phase plate.
WaveField synth_gaussian(const BeamParams& p, const GridSpec& g, double z,
                         GouyConvention c = GouyConvention::AsPrinted);

// Relativistic de Broglie wavelength (m) for kinetic energy in keV,
// 10 <= energy <= 1000.
double electron_wavelength(double energy_kev);

namespace detail {
// Same formula without the range check.
double de_broglie_wavelength(double energy_kev);
double nonrelativistic_wavelength(double energy_kev);
} // namespace detail

} // namespace vortexgate
