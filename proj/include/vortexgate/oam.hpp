#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vortexgate/modes.hpp"
#include "vortexgate/qubit.hpp"

namespace vortexgate {

struct PolarOptions {
    // Polar origin in metres; defaults to the intensity centroid.
    std::optional<std::array<double, 2>> center;
    // Minimum share of the field norm inside r_max.
    double coverage = 0.999;
};

// Samples on r_j = (j + 1/2) dr, phi_k = 2 pi k / n_phi, stored [j][k].
struct PolarField {
    int n_r = 0;
    int n_phi = 0;
    double r_max = 0.0;
    std::array<double, 2> center{};
    std::vector<cplx> values;

    [[nodiscard]] double dr() const { return r_max / n_r; }
    [[nodiscard]] double r(int j) const { return (j + 0.5) * dr(); }
    [[nodiscard]] double phi(int k) const;
    [[nodiscard]] cplx at(int j, int k) const { return values[static_cast<std::size_t>(j) * n_phi + k]; }
    // sum |psi|^2 r dr dphi
    [[nodiscard]] double norm() const;
};

struct OamSpectrum {
    int m_max = 0;
    std::vector<double> intensities; // index m + m_max
    // Norm of the polar samples the spectrum was taken from.
    double polar_norm = 0.0;

    [[nodiscard]] double intensity(int m) const;
    [[nodiscard]] double total() const;
    [[nodiscard]] std::vector<double> normalized() const;
    [[nodiscard]] double fraction(int m) const { return intensity(m) / total(); }
    // Header `m,intensity,normalized`, one row per m ascending.
    [[nodiscard]] std::string to_csv() const;
};

// Intensity-weighted mean position (x, y) in metres.
std::array<double, 2> intensity_centroid(const WaveField& f);

// Bilinear resampling onto a polar grid reaching as far as the grid allows
// (two pixels short of the nearest edge).  Throws SamplingError when less
// than `coverage` of the norm lies inside.
PolarField to_polar(const WaveField& f, int n_r, int n_phi, const PolarOptions& opt = {});
// Back onto the Cartesian grid of `like`; zero beyond r_max.
WaveField to_cartesian(const PolarField& p, const WaveField& like);

constexpr int kDefaultMaxCharge = 10;
constexpr int kDefaultAzimuthalSamples = 128;

// Throws ContractViolation if n_phi < 4 m_max + 4.
OamSpectrum oam_spectrum(const PolarField& p, int m_max = kDefaultMaxCharge);
// n_r = n/2 and n_phi = max(128, 4 m_max + 4).
OamSpectrum oam_spectrum(const WaveField& f, int m_max = kDefaultMaxCharge, const PolarOptions& opt = {});
// Mean of the single-plane spectra.
OamSpectrum oam_spectrum_averaged(std::span<const WaveField> planes, int m_max = kDefaultMaxCharge,
                                  const PolarOptions& opt = {});

// Direct quadrature on rings one pixel apart, with point counts that grow
// with the ring circumference and cubic-convolution sampling.  Slow.
OamSpectrum oam_spectrum_oracle(const WaveField& f, int m_max = kDefaultMaxCharge, const PolarOptions& opt = {});

struct QubitProjection {
    cplx a_R;
    cplx a_L;
    BlochState state;
    // 1 - (|a_R|^2 + |a_L|^2) / ||f||^2
    double residual = 0.0;
};

// Throws ContractViolation unless the basis is orthonormal within 1e-6.
QubitProjection project_onto_qubit(const WaveField& f, const WaveField& basis_R, const WaveField& basis_L);

} // namespace vortexgate
