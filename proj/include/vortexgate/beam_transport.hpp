#pragma once

#include <span>

#include "vortexgate/column.hpp"
#include "vortexgate/modes.hpp"

namespace vortexgate {

// 2x2 ray-transfer matrix of one principal section.
struct RayMatrix {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    // The matrix of `this` followed by `next`.
    [[nodiscard]] RayMatrix then(const RayMatrix& next) const;
};

// Complex beam parameter q = (z - z_waist) + i zR of one principal section,
// the Gouy phase atan(z/zR) gathered so far and the accumulated ray matrix.
struct GaussianSection {
    cplx q;
    double gouy = 0.0;
    RayMatrix ray;
};

cplx drift_q(cplx q, double length);
cplx thin_lens_q(cplx q, double focal_length);
// Gouy phase gathered over a drift of the given length starting from q.
double gouy_advance(cplx q, double length);

// Two principal sections along u and v, where (u, v) is the lab frame
// rotated counter-clockwise by `frame`.
struct AstigmaticBeam {
    double frame = 0.0;
    GaussianSection u;
    GaussianSection v;

    static AstigmaticBeam round(cplx q);
    [[nodiscard]] bool stigmatic(double rel_tol = 1e-9) const;
};

// Analytic transport through the element list up to `distance` from its
// start (thin elements exactly at `distance` included).  Phase plates and
// apertures are transparent to the envelope.  Throws ContractViolation if an
// astigmatic beam meets a quadrupole outside its principal frame.
AstigmaticBeam transport(const AstigmaticBeam& in, std::span<const Element> elements, double distance);
AstigmaticBeam transport(const AstigmaticBeam& in, std::span<const Element> elements);

} // namespace vortexgate
