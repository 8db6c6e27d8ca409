#include "vortexgate/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vortexgate/errors.hpp"

namespace vortexgate {

namespace {

double gouy_angle(cplx q) { return std::atan(q.real() / q.imag()); }

double gouy_angle_diff(cplx q, cplx dq) { return -std::imag(std::conj(q) * dq) / std::norm(q); }

struct Residual {
    double a = 0.0; // Gouy difference minus target
    double b = 0.0; // (h_x - h_y) / (h_x + h_y) at QP2
    // d(a, b) / d(f1, s)
    double da_df = 0.0, da_ds = 0.0, db_df = 0.0, db_ds = 0.0;
    bool valid = false;

    [[nodiscard]] double size() const { return std::hypot(a, b); }
};

Residual residual(double zr, double d, double f1, double s, double target)
{
    Residual r;
    const cplx u = 1.0 / cplx(-s, zr);
    const cplx ax = u - 1.0 / f1;
    const cplx ay = u + 1.0 / f1;
    const cplx qx1 = 1.0 / ax, qy1 = 1.0 / ay;
    const cplx qx2 = qx1 + d, qy2 = qy1 + d;

    const double dgx = gouy_angle(qx2) - gouy_angle(qx1);
    const double dgy = gouy_angle(qy2) - gouy_angle(qy1);
    const double hx = std::imag(1.0 / qx2), hy = std::imag(1.0 / qy2);
    if (!std::isfinite(dgx) || !std::isfinite(dgy) || hx + hy == 0.0)
        return r;
    r.a = dgx - dgy - target;
    r.b = (hx - hy) / (hx + hy);

    const cplx du_ds = u * u;
    const double inv_f2 = 1.0 / (f1 * f1);
    auto partials = [&](cplx dax, cplx day, double& dres_a, double& dres_b) {
        const cplx dqx = -qx1 * qx1 * dax;
        const cplx dqy = -qy1 * qy1 * day;
        const double dgx_d = gouy_angle_diff(qx2, dqx) - gouy_angle_diff(qx1, dqx);
        const double dgy_d = gouy_angle_diff(qy2, dqy) - gouy_angle_diff(qy1, dqy);
        const double dhx = std::imag(-dqx / (qx2 * qx2));
        const double dhy = std::imag(-dqy / (qy2 * qy2));
        dres_a = dgx_d - dgy_d;
        dres_b = 2.0 * (hy * dhx - hx * dhy) / ((hx + hy) * (hx + hy));
    };
    partials(cplx(inv_f2), cplx(-inv_f2), r.da_df, r.db_df);
    partials(du_ds, du_ds, r.da_ds, r.db_ds);
    r.valid = true;
    return r;
}

struct Region {
    double f_min, f_max, s_min, s_max;

    [[nodiscard]] bool contains(double f, double s) const
    {
        return f >= f_min && f <= f_max && s >= s_min && s <= s_max;
    }
};

// Damped Newton from (f, s); returns true on convergence inside the region.
bool newton(double zr, double d, double target, const Region& reg, double& f, double& s)
{
    Residual r = residual(zr, d, f, s, target);
    if (!r.valid)
        return false;
    for (int it = 0; it < 200; ++it) {
        if (std::max(std::abs(r.a), std::abs(r.b)) < 1e-14)
            break;
        const double det = r.da_df * r.db_ds - r.da_ds * r.db_df;
        if (det == 0.0 || !std::isfinite(det))
            return false;
        const double step_f = -(r.db_ds * r.a - r.da_ds * r.b) / det;
        const double step_s = -(-r.db_df * r.a + r.da_df * r.b) / det;
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 40; ++k, lambda *= 0.5) {
            const double fn = f + lambda * step_f;
            const double sn = s + lambda * step_s;
            if (!(fn > 0.0))
                continue;
            const Residual rn = residual(zr, d, fn, sn, target);
            if (rn.valid && rn.size() < r.size()) {
                f = fn;
                s = sn;
                r = rn;
                improved = true;
                break;
            }
        }
        if (!improved)
            break;
    }
    return r.valid && std::max(std::abs(r.a), std::abs(r.b)) < 1e-10 && reg.contains(f, s);
}

double symmetric_tangent(double target)
{
    if (!(target > 0.0 && target < std::numbers::pi))
        throw ContractViolation("target Gouy difference must lie in (0, pi)");
    return std::tan((std::numbers::pi - target) / 4.0);
}

} // namespace

std::vector<Element> McSolution::elements(double axis_angle) const
{
    return {Quadrupole{f1, axis_angle}, Drift{d}, Quadrupole{f2, axis_angle}};
}

McSolution evaluate_mode_converter(const BeamParams& p, double d, double f1, double s, double target)
{
    const double zr = p.rayleigh();
    const cplx u = 1.0 / cplx(-s, zr);
    const cplx qx1 = 1.0 / (u - 1.0 / f1);
    const cplx qy1 = 1.0 / (u + 1.0 / f1);
    const cplx qx2 = qx1 + d, qy2 = qy1 + d;

    McSolution m;
    m.f1 = f1;
    m.d = d;
    m.input_waist_offset = s;
    m.f2 = 2.0 / std::real(1.0 / qx2 - 1.0 / qy2);
    m.gouy_delta = gouy_advance(qx1, d) - gouy_advance(qy1, d);
    const Residual r = residual(zr, d, f1, s, target);
    m.residuals = {r.a, r.b};
    m.q_out = thin_lens_q(qx2, m.f2);
    return m;
}

double symmetric_drift(const BeamParams& p, double target)
{
    const double t = symmetric_tangent(target);
    const double t2 = 1.0 + t * t;
    return p.rayleigh() * (t2 * t2 + 4.0 * t * t) / (2.0 * t * t2);
}

McSolution tune_mode_converter(const BeamParams& p, double d, const TunerBounds& bounds, double target)
{
    if (!(d > 0.0) || !std::isfinite(d))
        throw ContractViolation("inter-quadrupole drift must be positive");
    symmetric_tangent(target);
    Region reg{bounds.f_min > 0.0 ? bounds.f_min : d / 20.0, bounds.f_max > 0.0 ? bounds.f_max : 50.0 * d,
               bounds.s_min != 0.0 ? bounds.s_min : -5.0 * d, bounds.s_max != 0.0 ? bounds.s_max : 10.0 * d};
    if (!(reg.f_min > 0.0 && reg.f_max > reg.f_min && reg.s_max > reg.s_min))
        throw ContractViolation("tuner bounds are empty or not positive");
    const double zr = p.rayleigh();

    // Coarse scan of the residual landscape for starting points.
    constexpr int kScan = 48;
    struct Start {
        double size, f, s;
    };
    std::vector<Start> starts;
    double a_lo = std::numeric_limits<double>::infinity(), a_hi = -a_lo, b_lo = a_lo, b_hi = -a_lo;
    for (int i = 0; i < kScan; ++i) {
        const double f = reg.f_min * std::pow(reg.f_max / reg.f_min, (i + 0.5) / kScan);
        for (int j = 0; j < kScan; ++j) {
            const double s = reg.s_min + (reg.s_max - reg.s_min) * (j + 0.5) / kScan;
            const Residual r = residual(zr, d, f, s, target);
            if (!r.valid)
                continue;
            a_lo = std::min(a_lo, r.a);
            a_hi = std::max(a_hi, r.a);
            b_lo = std::min(b_lo, r.b);
            b_hi = std::max(b_hi, r.b);
            starts.push_back({r.size(), f, s});
        }
    }
    std::sort(starts.begin(), starts.end(), [](const Start& x, const Start& y) { return x.size < y.size; });
    if (starts.size() > 16)
        starts.resize(16);

    // Mirror-symmetric member of the family as an extra start.
    {
        const double t = symmetric_tangent(target);
        const double f = d * (1.0 + t * t) / (1.0 - t * t);
        const double beta2 = 1.0 / (d * d) - 1.0 / (f * f);
        starts.insert(starts.begin(), {0.0, f, d / (1.0 + beta2 * d * d)});
    }

    std::vector<McSolution> found;
    for (const auto& st : starts) {
        double f = st.f, s = st.s;
        if (!newton(zr, d, target, reg, f, s))
            continue;
        McSolution m = evaluate_mode_converter(p, d, f, s, target);
        if (m.f2 > 0.0 && std::isfinite(m.f2)) {
            m.method = "newton";
            found.push_back(m);
        }
    }

    if (found.empty()) {
        // Bisection on the symmetric family, accepted only when its member
        // happens to match the incoming beam.
        double lo = d * (1.0 + 1e-12), hi = reg.f_max;
        auto delta = [d](double f) { return std::numbers::pi - 4.0 * std::atan(std::sqrt((f - d) / (f + d))); };
        if ((delta(lo) - target) * (delta(hi) - target) < 0.0) {
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                ((delta(lo) - target) * (delta(mid) - target) <= 0.0 ? hi : lo) = mid;
            }
            const double f = 0.5 * (lo + hi);
            const double beta2 = 1.0 / (d * d) - 1.0 / (f * f);
            const double zr_sym = std::sqrt(beta2) * d * d / (1.0 + beta2 * d * d);
            if (std::abs(zr_sym - zr) <= 1e-9 * zr) {
                McSolution m = evaluate_mode_converter(p, d, f, d / (1.0 + beta2 * d * d), target);
                m.method = "symmetric-bisection";
                if (std::max(std::abs(m.residuals[0]), std::abs(m.residuals[1])) < 1e-6)
                    found.push_back(m);
            }
        }
    }

    if (found.empty()) {
        std::ostringstream msg;
        msg << "no mode-converter setting with positive focal lengths reaches a Gouy difference of " << target
            << " rad for drift " << d << " m and input Rayleigh length " << zr << " m; residual landscape: gouy in ["
            << a_lo << ", " << a_hi << "] rad, width mismatch in [" << b_lo << ", " << b_hi << "]";
        throw InfeasibleGeometry(msg.str());
    }
    auto asymmetry = [](const McSolution& m) { return std::abs(m.f1 - m.f2) / (m.f1 + m.f2); };
    return *std::min_element(found.begin(), found.end(),
                             [&](const McSolution& x, const McSolution& y) { return asymmetry(x) < asymmetry(y); });
}

} // namespace vortexgate
