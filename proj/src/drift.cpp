#include "irrlab/drift.hpp"

#include <algorithm>
#include <cmath>

#include "irrlab/rng.hpp"

namespace irrlab {

AntisymmetricMatrix AntisymmetricMatrix::from_entries(double a11, double a12, double a21, double a22)
{
    if (a11 != 0.0 || a22 != 0.0 || a12 != -a21)
        throw ValidationError("drift matrix is not antisymmetric");
    if (!std::isfinite(a12))
        throw ValidationError("drift matrix entry is not finite");
    return AntisymmetricMatrix(a12);
}

void DriftField::validate() const
{
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw ValidationError("delta must be finite and >= 0");
    if (!std::isfinite(s_matrix.s()))
        throw ValidationError("drift matrix entry is not finite");
}

Vec2 eval_drift(const DriftField& field, Vec2 point)
{
    if (!is_finite(point))
        throw ValidationError("eval_drift: non-finite point");
    return field.s_matrix.apply(field.scenario.grad_u(point));
}

double fd_divergence(const DriftField& field, Vec2 p, double h)
{
    const auto c = [&](Vec2 q) { return field.s_matrix.apply(field.scenario.grad_u(q)); };
    const double dcx = (c({p.x + h, p.y}).x - c({p.x - h, p.y}).x) / (2.0 * h);
    const double dcy = (c({p.x, p.y + h}).y - c({p.x, p.y - h}).y) / (2.0 * h);
    return dcx + dcy;
}

DriftConditionReport verify_conditions(const DriftField& field, int n_probes, double tol, std::uint64_t seed,
                                       const Box& box)
{
    if (n_probes < 1)
        throw ValidationError("verify_conditions: n_probes must be >= 1");
    if (!(tol > 0.0))
        throw ValidationError("verify_conditions: tol must be > 0");
    field.validate();
    DriftConditionReport rep;
    rep.n_probes = n_probes;
    rep.tol = tol;
    const CounterRng rng(seed, 11);
    for (int k = 0; k < n_probes; ++k) {
        const auto [u, v] = rng.uniform_pair(static_cast<std::uint64_t>(k));
        const Vec2 p{box.xmin + u * box.width(), box.ymin + v * box.height()};
        const double orth = std::abs(dot(eval_drift(field, p), field.scenario.grad_u(p)));
        const double div = std::abs(fd_divergence(field, p));
        if (orth >= rep.max_orthogonality) {
            rep.max_orthogonality = orth;
            rep.worst_orthogonality_point = p;
        }
        if (div >= rep.max_divergence) {
            rep.max_divergence = div;
            rep.worst_divergence_point = p;
        }
    }
    rep.orthogonality_ok = rep.max_orthogonality <= tol;
    rep.divergence_ok = rep.max_divergence <= tol;
    return rep;
}

Vec2 drift_flow_rk4(const DriftField& field, Vec2 x0, double t, int n_steps, double scale)
{
    if (n_steps < 1)
        throw ValidationError("drift_flow_rk4: n_steps must be >= 1");
    const double h = t / n_steps;
    const auto f = [&](Vec2 q) { return scale * field.s_matrix.apply(field.scenario.grad_u(q)); };
    Vec2 x = x0;
    for (int k = 0; k < n_steps; ++k) {
        const Vec2 k1 = f(x);
        const Vec2 k2 = f(x + 0.5 * h * k1);
        const Vec2 k3 = f(x + 0.5 * h * k2);
        const Vec2 k4 = f(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

}  // namespace irrlab
