#pragma once

#include <cstdint>
#include <string>

#include "irrlab/potential.hpp"

namespace irrlab {

/// 2x2 antisymmetric matrix [[0, s], [-s, 0]].
class AntisymmetricMatrix {
public:
    constexpr AntisymmetricMatrix() = default;
    explicit constexpr AntisymmetricMatrix(double s) : s_(s) {}

    /// Accepts a general 2x2 matrix only if it is antisymmetric.
    static AntisymmetricMatrix from_entries(double a11, double a12, double a21, double a22);

    double s() const { return s_; }
    Vec2 apply(Vec2 v) const { return {s_ * v.y, -s_ * v.x}; }

private:
    double s_ = 1.0;
};

/// C = S grad U. delta is carried here but not applied by eval_drift.
struct DriftField {
    Scenario scenario;
    AntisymmetricMatrix s_matrix{};
    double delta = 0.0;

    void validate() const;
};

/// S grad U(point), unscaled by delta.
Vec2 eval_drift(const DriftField& field, Vec2 point);

struct DriftConditionReport {
    int n_probes = 0;
    double tol = 0.0;
    double max_orthogonality = 0.0;  // max |C . grad U|
    double max_divergence = 0.0;     // max finite-difference |div C|
    Vec2 worst_orthogonality_point;
    Vec2 worst_divergence_point;
    bool orthogonality_ok = false;
    bool divergence_ok = false;

    bool ok() const { return orthogonality_ok && divergence_ok; }
};

/// Probes drawn uniformly from `box` with a seeded stream.
DriftConditionReport verify_conditions(const DriftField& field, int n_probes, double tol,
                                       std::uint64_t seed = 0, const Box& box = Box::square(2.0));

/// Central-difference divergence of C at step h.
double fd_divergence(const DriftField& field, Vec2 p, double h = 1e-5);

/// Flow of x' = scale * C(x) over time t with classical RK4 in n_steps steps.
Vec2 drift_flow_rk4(const DriftField& field, Vec2 x0, double t, int n_steps, double scale = 1.0);

}  // namespace irrlab
