#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irrlab/types.hpp"

namespace irrlab {

/// A smooth confining potential U on R^2 with closed-form derivatives.
class Potential {
public:
    virtual ~Potential() = default;

    virtual double value(Vec2 p) const = 0;
    virtual Vec2 gradient(Vec2 p) const = 0;
    virtual Mat2 hessian(Vec2 p) const = 0;
    virtual double laplacian(Vec2 p) const { return hessian(p).trace(); }
};

/// U = (x^2 + y^2) / 2
class QuadraticBowl final : public Potential {
public:
    double value(Vec2 p) const override { return 0.5 * (p.x * p.x + p.y * p.y); }
    Vec2 gradient(Vec2 p) const override { return p; }
    Mat2 hessian(Vec2) const override { return {1.0, 0.0, 1.0}; }
    double laplacian(Vec2) const override { return 2.0; }
};

/// U = (x^2 - 1)^2 / 4 + y^2 / 2
class DoubleWell final : public Potential {
public:
    double value(Vec2 p) const override
    {
        const double a = p.x * p.x - 1.0;
        return 0.25 * a * a + 0.5 * p.y * p.y;
    }
    Vec2 gradient(Vec2 p) const override { return {p.x * (p.x * p.x - 1.0), p.y}; }
    Mat2 hessian(Vec2 p) const override { return {3.0 * p.x * p.x - 1.0, 0.0, 1.0}; }
    double laplacian(Vec2 p) const override { return 3.0 * p.x * p.x; }
};

/// One monomial c * x^i * y^j.
struct PolyTerm {
    double coeff = 0.0;
    int px = 0;
    int py = 0;
};

/// General bivariate polynomial, differentiated term by term.
class PolynomialPotential final : public Potential {
public:
    explicit PolynomialPotential(std::vector<PolyTerm> terms);

    double value(Vec2 p) const override;
    Vec2 gradient(Vec2 p) const override;
    Mat2 hessian(Vec2 p) const override;

    const std::vector<PolyTerm>& terms() const { return terms_; }

private:
    std::vector<PolyTerm> terms_;
};

/// Parses "c:i:j, c:i:j, ..." into polynomial terms.
std::vector<PolyTerm> parse_poly_terms(const std::string& text);

enum class CriticalKind { minimum, saddle, maximum };

std::string to_string(CriticalKind kind);

struct CriticalPoint {
    Vec2 location;
    double value = 0.0;
    CriticalKind kind = CriticalKind::minimum;
};

struct Observable {
    std::string name;
    std::function<double(Vec2)> fn;

    double operator()(Vec2 p) const { return fn(p); }
};

Observable make_constant_observable(double c);

/// Exact points on the closed level set {U = z}, for potentials that admit
/// a closed-form parametrization. Points are returned in traversal order.
using AnalyticContour = std::function<std::vector<Vec2>(double z, int n_points)>;

/// A named potential together with its critical-point seeds, observables and
/// the bounding box used for quadrature.
class Scenario {
public:
    Scenario(std::string name, std::shared_ptr<const Potential> potential,
             std::vector<Vec2> critical_seeds, Box domain = Box::square(4.0));

    const std::string& name() const { return name_; }
    const Potential& potential() const { return *potential_; }
    std::shared_ptr<const Potential> potential_ptr() const { return potential_; }
    const std::vector<Vec2>& critical_seeds() const { return seeds_; }
    const Box& domain() const { return domain_; }

    double u(Vec2 p) const { return potential_->value(p); }
    Vec2 grad_u(Vec2 p) const { return potential_->gradient(p); }
    Mat2 hess_u(Vec2 p) const { return potential_->hessian(p); }
    double laplacian_u(Vec2 p) const { return potential_->laplacian(p); }

    const Observable& observable(const std::string& name) const;
    std::vector<std::string> observable_names() const;
    void add_observable(Observable obs);

    const std::optional<AnalyticContour>& analytic_contour() const { return analytic_contour_; }
    void set_analytic_contour(AnalyticContour c) { analytic_contour_ = std::move(c); }

private:
    std::string name_;
    std::shared_ptr<const Potential> potential_;
    std::vector<Vec2> seeds_;
    Box domain_;
    std::map<std::string, Observable> observables_;
    std::optional<AnalyticContour> analytic_contour_;
};

Scenario make_bowl();
Scenario make_double_well();

/// Scenario from polynomial terms; critical seeds come from a grid scan.
Scenario make_polynomial_scenario(std::string name, std::vector<PolyTerm> terms,
                                  Box domain = Box::square(4.0));

/// "bowl" or "double_well".
Scenario scenario_by_name(const std::string& name);

std::vector<std::string> shipped_scenario_names();

/// Throws ValidationError on non-finite input.
Vec2 eval_gradient(const Scenario& scenario, Vec2 point);

struct CriticalPointCatalog {
    std::vector<CriticalPoint> points;
    std::vector<std::string> dropped_seeds;
};

/// Newton-refines each seed on grad U = 0, deduplicates, classifies by the
/// Hessian signature. Degenerate Hessians raise ValidationError.
CriticalPointCatalog classify_critical_points(const Scenario& scenario);

CriticalKind classify_hessian(const Mat2& h, double degeneracy_tol = 1e-8);

struct GibbsSpec {
    Scenario scenario;
    double beta = 0.1;

    void validate() const;
};

/// -U(p)/beta, the unnormalized log density.
double gibbs_log_density(const GibbsSpec& spec, Vec2 point);

/// Midpoint quadrature of the Gibbs measure on a truncated box.
struct QuadratureGrid {
    Box box = Box::square(4.0);
    int n = 2048;
};

double gibbs_expectation(const GibbsSpec& spec, const Observable& f,
                         const QuadratureGrid& grid = {});

/// Gibbs mass outside `inner` relative to mass on `grid.box`.
double gibbs_tail_mass(const GibbsSpec& spec, const Box& inner,
                       const QuadratureGrid& grid = {});

/// I.i.d. draws from the grid-discretized Gibbs measure (cell chosen by
/// inverse CDF, uniform position inside the cell).
std::vector<Vec2> sample_gibbs_quadrature(const GibbsSpec& spec, std::size_t n,
                                          std::uint64_t seed,
                                          const QuadratureGrid& grid = {Box::square(4.0), 1024});

}  // namespace irrlab
