#include "irrlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "irrlab/rng.hpp"

namespace irrlab {

Eigen2 eigen_decompose(const Mat2& m)
{
    const double half_tr = 0.5 * (m.xx + m.yy);
    const double d = std::hypot(0.5 * (m.xx - m.yy), m.xy);
    Eigen2 e{half_tr - d, half_tr + d, {}, {}};
    if (m.xy == 0.0) {
        if (m.xx <= m.yy) {
            e.v_lo = {1.0, 0.0};
            e.v_hi = {0.0, 1.0};
        } else {
            e.v_lo = {0.0, 1.0};
            e.v_hi = {1.0, 0.0};
        }
        return e;
    }
    Vec2 v{m.xy, e.lo - m.xx};
    v *= 1.0 / norm(v);
    e.v_lo = v;
    e.v_hi = {-v.y, v.x};
    return e;
}

// ---------------------------------------------------------------------------

PolynomialPotential::PolynomialPotential(std::vector<PolyTerm> terms) : terms_(std::move(terms))
{
    if (terms_.empty())
        throw ValidationError("polynomial potential needs at least one term");
    for (const auto& t : terms_) {
        if (t.px < 0 || t.py < 0)
            throw ValidationError("polynomial exponents must be non-negative");
        if (!std::isfinite(t.coeff))
            throw ValidationError("polynomial coefficient is not finite");
    }
}

namespace {

double ipow(double b, int e)
{
    double r = 1.0;
    for (int i = 0; i < e; ++i)
        r *= b;
    return r;
}

}  // namespace

double PolynomialPotential::value(Vec2 p) const
{
    double s = 0.0;
    for (const auto& t : terms_)
        s += t.coeff * ipow(p.x, t.px) * ipow(p.y, t.py);
    return s;
}

Vec2 PolynomialPotential::gradient(Vec2 p) const
{
    Vec2 g;
    for (const auto& t : terms_) {
        if (t.px > 0)
            g.x += t.coeff * t.px * ipow(p.x, t.px - 1) * ipow(p.y, t.py);
        if (t.py > 0)
            g.y += t.coeff * t.py * ipow(p.x, t.px) * ipow(p.y, t.py - 1);
    }
    return g;
}

Mat2 PolynomialPotential::hessian(Vec2 p) const
{
    Mat2 h;
    for (const auto& t : terms_) {
        if (t.px > 1)
            h.xx += t.coeff * t.px * (t.px - 1) * ipow(p.x, t.px - 2) * ipow(p.y, t.py);
        if (t.py > 1)
            h.yy += t.coeff * t.py * (t.py - 1) * ipow(p.x, t.px) * ipow(p.y, t.py - 2);
        if (t.px > 0 && t.py > 0)
            h.xy += t.coeff * t.px * t.py * ipow(p.x, t.px - 1) * ipow(p.y, t.py - 1);
    }
    return h;
}

std::vector<PolyTerm> parse_poly_terms(const std::string& text)
{
    std::vector<PolyTerm> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        if (item.empty())
            continue;
        PolyTerm t;
        char c1 = 0;
        char c2 = 0;
        std::stringstream is(item);
        if (!(is >> t.coeff >> c1 >> t.px >> c2 >> t.py) || c1 != ':' || c2 != ':' || !is.eof())
            throw ValidationError("bad polynomial term '" + item + "' (expected coeff:i:j)");
        if (t.px < 0 || t.py < 0)
            throw ValidationError("negative exponent in polynomial term '" + item + "'");
        out.push_back(t);
    }
    if (out.empty())
        throw ValidationError("no polynomial terms in '" + text + "'");
    return out;
}

std::string to_string(CriticalKind kind)
{
    switch (kind) {
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::maximum: return "maximum";
    }
    return "?";
}

Observable make_constant_observable(double c)
{
    std::ostringstream name;
    name << "const(" << c << ")";
    return {name.str(), [c](Vec2) { return c; }};
}

// ---------------------------------------------------------------------------

Scenario::Scenario(std::string name, std::shared_ptr<const Potential> potential,
                   std::vector<Vec2> critical_seeds, Box domain)
    : name_(std::move(name)), potential_(std::move(potential)), seeds_(std::move(critical_seeds)), domain_(domain)
{
    if (!potential_)
        throw ValidationError("scenario '" + name_ + "' has no potential");
    add_observable({"f2", [](Vec2 p) { return p.x * p.x + p.y * p.y; }});
    add_observable({"x", [](Vec2 p) { return p.x; }});
    add_observable({"y", [](Vec2 p) { return p.y; }});
    add_observable({"x2", [](Vec2 p) { return p.x * p.x; }});
    add_observable({"one", [](Vec2) { return 1.0; }});
    add_observable({"zero", [](Vec2) { return 0.0; }});
    auto pot = potential_;
    add_observable({"energy", [pot](Vec2 p) { return pot->value(p); }});
}

const Observable& Scenario::observable(const std::string& name) const
{
    auto it = observables_.find(name);
    if (it == observables_.end()) {
        std::string known;
        for (const auto& [k, v] : observables_)
            known += (known.empty() ? "" : ", ") + k;
        throw ValidationError("unknown observable '" + name + "' (known: " + known + ")");
    }
    return it->second;
}

std::vector<std::string> Scenario::observable_names() const
{
    std::vector<std::string> names;
    for (const auto& [k, v] : observables_)
        names.push_back(k);
    return names;
}

void Scenario::add_observable(Observable obs)
{
    auto key = obs.name;
    observables_.insert_or_assign(key, std::move(obs));
}

Scenario make_bowl()
{
    Scenario s("bowl", std::make_shared<QuadraticBowl>(), {{0.1, -0.05}});
    s.set_analytic_contour([](double z, int n) {
        std::vector<Vec2> pts(static_cast<std::size_t>(n));
        const double r = std::sqrt(2.0 * z);
        for (int k = 0; k < n; ++k) {
            const double a = 2.0 * std::numbers::pi * k / n;
            pts[static_cast<std::size_t>(k)] = {r * std::cos(a), r * std::sin(a)};
        }
        return pts;
    });
    return s;
}

Scenario make_double_well()
{
    return Scenario("double_well", std::make_shared<DoubleWell>(), {{-0.9, 0.1}, {1.1, -0.1}, {0.05, 0.05}});
}

Scenario make_polynomial_scenario(std::string name, std::vector<PolyTerm> terms, Box domain)
{
    auto pot = std::make_shared<PolynomialPotential>(std::move(terms));
    // seeds: local minima of |grad U|^2 on a coarse scan
    constexpr int n = 96;
    std::vector<double> g2(static_cast<std::size_t>(n * n));
    auto at = [&](int i, int j) -> double& { return g2[static_cast<std::size_t>(i * n + j)]; };
    auto node = [&](int i, int j) {
        return Vec2{domain.xmin + domain.width() * (i + 0.5) / n, domain.ymin + domain.height() * (j + 0.5) / n};
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec2 g = pot->gradient(node(i, j));
            at(i, j) = dot(g, g);
        }
    std::vector<Vec2> seeds;
    for (int i = 1; i + 1 < n; ++i)
        for (int j = 1; j + 1 < n; ++j) {
            bool is_min = true;
            for (int di = -1; di <= 1 && is_min; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    if ((di || dj) && at(i + di, j + dj) < at(i, j)) {
                        is_min = false;
                        break;
                    }
            if (is_min)
                seeds.push_back(node(i, j));
        }
    return Scenario(std::move(name), std::move(pot), std::move(seeds), domain);
}

Scenario scenario_by_name(const std::string& name)
{
    if (name == "bowl")
        return make_bowl();
    if (name == "double_well")
        return make_double_well();
    throw ValidationError("unknown scenario '" + name + "' (known: bowl, double_well)");
}

std::vector<std::string> shipped_scenario_names() { return {"bowl", "double_well"}; }

Vec2 eval_gradient(const Scenario& scenario, Vec2 point)
{
    if (!is_finite(point))
        throw ValidationError("eval_gradient: non-finite point");
    return scenario.grad_u(point);
}

CriticalKind classify_hessian(const Mat2& h, double degeneracy_tol)
{
    const auto e = eigen_decompose(h);
    if (std::min(std::abs(e.lo), std::abs(e.hi)) <= degeneracy_tol)
        throw ValidationError("degenerate critical point (Hessian eigenvalue below tolerance)");
    if (e.lo > 0.0)
        return CriticalKind::minimum;
    if (e.hi < 0.0)
        return CriticalKind::maximum;
    return CriticalKind::saddle;
}

CriticalPointCatalog classify_critical_points(const Scenario& scenario)
{
    CriticalPointCatalog cat;
    for (const Vec2 seed : scenario.critical_seeds()) {
        Vec2 x = seed;
        // keep iterating past the gradient tolerance: quadratic convergence costs
        // nothing at a regular point and exposes degenerate ones (linear rate)
        for (int it = 0; it < 100; ++it) {
            const Vec2 g = scenario.grad_u(x);
            const Mat2 h = scenario.hess_u(x);
            const double det = h.det();
            if (!is_finite(g) || g == Vec2{} || std::abs(det) < 1e-300)
                break;
            const Vec2 step{(h.yy * g.x - h.xy * g.y) / det, (-h.xy * g.x + h.xx * g.y) / det};
            x -= step;
            if (!is_finite(x) || !scenario.domain().contains(x))
                break;
            if (norm(step) <= 1e-15 * (1.0 + norm(x)))
                break;
        }
        const bool ok = is_finite(x) && scenario.domain().contains(x) && norm(scenario.grad_u(x)) <= 1e-12;
        if (!ok) {
            std::ostringstream msg;
            msg << "Newton did not converge from seed (" << seed.x << ", " << seed.y << ")";
            cat.dropped_seeds.push_back(msg.str());
            continue;
        }
        const bool dup = std::any_of(cat.points.begin(), cat.points.end(),
                                     [&](const CriticalPoint& c) { return norm(c.location - x) < 1e-6; });
        if (dup)
            continue;
        cat.points.push_back({x, scenario.u(x), classify_hessian(scenario.hess_u(x))});
    }
    std::sort(cat.points.begin(), cat.points.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (std::abs(a.value - b.value) > 1e-10 * (1.0 + std::abs(a.value)))
            return a.value < b.value;
        if (a.location.x != b.location.x)
            return a.location.x < b.location.x;
        return a.location.y < b.location.y;
    });
    return cat;
}

// ---------------------------------------------------------------------------

void GibbsSpec::validate() const
{
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw ValidationError("beta must be a positive finite number");
}

double gibbs_log_density(const GibbsSpec& spec, Vec2 point)
{
    spec.validate();
    if (!is_finite(point))
        throw ValidationError("gibbs_log_density: non-finite point");
    return -spec.scenario.u(point) / spec.beta;
}

namespace {

template <class F>
void for_each_cell(const QuadratureGrid& grid, F&& f)
{
    const double hx = grid.box.width() / grid.n;
    const double hy = grid.box.height() / grid.n;
    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j)
            f(i, j, Vec2{grid.box.xmin + (i + 0.5) * hx, grid.box.ymin + (j + 0.5) * hy});
}

double grid_min_energy(const GibbsSpec& spec, const QuadratureGrid& grid)
{
    double umin = INFINITY;
    for_each_cell(grid, [&](int, int, Vec2 p) { umin = std::min(umin, spec.scenario.u(p)); });
    return umin;
}

}  // namespace

double gibbs_expectation(const GibbsSpec& spec, const Observable& f, const QuadratureGrid& grid)
{
    spec.validate();
    const double umin = grid_min_energy(spec, grid);
    double num = 0.0;
    double den = 0.0;
    for_each_cell(grid, [&](int, int, Vec2 p) {
        const double w = std::exp(-(spec.scenario.u(p) - umin) / spec.beta);
        num += w * f(p);
        den += w;
    });
    return num / den;
}

double gibbs_tail_mass(const GibbsSpec& spec, const Box& inner, const QuadratureGrid& grid)
{
    spec.validate();
    const double umin = grid_min_energy(spec, grid);
    double in = 0.0;
    double all = 0.0;
    for_each_cell(grid, [&](int, int, Vec2 p) {
        const double w = std::exp(-(spec.scenario.u(p) - umin) / spec.beta);
        all += w;
        if (inner.contains(p))
            in += w;
    });
    return std::max(0.0, (all - in) / all);
}

std::vector<Vec2> sample_gibbs_quadrature(const GibbsSpec& spec, std::size_t n, std::uint64_t seed,
                                          const QuadratureGrid& grid)
{
    spec.validate();
    const double umin = grid_min_energy(spec, grid);
    std::vector<double> cdf(static_cast<std::size_t>(grid.n) * grid.n);
    double acc = 0.0;
    for_each_cell(grid, [&](int i, int j, Vec2 p) {
        acc += std::exp(-(spec.scenario.u(p) - umin) / spec.beta);
        cdf[static_cast<std::size_t>(i) * grid.n + j] = acc;
    });
    const double hx = grid.box.width() / grid.n;
    const double hy = grid.box.height() / grid.n;
    const CounterRng rng(seed, 7);
    std::vector<Vec2> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto [u, v] = rng.uniform_pair(2 * k);
        const auto [w, unused] = rng.uniform_pair(2 * k + 1);
        (void)unused;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u * acc);
        const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), std::ssize(cdf) - 1));
        const auto i = static_cast<int>(idx / static_cast<std::size_t>(grid.n));
        const auto j = static_cast<int>(idx % static_cast<std::size_t>(grid.n));
        out[k] = {grid.box.xmin + (i + v) * hx, grid.box.ymin + (j + w) * hy};
    }
    return out;
}

}  // namespace irrlab
