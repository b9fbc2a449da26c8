#include "irrlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "irrlab/types.hpp"

namespace irrlab::stats {

double mean(std::span<const double> v)
{
    if (v.empty())
        throw ValidationError("mean of empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v)
{
    if (v.size() < 2)
        throw ValidationError("sample variance needs at least two values");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v)
{
    if (v.empty())
        throw ValidationError("median of empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double student_t_quantile(double p, double dof)
{
    return boost::math::quantile(boost::math::students_t(dof), p);
}

double chi_squared_quantile(double p, double dof)
{
    return boost::math::quantile(boost::math::chi_squared(dof), p);
}

double fisher_f_upper_tail(double f, double d1, double d2)
{
    if (!(f > 0.0))
        return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, d2), f));
}

double kolmogorov_q(double lambda)
{
    if (lambda <= 0.0)
        return 1.0;
    if (lambda < 0.2)
        return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16)
            break;
    }
    return std::clamp(s, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty())
        throw ValidationError("KS test needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= t)
            ++i;
        while (j < b.size() && b[j] <= t)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double sq = std::sqrt(ne);
    return {d, kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw ValidationError("linear_fit needs two equal-length samples of size >= 2");
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

WaldResult wald_cell_test(const std::vector<std::vector<double>>& batch_freqs, const std::vector<double>& ref_counts)
{
    const auto b = static_cast<int>(batch_freqs.size());
    const auto ncell = static_cast<int>(ref_counts.size());
    const int k = ncell - 1;
    if (k < 1)
        throw ValidationError("wald_cell_test needs at least two cells");
    if (b <= k + 1)
        throw ValidationError("wald_cell_test needs more batches than cells");
    const double n_ref = std::accumulate(ref_counts.begin(), ref_counts.end(), 0.0);

    Eigen::VectorXd pbar = Eigen::VectorXd::Zero(k);
    for (const auto& row : batch_freqs) {
        if (static_cast<int>(row.size()) != ncell)
            throw ValidationError("wald_cell_test: batch row has wrong cell count");
        for (int c = 0; c < k; ++c)
            pbar(c) += row[static_cast<std::size_t>(c)];
    }
    pbar /= b;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(k, k);
    for (const auto& row : batch_freqs) {
        Eigen::VectorXd d(k);
        for (int c = 0; c < k; ++c)
            d(c) = row[static_cast<std::size_t>(c)] - pbar(c);
        s += d * d.transpose();
    }
    s /= (b - 1);
    Eigen::VectorXd q(k);
    for (int c = 0; c < k; ++c)
        q(c) = ref_counts[static_cast<std::size_t>(c)] / n_ref;
    Eigen::MatrixXd ref_cov = -q * q.transpose();
    ref_cov.diagonal() += q;
    ref_cov /= n_ref;

    const Eigen::MatrixXd cov = s / b + ref_cov;
    const Eigen::VectorXd diff = pbar - q;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("wald_cell_test: singular covariance");
    WaldResult r;
    r.cells = ncell;
    r.batches = b;
    r.statistic = diff.dot(ldlt.solve(diff));
    r.f_statistic = r.statistic * (b - k) / (static_cast<double>(k) * (b - 1));
    r.p_value = fisher_f_upper_tail(r.f_statistic, k, b - k);
    return r;
}

}  // namespace irrlab::stats
