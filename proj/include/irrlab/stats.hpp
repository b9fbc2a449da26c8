#pragma once

#include <span>
#include <vector>

namespace irrlab::stats {

double mean(std::span<const double> v);
/// Unbiased sample variance (n - 1 denominator).
double sample_variance(std::span<const double> v);
double median(std::vector<double> v);

double student_t_quantile(double p, double dof);
double chi_squared_quantile(double p, double dof);
double fisher_f_upper_tail(double f, double d1, double d2);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov distance with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Complementary Kolmogorov distribution Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct WaldResult {
    double statistic = 0.0;  // Hotelling T^2
    double f_statistic = 0.0;
    double p_value = 1.0;
    int cells = 0;
    int batches = 0;
};

/// Compares cell frequencies of a correlated sample, summarized by per-batch
/// frequency vectors, with those of an i.i.d. reference sample. Uses all but
/// the last cell (frequencies sum to one). T^2 is referred to the F law with
/// (k, b - k) degrees of freedom.
WaldResult wald_cell_test(const std::vector<std::vector<double>>& batch_freqs,
                          const std::vector<double>& ref_counts);

}  // namespace irrlab::stats
