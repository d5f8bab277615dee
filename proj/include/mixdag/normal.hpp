#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace mixdag {

class Rng;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Half-open interval (lower, upper] on the extended real line.
struct Interval {
    double lower = -kInf;
    double upper = kInf;

    Interval() = default;
    Interval(double lo, double hi);

    bool contains(double x) const { return lower < x && x <= upper; }
    bool operator==(const Interval&) const = default;
};

/// Raised when a truncation region carries (numerically) no probability mass.
class DegenerateIntervalError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

double std_normal_pdf(double x);
double std_normal_logpdf(double x);
double std_normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate far into the right tail.
double std_normal_ccdf(double x);
/// Inverse of std_normal_cdf; throws std::domain_error outside (0, 1).
double std_normal_quantile(double p);

/// P(lower < W <= upper) for W ~ N(0,1), computed on whichever tail avoids cancellation.
double std_normal_interval_prob(double lower, double upper);
/// log of std_normal_interval_prob; -inf when the mass underflows.
double std_normal_interval_logprob(double lower, double upper);

/// Q(x) / phi(x) for x >= 0.
double mills_ratio(double x);

/// P(X > h, Y > k) for a standard bivariate normal with correlation rho.
double bivariate_normal_upper(double h, double k, double rho);

/// Probability that a standard bivariate normal with correlation rho falls in
/// the rectangle first x second. Masses below 1e-9 are recomputed by quadrature
/// for relative accuracy. Throws std::domain_error for |rho| >= 1.
double bivariate_normal_rect(const Interval& first, const Interval& second, double rho);

/// E[W | W in iv] for W ~ N(mu, sigma^2).
double truncnorm_mean(const Interval& iv, double mu, double sigma);

/// One draw from N(mu, sigma^2) restricted to iv.
double truncnorm_sample(const Interval& iv, double mu, double sigma, Rng& rng);

/// CDF of N(mu, sigma^2) truncated to iv, evaluated at x.
double truncnorm_cdf(double x, const Interval& iv, double mu, double sigma);

}  // namespace mixdag
