#include "mixdag/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "mixdag/rng.hpp"

namespace mixdag {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kTinyMass = 1e-300;
constexpr double kInverseCdfMass = 1e-10;

double standardize(double v, double mu, double sigma) {
    if (std::isinf(v)) return v;
    return (v - mu) / sigma;
}

void check_scale(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::domain_error("truncated normal: sigma must be positive and finite");
}

// Mean of N(0,1) on (a, b] for a >= 0.
double upper_truncated_mean(double a, double b) {
    if (std::isinf(b)) return 1.0 / mills_ratio(a);
    const double e = std::exp(-0.5 * (b - a) * (b + a));
    const double num = -std::expm1(-0.5 * (b - a) * (b + a));
    const double den = mills_ratio(a) - e * mills_ratio(b);
    return num / den;
}
}  // namespace

Interval::Interval(double lo, double hi) : lower(lo), upper(hi) {
    if (std::isnan(lo) || std::isnan(hi) || !(lo < hi))
        throw std::invalid_argument("interval requires lower < upper");
}

double std_normal_pdf(double x) {
    if (std::isinf(x)) return 0.0;
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_logpdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double std_normal_ccdf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("std_normal_quantile: p must lie in (0, 1), got " + std::to_string(p));
    // Wichura's AS 241 (PPND16)
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                   1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                   0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                   0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                   7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

double std_normal_interval_prob(double lower, double upper) {
    if (!(lower < upper)) return 0.0;
    if (lower >= 0.0) return std_normal_ccdf(lower) - std_normal_ccdf(upper);
    return std_normal_cdf(upper) - std_normal_cdf(lower);
}

double std_normal_interval_logprob(double lower, double upper) {
    const double p = std_normal_interval_prob(lower, upper);
    return p > kTinyMass ? std::log(p) : -kInf;
}

double mills_ratio(double x) {
    if (x < 35.0) return std_normal_ccdf(x) / std_normal_pdf(x);
    // Laplace continued fraction, evaluated bottom-up
    double t = x;
    for (int k = 60; k >= 1; --k) t = x + k / t;
    return 1.0 / t;
}

double bivariate_normal_upper(double h, double k, double rho) {
    // Genz's BVNU: Drezner-Wesolowsky with Gauss-Legendre quadrature in asin(rho)
    if (h == kInf || k == kInf) return 0.0;
    if (h == -kInf) return k == -kInf ? 1.0 : std_normal_ccdf(k);
    if (k == -kInf) return std_normal_ccdf(h);
    if (rho == 0.0) return std_normal_ccdf(h) * std_normal_ccdf(k);

    static constexpr double w6[3] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
    static constexpr double x6[3] = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
    static constexpr double w12[6] = {.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                                      0.2031674267230659, 0.2334925365383547, 0.2491470458134029};
    static constexpr double x12[6] = {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                                      0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
    static constexpr double w20[10] = {.01761400713915212, .04060142980038694, .06267204833410906,
                                       .08327674157670475, 0.1019301198172404, 0.1181945319615184,
                                       0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
                                       0.1527533871307259};
    static constexpr double x20[10] = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                                       0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                                       0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                                       0.07652652113349733};
    const double* w;
    const double* x;
    int ng;
    const double ar = std::fabs(rho);
    if (ar < 0.3) {
        w = w6, x = x6, ng = 3;
    } else if (ar < 0.75) {
        w = w12, x = x12, ng = 6;
    } else {
        w = w20, x = x20, ng = 10;
    }
    constexpr double tp = 2.0 * std::numbers::pi;
    double hk = h * k;
    double bvn = 0.0;
    if (ar < 0.925) {
        const double hs = 0.5 * (h * h + k * k);
        const double asr = 0.5 * std::asin(rho);
        for (int i = 0; i < ng; ++i) {
            for (double xi : {1.0 - x[i], 1.0 + x[i]}) {
                const double sn = std::sin(asr * xi);
                bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        bvn = bvn * asr / tp + std_normal_ccdf(h) * std_normal_ccdf(k);
    } else {
        if (rho < 0.0) {
            k = -k;
            hk = -hk;
        }
        if (ar < 1.0) {
            const double as = 1.0 - rho * rho;
            double a = std::sqrt(as);
            const double bs = (h - k) * (h - k);
            const double c = (4.0 - hk) / 8.0;
            const double d = (12.0 - hk) / 80.0;
            double asr = -(bs / as + hk) / 2.0;
            if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
            if (hk > -100.0) {
                const double b = std::sqrt(bs);
                const double sp = std::sqrt(tp) * std_normal_cdf(-b / a);
                bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            double acc = 0.0;
            for (int i = 0; i < ng; ++i) {
                for (double xi : {1.0 - x[i], 1.0 + x[i]}) {
                    const double xs = (a * xi) * (a * xi);
                    const double asr_i = -(bs / xs + hk) / 2.0;
                    if (asr_i <= -100.0) continue;
                    const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    const double rs = std::sqrt(1.0 - xs);
                    const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
                    acc += w[i] * std::exp(asr_i) * (sp - ep);
                }
            }
            bvn = (a * acc - bvn) / tp;
        }
        if (rho > 0.0) {
            bvn += std_normal_ccdf(std::max(h, k));
        } else if (h >= k) {
            bvn = -bvn;
        } else {
            const double l = h < 0.0 ? std_normal_cdf(k) - std_normal_cdf(h)
                                     : std_normal_ccdf(h) - std_normal_ccdf(k);
            bvn = l - bvn;
        }
    }
    return std::clamp(bvn, 0.0, 1.0);
}

namespace {

// Rectangle mass as the integral of phi(x) P(second | x) over first, by
// adaptive 10-point Gauss-Legendre bisection with a tolerance relative to the
// mass. Accurate where inclusion-exclusion cancels.
double rect_by_quadrature(const Interval& first, const Interval& second, double rho) {
    static constexpr double w[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
                                    0.0666713443086881};
    static constexpr double x[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244, 0.8650633666889845,
                                    0.9739065285171717};
    const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
    const double lo = std::max(first.lower, -40.0), hi = std::min(first.upper, 40.0);
    if (!(lo < hi)) return 0.0;
    auto f = [&](double t) {
        return std_normal_pdf(t) * std_normal_interval_prob((second.lower - rho * t) / s, (second.upper - rho * t) / s);
    };
    auto panel = [&](double a, double b) {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double sum = 0.0;
        for (int q = 0; q < 5; ++q) sum += w[q] * (f(mid - half * x[q]) + f(mid + half * x[q]));
        return half * sum;
    };
    constexpr int kStart = 32;
    struct Piece {
        double a, b, est;
    };
    std::vector<Piece> todo;
    double total = 0.0;
    for (int k = 0; k < kStart; ++k) {
        const double a = lo + (hi - lo) * k / kStart, b = lo + (hi - lo) * (k + 1) / kStart;
        todo.push_back({a, b, panel(a, b)});
        total += todo.back().est;
    }
    double result = 0.0;
    while (!todo.empty()) {
        const Piece pc = todo.back();
        todo.pop_back();
        const double m = 0.5 * (pc.a + pc.b);
        const double left = panel(pc.a, m), right = panel(m, pc.b);
        if (std::fabs(left + right - pc.est) <= std::max(1e-10 * total, 1e-300) || pc.b - pc.a < 1e-6) {
            result += left + right;
            continue;
        }
        total += left + right - pc.est;
        todo.push_back({pc.a, m, left});
        todo.push_back({m, pc.b, right});
    }
    return result;
}

}  // namespace

double bivariate_normal_rect(const Interval& first, const Interval& second, double rho) {
    if (!(std::fabs(rho) < 1.0)) throw std::domain_error("bivariate_normal_rect: |rho| must be < 1");
    // Reflect each coordinate toward the upper tail so the inclusion-exclusion
    // below subtracts small numbers rather than numbers close to one.
    auto lean_up = [](Interval iv, double& sign) {
        const bool reflect = std::isinf(iv.upper) ? false
                             : std::isinf(iv.lower) ? true
                                                    : iv.lower + iv.upper < 0.0;
        if (reflect) {
            sign = -sign;
            return Interval{-iv.upper, -iv.lower};
        }
        return iv;
    };
    double sign = 1.0;
    Interval a = lean_up(first, sign);
    Interval b = lean_up(second, sign);
    if (std::pair(b.lower, b.upper) < std::pair(a.lower, a.upper)) std::swap(a, b);
    const double r = sign * rho;
    const double p = bivariate_normal_upper(a.lower, b.lower, r) - bivariate_normal_upper(a.upper, b.lower, r) -
                     bivariate_normal_upper(a.lower, b.upper, r) + bivariate_normal_upper(a.upper, b.upper, r);
    if (p < 1e-9) return std::clamp(rect_by_quadrature(first, second, rho), 0.0, 1.0);
    return std::clamp(p, 0.0, 1.0);
}

double truncnorm_mean(const Interval& iv, double mu, double sigma) {
    check_scale(sigma);
    double a = standardize(iv.lower, mu, sigma);
    double b = standardize(iv.upper, mu, sigma);
    if (std_normal_interval_prob(a, b) < kTinyMass)
        throw DegenerateIntervalError("truncnorm_mean: interval carries no probability mass");
    if (std::isinf(a) && std::isinf(b)) return mu;
    double m;
    if (std::isfinite(a) && std::isfinite(b) && (b - a) < 1e-7 * (1.0 + std::fabs(a))) {
        m = 0.5 * (a + b);
    } else if (a >= 0.0) {
        m = upper_truncated_mean(a, b);
    } else if (b <= 0.0) {
        m = -upper_truncated_mean(-b, -a);
    } else {
        m = (std_normal_pdf(a) - std_normal_pdf(b)) / std_normal_interval_prob(a, b);
    }
    m = std::clamp(m, a, b);
    return mu + sigma * m;
}

double truncnorm_cdf(double x, const Interval& iv, double mu, double sigma) {
    check_scale(sigma);
    if (x <= iv.lower) return 0.0;
    if (x >= iv.upper) return 1.0;
    const double a = standardize(iv.lower, mu, sigma);
    const double b = standardize(iv.upper, mu, sigma);
    const double z = (x - mu) / sigma;
    return std_normal_interval_prob(a, z) / std_normal_interval_prob(a, b);
}

namespace {
// Exponential-proposal rejection for (a, b] with a >= 0 (Robert 1995).
double sample_upper_tail(double a, double b, Rng& rng) {
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    const double span = b - a;
    const double cap = std::isinf(span) ? 1.0 : -std::expm1(-lambda * span);
    for (;;) {
        const double z = a - std::log1p(-rng.uniform() * cap) / lambda;
        if (z <= a || z > b) continue;
        const double d = z - lambda;
        if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
    }
}

// Uniform-proposal rejection for narrow intervals containing or near zero.
double sample_narrow(double a, double b, Rng& rng) {
    const double nearest = a > 0.0 ? a : (b < 0.0 ? b : 0.0);
    for (;;) {
        const double z = a + (b - a) * rng.uniform();
        if (z <= a || z > b) continue;
        if (rng.uniform() <= std::exp(0.5 * (nearest * nearest - z * z))) return z;
    }
}
}  // namespace

double truncnorm_sample(const Interval& iv, double mu, double sigma, Rng& rng) {
    check_scale(sigma);
    const double a = standardize(iv.lower, mu, sigma);
    const double b = standardize(iv.upper, mu, sigma);
    const double mass = std_normal_interval_prob(a, b);
    if (mass < kTinyMass) throw DegenerateIntervalError("truncnorm_sample: interval carries no probability mass");
    double z;
    if (mass >= kInverseCdfMass) {
        const double u = rng.uniform();
        if (a >= 0.0) {
            const double qa = std_normal_ccdf(a);
            const double qb = std_normal_ccdf(b);
            const double t = std::clamp(qb + u * (qa - qb), 1e-320, 1.0 - 1e-16);
            z = -std_normal_quantile(t);
        } else {
            const double pa = std_normal_cdf(a);
            const double pb = std_normal_cdf(b);
            const double t = std::clamp(pa + u * (pb - pa), 1e-320, 1.0 - 1e-16);
            z = std_normal_quantile(t);
        }
    } else if (a >= 0.0) {
        z = sample_upper_tail(a, b, rng);
    } else if (b <= 0.0) {
        z = -sample_upper_tail(-b, -a, rng);
    } else {
        z = sample_narrow(a, b, rng);
    }
    double out = mu + sigma * std::clamp(z, a, b);
    if (!(out > iv.lower)) out = std::nextafter(iv.lower, kInf);
    if (out > iv.upper) out = iv.upper;
    return out;
}

}  // namespace mixdag
