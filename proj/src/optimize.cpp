#include "mixdag/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

namespace mixdag {

namespace {

struct Pair {
    Vector s;
    Vector y;
    double rho;
};

Vector project(const Vector& x, std::span<const Interval> bounds) {
    Vector out = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = std::clamp(x(i), bounds[i].lower, bounds[i].upper);
    return out;
}

double projected_gradient_norm(const Vector& x, const Vector& g, std::span<const Interval> bounds) {
    double norm = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double step = std::clamp(x(i) - g(i), bounds[i].lower, bounds[i].upper) - x(i);
        norm = std::max(norm, std::fabs(step));
    }
    return norm;
}

// Two-loop recursion on the free coordinates only.
Vector lbfgs_direction(const Vector& g, const std::vector<char>& free, const std::deque<Pair>& memory) {
    const Eigen::Index n = g.size();
    auto mask = [&](Vector v) {
        for (Eigen::Index i = 0; i < n; ++i)
            if (!free[i]) v(i) = 0.0;
        return v;
    };
    Vector q = mask(g);
    std::vector<double> alpha(memory.size());
    std::vector<Vector> s_free, y_free;
    std::vector<double> rho_free;
    for (const auto& p : memory) {
        s_free.push_back(mask(p.s));
        y_free.push_back(mask(p.y));
        const double sy = s_free.back().dot(y_free.back());
        rho_free.push_back(sy > 1e-300 ? 1.0 / sy : 0.0);
    }
    for (std::size_t k = memory.size(); k-- > 0;) {
        alpha[k] = rho_free[k] * s_free[k].dot(q);
        q -= alpha[k] * y_free[k];
    }
    double gamma = 1.0;
    if (!memory.empty()) {
        const double yy = y_free.back().squaredNorm();
        const double sy = s_free.back().dot(y_free.back());
        if (yy > 0.0 && sy > 0.0) gamma = sy / yy;
    }
    Vector r = gamma * q;
    for (std::size_t k = 0; k < memory.size(); ++k) {
        const double beta = rho_free[k] * y_free[k].dot(r);
        r += s_free[k] * (alpha[k] - beta);
    }
    return -r;
}

}  // namespace

QuasiNewtonResult boxed_quasi_newton(const Objective& objective, Vector x0, std::span<const Interval> bounds,
                                     const QuasiNewtonOptions& options) {
    const Eigen::Index n = x0.size();
    if (static_cast<Eigen::Index>(bounds.size()) != n)
        throw std::invalid_argument("boxed_quasi_newton: one bound per coordinate required");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (x0(i) < bounds[i].lower || x0(i) > bounds[i].upper)
            throw std::invalid_argument("boxed_quasi_newton: start point outside bounds");
    }
    Vector x = std::move(x0);
    Vector g = Vector::Zero(n);
    double f = objective(x, g);
    if (!std::isfinite(f) || !g.allFinite()) throw InvalidStartError("boxed_quasi_newton: objective not finite at start");

    QuasiNewtonResult result;
    std::deque<Pair> memory;
    std::vector<char> free(n, 1);
    Vector gn = Vector::Zero(n);
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const double pg = projected_gradient_norm(x, g, bounds);
        if (pg <= options.pg_tolerance) {
            result.converged = true;
            break;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool pinned_low = x(i) <= bounds[i].lower && g(i) > 0.0;
            const bool pinned_high = x(i) >= bounds[i].upper && g(i) < 0.0;
            free[i] = !(pinned_low || pinned_high);
        }
        Vector d = lbfgs_direction(g, free, memory);
        double gd = g.dot(d);
        if (!(gd < 0.0) || !d.allFinite()) {
            memory.clear();
            d = lbfgs_direction(g, free, memory);
            gd = g.dot(d);
        }
        double step = 1.0;
        if (memory.empty()) step = std::min(1.0, 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300));

        bool accepted = false;
        Vector xn;
        double fn = f;
        for (int ls = 0; ls < 60; ++ls) {
            xn = project(x + step * d, bounds);
            const double decrease = g.dot(xn - x);
            if (decrease < 0.0) {
                fn = objective(xn, gn);
                if (std::isfinite(fn) && gn.allFinite() && fn <= f + 1e-4 * decrease) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!memory.empty()) {
                memory.clear();
                continue;
            }
            break;
        }
        Vector s = xn - x;
        Vector y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            memory.push_back({std::move(s), std::move(y), 1.0 / sy});
            if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
        }
        x = std::move(xn);
        f = fn;
        g = gn;
    }
    result.iterations = it;
    result.projected_gradient = projected_gradient_norm(x, g, bounds);
    if (result.projected_gradient <= options.pg_tolerance) result.converged = true;
    result.x = std::move(x);
    result.value = f;
    return result;
}

}  // namespace mixdag
