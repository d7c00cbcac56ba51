#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

namespace netslab {

inline double digamma(double x) { return boost::math::digamma(x); }

// log B(a,b) = lgamma(a) + lgamma(b) - lgamma(a+b)
inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Entropy of a Bernoulli(p), finite at the endpoints.
inline double bernoulli_entropy(double p) {
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
    return h;
}

// Entropy of a Beta(a,b).
inline double beta_entropy(double a, double b) {
    return log_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) +
           (a + b - 2.0) * digamma(a + b);
}

inline double log_sum_exp(const std::vector<double>& xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

inline double clamp_unit(double p, double eps) {
    return std::min(std::max(p, eps), 1.0 - eps);
}

}  // namespace netslab
