#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <array>
#include <vector>

namespace mcvi {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2Pi = 1.8378770664093454836;
inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sq(double x) { return x * x; }

inline double normal_log_pdf_std(double z) { return -0.5 * (kLog2Pi + z * z); }

inline double normal_pdf_std(double z) { return std::exp(normal_log_pdf_std(z)); }

// Phi(x) via erfc; absolute error a few ulp, good far below 1e-12.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// log Phi(x). Direct evaluation until erfc underflows, then the Mills-ratio
// asymptotic series (relative error < 1e-15 for x <= -30).
inline double normal_log_cdf(double x) {
    if (x > -30.0) {
        double c = normal_cdf(x);
        if (c > 1e-305) return std::log(c);
    }
    double t = 1.0 / (x * x);
    // 1 - 1/x^2 + 3/x^4 - 15/x^6 + ... (x -> -inf)
    double series = 1.0 + t * (-1.0 + t * (3.0 + t * (-15.0 + t * (105.0 +
                    t * (-945.0 + t * (10395.0 + t * (-135135.0 + t * 2027025.0)))))));
    return normal_log_pdf_std(x) - std::log(-x) + std::log(series);
}

// log(Phi(b) - Phi(a)) for a < b, stable in both tails.
inline double normal_log_cdf_diff(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("normal_log_cdf_diff: requires a < b");
    if (a == -kInf && b == kInf) return 0.0;
    if (b == kInf) return normal_log_cdf(-a);
    if (a == -kInf) return normal_log_cdf(b);
    if (a + b > 0.0) return normal_log_cdf_diff(-b, -a);
    double width = b - a, m = 0.5 * (a + b);
    if (width < 1e-5 / (1.0 + std::fabs(m))) {
        // interval thin enough that the density is locally quadratic
        return normal_log_pdf_std(m) + std::log(width) +
               std::log1p(width * width * (m * m - 1.0) / 24.0);
    }
    double lb = normal_log_cdf(b);
    double la = normal_log_cdf(a);
    double d = la - lb;  // <= 0
    return lb + std::log1p(-std::exp(d));
}

// Inverse standard normal CDF, Wichura's AS 241 (PPND16), |rel err| < 1e-15.
inline double inv_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_normal_cdf: p outside (0,1)");
    double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        return q *
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                 4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                 2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                   1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                   1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                   2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                   7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

// Digamma: shift to x >= 10, then the asymptotic series. Abs error < 1e-13 on (0, 1e6].
inline double digamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("digamma: requires x > 0");
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    double t = 1.0 / (x * x);
    double series = t * (1.0 / 12.0 - t * (1.0 / 120.0 - t * (1.0 / 252.0 - t * (1.0 / 240.0 -
                    t * (1.0 / 132.0 - t * (691.0 / 32760.0 - t / 12.0))))));
    return acc + std::log(x) - 0.5 / x - series;
}

struct QuadratureRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre nodes/weights by Newton iteration on P_n.
inline QuadratureRule gauss_legendre(int n) {
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    return r;
}

inline const QuadratureRule& gauss_legendre_cached() {
    static const QuadratureRule r32 = gauss_legendre(32);
    return r32;
}

// integral of f over [a, b] with a cached 32-point rule
template <class F>
double gauss_legendre_integrate(F&& f, double a, double b, int n = 32) {
    const QuadratureRule local = (n == 32) ? QuadratureRule{} : gauss_legendre(n);
    const QuadratureRule& rule = (n == 32) ? gauss_legendre_cached() : local;
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i)
        s += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return s * half;
}

}  // namespace mcvi
