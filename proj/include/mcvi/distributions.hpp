#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>

#include "mcvi/math.hpp"
#include "mcvi/rng.hpp"

namespace mcvi {

namespace detail {
inline void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}
inline bool finite(double x) { return std::isfinite(x); }
}  // namespace detail

struct Normal {
    double mean, var;
    Normal(double m, double v) : mean(m), var(v) {
        detail::require(detail::finite(m) && detail::finite(v) && v > 0.0, "Normal: bad parameters");
    }
};

struct GammaDist {  // shape / rate
    double shape, rate;
    GammaDist(double a, double b) : shape(a), rate(b) {
        detail::require(detail::finite(a) && detail::finite(b) && a > 0.0 && b > 0.0,
                        "Gamma: bad parameters");
    }
};

struct TruncatedNormal {  // location/scale of the parent normal, hard bounds (may be +-inf)
    double mean, var, lower, upper;
    TruncatedNormal(double m, double v, double lo, double hi)
        : mean(m), var(v), lower(lo), upper(hi) {
        detail::require(detail::finite(m) && detail::finite(v) && v > 0.0,
                        "TruncatedNormal: bad location/scale");
        detail::require(!std::isnan(lo) && !std::isnan(hi) && lo < hi,
                        "TruncatedNormal: bad bounds");
    }
};

struct LogNormal {
    double mu, sigma2;
    LogNormal(double m, double s2) : mu(m), sigma2(s2) {
        detail::require(detail::finite(m) && detail::finite(s2) && s2 > 0.0, "LogNormal: bad parameters");
    }
};

struct UniformDist {
    double lower, upper;
    UniformDist(double lo, double hi) : lower(lo), upper(hi) {
        detail::require(detail::finite(lo) && detail::finite(hi) && lo < hi, "Uniform: bad bounds");
    }
};

using Distribution = std::variant<Normal, GammaDist, TruncatedNormal, LogNormal, UniformDist>;

struct TnMoments {
    double mean, var, log_mass;
};

// Mills-ratio moments of a truncated normal, with asymptotic series in the
// one-sided far tail. Throws if the interval mass underflows (< 1e-300).
inline TnMoments tn_moments(double mu, double var, double lo, double hi) {
    double sigma = std::sqrt(var);
    double a = (lo == -kInf) ? -kInf : (lo - mu) / sigma;
    double b = (hi == kInf) ? kInf : (hi - mu) / sigma;
    if (a == -kInf && b == kInf) return {mu, var, 0.0};

    double log_mass = normal_log_cdf_diff(a, b);
    if (log_mass < -690.7755278982137) throw std::domain_error("truncated normal: interval mass underflow");

    // one-sided truncation deep in a tail: series in 1/t
    auto one_sided_tail = [&](double t, double sign) -> TnMoments {
        double it = 1.0 / (t * t);
        // S = Phi-tail Mills series, tail = S - 1 computed without the leading 1
        double tail = it * (-1.0 + it * (3.0 + it * (-15.0 + it * (105.0 + it * (-945.0 + it * 10395.0)))));
        double S = 1.0 + tail;
        double u = it * (3.0 + it * (-15.0 + it * (105.0 + it * (-945.0 + it * 10395.0))));
        double mean_std = sign * t / S;
        double var_std = (tail * (S + 1.0) + u) / (S * S);
        return {mu + sigma * mean_std, var * var_std, log_mass};
    };
    if (a == -kInf && b <= -30.0) return one_sided_tail(-b, -1.0);
    if (b == kInf && a >= 30.0) return one_sided_tail(a, 1.0);

    double ra = (a == -kInf) ? 0.0 : std::exp(normal_log_pdf_std(a) - log_mass);
    double rb = (b == kInf) ? 0.0 : std::exp(normal_log_pdf_std(b) - log_mass);
    double a_term = (a == -kInf) ? 0.0 : a * ra;
    double b_term = (b == kInf) ? 0.0 : b * rb;
    double mean_std = ra - rb;
    double var_std = 1.0 + a_term - b_term - mean_std * mean_std;
    if (!(var_std > 0.0)) {
        // cancellation fallback: interval so extreme the law is near-uniform on it
        double lo_s = (a == -kInf) ? b - 1.0 : a;
        double hi_s = (b == kInf) ? a + 1.0 : b;
        mean_std = 0.5 * (lo_s + hi_s);
        var_std = sq(hi_s - lo_s) / 12.0;
    }
    return {mu + sigma * mean_std, var * var_std, log_mass};
}

namespace detail {

// exact draw from the standard normal restricted to [a, b], 1 <= a < b <= inf,
// via Robert's shifted-exponential rejection
inline double normal_tail_reject(double a, double b, RngHandle& rng) {
    double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    double cap = (b == kInf) ? 1.0 : -std::expm1(-lambda * (b - a));
    for (int it = 0; it < 1000000; ++it) {
        double x = a - std::log1p(-rng.uniform01() * cap) / lambda;
        double t = x - lambda;
        if (std::log(rng.uniform01()) <= -0.5 * t * t) return x;
    }
    return a;  // unreachable for any sane acceptance rate
}

// standardized truncated-normal draw on [a, b]
inline double tn_sample_std(double a, double b, RngHandle& rng) {
    double mid_lo = a, mid_hi = b;
    bool mirror = false;
    if (mid_hi == kInf ? mid_lo != -kInf : (mid_lo != -kInf && mid_lo + mid_hi > 0.0)) {
        mirror = true;
        double t = mid_lo;
        mid_lo = -mid_hi;
        mid_hi = -t;
    }
    // interval now sits in the left half (or is left-unbounded)
    double pa = (mid_lo == -kInf) ? 0.0 : normal_cdf(mid_lo);
    double pb = normal_cdf(mid_hi);
    double mass = pb - pa;
    double x;
    if (mass >= 1e-10) {
        x = inv_normal_cdf(pa + rng.uniform01() * mass);
        if (x < mid_lo) x = mid_lo;
        if (x > mid_hi) x = mid_hi;
    } else if (mid_hi <= -1.0) {
        x = -normal_tail_reject(-mid_hi, (mid_lo == -kInf) ? kInf : -mid_lo, rng);
    } else {
        // vanishing sliver near the center: indistinguishable from uniform
        x = rng.uniform(mid_lo, mid_hi);
    }
    return mirror ? -x : x;
}

inline double gamma_sample(double shape, double rate, RngHandle& rng) {
    if (shape < 1.0) {
        double x = gamma_sample(shape + 1.0, rate, rng);
        return x * std::pow(rng.uniform01(), 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z = rng.normal01();
        double t = 1.0 + c * z;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = rng.uniform01();
        if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v / rate;
    }
}

}  // namespace detail

inline double log_pdf(const Distribution& d, double x) {
    struct V {
        double x;
        double operator()(const Normal& n) const {
            double s = std::sqrt(n.var);
            return normal_log_pdf_std((x - n.mean) / s) - std::log(s);
        }
        double operator()(const GammaDist& g) const {
            if (x <= 0.0) return -kInf;
            return g.shape * std::log(g.rate) - std::lgamma(g.shape) +
                   (g.shape - 1.0) * std::log(x) - g.rate * x;
        }
        double operator()(const TruncatedNormal& t) const {
            if (x < t.lower || x > t.upper) return -kInf;
            double s = std::sqrt(t.var);
            double a = (t.lower == -kInf) ? -kInf : (t.lower - t.mean) / s;
            double b = (t.upper == kInf) ? kInf : (t.upper - t.mean) / s;
            return normal_log_pdf_std((x - t.mean) / s) - std::log(s) - normal_log_cdf_diff(a, b);
        }
        double operator()(const LogNormal& l) const {
            if (x <= 0.0) return -kInf;
            double lx = std::log(x);
            return -lx - 0.5 * std::log(2.0 * kPi * l.sigma2) - sq(lx - l.mu) / (2.0 * l.sigma2);
        }
        double operator()(const UniformDist& u) const {
            if (x < u.lower || x > u.upper) return -kInf;
            return -std::log(u.upper - u.lower);
        }
    };
    return std::visit(V{x}, d);
}

inline double sample(const Distribution& d, RngHandle& rng) {
    struct V {
        RngHandle& rng;
        double operator()(const Normal& n) const { return n.mean + std::sqrt(n.var) * rng.normal01(); }
        double operator()(const GammaDist& g) const { return detail::gamma_sample(g.shape, g.rate, rng); }
        double operator()(const TruncatedNormal& t) const {
            double s = std::sqrt(t.var);
            double a = (t.lower == -kInf) ? -kInf : (t.lower - t.mean) / s;
            double b = (t.upper == kInf) ? kInf : (t.upper - t.mean) / s;
            double lm = normal_log_cdf_diff(a, b);
            if (lm < -690.7755278982137) throw std::domain_error("truncated normal: interval mass underflow");
            return t.mean + s * detail::tn_sample_std(a, b, rng);
        }
        double operator()(const LogNormal& l) const {
            return std::exp(l.mu + std::sqrt(l.sigma2) * rng.normal01());
        }
        double operator()(const UniformDist& u) const { return rng.uniform(u.lower, u.upper); }
    };
    return std::visit(V{rng}, d);
}

inline double mean(const Distribution& d) {
    struct V {
        double operator()(const Normal& n) const { return n.mean; }
        double operator()(const GammaDist& g) const { return g.shape / g.rate; }
        double operator()(const TruncatedNormal& t) const {
            return tn_moments(t.mean, t.var, t.lower, t.upper).mean;
        }
        double operator()(const LogNormal& l) const { return std::exp(l.mu + 0.5 * l.sigma2); }
        double operator()(const UniformDist& u) const { return 0.5 * (u.lower + u.upper); }
    };
    return std::visit(V{}, d);
}

inline double variance(const Distribution& d) {
    struct V {
        double operator()(const Normal& n) const { return n.var; }
        double operator()(const GammaDist& g) const { return g.shape / (g.rate * g.rate); }
        double operator()(const TruncatedNormal& t) const {
            return tn_moments(t.mean, t.var, t.lower, t.upper).var;
        }
        double operator()(const LogNormal& l) const {
            return (std::exp(l.sigma2) - 1.0) * std::exp(2.0 * l.mu + l.sigma2);
        }
        double operator()(const UniformDist& u) const { return sq(u.upper - u.lower) / 12.0; }
    };
    return std::visit(V{}, d);
}

inline std::pair<double, double> support(const Distribution& d) {
    struct V {
        std::pair<double, double> operator()(const Normal&) const { return {-kInf, kInf}; }
        std::pair<double, double> operator()(const GammaDist&) const { return {0.0, kInf}; }
        std::pair<double, double> operator()(const TruncatedNormal& t) const { return {t.lower, t.upper}; }
        std::pair<double, double> operator()(const LogNormal&) const { return {0.0, kInf}; }
        std::pair<double, double> operator()(const UniformDist& u) const { return {u.lower, u.upper}; }
    };
    return std::visit(V{}, d);
}

}  // namespace mcvi
