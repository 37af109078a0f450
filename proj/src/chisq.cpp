#include <cmath>
#include <limits>

#include "fungible/discrepancy.hpp"
#include "fungible/errors.hpp"

namespace fungible {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

double gamma_p_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < 10000; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper tail Q(a, x) by modified Lentz.
double gamma_q_continued_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Acklam's rational approximation; only used for the starting point.
double normal_quantile_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) return -normal_quantile_approx(1.0 - p);
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw InvalidInput("regularized_gamma_p needs a > 0");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_continued_fraction(a, x);
}

double chisq_quantile(int df, double prob) {
    if (df < 1) throw InvalidInput("chisq_quantile needs df >= 1");
    if (!(prob > 0.0 && prob < 1.0)) throw InvalidInput("chisq_quantile needs prob in (0, 1)");

    const double k = df;
    const double a = 0.5 * k;
    const double z = normal_quantile_approx(prob);
    const double v = 2.0 / (9.0 * k);
    double x = k * std::pow(std::max(1.0 - v + z * std::sqrt(v), 0.01), 3);

    auto residual = [&](double t) { return regularized_gamma_p(a, 0.5 * t) - prob; };
    auto density = [&](double t) {
        return std::exp((a - 1.0) * std::log(t) - 0.5 * t - a * std::log(2.0) - std::lgamma(a));
    };

    // Bracket [lo, hi] with residual(lo) < 0 < residual(hi).
    double lo = 0.0;
    double hi = x;
    while (residual(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
    }
    if (x <= lo || x >= hi) x = 0.5 * (lo + hi);

    for (int it = 0; it < 200; ++it) {
        const double r = residual(x);
        if (r == 0.0) return x;
        (r < 0.0 ? lo : hi) = x;
        const double pdf = density(x);
        double next = pdf > 0.0 && std::isfinite(pdf) ? x - r / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 4.0 * kEps * std::max(x, kTiny)) return next;
        x = next;
    }
    return x;
}

}  // namespace fungible
