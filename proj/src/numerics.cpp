#include "modesum/numerics.hpp"

#include "modesum/errors.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

namespace modesum {

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo_ <= hi_) || !std::isfinite(lo_) || !std::isfinite(hi_)) {
        throw ArgumentError("interval: need finite lo <= hi");
    }
}

double Interval::max_abs() const noexcept { return std::max(std::abs(lo), std::abs(hi)); }

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw ArgumentError("linspace: need at least two points");
    std::vector<double> out(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + h * static_cast<double>(i);
    out.back() = hi;
    return out;
}

std::vector<double> grid_through_zero(const Interval& R, std::size_t n) {
    if (!R.contains(0.0)) throw ArgumentError("grid_through_zero: interval must contain 0");
    if (R.length() <= 0.0) return {0.0};
    n = std::max<std::size_t>(n, 4);
    const double len = R.length();
    std::vector<double> out;
    if (R.lo < 0.0) {
        auto nl = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(n * (-R.lo) / len)));
        auto left = linspace(R.lo, 0.0, nl);
        out.insert(out.end(), left.begin(), left.end());
    } else {
        out.push_back(0.0);
    }
    if (R.hi > 0.0) {
        auto nr = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(n * R.hi / len)));
        auto right = linspace(0.0, R.hi, nr);
        out.insert(out.end(), right.begin() + 1, right.end());
    }
    return out;
}

double fd_derivative(const std::function<double(double)>& f, double x, double h,
                     const Interval& domain) {
    if (h <= 0.0) throw ArgumentError("fd_derivative: step must be positive");
    if (domain.length() < 4.0 * h) h = domain.length() / 4.0;
    if (h <= 0.0) return 0.0;
    if (x - 2.0 * h >= domain.lo && x + 2.0 * h <= domain.hi) {
        return (-f(x + 2 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
    }
    // one-sided, pointing into the domain
    const double dir = (x - 2.0 * h < domain.lo) ? 1.0 : -1.0;
    const double g = dir * h;
    return dir *
           (-25.0 * f(x) + 48.0 * f(x + g) - 36.0 * f(x + 2 * g) + 16.0 * f(x + 3 * g) -
            3.0 * f(x + 4 * g)) /
           (12.0 * h);
}

std::vector<double> simpson_weights(std::size_t n, double h) {
    if (n < 2) throw ArgumentError("simpson_weights: need at least two samples");
    std::vector<double> w(n, 0.0);
    if (n == 2) {
        w[0] = w[1] = 0.5 * h;
        return w;
    }
    if (n == 4) {  // pure 3/8
        w[0] = w[3] = 3.0 * h / 8.0;
        w[1] = w[2] = 9.0 * h / 8.0;
        return w;
    }
    std::size_t simpson_end = n - 1;  // last index covered by 1/3 rule
    if ((n - 1) % 2 == 1) simpson_end = n - 4;
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if (simpson_end != n - 1) {
        const std::size_t j = simpson_end;
        w[j] += 3.0 * h / 8.0;
        w[j + 1] += 9.0 * h / 8.0;
        w[j + 2] += 9.0 * h / 8.0;
        w[j + 3] += 3.0 * h / 8.0;
    }
    return w;
}

double simpson_panel(const std::function<double(double)>& f, double a, double b) {
    return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol) {
    if (a == b) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    return gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &err);
}

namespace {

Extremum grid_extremum(const std::function<double(double)>& f, const Interval& R,
                       std::size_t samples, bool refine, double sign) {
    samples = std::max<std::size_t>(samples, 2);
    if (R.length() == 0.0) return {f(R.lo), R.lo};
    const auto xs = linspace(R.lo, R.hi, samples);
    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double v = sign * f(xs[i]);
        if (!std::isfinite(v)) throw NumericError("grid extremum: non-finite sample");
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    Extremum out{sign * best_val, xs[best]};
    if (!refine) return out;
    const double a = xs[best == 0 ? 0 : best - 1];
    const double b = xs[std::min(best + 1, xs.size() - 1)];
    auto neg = [&](double x) { return -sign * f(x); };
    auto [x, fx] = boost::math::tools::brent_find_minima(neg, a, b, 50);
    if (-fx > best_val) out = {sign * (-fx), x};
    return out;
}

}  // namespace

Extremum grid_sup(const std::function<double(double)>& f, const Interval& R,
                  std::size_t samples, bool refine) {
    return grid_extremum(f, R, samples, refine, 1.0);
}

Extremum grid_inf(const std::function<double(double)>& f, const Interval& R,
                  std::size_t samples, bool refine) {
    return grid_extremum(f, R, samples, refine, -1.0);
}

}  // namespace modesum
