#pragma once

// Small numerical helpers shared by all modules: intervals, compensated
// summation, finite-difference derivatives, quadrature weights and
// grid-based extremum search.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace modesum {

using cplx = std::complex<double>;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double lo_, double hi_);

    double length() const noexcept { return hi - lo; }
    /// max |s| over the interval, written |R| for intervals containing 0.
    double max_abs() const noexcept;
    bool contains(double s, double slack = 0.0) const noexcept {
        return s >= lo - slack && s <= hi + slack;
    }
    bool contains(const Interval& other) const noexcept {
        return other.lo >= lo && other.hi <= hi;
    }
};

/// Neumaier-compensated accumulator for double or complex values.
class NeumaierSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        comp_ += (std::abs(sum_) >= std::abs(x)) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class ComplexNeumaierSum {
public:
    void add(cplx x) noexcept {
        re_.add(x.real());
        im_.add(x.imag());
    }
    cplx value() const noexcept { return {re_.value(), im_.value()}; }

private:
    NeumaierSum re_;
    NeumaierSum im_;
};

/// n points uniformly spaced over [lo, hi], endpoints included.
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Uniform sampling of an interval that contains 0 with 0 as a node.
/// Roughly n points in total, at least 2 per nonempty side.
std::vector<double> grid_through_zero(const Interval& R, std::size_t n);

/// Fourth-order finite-difference derivative of f at x with step h.
/// Central stencil when [x-2h, x+2h] lies in `domain`, one-sided
/// fourth-order stencils near the boundary otherwise.
double fd_derivative(const std::function<double(double)>& f, double x, double h,
                     const Interval& domain);

/// Composite Simpson weights for n uniformly spaced samples with spacing h.
/// Even n closes the last three panels with the 3/8 rule; n == 2 falls back
/// to the trapezoid rule.
std::vector<double> simpson_weights(std::size_t n, double h);

/// Simpson on one panel [a, b] using a midpoint evaluation.
double simpson_panel(const std::function<double(double)>& f, double a, double b);

/// Adaptive Gauss-Kronrod integral of f over [a, b] (a > b allowed).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-13);

struct Extremum {
    double value;
    double where;
};

/// sup of f over R: dense uniform sampling plus one local refinement
/// pass (Brent) in the bracket around the best sample.
Extremum grid_sup(const std::function<double(double)>& f, const Interval& R,
                  std::size_t samples = 2048, bool refine = true);
Extremum grid_inf(const std::function<double(double)>& f, const Interval& R,
                  std::size_t samples = 2048, bool refine = true);

}  // namespace modesum
