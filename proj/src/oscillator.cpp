#include "modesum/oscillator.hpp"

#include "modesum/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>

namespace modesum::osc {

// ---------------------------------------------------------------------------
// ComplexPotential

ComplexPotential::ComplexPotential(Fn eval, Interval interval, std::optional<RealFn> re_derivative)
    : eval_(std::move(eval)), interval_(interval), re_derivative_(std::move(re_derivative)) {
    if (!eval_) throw ArgumentError("ComplexPotential: empty evaluator");
}

double ComplexPotential::fd_step() const noexcept {
    const double len = interval_.length();
    double h = 1e-3 * std::max(1.0, interval_.max_abs());
    if (len > 0.0) h = std::min(h, len / 8.0);
    return h;
}

double ComplexPotential::re_derivative(double s) const {
    if (re_derivative_) return (*re_derivative_)(s);
    auto re = [this](double x) { return eval_(x).real(); };
    return fd_derivative(re, s, fd_step(), interval_);
}

std::vector<double> Trajectory::grid() const {
    std::vector<double> g;
    g.reserve(states.size());
    for (const auto& st : states) g.push_back(st.s);
    return g;
}

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4)

namespace {

struct Y {
    cplx T;
    cplx dT;
};

inline Y axpy(const Y& y, double h, std::initializer_list<std::pair<double, const Y*>> terms) {
    Y out = y;
    for (const auto& [c, k] : terms) {
        out.T += h * c * k->T;
        out.dT += h * c * k->dT;
    }
    return out;
}

class Dopri5 {
public:
    Dopri5(const ComplexPotential& pot, const IntegratorOptions& opt) : pot_(pot), opt_(opt) {}

    Y rhs(double s, const Y& y) const {
        const cplx lam = pot_(s);
        if (!std::isfinite(lam.real()) || !std::isfinite(lam.imag())) {
            throw IntegrationError("potential is not finite at s = " + std::to_string(s), s);
        }
        return {y.dT, -lam * y.T};
    }

    /// Attempts one step of size h from (s, y) with stage k1 = f(s, y).
    /// Returns normalized error; fills y_new and k7 = f(s + h, y_new).
    double attempt(double s, const Y& y, const Y& k1, double h, Y& y_new, Y& k7) const {
        static constexpr double a21 = 1.0 / 5.0;
        static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                                a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
        static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                                a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                                a65 = -5103.0 / 18656.0;
        static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                                b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
        static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                                e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        const Y k2 = rhs(s + h / 5.0, axpy(y, h, {{a21, &k1}}));
        const Y k3 = rhs(s + 3.0 * h / 10.0, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
        const Y k4 = rhs(s + 4.0 * h / 5.0, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const Y k5 = rhs(s + 8.0 * h / 9.0,
                         axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const Y k6 = rhs(s + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4},
                                            {a65, &k5}}));
        y_new = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        k7 = rhs(s + h, y_new);
        const Y err = axpy(Y{}, h, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6},
                                    {e7, &k7}});
        auto scaled = [&](cplx e, cplx a, cplx b) {
            return std::abs(e) / (opt_.atol + opt_.rtol * std::max(std::abs(a), std::abs(b)));
        };
        const double n = std::max(scaled(err.T, y.T, y_new.T), scaled(err.dT, y.dT, y_new.dT));
        return std::isfinite(n) ? n : std::numeric_limits<double>::infinity();
    }

    /// Integrates from `s0` in the direction of the sign of targets (all
    /// targets on one side of s0, ordered away from it). Calls `emit` at
    /// every accepted step when `every_step` is set, else only at targets.
    template <typename Emit>
    void run(double s0, Y y, std::span<const double> targets, bool every_step, Emit&& emit) const {
        if (targets.empty()) return;
        const double dir = (targets.back() >= s0) ? 1.0 : -1.0;
        double s = s0;
        Y k1 = rhs(s, y);
        double h = initial_step(s, y, k1, std::abs(targets.back() - s0));
        std::size_t steps = 0;
        std::size_t next = 0;
        while (next < targets.size()) {
            const double target = targets[next];
            if (dir * (target - s) <= 0.0) {  // target coincides with current point
                emit(OscState{target, y.T, y.dT});
                ++next;
                continue;
            }
            const double remaining = std::abs(target - s);
            const bool clip = h >= remaining;
            const double step = clip ? remaining : h;
            const double min_step = 16.0 * std::numeric_limits<double>::epsilon() *
                                    std::max(1.0, std::abs(s));
            if (step < min_step && !clip) {
                throw IntegrationError("step size underflow at s = " + std::to_string(s), s);
            }
            if (++steps > opt_.max_steps) {
                throw IntegrationError("step budget exhausted at s = " + std::to_string(s), s);
            }
            Y y_new, k7;
            const double err = attempt(s, y, k1, dir * step, y_new, k7);
            const double factor =
                (err == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err <= 1.0) {
                s = clip ? target : s + dir * step;
                y = y_new;
                k1 = k7;
                if (clip) {
                    emit(OscState{s, y.T, y.dT});
                    ++next;
                    // keep the unclipped proposal unless this step was larger
                    h = std::max(h, step * factor);
                } else {
                    if (every_step) emit(OscState{s, y.T, y.dT});
                    h = step * factor;
                }
            } else {
                h = step * std::max(factor, 0.1);
                if (h < min_step) {
                    throw IntegrationError("step size underflow at s = " + std::to_string(s), s);
                }
            }
        }
    }

private:
    double initial_step(double s, const Y& y, const Y& k1, double span) const {
        // Hairer–Nørsett–Wanner starting step heuristic.
        auto sc = [&](cplx v) { return opt_.atol + opt_.rtol * std::abs(v); };
        const double d0 = std::max(std::abs(y.T) / sc(y.T), std::abs(y.dT) / sc(y.dT));
        const double d1 = std::max(std::abs(k1.T) / sc(y.T), std::abs(k1.dT) / sc(y.dT));
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        return std::max(h0, 1e-12 * std::max(1.0, std::abs(s)));
    }

    const ComplexPotential& pot_;
    IntegratorOptions opt_;
};

void check_initial(const ComplexPotential& pot, cplx T0, cplx dT0) {
    if (!pot.interval().contains(0.0)) {
        throw ArgumentError("integrate: interval must contain s = 0");
    }
    if (!std::isfinite(std::abs(T0)) || !std::isfinite(std::abs(dT0))) {
        throw ArgumentError("integrate: initial data must be finite");
    }
}

}  // namespace

Trajectory integrate(const ComplexPotential& potential, cplx T0, cplx dT0, double tol) {
    if (!(tol > 0.0)) throw ArgumentError("integrate: tol must be positive");
    check_initial(potential, T0, dT0);
    IntegratorOptions opt;
    opt.rtol = opt.atol = tol;
    Dopri5 stepper(potential, opt);
    const Interval& R = potential.interval();

    std::vector<OscState> backward;
    std::vector<OscState> forward;
    if (R.lo < 0.0) {
        const double tgt[] = {R.lo};
        stepper.run(0.0, Y{T0, dT0}, tgt, true,
                    [&](const OscState& st) { backward.push_back(st); });
    }
    if (R.hi > 0.0) {
        const double tgt[] = {R.hi};
        stepper.run(0.0, Y{T0, dT0}, tgt, true,
                    [&](const OscState& st) { forward.push_back(st); });
    }
    Trajectory out;
    out.tol = tol;
    out.states.reserve(backward.size() + forward.size() + 1);
    for (auto it = backward.rbegin(); it != backward.rend(); ++it) out.states.push_back(*it);
    out.states.push_back(OscState{0.0, T0, dT0});
    out.states.insert(out.states.end(), forward.begin(), forward.end());
    return out;
}

Trajectory integrate(const ComplexPotential& potential, cplx T0, cplx dT0,
                     const IntegratorOptions& options, std::span<const double> output_points) {
    if (!(options.rtol > 0.0) || !(options.atol > 0.0)) {
        throw ArgumentError("integrate: tolerances must be positive");
    }
    check_initial(potential, T0, dT0);
    for (std::size_t i = 0; i < output_points.size(); ++i) {
        if (!potential.interval().contains(output_points[i], 1e-12 * (1.0 + potential.interval().max_abs()))) {
            throw ArgumentError("integrate: output point outside the interval");
        }
        if (i > 0 && !(output_points[i] > output_points[i - 1])) {
            throw ArgumentError("integrate: output points must be strictly increasing");
        }
    }
    Dopri5 stepper(potential, options);
    const auto split = std::lower_bound(output_points.begin(), output_points.end(), 0.0);
    std::vector<double> back(output_points.begin(), split);
    std::reverse(back.begin(), back.end());
    const std::vector<double> fwd(split, output_points.end());

    Trajectory out;
    out.tol = std::max(options.rtol, options.atol);
    std::vector<OscState> bstates;
    stepper.run(0.0, Y{T0, dT0}, back, false, [&](const OscState& st) { bstates.push_back(st); });
    out.states.assign(bstates.rbegin(), bstates.rend());
    stepper.run(0.0, Y{T0, dT0}, fwd, false, [&](const OscState& st) { out.states.push_back(st); });
    return out;
}

// ---------------------------------------------------------------------------
// Energy

double energy(const OscState& state, const ComplexPotential& potential) {
    return 0.5 * std::norm(state.dT) + 0.5 * potential(state.s).real() * std::norm(state.T);
}

EnergyEnvelope::EnergyEnvelope(ComplexPotential potential, double W0, std::size_t samples)
    : potential_(std::move(potential)), W0_(W0) {
    const Interval& R = potential_.interval();
    if (!R.contains(0.0)) throw ArgumentError("energy_envelope: interval must contain 0");
    grid_ = grid_through_zero(R, samples);
    zero_index_ = static_cast<std::size_t>(
        std::find(grid_.begin(), grid_.end(), 0.0) - grid_.begin());

    auto check = [&](double s) {
        const double re = potential_(s).real();
        if (!(re > 0.0)) {
            throw PreconditionError("energy_envelope: Re Lambda <= 0 at s = " + std::to_string(s), s);
        }
    };
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        check(grid_[i]);
        if (i + 1 < grid_.size()) check(0.5 * (grid_[i] + grid_[i + 1]));
    }

    auto g = [this](double s) { return integrand(s); };
    cumulative_.assign(grid_.size(), 0.0);
    for (std::size_t i = zero_index_ + 1; i < grid_.size(); ++i) {
        cumulative_[i] = cumulative_[i - 1] + simpson_panel(g, grid_[i - 1], grid_[i]);
    }
    for (std::size_t i = zero_index_; i-- > 0;) {
        cumulative_[i] = cumulative_[i + 1] + simpson_panel(g, grid_[i], grid_[i + 1]);
    }
}

double EnergyEnvelope::integrand(double s) const {
    const cplx lam = potential_(s);
    return 2.0 * std::abs(lam.imag()) / std::sqrt(lam.real()) +
           std::abs(potential_.re_derivative(s) / lam.real());
}

double EnergyEnvelope::exponent(double s) const {
    if (!potential_.interval().contains(s, 1e-12 * (1.0 + potential_.interval().max_abs()))) {
        throw ArgumentError("energy envelope evaluated outside its interval");
    }
    auto g = [this](double x) { return integrand(x); };
    if (s >= 0.0) {
        auto it = std::upper_bound(grid_.begin() + static_cast<std::ptrdiff_t>(zero_index_),
                                   grid_.end(), s);
        const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
        if (grid_[i] == s) return cumulative_[i];
        return cumulative_[i] + simpson_panel(g, grid_[i], s);
    }
    auto it = std::lower_bound(grid_.begin(), grid_.begin() + static_cast<std::ptrdiff_t>(zero_index_), s);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin());
    if (grid_[i] == s) return cumulative_[i];
    return cumulative_[i] + simpson_panel(g, s, grid_[i]);
}

double EnergyEnvelope::lower(double s) const { return W0_ * std::exp(-exponent(s)); }
double EnergyEnvelope::upper(double s) const { return W0_ * std::exp(exponent(s)); }

EnergyEnvelope energy_envelope(const ComplexPotential& potential, double W0, std::size_t samples) {
    return EnergyEnvelope(potential, W0, samples);
}

// ---------------------------------------------------------------------------
// κ-substitution

namespace {

ComplexPotential make_omega(const ComplexPotential& src, double kappa) {
    const double k2 = kappa * kappa;
    auto s_of_z = [kappa](double z) { return std::atanh(kappa * z) / kappa; };
    auto eval = [src, kappa, k2, s_of_z](double z) -> cplx {
        const double q = 1.0 - k2 * z * z;
        if (!(q > 0.0)) throw ArgumentError("kappa transform: |kappa z| >= 1");
        return (k2 + src(s_of_z(z))) / (q * q);
    };
    const Interval& R = src.interval();
    const Interval Z(std::tanh(kappa * R.lo) / kappa, std::tanh(kappa * R.hi) / kappa);
    std::optional<ComplexPotential::RealFn> deriv;
    if (src.has_analytic_derivative()) {
        deriv = [src, kappa, k2, s_of_z](double z) {
            const double q = 1.0 - k2 * z * z;
            const double s = s_of_z(z);
            return src.re_derivative(s) / (q * q * q) +
                   (k2 + src(s).real()) * 4.0 * k2 * z / (q * q * q);
        };
    }
    return ComplexPotential(eval, Z, deriv);
}

}  // namespace

KappaTransform::KappaTransform(ComplexPotential potential, double kappa)
    : source_(std::move(potential)), kappa_(kappa), omega_(make_omega(source_, kappa)) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw ArgumentError("kappa_transform: kappa must be positive");
    }
}

double KappaTransform::z_of_s(double s) const { return std::tanh(kappa_ * s) / kappa_; }

double KappaTransform::s_of_z(double z) const {
    if (!(std::abs(kappa_ * z) < 1.0)) throw ArgumentError("kappa transform: |kappa z| >= 1");
    return std::atanh(kappa_ * z) / kappa_;
}

OscState KappaTransform::solution_to_T(const OscState& tau_state) const {
    const double s = s_of_z(tau_state.s);
    const double ch = std::cosh(kappa_ * s);
    const double sh = std::sinh(kappa_ * s);
    return OscState{s, tau_state.T * ch, tau_state.dT / ch + tau_state.T * kappa_ * sh};
}

OscState KappaTransform::solution_from_T(const OscState& T_state) const {
    const double s = T_state.s;
    const double ch = std::cosh(kappa_ * s);
    const double sh = std::sinh(kappa_ * s);
    const cplx tau = T_state.T / ch;
    return OscState{z_of_s(s), tau, ch * (T_state.dT - tau * kappa_ * sh)};
}

KappaTransform kappa_transform(const ComplexPotential& potential, double kappa) {
    return KappaTransform(potential, kappa);
}

// ---------------------------------------------------------------------------
// Uniform bound

BoundConstants bound_constants(const ComplexPotential& potential, const BoundOptions& options) {
    const Interval& R = potential.interval();
    if (!R.contains(0.0)) throw ArgumentError("bound_constants: interval must contain 0");
    const std::size_t n = options.samples;
    const bool refine = options.refine;

    BoundConstants k;
    k.samples = n;
    k.R_abs = R.max_abs();
    k.A = grid_sup([&](double s) { return std::abs(potential(s).imag()); }, R, n, refine).value;
    k.c = grid_inf([&](double s) { return potential(s).real(); }, R, n, refine).value;
    k.kappa = std::sqrt(1.0 + std::abs(std::min(0.0, k.c)));
    const double k2 = k.kappa * k.kappa;
    k.B = grid_sup(
              [&](double s) {
                  return std::abs(potential.re_derivative(s) / (k2 + potential(s).real()));
              },
              R, n, refine)
              .value;
    k.D = grid_sup([&](double s) { return k2 + potential(s).real(); }, R, n, refine).value;
    k.e = 1.0 + std::max(0.0, k.c);
    const double kr = k.kappa * k.R_abs;
    k.L = 2.0 * k.A + std::cosh(kr) * std::cosh(kr) * k.B + 2.0 * k.kappa * std::sinh(2.0 * kr);
    return k;
}

double uniform_bound(const BoundConstants& k, double absT0, double absdT0) {
    if (absT0 == 0.0 && absdT0 == 0.0) return 0.0;
    const double growth = std::exp(k.L) * std::cosh(k.kappa * k.R_abs);
    return absT0 * std::sqrt(k.D / k.e) * growth + absdT0 * growth / std::sqrt(k.e);
}

double sup_abs(const Trajectory& traj) {
    double m = 0.0;
    for (const auto& st : traj.states) m = std::max(m, std::abs(st.T));
    return m;
}

cplx wronskian(const OscState& a, const OscState& b) {
    if (a.s != b.s) throw ArgumentError("wronskian: states at different s");
    return a.T * b.dT - a.dT * b.T;
}

Trajectory propagate_via_basis(const Trajectory& Q, const Trajectory& R, cplx T0, cplx dT0) {
    if (Q.size() != R.size()) throw ArgumentError("propagate_via_basis: grids differ");
    std::size_t zero = Q.size();
    for (std::size_t i = 0; i < Q.size(); ++i) {
        if (Q[i].s != R[i].s) throw ArgumentError("propagate_via_basis: grids differ");
        if (Q[i].s == 0.0) zero = i;
    }
    if (zero == Q.size()) throw ArgumentError("propagate_via_basis: grid must contain s = 0");

    const OscState& q0 = Q[zero];
    const OscState& r0 = R[zero];
    const cplx w0 = wronskian(q0, r0);
    const double scale = std::abs(q0.T) * std::abs(r0.dT) + std::abs(q0.dT) * std::abs(r0.T);
    if (!(std::abs(w0) > 1e-12 * scale) || scale == 0.0) {
        throw NumericError("propagate_via_basis: degenerate basis (Wronskian ~ 0)");
    }
    // W[Q,R](0) · (T'(0), −T(0))
    const cplx v1 = q0.T * dT0 - q0.dT * T0;
    const cplx v2 = r0.T * dT0 - r0.dT * T0;

    Trajectory out;
    out.tol = std::max(Q.tol, R.tol);
    out.states.reserve(Q.size());
    for (std::size_t i = 0; i < Q.size(); ++i) {
        const OscState& q = Q[i];
        const OscState& r = R[i];
        out.states.push_back(OscState{q.s, (r.T * v1 - q.T * v2) / w0, (r.dT * v1 - q.dT * v2) / w0});
    }
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const ComplexPotential& potential) {
    os << "s,re_T,im_T,re_dT,im_dT,energy\n";
    os << std::setprecision(17);
    for (const auto& st : traj.states) {
        os << st.s << ',' << st.T.real() << ',' << st.T.imag() << ',' << st.dT.real() << ','
           << st.dT.imag() << ',' << energy(st, potential) << '\n';
    }
}

}  // namespace modesum::osc
