#include "modesum/cosmology.hpp"

#include "modesum/errors.hpp"

#include <algorithm>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace modesum::cosmo {

namespace {

constexpr double kHuge = 1e300;

class Minkowski final : public ScaleFactor {
public:
    double a(double) const override { return 1.0; }
    double hubble(double) const override { return 0.0; }
    double hubble_dot(double) const override { return 0.0; }
    std::string name() const override { return "minkowski"; }
    Interval domain() const override { return {-kHuge, kHuge}; }
};

class DeSitter final : public ScaleFactor {
public:
    explicit DeSitter(double H0) : H0_(H0) {
        if (!std::isfinite(H0)) throw ArgumentError("de_sitter: H0 must be finite");
    }
    double a(double t) const override { return std::exp(H0_ * t); }
    double hubble(double) const override { return H0_; }
    double hubble_dot(double) const override { return 0.0; }
    std::string name() const override { return "de_sitter"; }
    Interval domain() const override { return {-kHuge, kHuge}; }

private:
    double H0_;
};

class PowerLaw final : public ScaleFactor {
public:
    PowerLaw(double p, double t0) : p_(p), t0_(t0) {
        if (!(t0 > 0.0)) throw ArgumentError("power_law: t0 must be positive");
        if (!std::isfinite(p)) throw ArgumentError("power_law: exponent must be finite");
    }
    double a(double t) const override { return std::pow((t + t0_) / t0_, p_); }
    double hubble(double t) const override { return p_ / (t + t0_); }
    double hubble_dot(double t) const override { return -p_ / ((t + t0_) * (t + t0_)); }
    std::string name() const override { return "power_law"; }
    Interval domain() const override { return {-t0_ * (1.0 - 1e-12), kHuge}; }

private:
    double p_;
    double t0_;
};

class Tabulated final : public ScaleFactor {
public:
    Tabulated(std::vector<double> t, std::vector<double> a) {
        if (t.size() != a.size() || t.size() < 5) {
            throw ArgumentError("tabulated: need at least 5 (t, a) pairs of equal length");
        }
        const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
        if (!(h > 0.0)) throw ArgumentError("tabulated: t must be increasing");
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (std::abs(t[i] - (t.front() + h * static_cast<double>(i))) > 1e-9 * (1.0 + std::abs(t[i]))) {
                throw ArgumentError("tabulated: t must be uniformly spaced");
            }
            if (!(a[i] > 0.0)) throw ArgumentError("tabulated: a must be positive");
        }
        if (!(t.front() <= 0.0 && t.back() >= 0.0)) {
            throw ArgumentError("tabulated: table must cover t = 0");
        }
        spline_ = boost::math::interpolators::cardinal_cubic_b_spline<double>(
            a.begin(), a.end(), t.front(), h);
        domain_ = Interval(t.front(), t.back());
        norm_ = spline_(0.0);
    }
    double a(double t) const override { return spline_(t) / norm_; }
    double hubble(double t) const override { return spline_.prime(t) / spline_(t); }
    double hubble_dot(double t) const override {
        const double h = 1e-3 * std::max(1.0, domain_.max_abs());
        return fd_derivative([this](double x) { return hubble(x); }, t, std::min(h, domain_.length() / 8),
                             domain_);
    }
    std::string name() const override { return "tabulated"; }
    Interval domain() const override { return domain_; }

private:
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
    Interval domain_;
    double norm_ = 1.0;
};

}  // namespace

std::shared_ptr<const ScaleFactor> minkowski() { return std::make_shared<Minkowski>(); }
std::shared_ptr<const ScaleFactor> de_sitter(double H0) { return std::make_shared<DeSitter>(H0); }
std::shared_ptr<const ScaleFactor> power_law(double p, double t0) {
    return std::make_shared<PowerLaw>(p, t0);
}
std::shared_ptr<const ScaleFactor> tabulated(std::vector<double> t, std::vector<double> a) {
    return std::make_shared<Tabulated>(std::move(t), std::move(a));
}

CosmologicalModel::CosmologicalModel(std::shared_ptr<const ScaleFactor> law_, double m0sq_,
                                     double xi_, int d_, double L_, Interval interval_)
    : law(std::move(law_)), m0sq(m0sq_), xi(xi_), d(d_), L(L_), interval(interval_) {
    if (!law) throw ArgumentError("model: missing scale factor");
    if (d < 1 || d > 3) throw ArgumentError("model: spatial dimension must be 1, 2 or 3");
    if (!(L > 0.0)) throw ArgumentError("model: torus side L must be positive");
    if (!interval.contains(0.0)) throw ArgumentError("model: time interval must contain 0");
    if (!law->domain().contains(interval)) {
        throw ArgumentError("model: time interval exceeds the domain of " + law->name());
    }
    if (std::abs(law->a(0.0) - 1.0) > 1e-12) throw ArgumentError("model: need a(0) = 1");
    for (double t : linspace(interval.lo, interval.hi, 257)) {
        if (!(law->a(t) > 0.0)) throw ArgumentError("model: a(t) must be positive on the interval");
    }
}

std::string to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::Scalar: return "scalar";
        case FieldKind::OneFormScalarSector: return "oneform_scalar";
        case FieldKind::OneFormTransversal: return "oneform_transversal";
    }
    return "unknown";
}

FieldKind field_kind_from_string(const std::string& name) {
    if (name == "scalar") return FieldKind::Scalar;
    if (name == "oneform_scalar") return FieldKind::OneFormScalarSector;
    if (name == "oneform_transversal") return FieldKind::OneFormTransversal;
    throw ArgumentError("unknown field kind '" + name + "'");
}

Field::Field(FieldKind kind_, int krein_sign_) : kind(kind_), krein_sign(krein_sign_) {
    if (krein_sign != 1 && krein_sign != -1) throw ArgumentError("field: Krein sign must be +1 or -1");
    if (kind == FieldKind::Scalar && krein_sign != 1) {
        throw ArgumentError("field: scalar fields have Krein sign +1");
    }
}

double wave_number_sq(const CosmologicalModel& model, const std::vector<int>& k) {
    if (static_cast<int>(k.size()) != model.d) {
        throw ArgumentError("wave vector length does not match the spatial dimension");
    }
    double n2 = 0.0;
    for (int ki : k) n2 += static_cast<double>(ki) * ki;
    const double q = 2.0 * M_PI / model.L;
    return q * q * n2;
}

double ricci_scalar(const CosmologicalModel& model, double t) {
    const double H = model.hubble(t);
    const double addot_over_a = model.hubble_dot(t) + H * H;
    const double d = model.d;
    return 2.0 * d * addot_over_a + d * (d - 1.0) * H * H;
}

double mass_term(const CosmologicalModel& model, double t) {
    if (model.xi == 0.0) return model.m0sq;
    return model.m0sq + model.xi * ricci_scalar(model, t);
}

namespace {

void require_oneform_dim(const CosmologicalModel& model, FieldKind kind) {
    if (kind != FieldKind::Scalar && model.d != 3) {
        throw ArgumentError("1-form sectors are defined for d = 3 only");
    }
}

/// F = n·H for every supported kind; returns n.
double friction_multiple(const CosmologicalModel& model, FieldKind kind) {
    switch (kind) {
        case FieldKind::Scalar: return model.d;
        case FieldKind::OneFormScalarSector: return 3.0;
        case FieldKind::OneFormTransversal: return 1.0;
    }
    return 0.0;
}

}  // namespace

SpectralPair spectra(const CosmologicalModel& model, FieldKind kind, double t) {
    require_oneform_dim(model, kind);
    const double H = model.hubble(t);
    switch (kind) {
        case FieldKind::Scalar: return {model.d * H, 0.0};
        case FieldKind::OneFormScalarSector: return {3.0 * H, 0.0};
        case FieldKind::OneFormTransversal: return {H, -model.hubble_dot(t) - 2.0 * H * H};
    }
    return {0.0, 0.0};
}

ModeCoefficients mode_coefficients(const CosmologicalModel& model, FieldKind kind,
                                   const ModeIndex& idx, bool closed_form_I) {
    if (idx.component != kind) throw ArgumentError("mode index component does not match field kind");
    require_oneform_dim(model, kind);
    const double k2 = wave_number_sq(model, idx.k);
    ModeCoefficients c;
    c.interval = model.interval;
    c.wave_number_sq = k2;
    c.F = [model, kind](double t) { return spectra(model, kind, t).a0; };
    c.Hb = [model, kind](double t) { return spectra(model, kind, t).b0; };
    c.lambda = [model, k2](double t) {
        const double a = model.a(t);
        return k2 / (a * a) + mass_term(model, t);
    };
    if (closed_form_I) {
        const double n = friction_multiple(model, kind);
        c.I = [model, n](double t) { return std::pow(model.a(t), n); };
    } else {
        auto F = c.F;
        c.I = [F](double t) { return std::exp(integrate_adaptive(F, 0.0, t, 1e-14)); };
    }
    return c;
}

double integrating_factor_quadrature(const ModeCoefficients& coeffs, double t) {
    return std::exp(integrate_adaptive(coeffs.F, 0.0, t, 1e-14));
}

// ---------------------------------------------------------------------------
// s(t) = ∫₀ᵗ I⁻¹

TimeReparam::TimeReparam(std::function<double(double)> I, Interval interval, std::size_t panels)
    : I_(std::move(I)), interval_(interval) {
    if (!interval_.contains(0.0)) throw ArgumentError("reparam: interval must contain 0");
    if (interval_.length() == 0.0) {
        t_nodes_ = {0.0, 0.0};
        s_nodes_ = {0.0, 0.0};
        return;
    }
    t_nodes_ = grid_through_zero(interval_, panels + 1);
    for (double t : t_nodes_) {
        const double v = I_(t);
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw NumericError("reparam: I(t) must be positive and finite (t = " + std::to_string(t) + ")");
        }
    }
    const auto zero = static_cast<std::size_t>(
        std::find(t_nodes_.begin(), t_nodes_.end(), 0.0) - t_nodes_.begin());
    s_nodes_.assign(t_nodes_.size(), 0.0);
    for (std::size_t i = zero + 1; i < t_nodes_.size(); ++i)
        s_nodes_[i] = s_nodes_[i - 1] + panel_integral(t_nodes_[i - 1], t_nodes_[i]);
    for (std::size_t i = zero; i-- > 0;)
        s_nodes_[i] = s_nodes_[i + 1] - panel_integral(t_nodes_[i], t_nodes_[i + 1]);
    for (std::size_t i = 1; i < s_nodes_.size(); ++i) {
        if (!(s_nodes_[i] > s_nodes_[i - 1])) {
            throw NumericError("reparam: s(t) is not strictly increasing");
        }
    }
}

double TimeReparam::panel_integral(double a, double b) const {
    using boost::math::quadrature::gauss;
    return gauss<double, 15>::integrate([this](double t) { return 1.0 / I_(t); }, a, b);
}

double TimeReparam::s_of_t(double t) const {
    const double slack = 1e-12 * (1.0 + interval_.max_abs());
    if (!interval_.contains(t, slack)) throw ArgumentError("reparam: t outside the interval");
    t = std::clamp(t, interval_.lo, interval_.hi);
    auto it = std::upper_bound(t_nodes_.begin(), t_nodes_.end(), t);
    std::size_t i = (it == t_nodes_.begin()) ? 0 : static_cast<std::size_t>(it - t_nodes_.begin()) - 1;
    if (i + 1 >= t_nodes_.size()) i = t_nodes_.size() - 2;
    if (t == t_nodes_[i]) return s_nodes_[i];
    return s_nodes_[i] + panel_integral(t_nodes_[i], t);
}

double TimeReparam::t_of_s(double s) const {
    const double slack = 1e-12 * (1.0 + std::max(std::abs(s_nodes_.front()), std::abs(s_nodes_.back())));
    if (s < s_nodes_.front() - slack || s > s_nodes_.back() + slack) {
        throw ArgumentError("reparam: s outside the image of the interval");
    }
    s = std::clamp(s, s_nodes_.front(), s_nodes_.back());
    auto it = std::upper_bound(s_nodes_.begin(), s_nodes_.end(), s);
    std::size_t i = (it == s_nodes_.begin()) ? 0 : static_cast<std::size_t>(it - s_nodes_.begin()) - 1;
    if (i + 1 >= s_nodes_.size()) i = s_nodes_.size() - 2;
    if (s == s_nodes_[i]) return t_nodes_[i];
    double lo = t_nodes_[i], hi = t_nodes_[i + 1];
    const double frac = (s - s_nodes_[i]) / (s_nodes_[i + 1] - s_nodes_[i]);
    double t = lo + frac * (hi - lo);
    for (int iter = 0; iter < 60; ++iter) {
        const double r = s_of_t(t) - s;
        if (r > 0.0) hi = t; else lo = t;
        double next = t - r * I_(t);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - t);
        t = next;
        if (step <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(t))) break;
    }
    return t;
}

TimeReparam reparam(const ModeCoefficients& coeffs, const Interval& interval) {
    if (!coeffs.interval.contains(interval)) throw ArgumentError("reparam: interval outside coefficient domain");
    return TimeReparam(coeffs.I, interval);
}

osc::ComplexPotential lambda_of_s(const ModeCoefficients& coeffs, const TimeReparam& rp) {
    auto shared = std::make_shared<const TimeReparam>(rp);
    auto eval = [coeffs, shared](double s) -> cplx {
        const double t = shared->t_of_s(s);
        const double I = coeffs.I(t);
        return cplx(coeffs.G(t) * I * I, 0.0);
    };
    return osc::ComplexPotential(eval, rp.s_interval());
}

// ---------------------------------------------------------------------------
// Mode solutions

namespace {

std::size_t locate(const std::vector<double>& t, double x) {
    if (t.size() < 2) throw ArgumentError("mode solution: need at least two grid points");
    const double slack = 1e-12 * (1.0 + std::max(std::abs(t.front()), std::abs(t.back())));
    if (x < t.front() - slack || x > t.back() + slack) {
        throw ArgumentError("mode solution evaluated outside its grid");
    }
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = (it == t.begin()) ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    return std::min(i, t.size() - 2);
}

}  // namespace

cplx ModeSolution::value(double time) const {
    const std::size_t j = locate(t, time);
    if (time == t[j]) return T[j];
    if (time == t[j + 1]) return T[j + 1];
    const double h = t[j + 1] - t[j];
    const double u = (time - t[j]) / h, u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    const double h0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
    const double h1 = u - 6 * u3 + 8 * u4 - 3 * u5;
    const double h2 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
    const double h3 = 0.5 * u3 - u4 + 0.5 * u5;
    const double h4 = -4 * u3 + 7 * u4 - 3 * u5;
    const double h5 = 10 * u3 - 15 * u4 + 6 * u5;
    return h0 * T[j] + h1 * h * dT[j] + h2 * h * h * ddT[j] + h3 * h * h * ddT[j + 1] +
           h4 * h * dT[j + 1] + h5 * T[j + 1];
}

cplx ModeSolution::derivative(double time) const {
    const std::size_t j = locate(t, time);
    if (time == t[j]) return dT[j];
    if (time == t[j + 1]) return dT[j + 1];
    const double h = t[j + 1] - t[j];
    const double u = (time - t[j]) / h, u2 = u * u, u3 = u2 * u, u4 = u3 * u;
    const double d0 = -30 * u2 + 60 * u3 - 30 * u4;
    const double d1 = 1 - 18 * u2 + 32 * u3 - 15 * u4;
    const double d2 = u - 4.5 * u2 + 6 * u3 - 2.5 * u4;
    const double d3 = 1.5 * u2 - 4 * u3 + 2.5 * u4;
    const double d4 = -12 * u2 + 28 * u3 - 15 * u4;
    const double d5 = 30 * u2 - 60 * u3 + 30 * u4;
    return (d0 * T[j] + d5 * T[j + 1]) / h + d1 * dT[j] + d4 * dT[j + 1] +
           h * (d2 * ddT[j] + d3 * ddT[j + 1]);
}

cplx ModeSolution::scaled_wronskian(std::size_t j) const {
    return I[j] * (dT[j] * std::conj(T[j]) - T[j] * std::conj(dT[j]));
}

ModeSolution solve_mode(const CosmologicalModel& model, FieldKind kind, const ModeIndex& idx,
                        cplx initT, cplx initdT_dt, const SolveOptions& options) {
    if (!(options.tol > 0.0)) throw ArgumentError("solve_mode: tol must be positive");
    std::vector<double> grid = options.grid;
    if (grid.empty()) grid = linspace(model.interval.lo, model.interval.hi, std::max<std::size_t>(options.points, 2));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!model.interval.contains(grid[i])) throw ArgumentError("solve_mode: grid leaves the model interval");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw ArgumentError("solve_mode: grid must be strictly increasing");
    }
    const ModeCoefficients coeffs = mode_coefficients(model, kind, idx);
    const Interval span(std::min(grid.front(), 0.0), std::max(grid.back(), 0.0));
    const TimeReparam rp = reparam(coeffs, span);
    const osc::ComplexPotential pot = lambda_of_s(coeffs, rp);

    std::vector<double> s_pts(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) s_pts[i] = rp.s_of_t(grid[i]);
    for (std::size_t i = 1; i < s_pts.size(); ++i) {
        if (!(s_pts[i] > s_pts[i - 1])) throw NumericError("solve_mode: grid too fine for the s-map");
    }

    const double I0 = coeffs.I(0.0);
    osc::IntegratorOptions opt;
    opt.rtol = opt.atol = options.tol;
    const osc::Trajectory traj = osc::integrate(pot, initT, I0 * initdT_dt, opt, s_pts);

    ModeSolution sol;
    sol.index = idx;
    sol.t = grid;
    sol.T.resize(grid.size());
    sol.dT.resize(grid.size());
    sol.ddT.resize(grid.size());
    sol.I.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double t = grid[j];
        const double I = coeffs.I(t);
        sol.I[j] = I;
        sol.T[j] = traj[j].T;
        sol.dT[j] = traj[j].dT / I;
        sol.ddT[j] = -coeffs.F(t) * sol.dT[j] - coeffs.G(t) * sol.T[j];
    }
    const cplx w0 = I0 * (initdT_dt * std::conj(initT) - initT * std::conj(initdT_dt));
    double drift = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) drift = std::max(drift, std::abs(sol.scaled_wronskian(j) - w0));
    sol.wronskian_drift = std::abs(w0) > 0.0 ? drift / std::abs(w0) : drift;
    return sol;
}

ModeSolution normalize_mode(const ModeSolution& sol, const ModeCoefficients& coeffs) {
    const cplx T0 = sol.value(0.0);
    const cplx dT0 = sol.derivative(0.0);
    const double beta = 2.0 * coeffs.I(0.0) * std::imag(dT0 * std::conj(T0));
    const double scale = 2.0 * coeffs.I(0.0) * std::abs(dT0) * std::abs(T0);
    if (!(std::abs(beta) > 1e-13 * scale) || scale == 0.0) {
        throw NumericError("normalize_mode: T and its conjugate are linearly dependent");
    }
    if (beta < 0.0) {
        throw PreconditionError("normalize_mode: Wronskian has negative orientation; use the conjugate mode");
    }
    const double c = 1.0 / std::sqrt(beta);
    ModeSolution out = sol;
    for (std::size_t j = 0; j < out.size(); ++j) {
        out.T[j] *= c;
        out.dT[j] *= c;
        out.ddT[j] *= c;
    }
    out.normalized = true;
    return out;
}

// ---------------------------------------------------------------------------
// Spectral uniformity

double normalization_defect(const ModeSolution& sol) {
    double worst = 0.0;
    for (std::size_t j = 0; j < sol.size(); ++j) worst = std::max(worst, std::abs(sol.scaled_wronskian(j) - cplx(0.0, 1.0)));
    return worst;
}

UniformityReport check_uniformity(const CosmologicalModel& model, FieldKind kind,
                                  const std::vector<std::vector<int>>& k_list,
                                  const Interval& interval, std::size_t samples) {
    if (k_list.empty()) throw ArgumentError("check_uniformity: k_list is empty");
    if (!model.interval.contains(interval)) throw ArgumentError("check_uniformity: interval outside the model");
    UniformityReport rep;
    const auto grid = linspace(interval.lo, interval.hi, std::max<std::size_t>(samples, 5));
    rep.witness_t = grid;
    for (double t : grid) rep.witness_mtilde.push_back(mass_term(model, t));

    std::vector<ModeCoefficients> coeffs;
    std::vector<bool> active;
    for (const auto& k : k_list) {
        coeffs.push_back(mode_coefficients(model, kind, ModeIndex{k, kind}));
        bool ok = true;
        const auto mu = [&](double t) { return coeffs.back().lambda(t) - mass_term(model, t); };
        for (double t : grid) {
            if (std::abs(mu(t)) <= 1e-14 * (1.0 + std::abs(coeffs.back().lambda(t)))) ok = false;
        }
        if (std::abs(mu(0.0)) <= 1e-14 * (1.0 + std::abs(coeffs.back().lambda(0.0)))) ok = false;
        active.push_back(ok);
        if (!ok) {
            rep.flagged.push_back(k);
            rep.warnings.push_back("lambda equals the mass shift for a flagged k; excluded from C_R");
        }
    }

    // strict: ω(k) = μ_k(0), C(t) = μ_ref(t)/ω_ref
    std::size_t ref = k_list.size();
    double best = 0.0;
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        const double om = coeffs[i].lambda(0.0) - mass_term(model, 0.0);
        rep.omega.push_back(active[i] ? om : std::numeric_limits<double>::quiet_NaN());
        if (active[i] && std::abs(om) > best) {
            best = std::abs(om);
            ref = i;
        }
    }
    if (ref == k_list.size()) {
        rep.warnings.push_back("every k is flagged; no uniformity witness");
        return rep;
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double t = grid[j];
        const double mt = rep.witness_mtilde[j];
        const double C = (coeffs[ref].lambda(t) - mt) / rep.omega[ref];
        rep.witness_C.push_back(C);
        for (std::size_t i = 0; i < k_list.size(); ++i) {
            if (!active[i]) continue;
            const double lam = coeffs[i].lambda(t);
            worst = std::max(worst, std::abs(lam - rep.omega[i] * C - mt) / (1.0 + std::abs(lam)));
        }
    }
    rep.strict_residual = worst;
    rep.strict = worst < 1e-9;

    // loose: sup |d/dt ln|μ||
    const double h = std::min(1e-3 * std::max(1.0, interval.max_abs()), interval.length() / 8.0);
    double cr = 0.0, at = grid.front();
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        if (!active[i]) continue;
        const auto& c = coeffs[i];
        auto logmu = [&](double t) { return std::log(std::abs(c.lambda(t) - mass_term(model, t))); };
        for (double t : grid) {
            const double v = (h > 0.0) ? std::abs(fd_derivative(logmu, t, h, interval)) : 0.0;
            if (v > cr) {
                cr = v;
                at = t;
            }
        }
    }
    rep.C_R = cr;
    rep.C_R_at = at;
    rep.loose = std::isfinite(cr);
    return rep;
}

// ---------------------------------------------------------------------------
// Four-constant estimate under loose uniformity

namespace {

/// sup over x ≥ 0 of (p + q x) / max{1, u + r x} with r > 0.
double sup_ratio(double p, double q, double u, double r) {
    double best = p / std::max(1.0, u);
    const double kink = (1.0 - u) / r;
    if (kink > 0.0) best = std::max(best, p + q * kink);
    best = std::max(best, q / r);
    return best;
}

}  // namespace

LooseBoundReport loose_bound_constants(const CosmologicalModel& model, FieldKind kind,
                                       const Interval& interval,
                                       const std::vector<std::vector<int>>& k_list_in,
                                       std::size_t samples) {
    if (!interval.contains(0.0)) throw PreconditionError("loose_bound_constants: interval must contain 0");
    if (!model.interval.contains(interval)) throw ArgumentError("loose_bound_constants: interval outside the model");
    std::vector<std::vector<int>> k_list = k_list_in;
    if (k_list.empty()) {
        for (int axis = 0; axis < model.d; ++axis) {
            std::vector<int> k(static_cast<std::size_t>(model.d), 0);
            k[static_cast<std::size_t>(axis)] = 1;
            k_list.push_back(k);
        }
    }
    const UniformityReport uni = check_uniformity(model, kind, k_list, interval, samples);
    if (!uni.loose) throw PreconditionError("loose_bound_constants: spectrum is not loosely uniform");

    const ModeCoefficients base = mode_coefficients(model, kind, ModeIndex{std::vector<int>(static_cast<std::size_t>(model.d), 0), kind});
    auto I = base.I;
    auto Hb = base.Hb;
    auto mt = [&model](double t) { return mass_term(model, t); };
    auto I2 = [&](double t) { const double v = I(t); return v * v; };
    auto I2Hb = [&](double t) { return I2(t) * Hb(t); };
    auto I2Hm = [&](double t) { return I2(t) * (Hb(t) + mt(t)); };

    const std::size_t n = std::max<std::size_t>(samples, 5);
    LooseBoundReport r;
    r.C_R = uni.C_R;
    r.n_R = grid_inf(I2, interval, n).value;
    r.N_R = grid_sup(I2, interval, n).value;
    r.m_R = grid_inf(I2Hb, interval, n).value;
    r.M_R = grid_sup([&](double t) { return std::abs(I2Hb(t)); }, interval, n).value;
    r.mtilde_inf = grid_inf(mt, interval, n).value;
    r.mtilde_sup_abs = grid_sup([&](double t) { return std::abs(mt(t)); }, interval, n).value;
    r.mtilde_0 = mt(0.0);
    r.w_R = grid_inf(I2Hm, interval, n).value;
    const double v_R = grid_sup(I2Hm, interval, n).value;

    // lower bound of λ over the whole lattice: μ = λ − m̃ ≥ 0
    double p = r.mtilde_inf;
    for (const auto& k : k_list) {
        const auto c = mode_coefficients(model, kind, ModeIndex{k, kind});
        p = std::min(p, grid_inf(c.lambda, interval, n).value);
    }
    r.p_R = p;

    const double h = std::min(1e-3 * std::max(1.0, interval.max_abs()), interval.length() / 8.0);
    auto d_ds = [&](const std::function<double(double)>& f) {
        return [&, f](double t) { return I(t) * fd_derivative(f, t, h, interval); };
    };
    r.P_R = grid_sup([&](double t) { return std::abs(d_ds(I2Hm)(t)); }, interval, n).value;
    r.Q_R = grid_sup([&](double t) { return std::abs(d_ds(I2)(t)); }, interval, n).value;

    const TimeReparam rp(I, interval);
    r.s_abs = rp.s_interval().max_abs();
    const double sqrtN = std::sqrt(r.N_R);
    r.growth = std::exp(r.s_abs * sqrtN * r.C_R);
    r.lambda_min = r.mtilde_0 - std::min(0.0, r.mtilde_inf * r.growth) -
                   std::min(0.0, r.m_R / r.n_R * r.growth);

    const double c_lower = r.m_R + (p >= 0.0 ? r.n_R * p : r.N_R * p);
    r.kappa_max = std::sqrt(1.0 + std::abs(std::min(0.0, c_lower)));
    const double k2 = r.kappa_max * r.kappa_max;

    // e(α) ≥ max{1, 1 + w + (n/E)δ},  D(α) ≤ κ² + v + N E δ,  δ = λ(0) − m̃(0) ≥ 0
    const double U_prime = 1.0 + r.w_R;
    const double rate = r.n_R / r.growth;
    r.D_over_e_max = sup_ratio(k2 + v_R, r.N_R * r.growth, U_prime, rate);
    r.T_R = rate;
    r.U_R = U_prime - rate * r.mtilde_0;

    // pointwise in s: |∂ ln(κ² + Λ)| ≤ (P(s) + q(s)μ) / max{1, κ² + v(s) + I²(s)μ},
    // q = |∂_s I²| + I³ C_R, μ = λ − m̃ ≥ 0
    r.B_max = 0.0;
    for (double t : linspace(interval.lo, interval.hi, n)) {
        const double i1 = I(t);
        const double Pt = std::abs(d_ds(I2Hm)(t));
        const double qt = std::abs(d_ds(I2)(t)) + i1 * i1 * i1 * r.C_R;
        r.B_max = std::max(r.B_max, sup_ratio(Pt, qt, k2 + I2Hm(t), i1 * i1));
    }

    const double kr = r.kappa_max * r.s_abs;
    r.L_max = std::cosh(kr) * std::cosh(kr) * r.B_max + 2.0 * r.kappa_max * std::sinh(2.0 * kr);
    const double grow = std::exp(r.L_max) * std::cosh(kr);
    r.R_R = std::sqrt(r.D_over_e_max) * grow;
    r.S_R = grow;
    return r;
}

double loose_bound(const LooseBoundReport& r, double absT0, double absdT0_ds, double lambda0) {
    const double denom = std::max(1.0, std::sqrt(std::max(0.0, r.U_R + r.T_R * lambda0)));
    return r.R_R * absT0 + r.S_R * absdT0_ds / denom;
}

// ---------------------------------------------------------------------------

std::vector<InstabilityRegion> instability_regions(const ModeCoefficients& coeffs,
                                                   const Interval& interval, std::size_t samples,
                                                   double tol) {
    if (!coeffs.interval.contains(interval)) throw ArgumentError("instability_regions: interval outside coefficients");
    const auto grid = linspace(interval.lo, interval.hi, std::max<std::size_t>(samples, 3));
    auto G = [&](double t) { return coeffs.G(t); };
    auto unstable = [&](double t) { return G(t) <= 0.0; };
    auto edge = [&](double a, double b) {
        // unstable(a) != unstable(b)
        const bool ua = unstable(a);
        while (b - a > tol) {
            const double m = 0.5 * (a + b);
            if (unstable(m) == ua) a = m; else b = m;
        }
        return 0.5 * (a + b);
    };

    std::vector<InstabilityRegion> out;
    bool inside = unstable(grid.front());
    double enter = grid.front();
    bool open_start = inside;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const bool now = unstable(grid[i]);
        if (now != inside) {
            const double x = edge(grid[i - 1], grid[i]);
            if (now) {
                enter = x;
            } else {
                out.push_back({enter, x, open_start, false});
                open_start = false;
            }
            inside = now;
        }
    }
    if (inside) out.push_back({enter, grid.back(), open_start, true});
    return out;
}

void write_coefficients_csv(std::ostream& os, const ModeCoefficients& c, const std::vector<double>& t) {
    os << "t,F,Hb,lambda,G,I\n" << std::setprecision(17);
    for (double x : t) {
        os << x << ',' << c.F(x) << ',' << c.Hb(x) << ',' << c.lambda(x) << ',' << c.G(x) << ','
           << c.I(x) << '\n';
    }
}

void write_mode_csv(std::ostream& os, const ModeSolution& sol) {
    os << "t,re_T,im_T,re_dT,im_dT\n" << std::setprecision(17);
    for (std::size_t j = 0; j < sol.size(); ++j) {
        os << sol.t[j] << ',' << sol.T[j].real() << ',' << sol.T[j].imag() << ','
           << sol.dT[j].real() << ',' << sol.dT[j].imag() << '\n';
    }
}

}  // namespace modesum::cosmo
