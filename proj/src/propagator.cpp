#include "modesum/propagator.hpp"

#include "modesum/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <istream>
#include <map>
#include <random>
#include <ostream>
#include <sstream>
#include <thread>

namespace modesum::prop {

using cosmo::FieldKind;

// ---------------------------------------------------------------------------

Lattice::Lattice(int d, int K) : d_(d), K_(K) {
    if (d < 1 || d > 3) throw ArgumentError("lattice: d must be 1, 2 or 3");
    if (K < 0) throw ArgumentError("lattice: cutoff K must be non-negative");
    size_ = 1;
    for (int i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(2 * K + 1);
}

std::vector<int> Lattice::k(std::size_t index) const {
    if (index >= size_) throw ArgumentError("lattice: index out of range");
    const auto side = static_cast<std::size_t>(2 * K_ + 1);
    std::vector<int> out(static_cast<std::size_t>(d_));
    for (int i = d_ - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = static_cast<int>(index % side) - K_;
        index /= side;
    }
    return out;
}

std::size_t Lattice::index(const std::vector<int>& k) const {
    if (static_cast<int>(k.size()) != d_) throw ArgumentError("lattice: wave vector has wrong length");
    std::size_t idx = 0;
    for (int ki : k) {
        if (ki < -K_ || ki > K_) throw ArgumentError("lattice: wave vector outside the cutoff box");
        idx = idx * static_cast<std::size_t>(2 * K_ + 1) + static_cast<std::size_t>(ki + K_);
    }
    return idx;
}

int Lattice::norm_sq(std::size_t index) const {
    int n = 0;
    for (int ki : k(index)) n += ki * ki;
    return n;
}

int default_cutoff(int d) {
    switch (d) {
        case 1: return 16;
        case 2: return 8;
        case 3: return 4;
    }
    throw ArgumentError("default_cutoff: d must be 1, 2 or 3");
}

// ---------------------------------------------------------------------------

std::array<cplx, 2> mode_initial_data(InitialData family, double lambda0) {
    const bool osc = lambda0 > 0.0;
    const double w = osc ? std::sqrt(lambda0) : 0.0;
    switch (family) {
        case InitialData::Adiabatic: {
            if (!osc) return {cplx(1.0, 0.0), cplx(0.0, 1.0)};
            const cplx T0 = 1.0 / std::sqrt(2.0 * w);
            return {T0, cplx(0.0, w) * T0};
        }
        case InitialData::Alternate: {
            if (!osc) return {cplx(1.0, 0.5), cplx(-0.4, 1.0)};
            const cplx T0 = cplx(1.0, 0.5) / std::sqrt(2.0 * w);
            return {T0, cplx(0.3, 1.0) * w * T0};
        }
    }
    throw ArgumentError("unknown initial-data family");
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::exception_ptr> errors(n);
    auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) run(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);  // lowest index first: deterministic
    }
}

/// 6th-order first derivative of uniformly sampled values.
std::vector<cplx> fd6(const std::vector<cplx>& f, double h) {
    const std::size_t n = f.size();
    if (n < 7) throw ArgumentError("need at least 7 grid points for differencing");
    static constexpr double fwd[7] = {-147.0, 360.0, -450.0, 400.0, -225.0, 72.0, -10.0};
    std::vector<cplx> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc = 0.0;
        if (i >= 3 && i + 3 < n) {
            acc = -f[i - 3] + 9.0 * f[i - 2] - 45.0 * f[i - 1] + 45.0 * f[i + 1] - 9.0 * f[i + 2] + f[i + 3];
        } else if (i < 3) {
            for (std::size_t q = 0; q < 7; ++q) acc += fwd[q] * f[i + q];
        } else {
            for (std::size_t q = 0; q < 7; ++q) acc -= fwd[q] * f[i - q];
        }
        d[i] = acc / (60.0 * h);
    }
    return d;
}

void require_same_grid(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ArgumentError("section time grid does not match the mode bank");
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (std::abs(a[j] - b[j]) > 1e-12 * (1.0 + std::abs(a[j]))) {
            throw ArgumentError("section time grid does not match the mode bank");
        }
    }
}

void require_lattice(const SampledSection& s, const Lattice& L) {
    if (s.d != L.d() || s.K != L.K() || s.values.size() != L.size()) {
        throw ArgumentError("section truncation does not match the mode bank");
    }
    for (const auto& row : s.values) {
        if (row.size() != s.times.size()) throw ArgumentError("section has ragged time samples");
    }
}

}  // namespace

ModeBank::ModeBank(CosmologicalModel model, const BankOptions& options)
    : model_(std::move(model)),
      options_(options),
      lattice_(model_.d, options.K < 0 ? default_cutoff(model_.d) : options.K) {
    if (options_.kind != FieldKind::Scalar) {
        throw NotImplementedError("mode bank: only scalar fields are implemented");
    }
    options_.K = lattice_.K();
    if (options_.points < 7) throw ArgumentError("mode bank: need at least 7 time points");
    if (!(options_.tol > 0.0)) throw ArgumentError("mode bank: tol must be positive");
    times_ = linspace(model_.interval.lo, model_.interval.hi, options_.points);
    for (double t : times_) I_.push_back(std::pow(model_.a(t), model_.d));

    std::map<int, std::size_t> cls;
    for (std::size_t i = 0; i < lattice_.size(); ++i) cls.emplace(lattice_.norm_sq(i), 0);
    std::vector<std::vector<int>> reps;
    std::size_t c = 0;
    for (auto& [n2, idx] : cls) {
        idx = c++;
        reps.emplace_back();
    }
    class_of_.resize(lattice_.size());
    for (std::size_t i = lattice_.size(); i-- > 0;) {
        const std::size_t ci = cls.at(lattice_.norm_sq(i));
        class_of_[i] = ci;
        reps[ci] = lattice_.k(i);  // ends on the lexicographically smallest k
    }

    classes_.resize(reps.size());
    coeffs_.resize(reps.size());
    init_.resize(reps.size());
    parallel_for(reps.size(), options_.threads, [&](std::size_t ci) {
        const cosmo::ModeIndex idx{reps[ci], FieldKind::Scalar};
        auto coeffs = cosmo::mode_coefficients(model_, FieldKind::Scalar, idx);
        const auto data = mode_initial_data(options_.data, coeffs.lambda(0.0));
        cosmo::SolveOptions so;
        so.tol = options_.tol;
        so.grid = times_;
        auto sol = cosmo::solve_mode(model_, FieldKind::Scalar, idx, data[0], data[1], so);
        classes_[ci] = cosmo::normalize_mode(sol, coeffs);
        init_[ci] = {classes_[ci].value(0.0), classes_[ci].derivative(0.0)};
        coeffs_[ci] = std::move(coeffs);
    });
}

double ModeBank::normalization_defect() const {
    double worst = 0.0;
    for (const auto& m : classes_) {
        for (std::size_t j = 0; j < m.size(); ++j) worst = std::max(worst, std::abs(m.scaled_wronskian(j) - cplx(0, 1)));
    }
    return worst;
}

std::shared_ptr<const ModeBank> build_mode_bank(const CosmologicalModel& model, const BankOptions& options) {
    return std::make_shared<const ModeBank>(model, options);
}

// ---------------------------------------------------------------------------

SampledSection SampledSection::zeros(const Lattice& lattice, std::vector<double> times) {
    SampledSection s;
    s.d = lattice.d();
    s.K = lattice.K();
    s.values.assign(lattice.size(), std::vector<cplx>(times.size(), cplx(0.0)));
    s.times = std::move(times);
    return s;
}

double SampledSection::max_abs() const {
    double m = 0.0;
    for (const auto& row : values)
        for (const auto& v : row) m = std::max(m, std::abs(v));
    return m;
}

double SampledSection::reality_defect() const {
    const std::size_t n = values.size();
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < times.size(); ++j) {
            worst = std::max(worst, std::abs(values[n - 1 - k][j] - std::conj(values[k][j])));
        }
    }
    const double scale = max_abs();
    return scale > 0.0 ? worst / scale : 0.0;
}

cplx basis_function(const std::vector<int>& k, const std::vector<double>& x, double L) {
    if (k.size() != x.size()) throw ArgumentError("basis_function: dimension mismatch");
    double phase = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) phase += k[i] * x[i];
    phase *= 2.0 * M_PI / L;
    return std::polar(std::pow(L, -0.5 * static_cast<double>(k.size())), phase);
}

// ---------------------------------------------------------------------------

Solution::Solution(std::shared_ptr<const ModeBank> bank, std::vector<cplx> a, std::vector<cplx> b)
    : bank_(std::move(bank)), a_(std::move(a)), b_(std::move(b)) {
    if (!bank_) throw ArgumentError("solution: missing mode bank");
    if (a_.size() != bank_->lattice().size() || b_.size() != a_.size()) {
        throw ArgumentError("solution: coefficient count does not match the lattice");
    }
}

cplx Solution::value(std::size_t k, std::size_t j) const {
    const cplx T = bank_->mode(k).T[j];
    return a_[k] * T + b_[k] * std::conj(T);
}

cplx Solution::derivative(std::size_t k, std::size_t j) const {
    const cplx dT = bank_->mode(k).dT[j];
    return a_[k] * dT + b_[k] * std::conj(dT);
}

cplx Solution::value_at(std::size_t k, double t) const {
    const cplx T = bank_->mode(k).value(t);
    return a_[k] * T + b_[k] * std::conj(T);
}

cplx Solution::derivative_at(std::size_t k, double t) const {
    const cplx dT = bank_->mode(k).derivative(t);
    return a_[k] * dT + b_[k] * std::conj(dT);
}

SampledSection Solution::sample() const {
    auto s = SampledSection::zeros(bank_->lattice(), bank_->times());
    for (std::size_t k = 0; k < s.values.size(); ++k)
        for (std::size_t j = 0; j < s.times.size(); ++j) s.values[k][j] = value(k, j);
    return s;
}

double Solution::ode_residual() const {
    const auto& t = bank_->times();
    const double h = bank_->step();
    double worst = 0.0;
    for (std::size_t k = 0; k < a_.size(); ++k) {
        if (a_[k] == cplx(0.0) && b_[k] == cplx(0.0)) continue;
        const auto& c = bank_->coefficients(k);
        std::vector<cplx> X(t.size()), dX(t.size());
        for (std::size_t j = 0; j < t.size(); ++j) {
            X[j] = value(k, j);
            dX[j] = derivative(k, j);
        }
        const auto ddX = fd6(dX, h);
        double res = 0.0, scale = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double F = c.F(t[j]), G = c.G(t[j]);
            res = std::max(res, std::abs(ddX[j] + F * dX[j] + G * X[j]));
            scale = std::max(scale, std::abs(ddX[j]) + std::abs(F * dX[j]) + std::abs(G * X[j]));
        }
        if (scale > 0.0) worst = std::max(worst, res / scale);
    }
    return worst;
}

Solution cauchy_solve(std::shared_ptr<const ModeBank> bank, const CauchyData& data) {
    const std::size_t n = bank->lattice().size();
    if (data.f0.size() != n || data.f1.size() != n) {
        throw ArgumentError("cauchy data truncation does not match the mode bank");
    }
    std::vector<cplx> a(n), b(n);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx T = bank->T0(k), dT = bank->dT0(k);
        const cplx det = T * std::conj(dT) - std::conj(T) * dT;  // −i/I(0)
        a[k] = (data.f0[k] * std::conj(dT) - std::conj(T) * data.f1[k]) / det;
        b[k] = (T * data.f1[k] - dT * data.f0[k]) / det;
    }
    return Solution(std::move(bank), std::move(a), std::move(b));
}

cplx commutator_kernel(const ModeBank& bank, std::size_t k, double t, double tprime) {
    const auto& m = bank.mode(k);
    const cplx Tt = m.value(t), Tp = m.value(tprime);
    return cplx(0, 1) * (Tp * std::conj(Tt) - std::conj(Tp) * Tt);
}

cplx commutator_kernel_dt(const ModeBank& bank, std::size_t k, double t, double tprime) {
    const auto& m = bank.mode(k);
    const cplx dTt = m.derivative(t), Tp = m.value(tprime);
    return cplx(0, 1) * (Tp * std::conj(dTt) - std::conj(Tp) * dTt);
}

Solution apply_propagator(std::shared_ptr<const ModeBank> bank, const SampledSection& f) {
    if (bank->options().kind != FieldKind::Scalar) {
        throw NotImplementedError("propagator: only scalar fields are implemented");
    }
    require_lattice(f, bank->lattice());
    require_same_grid(f.times, bank->times());
    const std::size_t n = bank->lattice().size(), N = f.times.size();
    const auto w = simpson_weights(N, bank->step());
    std::vector<cplx> a(n), b(n);
    parallel_for(n, bank->options().threads, [&](std::size_t k) {
        const auto& T = bank->mode(k).T;
        ComplexNeumaierSum u, v;
        for (std::size_t j = 0; j < N; ++j) {
            const cplx g = w[j] * bank->I(j) * f.values[k][j];
            u.add(T[j] * g);
            v.add(std::conj(T[j]) * g);
        }
        // u₋k(f) = ∫T_k I f̂(·,k), v₋k(f) = ∫T̄_k I f̂(·,k)
        a[k] = cplx(0, -1) * v.value();
        b[k] = cplx(0, 1) * u.value();
    });
    return Solution(std::move(bank), std::move(a), std::move(b));
}

cplx pairing(const ModeBank& bank, const SampledSection& f, const SampledSection& g) {
    require_lattice(f, bank.lattice());
    require_lattice(g, bank.lattice());
    require_same_grid(f.times, bank.times());
    require_same_grid(g.times, bank.times());
    const auto w = simpson_weights(f.times.size(), bank.step());
    const auto& L = bank.lattice();
    ComplexNeumaierSum sum;
    for (std::size_t j = 0; j < f.times.size(); ++j) {
        ComplexNeumaierSum inner;
        for (std::size_t k = 0; k < L.size(); ++k) inner.add(f.values[L.neg(k)][j] * g.values[k][j]);
        sum.add(w[j] * bank.I(j) * inner.value());
    }
    return sum.value();
}

AntisymmetryResult antisymmetry(std::shared_ptr<const ModeBank> bank, const SampledSection& f,
                                const SampledSection& h) {
    const auto Ef = apply_propagator(bank, f).sample();
    const auto Eh = apply_propagator(bank, h).sample();
    AntisymmetryResult r;
    r.f_Eh = pairing(*bank, f, Eh);
    r.h_Ef = pairing(*bank, h, Ef);
    const double scale = std::max(std::abs(r.f_Eh), std::abs(r.h_Ef));
    r.defect = scale > 0.0 ? std::abs(r.f_Eh + r.h_Ef) / scale : 0.0;
    return r;
}

cplx symplectic_form(const Solution& u, const Solution& v, double t) {
    if (&u.bank() != &v.bank()) throw ArgumentError("symplectic_form: solutions use different mode banks");
    const auto& bank = u.bank();
    const auto& L = bank.lattice();
    ComplexNeumaierSum sum;
    for (std::size_t k = 0; k < L.size(); ++k) {
        const std::size_t nk = L.neg(k);
        sum.add(u.value_at(nk, t) * v.derivative_at(k, t) - u.derivative_at(nk, t) * v.value_at(k, t));
    }
    return std::pow(bank.model().a(t), bank.model().d) * sum.value();
}

PlancherelResult plancherel(const CosmologicalModel& model, const Lattice& lattice,
                            const std::vector<cplx>& f, const std::vector<cplx>& h, double t) {
    if (f.size() != lattice.size() || h.size() != lattice.size()) {
        throw ArgumentError("plancherel: coefficient count does not match the lattice");
    }
    if (!model.interval.contains(t)) throw ArgumentError("plancherel: t outside the model interval");
    const int d = lattice.d();
    const std::size_t M = static_cast<std::size_t>(2 * lattice.K() + 1);
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= M;
    const double dx = model.L / static_cast<double>(M);

    std::vector<std::vector<int>> ks(lattice.size());
    for (std::size_t k = 0; k < lattice.size(); ++k) ks[k] = lattice.k(k);
    ComplexNeumaierSum direct;
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t p = 0; p < total; ++p) {
        std::size_t r = p;
        for (int i = d - 1; i >= 0; --i) {
            x[static_cast<std::size_t>(i)] = dx * static_cast<double>(r % M);
            r /= M;
        }
        ComplexNeumaierSum fx, hx;
        for (std::size_t k = 0; k < lattice.size(); ++k) {
            const cplx z = basis_function(ks[k], x, model.L);
            fx.add(f[k] * z);
            hx.add(h[k] * z);
        }
        direct.add(std::conj(fx.value()) * hx.value());
    }
    const double dH = model.d;
    const double weight = std::exp(integrate_adaptive([&](double s) { return dH * model.hubble(s); }, 0.0, t, 1e-14));
    PlancherelResult r;
    r.direct = weight * std::pow(dx, d) * direct.value();

    ComplexNeumaierSum modes;
    for (std::size_t k = 0; k < lattice.size(); ++k) modes.add(std::conj(f[k]) * h[k]);
    r.mode_sum = std::pow(model.a(t), d) * modes.value();
    r.discrepancy = std::abs(r.direct - r.mode_sum) / std::max(1.0, std::abs(r.mode_sum));
    return r;
}

PlancherelResult plancherel(const ModeBank& bank, const SampledSection& f, const SampledSection& h,
                            std::size_t time_index) {
    require_lattice(f, bank.lattice());
    require_lattice(h, bank.lattice());
    require_same_grid(f.times, bank.times());
    require_same_grid(h.times, bank.times());
    if (time_index >= f.times.size()) throw ArgumentError("plancherel: time index out of range");
    std::vector<cplx> fv, hv;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        fv.push_back(f.values[k][time_index]);
        hv.push_back(h.values[k][time_index]);
    }
    return plancherel(bank.model(), bank.lattice(), fv, hv, f.times[time_index]);
}

ReconstructionResult surjectivity_reconstruct(std::shared_ptr<const ModeBank> bank, const Solution& v) {
    if (&v.bank() != bank.get()) throw ArgumentError("reconstruct: solution uses a different mode bank");
    const auto& t = bank->times();
    if (!(t.front() < 0.0 && t.back() > 1.0)) {
        throw PreconditionError("reconstruct: time grid must extend beyond the cutoff transition (0, 1)");
    }
    const std::size_t N = t.size(), n = bank->lattice().size();
    const double h = bank->step();
    auto chi = [](double s) {
        if (s <= 0.0) return 1.0;
        if (s >= 1.0) return 0.0;
        return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    };

    ReconstructionResult out;
    out.f_v = SampledSection::zeros(bank->lattice(), t);
    double wmax = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& c = bank->coefficients(k);
        std::vector<cplx> vp(N);
        for (std::size_t j = 0; j < N; ++j) vp[j] = v.value(k, j) * (1.0 - chi(t[j]));
        for (std::size_t j = 1; j + 1 < N; ++j) {
            const double Ip = c.I(t[j] + 0.5 * h), Im = c.I(t[j] - 0.5 * h), I0 = c.I(t[j]);
            const cplx flux = Ip * (vp[j + 1] - vp[j]) - Im * (vp[j] - vp[j - 1]);
            out.f_v.values[k][j] = flux / (I0 * h * h) + c.G(t[j]) * vp[j];
            wmax = std::max(wmax, std::sqrt(std::max(0.0, c.G(t[j]))));
        }
    }
    if (wmax * h > 0.2) {
        out.diagnostic = "time step under-resolves the fastest mode (omega*h = " + std::to_string(wmax * h) + ")";
    }

    const Solution E = apply_propagator(bank, out.f_v);
    NeumaierSum num, den;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < N; ++j) {
            num.add(std::norm(E.value(k, j) - v.value(k, j)));
            den.add(std::norm(v.value(k, j)));
        }
    }
    out.residual = den.value() > 0.0 ? std::sqrt(num.value() / den.value()) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------

SampledSection random_source(const ModeBank& bank, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto& L = bank.lattice();
    auto s = SampledSection::zeros(L, bank.times());
    const double lo = s.times.front(), span = s.times.back() - lo;
    for (std::size_t k = 0; k <= L.size() / 2; ++k) {
        cplx c(u(rng), u(rng));
        if (k == L.neg(k)) c = c.real();
        const double centre = lo + span * (0.3 + 0.2 * (u(rng) + 1.0));
        for (std::size_t j = 0; j < s.times.size(); ++j) {
            const double x = (s.times[j] - centre) / (0.15 * span);
            const double g = std::abs(x) < 1.0 ? std::pow(1.0 - x * x, 4) : 0.0;
            s.values[k][j] = c * g;
            s.values[L.neg(k)][j] = std::conj(c) * g;
        }
    }
    return s;
}

CauchyData random_cauchy_data(const Lattice& lattice, std::uint64_t seed, bool real) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = lattice.size();
    CauchyData c{std::vector<cplx>(n), std::vector<cplx>(n)};
    for (std::size_t k = 0; k < n; ++k) {
        c.f0[k] = {u(rng), u(rng)};
        c.f1[k] = {u(rng), u(rng)};
    }
    if (real) {
        for (std::size_t k = 0; k <= n / 2; ++k) {
            const std::size_t nk = lattice.neg(k);
            if (k == nk) {
                c.f0[k] = c.f0[k].real();
                c.f1[k] = c.f1[k].real();
            }
            c.f0[nk] = std::conj(c.f0[k]);
            c.f1[nk] = std::conj(c.f1[k]);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------

void write_section_csv(std::ostream& os, const SampledSection& s) {
    const Lattice L = s.lattice();
    require_lattice(s, L);
    os << "t";
    for (int i = 1; i <= s.d; ++i) os << ",k" << i;
    os << ",re,im\n" << std::setprecision(17);
    for (std::size_t j = 0; j < s.times.size(); ++j) {
        for (std::size_t k = 0; k < L.size(); ++k) {
            os << s.times[j];
            for (int ki : L.k(k)) os << ',' << ki;
            os << ',' << s.values[k][j].real() << ',' << s.values[k][j].imag() << '\n';
        }
    }
}

SampledSection read_section_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ArgumentError("section csv: empty input");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            header.push_back(cell);
        }
    }
    const int d = static_cast<int>(header.size()) - 3;
    if (d < 1 || d > 3 || header.front() != "t" || header[header.size() - 2] != "re" || header.back() != "im") {
        throw ArgumentError("section csv: expected header t,k1[,k2,k3],re,im");
    }
    struct Row {
        double t;
        std::vector<int> k;
        cplx v;
    };
    std::vector<Row> rows;
    int K = 0;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size()) throw ArgumentError("section csv: wrong column count on line " + std::to_string(lineno));
        Row r;
        try {
            r.t = std::stod(cells[0]);
            for (int i = 0; i < d; ++i) r.k.push_back(std::stoi(cells[static_cast<std::size_t>(1 + i)]));
            r.v = cplx(std::stod(cells[static_cast<std::size_t>(1 + d)]), std::stod(cells[static_cast<std::size_t>(2 + d)]));
        } catch (const std::exception&) {
            throw ArgumentError("section csv: bad number on line " + std::to_string(lineno));
        }
        for (int ki : r.k) K = std::max(K, std::abs(ki));
        rows.push_back(std::move(r));
    }
    std::vector<double> times;
    for (const auto& r : rows) {
        if (times.empty() || times.back() != r.t) {
            if (std::find(times.begin(), times.end(), r.t) != times.end()) {
                throw ArgumentError("section csv: rows for one time must be contiguous");
            }
            times.push_back(r.t);
        }
    }
    const Lattice L(d, K);
    if (rows.size() != times.size() * L.size()) throw ArgumentError("section csv: incomplete lattice for some time");
    auto s = SampledSection::zeros(L, times);
    std::vector<std::vector<bool>> seen(L.size(), std::vector<bool>(times.size(), false));
    for (const auto& r : rows) {
        const auto j = static_cast<std::size_t>(std::find(times.begin(), times.end(), r.t) - times.begin());
        const auto k = L.index(r.k);
        if (seen[k][j]) throw ArgumentError("section csv: duplicate sample");
        seen[k][j] = true;
        s.values[k][j] = r.v;
    }
    return s;
}

std::string section_manifest_json(const SampledSection& s, double L, const std::string& csv_name) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = "section";
    j["d"] = s.d;
    j["K"] = s.K;
    j["L"] = L;
    j["times"] = {{"count", s.times.size()},
                  {"lo", s.times.empty() ? 0.0 : s.times.front()},
                  {"hi", s.times.empty() ? 0.0 : s.times.back()}};
    j["real"] = s.reality_defect() < 1e-12;
    j["csv"] = csv_name;
    return j.dump(2);
}

void write_kernel_csv(std::ostream& os, const ModeBank& bank, std::size_t k, std::size_t stride) {
    if (stride == 0) throw ArgumentError("kernel csv: stride must be positive");
    const auto& t = bank.times();
    os << "t,tprime,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < t.size(); i += stride) {
        for (std::size_t j = 0; j < t.size(); j += stride) {
            os << t[i] << ',' << t[j] << ',' << commutator_kernel(bank, k, t[i], t[j]).real() << '\n';
        }
    }
}

}  // namespace modesum::prop
