#pragma once

// Complex time-dependent harmonic oscillator  T'' + Λ(s) T = 0  on a
// compact interval R ∋ 0: adaptive integration, the energy functional,
// energy envelopes, the κ-substitution and the uniform a priori bound.

#include "modesum/numerics.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace modesum::osc {

/// The coefficient Λ(s) together with the interval it is considered on.
class ComplexPotential {
public:
    using Fn = std::function<cplx(double)>;
    using RealFn = std::function<double(double)>;

    /// `re_derivative`, when given, is the analytic s-derivative of Re Λ.
    ComplexPotential(Fn eval, Interval interval, std::optional<RealFn> re_derivative = {});

    cplx operator()(double s) const { return eval_(s); }
    const Interval& interval() const noexcept { return interval_; }
    bool has_analytic_derivative() const noexcept { return re_derivative_.has_value(); }

    /// d/ds Re Λ(s): analytic when available, else fourth-order differences.
    double re_derivative(double s) const;
    /// Finite-difference step used when no analytic derivative exists.
    double fd_step() const noexcept;

private:
    Fn eval_;
    Interval interval_;
    std::optional<RealFn> re_derivative_;
};

struct OscState {
    double s = 0.0;
    cplx T{};
    cplx dT{};
};

struct Trajectory {
    std::vector<OscState> states;
    double tol = 0.0;

    std::vector<double> grid() const;
    std::size_t size() const noexcept { return states.size(); }
    const OscState& operator[](std::size_t i) const { return states[i]; }
};

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    std::size_t max_steps = 5'000'000;
};

/// Integrates from the initial data at s = 0 forwards to R.hi and backwards
/// to R.lo with an adaptive Dormand–Prince 5(4) pair. The grid is the set
/// of accepted steps; 0 and both endpoints of R are always included.
Trajectory integrate(const ComplexPotential& potential, cplx T0, cplx dT0, double tol);

/// Same, but the returned trajectory holds exactly the requested points
/// (strictly increasing, inside R). Steps are clipped to land on them.
Trajectory integrate(const ComplexPotential& potential, cplx T0, cplx dT0,
                     const IntegratorOptions& options, std::span<const double> output_points);

/// ½|T'|² + ½ Re Λ(s) |T|²
double energy(const OscState& state, const ComplexPotential& potential);

/// Two-sided bound on the energy for Re Λ > 0 on R. The exponent
/// ∫₀ˢ (2|Im Λ|/√Re Λ + |∂ ln Re Λ|) is tabulated by composite Simpson on
/// the sampling grid and completed by one Simpson panel between nodes.
class EnergyEnvelope {
public:
    EnergyEnvelope(ComplexPotential potential, double W0, std::size_t samples);

    double lower(double s) const;
    double upper(double s) const;
    double exponent(double s) const;
    double initial_energy() const noexcept { return W0_; }
    const std::vector<double>& grid() const noexcept { return grid_; }

private:
    double integrand(double s) const;

    ComplexPotential potential_;
    double W0_;
    std::vector<double> grid_;
    std::vector<double> cumulative_;  // |∫₀^{grid_i}|
    std::size_t zero_index_ = 0;
};

/// Throws PreconditionError (with the offending s) when Re Λ ≤ 0 on the grid.
EnergyEnvelope energy_envelope(const ComplexPotential& potential, double W0,
                               std::size_t samples = 2048);

/// Ω(z) = (κ² + Λ(atanh(κz)/κ)) / (1 − κ²z²)² with the maps between a
/// solution τ(z) of τ'' + Ωτ = 0 and T(s) = τ(z(s)) cosh(κs).
class KappaTransform {
public:
    KappaTransform(ComplexPotential potential, double kappa);

    const ComplexPotential& omega() const noexcept { return omega_; }
    double kappa() const noexcept { return kappa_; }

    double z_of_s(double s) const;
    /// Throws ArgumentError when |κz| ≥ 1.
    double s_of_z(double z) const;

    /// (z, τ, dτ/dz) → (s, T, dT/ds)
    OscState solution_to_T(const OscState& tau_state) const;
    /// (s, T, dT/ds) → (z, τ, dτ/dz)
    OscState solution_from_T(const OscState& T_state) const;

private:
    ComplexPotential source_;
    double kappa_;
    ComplexPotential omega_;
};

KappaTransform kappa_transform(const ComplexPotential& potential, double kappa);

/// Constants of the uniform bound, sup/inf taken on a sampling grid with
/// one refinement pass around each extremum (grid-approximate).
struct BoundConstants {
    double A = 0.0;      ///< sup |Im Λ|
    double c = 0.0;      ///< inf Re Λ
    double kappa = 1.0;  ///< √(1 + |min{0, c}|)
    double B = 0.0;      ///< sup |∂ ln(κ² + Re Λ)|
    double D = 1.0;      ///< sup (κ² + Re Λ)
    double e = 1.0;      ///< 1 + max{0, c}
    double L = 0.0;      ///< 2A + cosh²(κ|R|)B + 2κ sinh(2κ|R|)
    double R_abs = 0.0;  ///< |R| = max |s| on R
    std::size_t samples = 0;
};

struct BoundOptions {
    std::size_t samples = 2048;
    bool refine = true;
};

BoundConstants bound_constants(const ComplexPotential& potential, const BoundOptions& options = {});

/// |T(0)|√(D/e) e^L cosh(κ|R|) + |T'(0)| e^L cosh(κ|R|)/√e
double uniform_bound(const BoundConstants& consts, double absT0, double absdT0);

/// max |T| over the trajectory
double sup_abs(const Trajectory& traj);

/// a.T·b.dT − a.dT·b.T; throws ArgumentError when the states sit at different s.
cplx wronskian(const OscState& a, const OscState& b);

/// Solution with data (T0, dT0) at s = 0 assembled from the basis Q, R via
/// the Wronski-matrix identity. Both trajectories must share the grid and
/// contain s = 0.
Trajectory propagate_via_basis(const Trajectory& Q, const Trajectory& R, cplx T0, cplx dT0);

/// Columns: s, Re T, Im T, Re dT, Im dT, energy
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const ComplexPotential& potential);

}  // namespace modesum::osc
