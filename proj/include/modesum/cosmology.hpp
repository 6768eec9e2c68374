#pragma once

// Mode equations  T'' + F T' + G T = 0  for scalar and 1-form fields on
// spatially flat FRW models with torus sections, their reparametrization
// into oscillator form, and the spectral diagnostics built on top of them.

#include "modesum/numerics.hpp"
#include "modesum/oscillator.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace modesum::cosmo {

/// Expansion law a(t) with a(0) = 1.
class ScaleFactor {
public:
    virtual ~ScaleFactor() = default;
    virtual double a(double t) const = 0;
    virtual double hubble(double t) const = 0;       ///< H = ȧ/a
    virtual double hubble_dot(double t) const = 0;   ///< Ḣ
    virtual std::string name() const = 0;
    /// Largest interval the law is defined on.
    virtual Interval domain() const = 0;
};

std::shared_ptr<const ScaleFactor> minkowski();
std::shared_ptr<const ScaleFactor> de_sitter(double H0);
/// a(t) = ((t + t0)/t0)^p, i.e. t^p in the time variable shifted by t0.
std::shared_ptr<const ScaleFactor> power_law(double p, double t0);
/// Cubic spline through (t_i, a_i), renormalized so that a(0) = 1.
std::shared_ptr<const ScaleFactor> tabulated(std::vector<double> t, std::vector<double> a);

struct CosmologicalModel {
    std::shared_ptr<const ScaleFactor> law;
    double m0sq = 0.0;  ///< bare mass squared
    double xi = 0.0;    ///< curvature coupling
    int d = 3;          ///< spatial dimension
    double L = 2.0 * M_PI;
    Interval interval{0.0, 1.0};

    CosmologicalModel() = default;
    CosmologicalModel(std::shared_ptr<const ScaleFactor> law, double m0sq, double xi, int d,
                      double L, Interval interval);

    double a(double t) const { return law->a(t); }
    double hubble(double t) const { return law->hubble(t); }
    double hubble_dot(double t) const { return law->hubble_dot(t); }
};

enum class FieldKind { Scalar, OneFormScalarSector, OneFormTransversal };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

/// Field component together with the sign of its Krein form.
struct Field {
    FieldKind kind = FieldKind::Scalar;
    int krein_sign = +1;

    Field() = default;
    Field(FieldKind kind, int krein_sign);
};

struct ModeIndex {
    std::vector<int> k;  ///< wave vector in units of 2π/L
    FieldKind component = FieldKind::Scalar;
};

/// |2πk/L|²
double wave_number_sq(const CosmologicalModel& model, const std::vector<int>& k);

/// Flat FRW scalar curvature 2d(ä/a) + d(d−1)H²; 6(ä/a + H²) for d = 3.
double ricci_scalar(const CosmologicalModel& model, double t);
/// m0² + ξ R(t)
double mass_term(const CosmologicalModel& model, double t);

struct SpectralPair {
    double a0;  ///< friction eigenvalue, F
    double b0;  ///< zeroth-order eigenvalue
};

/// Scalar: (dH, 0); 1-form scalar sector: (3H, 0); transversal: (H, −Ḣ−2H²).
/// 1-form sectors require d = 3.
SpectralPair spectra(const CosmologicalModel& model, FieldKind kind, double t);

/// Coefficients of the mode equation for one mode. All members are pure
/// functions of t on `interval`.
struct ModeCoefficients {
    std::function<double(double)> F;       ///< friction
    std::function<double(double)> Hb;      ///< B⁰ eigenvalue
    std::function<double(double)> lambda;  ///< spatial eigenvalue
    std::function<double(double)> I;       ///< exp ∫₀ᵗ F
    Interval interval;
    double wave_number_sq = 0.0;

    double G(double t) const { return Hb(t) + lambda(t); }
};

/// When `closed_form_I` is false, I(t) is evaluated by adaptive quadrature
/// of F instead of the power-of-a closed form.
ModeCoefficients mode_coefficients(const CosmologicalModel& model, FieldKind kind,
                                   const ModeIndex& idx, bool closed_form_I = true);

/// exp ∫₀ᵗ F by adaptive quadrature.
double integrating_factor_quadrature(const ModeCoefficients& coeffs, double t);

/// s(t) = ∫₀ᵗ I⁻¹ and its inverse, backed by a checkpoint table with
/// Gauss–Legendre panels and Newton inversion.
class TimeReparam {
public:
    TimeReparam(std::function<double(double)> I, Interval interval, std::size_t panels = 1024);

    double s_of_t(double t) const;
    double t_of_s(double s) const;
    Interval s_interval() const { return {s_nodes_.front(), s_nodes_.back()}; }
    const Interval& t_interval() const noexcept { return interval_; }

private:
    double panel_integral(double a, double b) const;

    std::function<double(double)> I_;
    Interval interval_;
    std::vector<double> t_nodes_;
    std::vector<double> s_nodes_;
};

TimeReparam reparam(const ModeCoefficients& coeffs, const Interval& interval);

/// Λ(s) = G(t(s)) I²(t(s)) on the s-image of the reparametrization interval.
osc::ComplexPotential lambda_of_s(const ModeCoefficients& coeffs, const TimeReparam& rp);

/// Sampled mode T(t) with dT/dt and d²T/dt² on a t-grid.
struct ModeSolution {
    ModeIndex index;
    std::vector<double> t;
    std::vector<cplx> T;
    std::vector<cplx> dT;
    std::vector<cplx> ddT;
    std::vector<double> I;
    /// max_j |I w(t_j) − I w(0)| / |I w(0)| with w = Ṫ T̄ − T Ṫ̄
    double wronskian_drift = 0.0;
    bool normalized = false;

    std::size_t size() const noexcept { return t.size(); }
    /// Quintic Hermite interpolation (exact on grid nodes).
    cplx value(double time) const;
    cplx derivative(double time) const;
    /// I(t)·(Ṫ T̄ − T Ṫ̄) at grid node j
    cplx scaled_wronskian(std::size_t j) const;
};

struct SolveOptions {
    double tol = 1e-10;
    std::size_t points = 513;           ///< uniform t-grid over model.interval when `grid` is empty
    std::vector<double> grid;           ///< explicit strictly increasing t-grid
};

ModeSolution solve_mode(const CosmologicalModel& model, FieldKind kind, const ModeIndex& idx,
                        cplx initT, cplx initdT_dt, const SolveOptions& options);

/// Positive real rescale so that I(0)(Ṫ T̄ − T Ṫ̄)(0) = i.
ModeSolution normalize_mode(const ModeSolution& sol, const ModeCoefficients& coeffs);

/// max_j |I(Ṫ T̄ − T Ṫ̄)(t_j) − i|
double normalization_defect(const ModeSolution& sol);

struct UniformityReport {
    bool strict = false;
    double strict_residual = 0.0;                ///< worst relative residual of the witness
    std::vector<double> omega;                   ///< ω(k) witness per k (NaN for flagged k)
    std::vector<double> witness_t;               ///< grid for C(t), m̃(t)
    std::vector<double> witness_C;
    std::vector<double> witness_mtilde;
    bool loose = false;
    double C_R = 0.0;                            ///< sup |d/dt ln|λ − m̃||
    double C_R_at = 0.0;
    std::vector<std::vector<int>> flagged;       ///< k with λ = m̃ somewhere (excluded)
    std::vector<std::string> warnings;
};

UniformityReport check_uniformity(const CosmologicalModel& model, FieldKind kind,
                                  const std::vector<std::vector<int>>& k_list,
                                  const Interval& interval, std::size_t samples = 2001);

/// Constants of the four-constant estimate
///   |T(s)| ≤ R|T(0)| + S|T'(0)| / max{1, √(U + T λ(0))}
/// together with every intermediate quantity of the construction.
struct LooseBoundReport {
    double R_R = 0, S_R = 0, T_R = 0, U_R = 0;
    // intermediates (suprema/infima over the s-image of the interval)
    double m_R = 0, n_R = 0, M_R = 0, N_R = 0, p_R = 0, P_R = 0, Q_R = 0, C_R = 0;
    double lambda_min = 0;
    double s_abs = 0;          ///< |R| in the s variable
    double growth = 1;         ///< exp(|R| √N C)
    double kappa_max = 1;
    double B_max = 0;
    double L_max = 0;
    double D_over_e_max = 1;
    double w_R = 0;            ///< inf I²(Hb + m̃)
    double mtilde_inf = 0, mtilde_sup_abs = 0, mtilde_0 = 0;
};

LooseBoundReport loose_bound_constants(const CosmologicalModel& model, FieldKind kind,
                                       const Interval& interval,
                                       const std::vector<std::vector<int>>& k_list = {},
                                       std::size_t samples = 2001);

/// Right-hand side of the four-constant estimate for one mode.
double loose_bound(const LooseBoundReport& r, double absT0, double absdT0_ds, double lambda0);

struct InstabilityRegion {
    double t_enter;
    double t_exit;
    bool open_start;  ///< region already active at the interval start
    bool open_end;    ///< region still active at the interval end
};

/// Sub-intervals where G(t) ≤ 0, edges located by bisection to `tol` in t.
std::vector<InstabilityRegion> instability_regions(const ModeCoefficients& coeffs,
                                                   const Interval& interval,
                                                   std::size_t samples = 4001, double tol = 1e-9);

/// Columns: t, F, Hb, lambda, G, I
void write_coefficients_csv(std::ostream& os, const ModeCoefficients& coeffs,
                            const std::vector<double>& t);
/// Columns: t, Re T, Im T, Re dT, Im dT
void write_mode_csv(std::ostream& os, const ModeSolution& sol);

}  // namespace modesum::cosmo
