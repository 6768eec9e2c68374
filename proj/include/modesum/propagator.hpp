#pragma once

// Scalar-field propagator and Cauchy solution map as finite mode sums on the
// torus lattice |k_i| ≤ K, with the structural checks built on them.

#include "modesum/cosmology.hpp"
#include "modesum/numerics.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace modesum::prop {

using cosmo::CosmologicalModel;
using cosmo::ModeCoefficients;
using cosmo::ModeSolution;

/// Wave vectors of the box [−K, K]^d in lexicographic order (first component
/// most significant). The index of −k is size() − 1 − index(k).
class Lattice {
public:
    Lattice(int d, int K);

    int d() const noexcept { return d_; }
    int K() const noexcept { return K_; }
    std::size_t size() const noexcept { return size_; }
    std::vector<int> k(std::size_t index) const;
    std::size_t index(const std::vector<int>& k) const;
    std::size_t neg(std::size_t index) const noexcept { return size_ - 1 - index; }
    int norm_sq(std::size_t index) const;

private:
    int d_, K_;
    std::size_t size_;
};

/// Default cutoff per axis: 16 (d=1), 8 (d=2), 4 (d=3).
int default_cutoff(int d);

enum class InitialData {
    Adiabatic,  ///< T(0) = 1/√(2ω₀), Ṫ(0) = iω₀T(0) when λ(0) > 0, else (1, i)
    Alternate   ///< T(0) = (1 + i/2)/√(2ω₀), Ṫ(0) = (0.3 + i)ω₀T(0), else (1 + i/2, −0.4 + i)
};

/// Mode data (T(0), Ṫ(0)) of the family for the frequency² ω₀² = lambda0.
std::array<cplx, 2> mode_initial_data(InitialData family, double lambda0);

struct BankOptions {
    int K = -1;                  ///< −1 selects default_cutoff(d)
    double tol = 1e-11;
    std::size_t points = 513;    ///< uniform time grid over model.interval
    InitialData data = InitialData::Adiabatic;
    unsigned threads = 0;        ///< 0: hardware concurrency; never changes results
    cosmo::FieldKind kind = cosmo::FieldKind::Scalar;  ///< only Scalar is implemented
};

/// Normalized scalar modes for every k of the lattice, one solve per |k|²
/// class; T_{−k} and T_k share storage.
class ModeBank {
public:
    ModeBank(CosmologicalModel model, const BankOptions& options);

    const CosmologicalModel& model() const noexcept { return model_; }
    const Lattice& lattice() const noexcept { return lattice_; }
    const std::vector<double>& times() const noexcept { return times_; }
    const BankOptions& options() const noexcept { return options_; }
    double step() const noexcept { return times_[1] - times_[0]; }

    const ModeSolution& mode(std::size_t k_index) const { return classes_[class_of_[k_index]]; }
    const ModeCoefficients& coefficients(std::size_t k_index) const { return coeffs_[class_of_[k_index]]; }
    /// Mode initial data after normalization.
    cplx T0(std::size_t k_index) const { return init_[class_of_[k_index]][0]; }
    cplx dT0(std::size_t k_index) const { return init_[class_of_[k_index]][1]; }
    std::size_t class_count() const noexcept { return classes_.size(); }
    /// I(t_j) on the bank grid.
    double I(std::size_t j) const noexcept { return I_[j]; }
    /// max over modes and grid of |I(Ṫ T̄ − T Ṫ̄) − i|
    double normalization_defect() const;

private:
    CosmologicalModel model_;
    BankOptions options_;
    Lattice lattice_;
    std::vector<double> times_;
    std::vector<double> I_;
    std::vector<std::size_t> class_of_;
    std::vector<ModeSolution> classes_;
    std::vector<ModeCoefficients> coeffs_;
    std::vector<std::array<cplx, 2>> init_;
};

std::shared_ptr<const ModeBank> build_mode_bank(const CosmologicalModel& model, const BankOptions& options = {});

/// f̂(t_j, k) on a time grid; values[k_index][j].
struct SampledSection {
    std::vector<double> times;
    int d = 1;
    int K = 0;
    std::vector<std::vector<cplx>> values;

    static SampledSection zeros(const Lattice& lattice, std::vector<double> times);
    Lattice lattice() const { return Lattice(d, K); }
    /// max |f̂(t,−k) − conj f̂(t,k)| relative to max |f̂|
    double reality_defect() const;
    double max_abs() const;
};

/// ζ_k(x) = exp(2πi k·x/L)/L^{d/2}
cplx basis_function(const std::vector<int>& k, const std::vector<double>& x, double L);

struct CauchyData {
    std::vector<cplx> f0;  ///< f̂(0, k)
    std::vector<cplx> f1;  ///< ∂ₜf̂(0, k)
};

/// φ̂(t,k) = a_k T_k(t) + b_k T̄_k(t)
class Solution {
public:
    Solution(std::shared_ptr<const ModeBank> bank, std::vector<cplx> a, std::vector<cplx> b);

    const ModeBank& bank() const noexcept { return *bank_; }
    const std::vector<cplx>& a() const noexcept { return a_; }
    const std::vector<cplx>& b() const noexcept { return b_; }
    /// At grid node j.
    cplx value(std::size_t k, std::size_t j) const;
    cplx derivative(std::size_t k, std::size_t j) const;
    /// At arbitrary t (quintic Hermite between nodes).
    cplx value_at(std::size_t k, double t) const;
    cplx derivative_at(std::size_t k, double t) const;
    SampledSection sample() const;
    /// max over k of the relative residual of φ̈ + Fφ̇ + Gφ on the grid, with
    /// φ̈ from 6th-order differences of φ̇.
    double ode_residual() const;

private:
    std::shared_ptr<const ModeBank> bank_;
    std::vector<cplx> a_, b_;
};

Solution cauchy_solve(std::shared_ptr<const ModeBank> bank, const CauchyData& data);

/// i(T(t')T̄(t) − T̄(t')T(t)); sin(ω(t − t'))/ω on Minkowski.
cplx commutator_kernel(const ModeBank& bank, std::size_t k, double t, double tprime);
/// ∂/∂t of the kernel.
cplx commutator_kernel_dt(const ModeBank& bank, std::size_t k, double t, double tprime);

/// E[f] for f sampled on the bank grid; Simpson quadrature in time.
Solution apply_propagator(std::shared_ptr<const ModeBank> bank, const SampledSection& f);

/// ∫dt I(t) Σ_k f̂(t,−k) ĝ(t,k) on the bank grid (bilinear spacetime pairing).
cplx pairing(const ModeBank& bank, const SampledSection& f, const SampledSection& g);

struct AntisymmetryResult {
    cplx f_Eh;       ///< ⟨f, E[h]⟩
    cplx h_Ef;       ///< ⟨h, E[f]⟩
    double defect;   ///< |f_Eh + h_Ef| / max(|f_Eh|, |h_Ef|)
};

AntisymmetryResult antisymmetry(std::shared_ptr<const ModeBank> bank, const SampledSection& f,
                                const SampledSection& h);

/// a^d(t) Σ_k [û(t,−k) v̂'(t,k) − û'(t,−k) v̂(t,k)]
cplx symplectic_form(const Solution& u, const Solution& v, double t);

struct PlancherelResult {
    cplx direct;
    cplx mode_sum;
    double discrepancy;  ///< |direct − mode_sum| / max(1, |mode_sum|)
};

/// Inner product of two fields given by coefficients at time t: directly on
/// an M^d spatial grid (M ≥ 2K+1) weighted by exp ∫₀ᵗ dH, and as the mode sum
/// a^d(t) Σ conj f̂ ĥ.
PlancherelResult plancherel(const CosmologicalModel& model, const Lattice& lattice,
                            const std::vector<cplx>& f, const std::vector<cplx>& h, double t);
PlancherelResult plancherel(const ModeBank& bank, const SampledSection& f, const SampledSection& h,
                            std::size_t time_index);

struct ReconstructionResult {
    double residual;       ///< ‖E[f_v] − v‖ / ‖v‖ over grid and modes
    SampledSection f_v;
    std::string diagnostic;  ///< non-empty when the grid under-resolves the modes
};

/// v⁺ = v(1 − χ) with χ the quintic smoothstep from 1 (t ≤ 0) to 0 (t ≥ 1);
/// f_v = D v⁺ by second-order differences; returns the residual of E[f_v] = v.
ReconstructionResult surjectivity_reconstruct(std::shared_ptr<const ModeBank> bank, const Solution& v);

/// Real source with compact support inside the bank interval: one random
/// coefficient per ±k pair times a (1 − x²)⁴ bump at a random centre.
SampledSection random_source(const ModeBank& bank, std::uint64_t seed);
/// Uniform random coefficients in the unit square; `real` imposes
/// f̂(−k) = conj f̂(k).
CauchyData random_cauchy_data(const Lattice& lattice, std::uint64_t seed, bool real = false);

/// Long format: t,k1[,k2,k3],re,im in lattice order per time.
void write_section_csv(std::ostream& os, const SampledSection& s);
SampledSection read_section_csv(std::istream& is);
/// JSON manifest describing a section file.
std::string section_manifest_json(const SampledSection& s, double L, const std::string& csv_name);

/// Columns: t,tprime,value for one mode over the bank grid.
void write_kernel_csv(std::ostream& os, const ModeBank& bank, std::size_t k, std::size_t stride = 1);

}  // namespace modesum::prop
