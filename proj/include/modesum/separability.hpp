#pragma once

// Numerical checks of the time-separation conditions on a sampled chart
// with g_{0i} = 0: time-only g00, time-only trace of ĥ⁻¹∂ₜĥ, determinant
// factorization, the connection conditions, and metric factorization.

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace modesum::sep {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using ScalarField = std::function<double(double, const VectorXd&)>;
using MatrixField = std::function<MatrixXd(double, const VectorXd&)>;
using MatrixListField = std::function<std::vector<MatrixXd>(double, const VectorXd&)>;

/// A chart sampled on times × points. Callables may be evaluated off the
/// sample set (finite differences) unless `tabulated` is set, in which case
/// only sample points are valid and derivatives come from the time grid.
struct SampledChart {
    std::string name;
    int d = 3;   ///< spatial dimension
    int n = 1;   ///< fiber dimension
    std::vector<double> times;
    std::vector<VectorXd> points;

    ScalarField g00;
    MatrixField h;                        ///< spatial metric, d×d, positive definite
    std::optional<MatrixField> dh_dt;     ///< differenced when absent
    std::optional<MatrixField> gamma0;    ///< n×n
    std::optional<MatrixListField> gamma; ///< d matrices n×n
    bool tabulated = false;
    double fd_step = 1e-3;

    void validate() const;
    MatrixXd h_dot(double t, const VectorXd& x) const;
};

enum class Status { Pass, Fail, Skipped };
std::string to_string(Status s);

struct Witness {
    double t = 0.0;
    VectorXd x;
};

struct Verdict {
    std::string check;
    Status status = Status::Skipped;
    double residual = 0.0;   ///< worst residual over all samples
    double tol = 0.0;
    std::optional<Witness> witness;  ///< sample attaining the worst residual; set on fail
    std::string detail;

    bool passed() const noexcept { return status == Status::Pass; }
    bool failed() const noexcept { return status == Status::Fail; }
};

constexpr double kDefaultTol = 1e-8;

/// (i) g00 spatially constant on each time slice.
Verdict check_g00(const SampledChart& chart, double tol = kDefaultTol);

/// (ii) P = ½ Tr[ĥ⁻¹ ∂ₜĥ] spatially constant. On pass `P_out` receives P(t_j).
Verdict check_trace_condition(const SampledChart& chart, double tol = kDefaultTol,
                              std::vector<double>* P_out = nullptr);

/// log det ĥ(t,x) − log det ĥ(0,x) = 2∫₀ᵗ P. Skipped unless (ii) passes.
Verdict check_det_factorization(const SampledChart& chart, double tol = kDefaultTol);

/// (iii) the two commutator sums and Γ₀ = Γ₀(t). Returns one verdict per
/// sub-condition: "commutator", "curvature_commutator", "gamma0_time_only".
std::vector<Verdict> check_connection_conditions(const SampledChart& chart,
                                                 double tol = kDefaultTol);

/// ĥ(t,x) = ĥ₀(x)·B̂(t) with commuting factors. On pass `B_out` receives
/// B̂(t_j) = ĥ(t_j,x)ĥ(0,x)⁻¹.
Verdict check_metric_factorization(const SampledChart& chart, double tol = kDefaultTol,
                                   std::vector<MatrixXd>* B_out = nullptr);

/// Christoffel symbols Γᵏᵢⱼ (k = 0..d, i,j = 1..d) of diag(g00, −ĥ), as
/// (d+1) matrices d×d indexed by k.
std::vector<MatrixXd> christoffel_spatial(const SampledChart& chart, double t, const VectorXd& x);

struct SeparabilityReport {
    std::string chart;
    std::vector<Verdict> verdicts;
    std::vector<double> times;
    std::vector<double> P;         ///< P(t_j) when (ii) passes
    std::vector<MatrixXd> B;       ///< B̂(t_j) when metric factorization passes
    std::string condition_iv;      ///< "implied" or "not established"

    const Verdict& get(const std::string& check) const;
    bool all_passed() const;
    /// Names of the checks that failed.
    std::vector<std::string> failures() const;
};

SeparabilityReport check_all(const SampledChart& chart, double tol = kDefaultTol);

/// Analytic zoo charts on t ∈ [t_lo, t_hi] and points in [0, 2π)^d.
struct ZooOptions {
    int d = 2;
    double t_lo = 0.0, t_hi = 1.0;
    std::size_t n_times = 9;
    std::size_t n_points = 5;  ///< per axis
    double H0 = 1.0;           ///< expansion rate for exponential laws
};

/// Names: "frw", "frw_oneform", "bianchi", "g00_x", "trace_x", "rotating",
/// "gamma0_x", "bad_dhdt".
SampledChart zoo_chart(const std::string& name, const ZooOptions& options = {});
std::vector<std::string> zoo_names();

/// CSV with header t,x1..xd,g00,h11,h12,..,hdd (upper triangle, row-major)
/// on a full times × points tensor grid with uniform time spacing.
SampledChart load_chart_csv(std::istream& is, const std::string& name = "csv");

/// JSON text of the report with residuals and witnesses.
std::string report_json(const SeparabilityReport& report);

}  // namespace modesum::sep
