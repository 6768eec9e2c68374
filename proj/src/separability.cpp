#include "modesum/separability.hpp"

#include "modesum/errors.hpp"
#include "modesum/numerics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>

namespace modesum::sep {

namespace {

std::string describe(double t, const VectorXd& x) {
    std::ostringstream os;
    os << "t=" << t << " x=(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << ")";
    return os.str();
}

template <class F>
auto central4(const F& f, double h) -> decltype(f(0.0)) {
    return (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h);
}

std::vector<MatrixXd> central4_list(const std::function<std::vector<MatrixXd>(double)>& f, double h) {
    const double coef[4] = {1.0, -8.0, 8.0, -1.0};
    const double off[4] = {-2.0, -1.0, 1.0, 2.0};
    std::vector<MatrixXd> out;
    for (int q = 0; q < 4; ++q) {
        const auto v = f(off[q] * h);
        if (out.empty()) {
            for (const auto& m : v) out.push_back(MatrixXd::Zero(m.rows(), m.cols()));
        }
        for (std::size_t j = 0; j < v.size(); ++j) out[j] += coef[q] / (12.0 * h) * v[j];
    }
    return out;
}

Eigen::LLT<MatrixXd> factor(const MatrixXd& h, double t, const VectorXd& x) {
    Eigen::LLT<MatrixXd> llt(h);
    if (llt.info() != Eigen::Success || !h.allFinite()) {
        throw NumericError("spatial metric is not positive definite at " + describe(t, x));
    }
    return llt;
}

double log_det(const Eigen::LLT<MatrixXd>& llt) {
    const MatrixXd& L = llt.matrixLLT();
    double s = 0.0;
    for (Eigen::Index i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
    return 2.0 * s;
}

/// Running worst residual with its sample.
struct Worst {
    double value = 0.0;
    double t = 0.0;
    VectorXd x;
    std::string what;

    void offer(double r, double tt, const VectorXd& xx, const std::string& w = {}) {
        if (!(r <= value)) {  // NaN counts as worst
            value = r;
            t = tt;
            x = xx;
            what = w;
        }
    }
};

Verdict finish(const std::string& name, const Worst& w, double tol, std::string detail = {}) {
    Verdict v;
    v.check = name;
    v.tol = tol;
    v.residual = w.value;
    v.status = (w.value < tol) ? Status::Pass : Status::Fail;
    if (v.failed()) {
        v.witness = Witness{w.t, w.x};
        if (detail.empty()) detail = w.what;
    }
    v.detail = std::move(detail);
    return v;
}

std::vector<MatrixXd> zero_gammas(const SampledChart& c) {
    return std::vector<MatrixXd>(static_cast<std::size_t>(c.d), MatrixXd::Zero(c.n, c.n));
}

/// ∫ of grid samples f on a uniform grid from index i0 to every index.
std::vector<double> cumulative_hermite(const std::vector<double>& t, const std::vector<double>& f,
                                       std::size_t i0) {
    const std::size_t n = t.size();
    std::vector<double> df(n, 0.0), out(n, 0.0);
    if (n >= 5) {
        const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= 2 && i + 2 < n) {
                df[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
            } else if (i < 2) {
                df[i] = (-25 * f[i] + 48 * f[i + 1] - 36 * f[i + 2] + 16 * f[i + 3] - 3 * f[i + 4]) / (12 * h);
            } else {
                df[i] = (25 * f[i] - 48 * f[i - 1] + 36 * f[i - 2] - 16 * f[i - 3] + 3 * f[i - 4]) / (12 * h);
            }
        }
    }
    auto panel = [&](std::size_t a) {
        const double h = t[a + 1] - t[a];
        return 0.5 * h * (f[a] + f[a + 1]) + h * h / 12.0 * (df[a] - df[a + 1]);
    };
    for (std::size_t i = i0 + 1; i < n; ++i) out[i] = out[i - 1] + panel(i - 1);
    for (std::size_t i = i0; i-- > 0;) out[i] = out[i + 1] - panel(i);
    return out;
}

}  // namespace

std::string to_string(Status s) {
    switch (s) {
        case Status::Pass: return "pass";
        case Status::Fail: return "fail";
        case Status::Skipped: return "skipped";
    }
    return "unknown";
}

void SampledChart::validate() const {
    if (d < 1 || d > 3) throw ArgumentError("chart: spatial dimension must be 1, 2 or 3");
    if (n < 1) throw ArgumentError("chart: fiber dimension must be positive");
    if (times.empty() || points.empty()) throw ArgumentError("chart: sample grids must be nonempty");
    if (!g00 || !h) throw ArgumentError("chart: g00 and h are required");
    for (const auto& x : points) {
        if (x.size() != d) throw ArgumentError("chart: point dimension does not match d");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw ArgumentError("chart: times must be strictly increasing");
    }
    if (tabulated && !dh_dt) throw ArgumentError("chart: tabulated charts need a time derivative table");
}

MatrixXd SampledChart::h_dot(double t, const VectorXd& x) const {
    if (dh_dt) return (*dh_dt)(t, x);
    return central4([&](double dt) -> MatrixXd { return h(t + dt, x); }, fd_step);
}

Verdict check_g00(const SampledChart& chart, double tol) {
    chart.validate();
    Worst w;
    for (double t : chart.times) {
        const double ref = chart.g00(t, chart.points.front());
        for (const auto& x : chart.points) {
            w.offer(std::abs(chart.g00(t, x) - ref) / (1.0 + std::abs(ref)), t, x,
                    "g00 varies along the slice");
        }
    }
    return finish("g00_time_only", w, tol);
}

namespace {

double trace_P(const SampledChart& chart, double t, const VectorXd& x) {
    const MatrixXd hm = chart.h(t, x);
    const auto llt = factor(hm, t, x);
    return 0.5 * llt.solve(chart.h_dot(t, x)).trace();
}

}  // namespace

Verdict check_trace_condition(const SampledChart& chart, double tol, std::vector<double>* P_out) {
    chart.validate();
    Worst w;
    std::vector<double> P;
    for (double t : chart.times) {
        const double ref = trace_P(chart, t, chart.points.front());
        P.push_back(ref);
        for (const auto& x : chart.points) {
            w.offer(std::abs(trace_P(chart, t, x) - ref) / (1.0 + std::abs(ref)), t, x,
                    "Tr[h^-1 dh/dt] varies along the slice");
        }
    }
    Verdict v = finish("trace_time_only", w, tol);
    if (v.passed() && P_out) *P_out = std::move(P);
    return v;
}

Verdict check_det_factorization(const SampledChart& chart, double tol) {
    const Verdict pre = check_trace_condition(chart, tol);
    if (!pre.passed()) {
        Verdict v;
        v.check = "det_factorization";
        v.tol = tol;
        v.status = Status::Skipped;
        v.detail = "requires the trace condition, which failed";
        return v;
    }
    const VectorXd& x0 = chart.points.front();
    std::vector<double> intP(chart.times.size());
    if (chart.tabulated) {
        const auto it = std::find(chart.times.begin(), chart.times.end(), 0.0);
        if (it == chart.times.end()) throw PreconditionError("det_factorization: tabulated chart needs t = 0");
        std::vector<double> P;
        for (double t : chart.times) P.push_back(trace_P(chart, t, x0));
        intP = cumulative_hermite(chart.times, P, static_cast<std::size_t>(it - chart.times.begin()));
    } else {
        auto P = [&](double t) { return trace_P(chart, t, x0); };
        for (std::size_t j = 0; j < chart.times.size(); ++j) {
            intP[j] = integrate_adaptive(P, 0.0, chart.times[j], 1e-13);
        }
    }
    Worst w;
    for (const auto& x : chart.points) {
        const double ld0 = log_det(factor(chart.h(0.0, x), 0.0, x));
        for (std::size_t j = 0; j < chart.times.size(); ++j) {
            const double t = chart.times[j];
            const double ld = log_det(factor(chart.h(t, x), t, x));
            w.offer(std::abs(ld - ld0 - 2.0 * intP[j]) / (1.0 + std::abs(ld)), t, x,
                    "log det h(t,x) - log det h(0,x) differs from 2 int P");
        }
    }
    return finish("det_factorization", w, tol);
}

std::vector<MatrixXd> christoffel_spatial(const SampledChart& chart, double t, const VectorXd& x) {
    const int d = chart.d, D = d + 1;
    auto full = [&](double tt, const VectorXd& xx) {
        MatrixXd G = MatrixXd::Zero(D, D);
        G(0, 0) = chart.g00(tt, xx);
        G.bottomRightCorner(d, d) = -chart.h(tt, xx);
        return G;
    };
    std::vector<MatrixXd> dG(static_cast<std::size_t>(D), MatrixXd::Zero(D, D));
    const double hs = chart.fd_step;
    dG[0](0, 0) = central4([&](double dt) { return chart.g00(t + dt, x); }, hs);
    dG[0].bottomRightCorner(d, d) = -chart.h_dot(t, x);
    for (int i = 0; i < d; ++i) {
        dG[static_cast<std::size_t>(i + 1)] = central4(
            [&](double dx) -> MatrixXd {
                VectorXd y = x;
                y[i] += dx;
                return full(t, y);
            },
            hs);
    }
    const MatrixXd Ginv = full(t, x).inverse();
    std::vector<MatrixXd> out(static_cast<std::size_t>(D), MatrixXd::Zero(d, d));
    for (int k = 0; k < D; ++k) {
        for (int i = 1; i < D; ++i) {
            for (int j = 1; j < D; ++j) {
                double s = 0.0;
                for (int l = 0; l < D; ++l) {
                    s += Ginv(k, l) * (dG[static_cast<std::size_t>(i)](l, j) +
                                       dG[static_cast<std::size_t>(j)](l, i) -
                                       dG[static_cast<std::size_t>(l)](i, j));
                }
                out[static_cast<std::size_t>(k)](i - 1, j - 1) = 0.5 * s;
            }
        }
    }
    return out;
}

std::vector<Verdict> check_connection_conditions(const SampledChart& chart, double tol) {
    chart.validate();
    const int d = chart.d, n = chart.n;
    auto G0 = [&](double t, const VectorXd& x) -> MatrixXd {
        return chart.gamma0 ? (*chart.gamma0)(t, x) : MatrixXd::Zero(n, n);
    };
    auto Gi = [&](double t, const VectorXd& x) {
        return chart.gamma ? (*chart.gamma)(t, x) : zero_gammas(chart);
    };
    const bool has_connection = chart.gamma0.has_value() || chart.gamma.has_value();
    if (has_connection && chart.tabulated) {
        throw ArgumentError("connection checks need an analytic chart");
    }

    Worst w1, w2, w3;
    for (double t : chart.times) {
        const MatrixXd ref0 = G0(t, chart.points.front());
        for (const auto& x : chart.points) {
            const MatrixXd g0 = G0(t, x);
            w3.offer((g0 - ref0).norm() / (1.0 + ref0.norm()), t, x, "Gamma_0 varies along the slice");
            if (!has_connection || g0.norm() == 0.0) continue;

            const auto gs = Gi(t, x);
            if (static_cast<int>(gs.size()) != d) throw ArgumentError("chart: need d connection matrices");
            const MatrixXd ginv = -chart.h(t, x).inverse();  // g^{ij}, signature (+,-,...)
            double gscale = 0.0;
            for (const auto& m : gs) gscale = std::max(gscale, m.norm());

            for (int j = 0; j < d; ++j) {
                MatrixXd c = MatrixXd::Zero(n, n);
                for (int i = 0; i < d; ++i) {
                    c += ginv(i, j) * (g0 * gs[static_cast<std::size_t>(i)] - gs[static_cast<std::size_t>(i)] * g0);
                }
                w1.offer(c.norm() / (1.0 + g0.norm() * gscale), t, x,
                         "sum_i g^ij [Gamma_0, Gamma_i] != 0 for j=" + std::to_string(j + 1));
            }

            const auto chr = christoffel_spatial(chart, t, x);
            // dgs[i][j] = ∂_i Γ_j
            std::vector<std::vector<MatrixXd>> dgs(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) {
                dgs[static_cast<std::size_t>(i)] = central4_list(
                    [&](double dx) {
                        VectorXd y = x;
                        y[i] += dx;
                        return Gi(t, y);
                    },
                    chart.fd_step);
            }
            MatrixXd c2 = MatrixXd::Zero(n, n);
            double xscale = 0.0;
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    MatrixXd X = dgs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
                                 gs[static_cast<std::size_t>(i)] * gs[static_cast<std::size_t>(j)];
                    X -= chr[0](i, j) * g0;
                    for (int k = 0; k < d; ++k) X -= chr[static_cast<std::size_t>(k + 1)](i, j) * gs[static_cast<std::size_t>(k)];
                    xscale = std::max(xscale, X.norm());
                    c2 += ginv(i, j) * (g0 * X - X * g0);
                }
            }
            w2.offer(c2.norm() / (1.0 + g0.norm() * xscale), t, x,
                     "sum_ij g^ij [Gamma_0, dGamma + Gamma Gamma - Chr Gamma] != 0");
        }
    }
    return {finish("commutator", w1, tol), finish("curvature_commutator", w2, tol),
            finish("gamma0_time_only", w3, tol)};
}

Verdict check_metric_factorization(const SampledChart& chart, double tol, std::vector<MatrixXd>* B_out) {
    chart.validate();
    Worst w;
    std::vector<MatrixXd> B;
    std::vector<MatrixXd> h0(chart.points.size()), h0inv(chart.points.size());
    for (std::size_t m = 0; m < chart.points.size(); ++m) {
        const auto& x = chart.points[m];
        h0[m] = chart.h(0.0, x);
        h0inv[m] = factor(h0[m], 0.0, x).solve(MatrixXd::Identity(chart.d, chart.d));
    }
    for (double t : chart.times) {
        const MatrixXd ref = chart.h(t, chart.points.front()) * h0inv.front();
        B.push_back(ref);
        for (std::size_t m = 0; m < chart.points.size(); ++m) {
            const auto& x = chart.points[m];
            const MatrixXd M = chart.h(t, x) * h0inv[m];
            w.offer((M - ref).norm() / (1.0 + ref.norm()), t, x, "h(t,x) h(0,x)^-1 varies along the slice");
            w.offer((M - M.transpose()).norm() / (1.0 + M.norm()), t, x, "B(t) is not symmetric");
            w.offer((M * h0[m] - h0[m] * M).norm() / (1.0 + M.norm() * h0[m].norm()), t, x,
                    "B(t) does not commute with h(0,x)");
        }
    }
    Verdict v = finish("metric_factorization", w, tol);
    if (v.passed() && B_out) *B_out = std::move(B);
    return v;
}

const Verdict& SeparabilityReport::get(const std::string& check) const {
    for (const auto& v : verdicts) {
        if (v.check == check) return v;
    }
    throw ArgumentError("report has no check named '" + check + "'");
}

bool SeparabilityReport::all_passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed(); });
}

std::vector<std::string> SeparabilityReport::failures() const {
    std::vector<std::string> out;
    for (const auto& v : verdicts) {
        if (v.failed()) out.push_back(v.check);
    }
    return out;
}

SeparabilityReport check_all(const SampledChart& chart, double tol) {
    SeparabilityReport r;
    r.chart = chart.name;
    r.times = chart.times;
    r.verdicts.push_back(check_g00(chart, tol));
    r.verdicts.push_back(check_trace_condition(chart, tol, &r.P));
    r.verdicts.push_back(check_det_factorization(chart, tol));
    for (auto& v : check_connection_conditions(chart, tol)) r.verdicts.push_back(std::move(v));
    r.verdicts.push_back(check_metric_factorization(chart, tol, &r.B));
    r.condition_iv = r.get("metric_factorization").passed()
                         ? "implied (torus chart with factorized metric: plane waves are time-independent eigenfunctions)"
                         : "not established";
    return r;
}

// ---------------------------------------------------------------------------
// Zoo

std::vector<std::string> zoo_names() {
    return {"frw", "frw_oneform", "bianchi", "g00_x", "trace_x", "rotating", "gamma0_x", "bad_dhdt"};
}

SampledChart zoo_chart(const std::string& name, const ZooOptions& o) {
    if (o.d < 1 || o.d > 3) throw ArgumentError("zoo: d must be 1, 2 or 3");
    if (o.n_times < 1 || o.n_points < 1) throw ArgumentError("zoo: grids must be nonempty");
    SampledChart c;
    c.name = name;
    c.d = o.d;
    c.times = linspace(o.t_lo, o.t_hi, o.n_times);
    {
        const auto axis = linspace(0.0, 2.0 * M_PI, o.n_points + 1);
        std::size_t total = 1;
        for (int i = 0; i < o.d; ++i) total *= o.n_points;
        for (std::size_t idx = 0; idx < total; ++idx) {
            VectorXd x(o.d);
            std::size_t r = idx;
            for (int i = 0; i < o.d; ++i) {
                x[i] = axis[r % o.n_points] + 0.1;  // off the symmetric points of sin
                r /= o.n_points;
            }
            c.points.push_back(x);
        }
    }
    const int d = o.d;
    const double H0 = o.H0;
    auto frw_h = [d, H0](double t, const VectorXd&) -> MatrixXd {
        return std::exp(2.0 * H0 * t) * MatrixXd::Identity(d, d);
    };
    c.g00 = [](double, const VectorXd&) { return 1.0; };
    c.h = frw_h;

    if (name == "frw") {
        c.dh_dt = [d, H0](double t, const VectorXd&) -> MatrixXd {
            return 2.0 * H0 * std::exp(2.0 * H0 * t) * MatrixXd::Identity(d, d);
        };
    } else if (name == "frw_oneform") {
        c.n = 2;
        c.gamma0 = [H0](double, const VectorXd&) -> MatrixXd {
            MatrixXd g = MatrixXd::Zero(2, 2);
            g(1, 1) = -H0;
            return g;
        };
        c.gamma = [d](double, const VectorXd&) {
            std::vector<MatrixXd> g;
            for (int i = 0; i < d; ++i) {
                MatrixXd m = MatrixXd::Zero(2, 2);
                m(0, 0) = 0.3 * (i + 1);
                m(1, 1) = -0.2 * (i + 1);
                g.push_back(m);
            }
            return g;
        };
    } else if (name == "bianchi") {
        c.h = [d, H0](double t, const VectorXd& x) -> MatrixXd {
            MatrixXd m = MatrixXd::Zero(d, d);
            for (int i = 0; i < d; ++i) {
                const double s = std::sin(x[i]);
                m(i, i) = (1.0 + 0.3 * s * s) * std::exp(2.0 * H0 * (1.0 + 0.5 * i) * t);
            }
            return m;
        };
    } else if (name == "g00_x") {
        c.g00 = [](double, const VectorXd& x) { return 1.0 + 0.1 * std::sin(x[0]); };
    } else if (name == "trace_x") {
        c.h = [d](double t, const VectorXd& x) -> MatrixXd {
            MatrixXd m = std::exp(2.0 * t) * MatrixXd::Identity(d, d);
            m(d - 1, d - 1) = std::exp(2.0 * t * x[0]);
            return m;
        };
    } else if (name == "rotating") {
        if (d < 2) throw ArgumentError("zoo: rotating anisotropy needs d >= 2");
        c.h = [d, H0](double t, const VectorXd& x) -> MatrixXd {
            MatrixXd R = MatrixXd::Identity(d, d);
            const double th = x[0];
            R(0, 0) = std::cos(th);
            R(0, 1) = -std::sin(th);
            R(1, 0) = std::sin(th);
            R(1, 1) = std::cos(th);
            MatrixXd D = std::exp(2.0 * H0 * t) * MatrixXd::Identity(d, d);
            D(1, 1) = std::exp(4.0 * H0 * t);
            return R * D * R.transpose();
        };
    } else if (name == "gamma0_x") {
        c.n = 2;
        c.gamma0 = [H0](double, const VectorXd& x) -> MatrixXd {
            MatrixXd g = MatrixXd::Zero(2, 2);
            g(1, 1) = -H0 * (1.0 + 0.1 * std::sin(x[0]));
            return g;
        };
    } else if (name == "bad_dhdt") {
        // supplied ∂ₜĥ inconsistent with ĥ (three times too large)
        c.dh_dt = [d, H0](double t, const VectorXd&) -> MatrixXd {
            return 6.0 * H0 * std::exp(2.0 * H0 * t) * MatrixXd::Identity(d, d);
        };
    } else {
        throw ArgumentError("unknown zoo chart '" + name + "'");
    }
    return c;
}

// ---------------------------------------------------------------------------
// CSV charts

SampledChart load_chart_csv(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line)) throw ArgumentError("chart csv: empty input");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            header.push_back(cell);
        }
    }
    int d = 0;
    for (int cand = 1; cand <= 3; ++cand) {
        if (static_cast<int>(header.size()) == 2 + cand + cand * (cand + 1) / 2) d = cand;
    }
    if (d == 0) throw ArgumentError("chart csv: column count does not match any d in {1,2,3}");
    {
        std::vector<std::string> expect{"t"};
        for (int i = 1; i <= d; ++i) expect.push_back("x" + std::to_string(i));
        expect.push_back("g00");
        for (int i = 1; i <= d; ++i)
            for (int j = i; j <= d; ++j) expect.push_back("h" + std::to_string(i) + std::to_string(j));
        if (header != expect) throw ArgumentError("chart csv: unexpected header");
    }

    struct Row {
        double t;
        VectorXd x;
        double g00;
        MatrixXd h;
    };
    std::vector<Row> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ArgumentError("chart csv: bad number on line " + std::to_string(lineno));
            }
        }
        if (v.size() != header.size()) throw ArgumentError("chart csv: wrong column count on line " + std::to_string(lineno));
        Row r;
        r.t = v[0];
        r.x = VectorXd(d);
        for (int i = 0; i < d; ++i) r.x[i] = v[static_cast<std::size_t>(1 + i)];
        r.g00 = v[static_cast<std::size_t>(1 + d)];
        r.h = MatrixXd(d, d);
        std::size_t k = static_cast<std::size_t>(2 + d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) r.h(i, j) = r.h(j, i) = v[k++];
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ArgumentError("chart csv: no samples");

    std::vector<double> times;
    std::vector<VectorXd> points;
    for (const auto& r : rows) {
        if (std::find(times.begin(), times.end(), r.t) == times.end()) times.push_back(r.t);
        if (std::none_of(points.begin(), points.end(), [&](const VectorXd& p) { return p == r.x; }))
            points.push_back(r.x);
    }
    std::sort(times.begin(), times.end());
    if (rows.size() != times.size() * points.size()) {
        throw ArgumentError("chart csv: samples do not form a full times x points grid");
    }
    if (times.size() < 5) throw ArgumentError("chart csv: need at least 5 time slices");
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (std::abs(times[i] - (times.front() + dt * static_cast<double>(i))) > 1e-9 * (1.0 + std::abs(times[i])))
            throw ArgumentError("chart csv: time grid must be uniform");
    }

    struct Table {
        std::vector<double> times;
        std::vector<VectorXd> points;
        std::vector<double> g00;   // [ti * P + pi]
        std::vector<MatrixXd> h, dh;
        std::size_t index(double t, const VectorXd& x) const {
            const auto it = std::find_if(times.begin(), times.end(),
                                         [&](double s) { return std::abs(s - t) <= 1e-12 * (1.0 + std::abs(s)); });
            const auto jt = std::find_if(points.begin(), points.end(),
                                         [&](const VectorXd& p) { return (p - x).norm() <= 1e-12 * (1.0 + p.norm()); });
            if (it == times.end() || jt == points.end()) {
                throw ArgumentError("tabulated chart evaluated off its samples at " + describe(t, x));
            }
            return static_cast<std::size_t>(it - times.begin()) * points.size() +
                   static_cast<std::size_t>(jt - points.begin());
        }
    };
    auto tab = std::make_shared<Table>();
    tab->times = times;
    tab->points = points;
    const std::size_t P = points.size(), T = times.size();
    tab->g00.assign(T * P, 0.0);
    tab->h.assign(T * P, MatrixXd());
    for (const auto& r : rows) {
        const std::size_t ti = static_cast<std::size_t>(std::find(times.begin(), times.end(), r.t) - times.begin());
        const std::size_t pi = static_cast<std::size_t>(
            std::find_if(points.begin(), points.end(), [&](const VectorXd& p) { return p == r.x; }) - points.begin());
        tab->g00[ti * P + pi] = r.g00;
        tab->h[ti * P + pi] = r.h;
    }
    tab->dh.assign(T * P, MatrixXd());
    for (std::size_t pi = 0; pi < P; ++pi) {
        auto f = [&](std::size_t ti) -> const MatrixXd& { return tab->h[ti * P + pi]; };
        for (std::size_t i = 0; i < T; ++i) {
            MatrixXd v;
            if (i >= 2 && i + 2 < T) {
                v = (f(i - 2) - 8 * f(i - 1) + 8 * f(i + 1) - f(i + 2)) / (12 * dt);
            } else if (i < 2) {
                v = (-25 * f(i) + 48 * f(i + 1) - 36 * f(i + 2) + 16 * f(i + 3) - 3 * f(i + 4)) / (12 * dt);
            } else {
                v = (25 * f(i) - 48 * f(i - 1) + 36 * f(i - 2) - 16 * f(i - 3) + 3 * f(i - 4)) / (12 * dt);
            }
            tab->dh[i * P + pi] = v;
        }
    }

    SampledChart c;
    c.name = name;
    c.d = d;
    c.times = times;
    c.points = points;
    c.tabulated = true;
    c.g00 = [tab](double t, const VectorXd& x) { return tab->g00[tab->index(t, x)]; };
    c.h = [tab](double t, const VectorXd& x) { return tab->h[tab->index(t, x)]; };
    c.dh_dt = [tab](double t, const VectorXd& x) { return tab->dh[tab->index(t, x)]; };
    return c;
}

// ---------------------------------------------------------------------------

std::string report_json(const SeparabilityReport& r) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["chart"] = r.chart;
    j["all_passed"] = r.all_passed();
    ordered_json checks = ordered_json::array();
    for (const auto& v : r.verdicts) {
        ordered_json c;
        c["check"] = v.check;
        c["status"] = to_string(v.status);
        c["residual"] = v.residual;
        c["tol"] = v.tol;
        if (v.witness) {
            std::vector<double> x(v.witness->x.data(), v.witness->x.data() + v.witness->x.size());
            c["witness"] = {{"t", v.witness->t}, {"x", x}};
        }
        if (!v.detail.empty()) c["detail"] = v.detail;
        checks.push_back(c);
    }
    j["checks"] = checks;
    if (!r.P.empty()) {
        j["P"] = {{"t", r.times}, {"value", r.P}};
    }
    if (!r.B.empty()) {
        ordered_json bs = ordered_json::array();
        for (const auto& b : r.B) {
            ordered_json rowsj = ordered_json::array();
            for (Eigen::Index i = 0; i < b.rows(); ++i) {
                std::vector<double> row(static_cast<std::size_t>(b.cols()));
                for (Eigen::Index k = 0; k < b.cols(); ++k) row[static_cast<std::size_t>(k)] = b(i, k);
                rowsj.push_back(row);
            }
            bs.push_back(rowsj);
        }
        j["B"] = {{"t", r.times}, {"value", bs}};
    }
    j["condition_iv"] = r.condition_iv;
    return j.dump(2);
}

}  // namespace modesum::sep
