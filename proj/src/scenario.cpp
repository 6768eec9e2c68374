#include "modesum/scenario.hpp"

#include "modesum/oscillator.hpp"
#include "modesum/propagator.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <iomanip>
#include <set>
#include <sstream>

namespace modesum::scenario {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using cosmo::FieldKind;

namespace {

const std::vector<std::pair<Task, std::string>> kTasks = {
    {Task::SolveModes, "solve-modes"},
    {Task::Bounds, "bounds"},
    {Task::Instability, "instability"},
    {Task::CheckSeparability, "check-separability"},
    {Task::Propagator, "propagator"},
    {Task::Plancherel, "plancherel"},
    {Task::Reconstruct, "reconstruct"},
};

bool lattice_task(Task t) {
    return t == Task::Propagator || t == Task::Plancherel || t == Task::Reconstruct;
}

// Reads one JSON object, remembering which keys were consumed so that
// unknown keys can be reported.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where(), "expected an object");
    }

    std::string at(const std::string& key) const { return path_ + "/" + key; }
    std::string where() const { return path_.empty() ? "/" : path_; }
    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }
    double number(const std::string& key) {
        if (!has(key)) throw ConfigError(at(key), "required field is missing");
        const auto& v = raw(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(at(key), "expected a finite number");
        return x;
    }
    double positive(const std::string& key, double fallback) {
        const double x = number(key, fallback);
        if (!(x > 0.0)) throw ConfigError(at(key), "must be positive");
        return x;
    }
    long long integer(const std::string& key, long long fallback, long long lo, long long hi) {
        if (!has(key)) return fallback;
        const auto& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        const auto x = v.get<long long>();
        if (x < lo || x > hi) {
            throw ConfigError(at(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        return x;
    }
    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const auto& v = raw(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }
    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const auto& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v.get<bool>();
    }
    std::vector<double> numbers(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                throw ConfigError(at(key) + "/" + std::to_string(i), "expected a finite number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }
    cplx complex(const std::string& key, cplx fallback) {
        if (!has(key)) return fallback;
        const auto v = numbers(key);
        if (v.size() != 2) throw ConfigError(at(key), "expected [re, im]");
        return {v[0], v[1]};
    }
    std::vector<std::vector<int>> wave_vectors(const std::string& key, int d) {
        const auto& v = raw(key);
        if (!v.is_array() || v.empty()) throw ConfigError(at(key), "expected a non-empty array of wave vectors");
        std::vector<std::vector<int>> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = at(key) + "/" + std::to_string(i);
            if (!v[i].is_array() || static_cast<int>(v[i].size()) != d) {
                throw ConfigError(p, "expected " + std::to_string(d) + " integer components");
            }
            std::vector<int> k;
            for (std::size_t c = 0; c < v[i].size(); ++c) {
                if (!v[i][c].is_number_integer()) throw ConfigError(p + "/" + std::to_string(c), "expected an integer");
                k.push_back(v[i][c].get<int>());
            }
            out.push_back(std::move(k));
        }
        return out;
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw ConfigError(at(item.key()), "unknown field");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

ModelConfig parse_model(const json& j) {
    Obj o(j, "/model");
    ModelConfig m;
    m.law = o.string("law", "");
    if (m.law.empty()) throw ConfigError(o.at("law"), "required field is missing");
    if (m.law == "de_sitter") {
        m.H = o.number("H", 1.0);
    } else if (m.law == "power_law") {
        m.p = o.number("p", m.p);
        m.t0 = o.positive("t0", m.t0);
    } else if (m.law == "tabulated") {
        if (!o.has("table")) throw ConfigError(o.at("table"), "required field is missing");
        Obj t(o.raw("table"), "/model/table");
        if (!t.has("t")) throw ConfigError(t.at("t"), "required field is missing");
        if (!t.has("a")) throw ConfigError(t.at("a"), "required field is missing");
        m.table_t = t.numbers("t");
        m.table_a = t.numbers("a");
        if (m.table_t.size() != m.table_a.size()) throw ConfigError(t.at("a"), "must have as many entries as t");
        t.finish();
    } else if (m.law != "minkowski") {
        throw ConfigError(o.at("law"), "unknown law '" + m.law + "' (minkowski, de_sitter, power_law, tabulated)");
    }
    m.m0sq = o.number("m0sq", 0.0);
    m.xi = o.number("xi", 0.0);
    m.d = static_cast<int>(o.integer("d", 3, 1, 3));
    m.L = o.positive("L", m.L);
    if (o.has("interval")) {
        const auto iv = o.numbers("interval");
        if (iv.size() != 2 || !(iv[0] < iv[1])) throw ConfigError(o.at("interval"), "expected [lo, hi] with lo < hi");
        if (iv[0] > 0.0 || iv[1] < 0.0) throw ConfigError(o.at("interval"), "must contain t = 0");
        m.interval = Interval(iv[0], iv[1]);
    }
    o.finish();
    return m;
}

std::string label(const std::vector<int>& k) {
    std::string s = "k";
    for (int c : k) s += "_" + (c < 0 ? "m" + std::to_string(-c) : std::to_string(c));
    return s;
}

ordered_json cjson(cplx z) { return ordered_json::array({z.real(), z.imag()}); }

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Task task) {
    for (const auto& [t, name] : kTasks) {
        if (t == task) return name;
    }
    return "unknown";
}

Task task_from_string(const std::string& name) {
    for (const auto& [t, n] : kTasks) {
        if (n == name) return t;
    }
    throw ConfigError("/task", "unknown task '" + name + "'");
}

std::vector<std::string> task_names() {
    std::vector<std::string> out;
    for (const auto& entry : kTasks) out.push_back(entry.second);
    return out;
}

cosmo::CosmologicalModel ModelConfig::build() const {
    std::shared_ptr<const cosmo::ScaleFactor> a;
    if (law == "minkowski") a = cosmo::minkowski();
    else if (law == "de_sitter") a = cosmo::de_sitter(H);
    else if (law == "power_law") a = cosmo::power_law(p, t0);
    else if (law == "tabulated") a = cosmo::tabulated(table_t, table_a);
    else throw ConfigError("/model/law", "unknown law '" + law + "'");
    return cosmo::CosmologicalModel(a, m0sq, xi, d, L, interval);
}

ScenarioConfig parse_config(const json& doc, std::optional<Task> task) {
    Obj root(doc, "");
    ScenarioConfig c;
    c.source = ordered_json::parse(doc.dump());

    if (!root.has("schema_version")) throw ConfigError("/schema_version", "required field is missing");
    const auto version = root.integer("schema_version", 0, 0, 1 << 30);
    if (version != kSchemaVersion) {
        throw ConfigError("/schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                                 std::to_string(kSchemaVersion) + ")");
    }
    const std::string named = root.string("task", "");
    if (!named.empty()) {
        const Task t = task_from_string(named);
        if (task && *task != t) throw ConfigError("/task", "config is for '" + named + "' but '" + to_string(*task) + "' was requested");
        c.task = t;
    } else if (task) {
        c.task = *task;
    } else {
        throw ConfigError("/task", "no task given in the config or on the command line");
    }

    if (root.has("model")) {
        c.model = parse_model(root.raw("model"));
    } else if (c.task != Task::CheckSeparability) {
        throw ConfigError("/model", "required field is missing");
    }
    const int d = c.model ? c.model->d : 3;

    c.field = cosmo::FieldKind::Scalar;
    if (root.has("field")) {
        const auto name = root.string("field", "scalar");
        try {
            c.field = cosmo::field_kind_from_string(name);
        } catch (const ArgumentError&) {
            throw ConfigError("/field", "unknown field kind '" + name + "' (scalar, oneform_scalar, oneform_transversal)");
        }
        if (c.field != FieldKind::Scalar && d != 3) throw ConfigError("/field", "one-form fields require d = 3");
    }

    if (root.has("modes")) {
        Obj m(root.raw("modes"), "/modes");
        if (m.has("k") && m.has("cutoff")) throw ConfigError("/modes", "give either k or cutoff, not both");
        if (m.has("k")) {
            if (lattice_task(c.task)) throw ConfigError("/modes/k", "task '" + to_string(c.task) + "' uses the full lattice; give cutoff");
            c.k_list = m.wave_vectors("k", d);
        }
        c.cutoff = static_cast<int>(m.integer("cutoff", -1, 0, 64));
        m.finish();
    }
    if (c.cutoff < 0 && c.model) c.cutoff = prop::default_cutoff(d);
    if (c.k_list.empty() && c.model && !lattice_task(c.task)) {
        if (root.has("modes")) {
            const prop::Lattice lat(d, c.cutoff);
            for (std::size_t i = 0; i < lat.size(); ++i) c.k_list.push_back(lat.k(i));
        } else {
            std::vector<int> k(static_cast<std::size_t>(d), 0);
            k[0] = 1;
            c.k_list.push_back(k);
        }
    }

    if (root.has("grid")) {
        Obj g(root.raw("grid"), "/grid");
        c.points = static_cast<std::size_t>(g.integer("points", 513, 7, 1 << 20));
        g.finish();
    }
    c.seed = static_cast<std::uint64_t>(root.integer("seed", 1, 0, std::numeric_limits<long long>::max()));

    if (root.has("tolerances")) {
        Obj t(root.raw("tolerances"), "/tolerances");
        c.tol.ode = t.positive("ode", c.tol.ode);
        c.tol.invariant = t.positive("invariant", c.tol.invariant);
        c.tol.antisymmetry = t.positive("antisymmetry", c.tol.antisymmetry);
        c.tol.residual = t.positive("residual", c.tol.residual);
        c.tol.plancherel = t.positive("plancherel", c.tol.plancherel);
        c.tol.reconstruct = t.positive("reconstruct", c.tol.reconstruct);
        c.tol.separability = t.positive("separability", c.tol.separability);
        t.finish();
    }

    if (root.has("bounds")) {
        Obj b(root.raw("bounds"), "/bounds");
        c.T0 = b.complex("T0", c.T0);
        c.dT0 = b.complex("dT0", c.dT0);
        c.loose = b.boolean("loose", false);
        c.bound_samples = static_cast<std::size_t>(b.integer("samples", 2048, 16, 1 << 22));
        b.finish();
    }
    if (root.has("instability")) {
        Obj b(root.raw("instability"), "/instability");
        c.instability_samples = static_cast<std::size_t>(b.integer("samples", 4001, 3, 1 << 22));
        c.instability_tol = b.positive("tol", c.instability_tol);
        b.finish();
    }
    if (root.has("separability")) {
        Obj s(root.raw("separability"), "/separability");
        c.chart = s.string("chart", c.chart);
        c.chart_csv = s.string("csv", "");
        if (c.chart_csv.empty()) {
            const auto names = sep::zoo_names();
            if (std::find(names.begin(), names.end(), c.chart) == names.end()) {
                throw ConfigError(s.at("chart"), "unknown zoo chart '" + c.chart + "'");
            }
        }
        c.zoo.d = static_cast<int>(s.integer("d", c.zoo.d, 1, 3));
        c.zoo.t_lo = s.number("t_lo", c.zoo.t_lo);
        c.zoo.t_hi = s.number("t_hi", c.zoo.t_hi);
        if (!(c.zoo.t_lo < c.zoo.t_hi)) throw ConfigError(s.at("t_hi"), "must exceed t_lo");
        c.zoo.n_times = static_cast<std::size_t>(s.integer("n_times", 9, 5, 100000));
        c.zoo.n_points = static_cast<std::size_t>(s.integer("n_points", 5, 1, 1000));
        c.zoo.H0 = s.number("H0", c.zoo.H0);
        s.finish();
    }
    if (root.has("propagator")) {
        Obj p(root.raw("propagator"), "/propagator");
        c.pairs = static_cast<std::size_t>(p.integer("pairs", 3, 1, 1000));
        if (p.has("kernel_k")) {
            c.kernel_k = p.wave_vectors("kernel_k", d);
            for (std::size_t i = 0; i < c.kernel_k.size(); ++i) {
                for (int kc : c.kernel_k[i]) {
                    if (std::abs(kc) > c.cutoff) {
                        throw ConfigError(p.at("kernel_k") + "/" + std::to_string(i), "outside the cutoff box");
                    }
                }
            }
        }
        c.kernel_stride = static_cast<std::size_t>(p.integer("kernel_stride", 8, 1, 1 << 20));
        p.finish();
    }
    if (root.has("plancherel")) {
        Obj p(root.raw("plancherel"), "/plancherel");
        if (p.has("times")) {
            c.plancherel_times = p.numbers("times");
            if (c.plancherel_times.empty()) throw ConfigError(p.at("times"), "expected at least one time");
        }
        p.finish();
    }
    if (c.model && c.task == Task::Plancherel) {
        for (std::size_t i = 0; i < c.plancherel_times.size(); ++i) {
            const double t = c.plancherel_times[i];
            if (t < c.model->interval.lo || t > c.model->interval.hi) {
                throw ConfigError("/plancherel/times/" + std::to_string(i), "outside the model interval");
            }
        }
    }
    if (c.model && c.task == Task::Reconstruct && !(c.model->interval.lo < 0.0 && c.model->interval.hi > 1.0)) {
        throw ConfigError("/model/interval", "reconstruct needs lo < 0 and hi > 1");
    }
    root.finish();
    return c;
}

ScenarioConfig load_config(const fs::path& path, std::optional<Task> task) {
    std::ifstream in(path);
    if (!in) throw ConfigError("/", "cannot open config file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("/", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc, task);
}

// ---------------------------------------------------------------------------

namespace {

class Runner {
public:
    Runner(const ScenarioConfig& c, const RunOptions& o) : cfg_(c), opt_(o) {}

    RunResult go() {
        RunResult r;
        auto& m = r.manifest;
        m["schema_version"] = kSchemaVersion;
        m["task"] = to_string(cfg_.task);
        m["config"] = cfg_.source;
        m["strict"] = opt_.strict;
        m["tolerances"] = {{"ode", cfg_.tol.ode},
                           {"invariant", cfg_.tol.invariant},
                           {"antisymmetry", cfg_.tol.antisymmetry},
                           {"residual", cfg_.tol.residual},
                           {"plancherel", cfg_.tol.plancherel},
                           {"reconstruct", cfg_.tol.reconstruct},
                           {"separability", cfg_.tol.separability}};
        try {
            fs::create_directories(opt_.out_dir);
            dispatch();
            r.exit_code = Ok;
            m["status"] = "ok";
        } catch (const ConfigError& e) {
            fail(r, ConfigFailure, "config_error", e.what(), e.path());
        } catch (const ArgumentError& e) {
            fail(r, ConfigFailure, "config_error", e.what());
        } catch (const NotImplementedError& e) {
            fail(r, ConfigFailure, "config_error", e.what());
        } catch (const fs::filesystem_error& e) {
            fail(r, ConfigFailure, "config_error", e.what());
        } catch (const NumericError& e) {
            fail(r, NumericFailure, "numeric_failure", e.what());
        } catch (const PreconditionError& e) {
            fail(r, NumericFailure, "numeric_failure", e.what());
        }
        std::size_t violated = 0;
        for (const auto& inv : invariants_) violated += inv["passed"].get<bool>() ? 0 : 1;
        m["results"] = results_;
        m["invariants"] = invariants_;
        m["invariants_failed"] = violated;
        if (!warnings_.empty()) m["warnings"] = warnings_;
        if (r.exit_code == Ok && violated > 0 && opt_.strict) {
            r.exit_code = InvariantViolation;
            m["status"] = "invariant_violation";
        }
        m["exit_code"] = r.exit_code;
        m["artifacts"] = artifacts_;
        r.artifacts = artifacts_;
        try {
            std::ofstream out(opt_.out_dir / "manifest.json");
            out << m.dump(2) << '\n';
        } catch (...) {
        }
        return r;
    }

private:
    void fail(RunResult& r, int code, const std::string& status, const std::string& msg, const std::string& path = {}) {
        r.exit_code = code;
        r.manifest["status"] = status;
        ordered_json e;
        e["message"] = msg;
        if (!path.empty()) e["path"] = path;
        if (!context_.empty()) e["context"] = context_;
        r.manifest["error"] = e;
    }

    void at(std::string where) { context_ = std::move(where); }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        std::ofstream os(opt_.out_dir / name);
        if (!os) throw fs::filesystem_error("cannot write output file", opt_.out_dir / name, std::make_error_code(std::errc::io_error));
        os << std::setprecision(17);
        body(os);
        artifacts_.push_back(name);
    }

    void check(const std::string& name, double value, double tol, bool passed, const ordered_json& where = nullptr) {
        ordered_json inv;
        inv["name"] = name;
        if (!where.is_null()) inv["k"] = where;
        inv["value"] = value;
        inv["tol"] = tol;
        inv["passed"] = passed;
        invariants_.push_back(inv);
    }

    void dispatch() {
        switch (cfg_.task) {
            case Task::SolveModes: return solve_modes();
            case Task::Bounds: return bounds();
            case Task::Instability: return instability();
            case Task::CheckSeparability: return separability();
            case Task::Propagator: return propagator();
            case Task::Plancherel: return plancherel();
            case Task::Reconstruct: return reconstruct();
        }
    }

    cosmo::CosmologicalModel model() {
        at("cosmology.model");
        return cfg_.model->build();
    }

    std::shared_ptr<const prop::ModeBank> bank(const cosmo::CosmologicalModel& m) {
        at("propagator.build_mode_bank");
        prop::BankOptions o;
        o.K = cfg_.cutoff;
        o.tol = cfg_.tol.ode;
        o.points = cfg_.points;
        o.threads = opt_.threads;
        o.kind = cfg_.field;
        auto b = prop::build_mode_bank(m, o);
        results_["lattice"] = {{"d", b->lattice().d()}, {"K", b->lattice().K()}, {"size", b->lattice().size()},
                               {"classes", b->class_count()}};
        results_["time_grid"] = {{"lo", b->times().front()}, {"hi", b->times().back()},
                                 {"points", b->times().size()}, {"step", b->step()}};
        const double defect = b->normalization_defect();
        results_["normalization_defect"] = defect;
        check("normalization", defect, cfg_.tol.invariant, defect <= cfg_.tol.invariant);
        return b;
    }

    void solve_modes() {
        const auto m = model();
        ordered_json modes = ordered_json::array();
        for (const auto& k : cfg_.k_list) {
            const cosmo::ModeIndex idx{k, cfg_.field};
            at("cosmology.mode_coefficients " + label(k));
            const auto coeffs = cosmo::mode_coefficients(m, cfg_.field, idx);
            const double G0 = coeffs.G(0.0);
            const auto data = prop::mode_initial_data(prop::InitialData::Adiabatic, G0);
            cosmo::SolveOptions so;
            so.tol = cfg_.tol.ode;
            so.points = cfg_.points;
            at("cosmology.solve_mode " + label(k));
            const auto sol = cosmo::solve_mode(m, cfg_.field, idx, data[0], data[1], so);
            at("cosmology.normalize_mode " + label(k));
            const auto n = cosmo::normalize_mode(sol, coeffs);
            const double defect = cosmo::normalization_defect(n);
            ordered_json e;
            e["k"] = k;
            e["wave_number_sq"] = coeffs.wave_number_sq;
            e["G0"] = G0;
            e["T0"] = cjson(n.value(0.0));
            e["dT0"] = cjson(n.derivative(0.0));
            e["wronskian_drift"] = sol.wronskian_drift;
            e["normalization_defect"] = defect;
            e["mode_csv"] = "mode_" + label(k) + ".csv";
            e["coefficients_csv"] = "coefficients_" + label(k) + ".csv";
            modes.push_back(e);
            check("wronskian_drift", sol.wronskian_drift, cfg_.tol.invariant, sol.wronskian_drift <= cfg_.tol.invariant, k);
            check("normalization", defect, cfg_.tol.invariant, defect <= cfg_.tol.invariant, k);
            write("mode_" + label(k) + ".csv", [&](std::ostream& os) { cosmo::write_mode_csv(os, n); });
            write("coefficients_" + label(k) + ".csv", [&](std::ostream& os) { cosmo::write_coefficients_csv(os, coeffs, n.t); });
        }
        results_["modes"] = modes;
    }

    void bounds() {
        const auto m = model();
        std::optional<cosmo::LooseBoundReport> loose;
        if (cfg_.loose) {
            at("cosmology.loose_bound_constants");
            loose = cosmo::loose_bound_constants(m, cfg_.field, m.interval, cfg_.k_list);
            const auto& l = *loose;
            results_["loose"] = {{"R", l.R_R}, {"S", l.S_R}, {"T", l.T_R}, {"U", l.U_R},
                                 {"m", l.m_R}, {"n", l.n_R}, {"M", l.M_R}, {"N", l.N_R},
                                 {"p", l.p_R}, {"P", l.P_R}, {"Q", l.Q_R}, {"C", l.C_R},
                                 {"lambda_min", l.lambda_min}, {"s_abs", l.s_abs}, {"growth", l.growth},
                                 {"kappa_max", l.kappa_max}, {"B_max", l.B_max}, {"L_max", l.L_max}};
        }
        osc::IntegratorOptions io;
        io.rtol = io.atol = cfg_.tol.ode;
        ordered_json modes = ordered_json::array();
        for (const auto& k : cfg_.k_list) {
            const cosmo::ModeIndex idx{k, cfg_.field};
            at("cosmology.mode_coefficients " + label(k));
            const auto coeffs = cosmo::mode_coefficients(m, cfg_.field, idx);
            at("cosmology.reparam " + label(k));
            const auto rp = cosmo::reparam(coeffs, m.interval);
            const auto lam = cosmo::lambda_of_s(coeffs, rp);
            at("oscillator.bound_constants " + label(k));
            osc::BoundOptions bo;
            bo.samples = cfg_.bound_samples;
            const auto bc = osc::bound_constants(lam, bo);
            at("oscillator.integrate " + label(k));
            const auto traj = osc::integrate(lam, cfg_.T0, cfg_.dT0, cfg_.tol.ode);
            const double sup = osc::sup_abs(traj);
            const double bound = osc::uniform_bound(bc, std::abs(cfg_.T0), std::abs(cfg_.dT0));
            ordered_json e;
            e["k"] = k;
            e["s_interval"] = {rp.s_interval().lo, rp.s_interval().hi};
            e["constants"] = {{"A", bc.A}, {"c", bc.c}, {"kappa", bc.kappa}, {"B", bc.B}, {"D", bc.D},
                              {"e", bc.e}, {"L", bc.L}, {"R_abs", bc.R_abs}};
            e["bound"] = bound;
            e["observed_sup"] = sup;
            check("uniform_bound", sup, bound, sup <= bound, k);
            if (loose) {
                const double lb = cosmo::loose_bound(*loose, std::abs(cfg_.T0), std::abs(cfg_.dT0), coeffs.lambda(0.0));
                e["loose_bound"] = lb;
                check("loose_bound", sup, lb, sup <= lb, k);
            }
            e["trajectory_csv"] = "trajectory_" + label(k) + ".csv";
            modes.push_back(e);
            write("trajectory_" + label(k) + ".csv", [&](std::ostream& os) { osc::write_trajectory_csv(os, traj, lam); });
        }
        results_["modes"] = modes;
    }

    void instability() {
        const auto m = model();
        ordered_json modes = ordered_json::array();
        std::vector<std::pair<std::vector<int>, cosmo::InstabilityRegion>> all;
        const auto grid = linspace(m.interval.lo, m.interval.hi, cfg_.points);
        for (const auto& k : cfg_.k_list) {
            const cosmo::ModeIndex idx{k, cfg_.field};
            at("cosmology.mode_coefficients " + label(k));
            const auto coeffs = cosmo::mode_coefficients(m, cfg_.field, idx);
            at("cosmology.instability_regions " + label(k));
            const auto regions = cosmo::instability_regions(coeffs, m.interval, cfg_.instability_samples, cfg_.instability_tol);
            ordered_json e;
            e["k"] = k;
            e["wave_number_sq"] = coeffs.wave_number_sq;
            ordered_json list = ordered_json::array();
            for (const auto& reg : regions) {
                list.push_back({{"t_enter", reg.t_enter}, {"t_exit", reg.t_exit},
                                {"open_start", reg.open_start}, {"open_end", reg.open_end}});
                all.emplace_back(k, reg);
            }
            e["regions"] = list;
            e["coefficients_csv"] = "coefficients_" + label(k) + ".csv";
            modes.push_back(e);
            write("coefficients_" + label(k) + ".csv", [&](std::ostream& os) { cosmo::write_coefficients_csv(os, coeffs, grid); });
        }
        results_["modes"] = modes;
        write("instability.csv", [&](std::ostream& os) {
            os << "k,t_enter,t_exit,open_start,open_end\n";
            for (const auto& [k, reg] : all) {
                os << label(k) << ',' << reg.t_enter << ',' << reg.t_exit << ',' << reg.open_start << ',' << reg.open_end << '\n';
            }
        });
    }

    void separability() {
        sep::SampledChart chart;
        if (!cfg_.chart_csv.empty()) {
            at("separability.load_chart_csv");
            std::ifstream in(cfg_.chart_csv);
            if (!in) throw ConfigError("/separability/csv", "cannot open '" + cfg_.chart_csv + "'");
            chart = sep::load_chart_csv(in, fs::path(cfg_.chart_csv).stem().string());
        } else {
            at("separability.zoo_chart");
            chart = sep::zoo_chart(cfg_.chart, cfg_.zoo);
        }
        at("separability.check_all");
        const auto report = sep::check_all(chart, cfg_.tol.separability);
        results_["report"] = ordered_json::parse(sep::report_json(report));
        for (const auto& v : report.verdicts) check(v.check, v.residual, v.tol, !v.failed());
        write("verdicts.csv", [&](std::ostream& os) {
            os << "check,status,residual,tol,witness_t\n";
            for (const auto& v : report.verdicts) {
                os << v.check << ',' << sep::to_string(v.status) << ',' << v.residual << ',' << v.tol << ',';
                if (v.witness) os << v.witness->t;
                os << '\n';
            }
        });
        if (!report.P.empty()) {
            write("trace_P.csv", [&](std::ostream& os) {
                os << "t,P\n";
                for (std::size_t j = 0; j < report.P.size(); ++j) os << report.times[j] << ',' << report.P[j] << '\n';
            });
        }
    }

    void propagator() {
        const auto m = model();
        const auto b = bank(m);
        ordered_json pairs = ordered_json::array();
        for (std::size_t i = 0; i < cfg_.pairs; ++i) {
            at("propagator.random_source pair " + std::to_string(i));
            const auto f = prop::random_source(*b, cfg_.seed + 2 * i);
            const auto h = prop::random_source(*b, cfg_.seed + 2 * i + 1);
            at("propagator.antisymmetry pair " + std::to_string(i));
            const auto ar = prop::antisymmetry(b, f, h);
            at("propagator.apply_propagator pair " + std::to_string(i));
            const auto Ef = prop::apply_propagator(b, f);
            const double res = Ef.ode_residual();
            const auto sampled = Ef.sample();
            const double real = sampled.reality_defect();
            pairs.push_back({{"f_Eh", cjson(ar.f_Eh)}, {"h_Ef", cjson(ar.h_Ef)}, {"antisymmetry_defect", ar.defect},
                             {"ode_residual", res}, {"reality_defect", real}});
            check("antisymmetry", ar.defect, cfg_.tol.antisymmetry, ar.defect <= cfg_.tol.antisymmetry);
            check("ode_residual", res, cfg_.tol.residual, res <= cfg_.tol.residual);
            if (i == 0) {
                write("source.csv", [&](std::ostream& os) { prop::write_section_csv(os, f); });
                write("propagated.csv", [&](std::ostream& os) { prop::write_section_csv(os, sampled); });
                results_["sections"] = {ordered_json::parse(prop::section_manifest_json(f, m.L, "source.csv")),
                                        ordered_json::parse(prop::section_manifest_json(sampled, m.L, "propagated.csv"))};
            }
        }
        results_["pairs"] = pairs;
        for (const auto& k : cfg_.kernel_k) {
            at("propagator.commutator_kernel " + label(k));
            const auto idx = b->lattice().index(k);
            write("kernel_" + label(k) + ".csv", [&](std::ostream& os) { prop::write_kernel_csv(os, *b, idx, cfg_.kernel_stride); });
        }
    }

    void plancherel() {
        const auto m = model();
        const prop::Lattice lat(m.d, cfg_.cutoff);
        const auto data = prop::random_cauchy_data(lat, cfg_.seed);
        ordered_json rows = ordered_json::array();
        std::vector<std::pair<double, prop::PlancherelResult>> all;
        for (double t : cfg_.plancherel_times) {
            at("propagator.plancherel t=" + std::to_string(t));
            const auto r = prop::plancherel(m, lat, data.f0, data.f1, t);
            rows.push_back({{"t", t}, {"direct", cjson(r.direct)}, {"mode_sum", cjson(r.mode_sum)},
                            {"discrepancy", r.discrepancy}});
            check("plancherel", r.discrepancy, cfg_.tol.plancherel, r.discrepancy <= cfg_.tol.plancherel);
            all.emplace_back(t, r);
        }
        results_["lattice"] = {{"d", lat.d()}, {"K", lat.K()}, {"size", lat.size()}};
        results_["times"] = rows;
        write("plancherel.csv", [&](std::ostream& os) {
            os << "t,direct_re,direct_im,mode_sum_re,mode_sum_im,discrepancy\n";
            for (const auto& [t, r] : all) {
                os << t << ',' << r.direct.real() << ',' << r.direct.imag() << ',' << r.mode_sum.real() << ','
                   << r.mode_sum.imag() << ',' << r.discrepancy << '\n';
            }
        });
    }

    void reconstruct() {
        const auto m = model();
        const auto b = bank(m);
        at("propagator.cauchy_solve");
        const auto v = prop::cauchy_solve(b, prop::random_cauchy_data(b->lattice(), cfg_.seed, true));
        at("propagator.surjectivity_reconstruct");
        const auto r = prop::surjectivity_reconstruct(b, v);
        results_["residual"] = r.residual;
        if (!r.diagnostic.empty()) {
            results_["diagnostic"] = r.diagnostic;
            warnings_.push_back(r.diagnostic);
        }
        check("reconstruction", r.residual, cfg_.tol.reconstruct, r.residual <= cfg_.tol.reconstruct);
        write("solution.csv", [&](std::ostream& os) { prop::write_section_csv(os, v.sample()); });
        write("source.csv", [&](std::ostream& os) { prop::write_section_csv(os, r.f_v); });
    }

    const ScenarioConfig& cfg_;
    const RunOptions& opt_;
    std::string context_;
    ordered_json results_ = ordered_json::object();
    ordered_json invariants_ = ordered_json::array();
    std::vector<std::string> warnings_;
    std::vector<std::string> artifacts_;
};

}  // namespace

RunResult run(const ScenarioConfig& config, const RunOptions& options) {
    return Runner(config, options).go();
}

void write_error_manifest(const fs::path& out_dir, const std::string& kind, const std::string& message,
                          const std::string& path) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    ordered_json m;
    m["schema_version"] = kSchemaVersion;
    m["status"] = kind;
    m["error"] = {{"message", message}};
    if (!path.empty()) m["error"]["path"] = path;
    std::ofstream out(out_dir / "manifest.json");
    if (out) out << m.dump(2) << '\n';
}

}  // namespace modesum::scenario
