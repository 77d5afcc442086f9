// spinboson: thermodynamics, critical lines, and collective-excitation
// spectra of three spin-boson models, with a finite-N exact-diagonalization
// oracle. Exit codes: 0 ok, 1 validation error, 2 numerical failure, 3 I/O.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spinboson/spinboson.hpp"

using namespace spinboson;
using nlohmann::json;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    int threads = 1;
    int seed = 0; // reserved; no stochastic components currently
    bool verbose = false;
};

struct ParamFlags {
    std::string model;
    std::optional<double> omega, omega0, g1, g2, g;
    std::optional<long> n_atoms;
    std::string beta;
};

void add_param_flags(CLI::App* cmd, ParamFlags& f, bool with_beta = true) {
    cmd->add_option("--model", f.model,
                    "sigma-z | dicke | dicke-rwa | dicke-crw | intensity | "
                    "intensity-rwa | intensity-crw");
    cmd->add_option("--omega", f.omega, "atomic gap Omega");
    cmd->add_option("--omega0", f.omega0, "mode frequency omega0");
    cmd->add_option("--g1", f.g1, "rotating coupling");
    cmd->add_option("--g2", f.g2, "counter-rotating coupling");
    cmd->add_option("--g", f.g, "sigma-z coupling (or g1=g2=g shorthand for dicke)");
    cmd->add_option("--n-atoms", f.n_atoms, "number of atoms N");
    if (with_beta)
        cmd->add_option("--beta", f.beta, "inverse temperature, or 'inf' for zero T");
}

std::map<std::string, std::string> load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open config");
    return sweep::parse_kv_text(in);
}

std::pair<ModelKind, ModelParams> resolve_params(const GlobalOptions& g, const ParamFlags& f,
                                                 ModelKind default_kind) {
    std::optional<ModelKind> kind;
    ModelParams p;
    for (const auto& [k, v] : load_config(g.config_path)) {
        std::optional<ModelKind> parsed;
        if (apply_param_key(k, v, parsed, p) && parsed) kind = parsed;
    }
    if (!f.model.empty()) kind = parse_model_kind(f.model);
    if (f.omega) p.omega_big = *f.omega;
    if (f.omega0) p.omega0 = *f.omega0;
    if (f.g1) p.g1 = *f.g1;
    if (f.g2) p.g2 = *f.g2;
    if (f.g) p.g = *f.g;
    if (f.n_atoms) p.n_atoms = *f.n_atoms;
    if (!f.beta.empty() && !parse_beta_token(f.beta, p.beta, p.zero_temperature))
        throw DomainError("beta", "cannot parse --beta " + f.beta);
    const ModelKind resolved = kind.value_or(default_kind);
    if (resolved.model != Model::sigma_z && p.g > 0.0 && p.g1 == 0.0 && p.g2 == 0.0)
        p.g1 = p.g2 = p.g; // standard Dicke shorthand
    return {resolved, validate_params(resolved, p)};
}

class OutputSink {
public:
    explicit OutputSink(const std::string& path) : path_(path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw IoError(path, "cannot open output");
        }
    }
    std::ostream& stream() { return path_.empty() ? std::cout : file_; }
    ~OutputSink() {
        if (file_.is_open()) file_.flush();
    }

private:
    std::string path_;
    std::ofstream file_;
};

std::string fmt(double v) { return sweep::format_double(v); }

json report_to_json(const ThermoReport& rep) {
    json j;
    j["ln_z_ratio"] = rep.ln_z_ratio;
    j["ln_z_total"] = rep.ln_z_total;
    j["mean_energy"] = rep.mean_energy;
    j["entropy"] = rep.entropy;
    j["order_parameter"] = rep.order_parameter;
    j["source"] = rep.source == ReportSource::analytic ? "analytic" : "oracle";
    json t;
    t["fock_cutoff"] = rep.truncation.fock_cutoff;
    t["frequency_cutoff"] = rep.truncation.frequency_cutoff;
    t["tail_estimate"] = rep.truncation.tail_estimate;
    t["converged"] = rep.truncation.converged;
    j["truncation"] = t;
    return j;
}

// ---------------------------------------------------------------------- thermo

int cmd_thermo(const GlobalOptions& g, const ParamFlags& f, const std::string& policy) {
    auto [kind, p] = resolve_params(g, f, {Model::sigma_z, CouplingMode::general});
    const auto zp = policy == "drop" ? thermo::ZeroModePolicy::drop
                                     : thermo::ZeroModePolicy::keep;
    const ThermoReport rep = thermo::analytic_report(kind, p, zp);
    json j = report_to_json(rep);
    j["params"] = params_to_json(kind, p);
    OutputSink sink(g.out_path);
    sink.stream() << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------- betac

int cmd_betac(const GlobalOptions& g, const ParamFlags& f) {
    auto [kind, p] = resolve_params(g, f, {Model::generalized_dicke, CouplingMode::general});
    if (kind.model != Model::generalized_dicke)
        throw DomainError("model", "betac applies to the generalized Dicke model");
    const auto cp = thermo::critical_beta(p);
    OutputSink sink(g.out_path);
    const char* label = cp.kind == thermo::CriticalCase::thermal ? "thermal"
                        : cp.kind == thermo::CriticalCase::quantum_critical
                            ? "quantum_critical"
                            : "none";
    if (g.format == "csv") {
        sink.stream() << "case,beta_c,coupling_at_zero_t\r\n"
                      << label << ',' << fmt(cp.beta_c) << ','
                      << fmt(cp.coupling_at_zero_t) << "\r\n";
    } else {
        json j;
        j["case"] = label;
        j["beta_c"] = cp.beta_c;
        j["coupling_at_zero_t"] = cp.coupling_at_zero_t;
        j["params"] = params_to_json(kind, p);
        sink.stream() << j.dump(2) << "\n";
    }
    return 0;
}

// ----------------------------------------------------------------------- ratio

int cmd_ratio(const GlobalOptions& g, const ParamFlags& f, long cutoff, bool with_bound) {
    auto [kind, p] = resolve_params(g, f, {Model::generalized_dicke, CouplingMode::general});
    thermo::RatioResult r;
    if (kind.model == Model::sigma_z) {
        r.ln_value = thermo::lnz_shift_sigma_z(p);
        r.value = std::exp(r.ln_value);
        r.zero_mode_factor = r.value; // the whole shift is the zero mode
    } else if (kind.model == Model::generalized_dicke) {
        r = thermo::ratio_product(p, cutoff);
    } else {
        r = thermo::intensity_zero_t_ratio(p, cutoff);
    }
    json j;
    j["value"] = r.value;
    j["ln_value"] = r.ln_value;
    j["zero_mode_factor"] = r.zero_mode_factor;
    j["tail_estimate"] = r.tail_estimate;
    j["M_used"] = r.M_used;
    j["critical_flag"] = r.critical_flag;
    if (with_bound && kind.model == Model::generalized_dicke) {
        const auto b = thermo::ratio_upper_bound(p);
        j["upper_bound"] = b.value;
        j["upper_bound_ln"] = b.ln_value;
    }
    j["params"] = params_to_json(kind, p);
    OutputSink sink(g.out_path);
    sink.stream() << j.dump(2) << "\n";
    return 0;
}

// -------------------------------------------------------------------- spectrum

int cmd_spectrum(const GlobalOptions& g, const ParamFlags& f, const std::string& beta_arg,
                 double e_max, long grid_n) {
    auto [kind, p] = resolve_params(g, f, {Model::generalized_dicke, CouplingMode::general});
    if (kind.model != Model::generalized_dicke)
        throw DomainError("model", "spectrum applies to the generalized Dicke model");
    double beta = p.beta;
    if (beta_arg == "critical") {
        const auto cp = thermo::critical_beta(p);
        if (cp.kind != thermo::CriticalCase::thermal)
            throw DomainError("beta", "no finite critical beta at these couplings");
        beta = cp.beta_c;
    } else if (!beta_arg.empty()) {
        bool zero_t = false;
        if (!parse_beta_token(beta_arg, beta, zero_t) || zero_t)
            throw DomainError("beta", "--beta must be a number or 'critical'");
    }
    spectrum::SolveOptions opt;
    if (e_max > 0.0) opt.e_max = e_max;
    if (grid_n > 0) opt.grid_n = grid_n;
    const auto res = spectrum::solve_spectrum(p, beta, opt);
    OutputSink sink(g.out_path);
    if (g.format == "json") {
        json roots = json::array();
        for (const auto& r : res.roots)
            roots.push_back({{"E", r.energy},
                             {"residual", r.residual},
                             {"bracket_lo", r.bracket_lo},
                             {"bracket_hi", r.bracket_hi},
                             {"multiplicity", r.multiplicity}});
        json j;
        j["roots"] = roots;
        j["beta"] = beta;
        j["e_max"] = res.e_max;
        j["params"] = params_to_json(kind, p);
        sink.stream() << j.dump(2) << "\n";
    } else {
        sink.stream() << "E,residual,bracket_lo,bracket_hi\r\n";
        for (const auto& r : res.roots)
            sink.stream() << fmt(r.energy) << ',' << fmt(r.residual) << ','
                          << fmt(r.bracket_lo) << ',' << fmt(r.bracket_hi) << "\r\n";
    }
    return 0;
}

// -------------------------------------------------------------------- exactdiag

int cmd_exactdiag(const GlobalOptions& g, const ParamFlags& f, long n_max,
                  const std::string& observables, bool as_printed, bool convergence) {
    auto [kind, p] = resolve_params(g, f, {Model::generalized_dicke, CouplingMode::general});
    OutputSink sink(g.out_path);
    if (as_printed) {
        if (kind.model != Model::intensity_dependent)
            throw DomainError("model", "--nonhermitian-as-printed applies to intensity");
        ed::BasisSpec basis;
        basis.n_max = n_max;
        basis.n_atoms = p.n_atoms;
        const auto h = ed::build_hamiltonian(kind, p, basis, true);
        sink.stream() << "# as-printed (non-Hermitian) matrix; thermal computation refused\n";
        sink.stream() << "# symmetry defect = " << fmt(h.symmetry_defect()) << "\n";
        Eigen::MatrixXd dense(h.matrix);
        for (long i = 0; i < h.dimension; ++i) {
            for (long j = 0; j < h.dimension; ++j)
                sink.stream() << (j ? "," : "") << fmt(dense(i, j));
            sink.stream() << "\n";
        }
        return 0;
    }
    if (convergence) {
        if (kind.model != Model::sigma_z)
            throw DomainError("model", "--convergence-report applies to sigma-z");
        sink.stream() << "n_atoms,finite_n_shift,tanh_quarter_shift,tanh_half_shift\r\n";
        for (const auto& row : ed::sigma_z_convergence_report(p, {1, 2, 4, 8, 16, 32, 64}))
            sink.stream() << row.n_atoms << ',' << fmt(row.finite_n_shift) << ','
                          << fmt(row.tanh_quarter_shift) << ',' << fmt(row.tanh_half_shift)
                          << "\r\n";
        return 0;
    }

    ThermoReport rep;
    if (kind.model == Model::sigma_z) {
        if (p.zero_temperature)
            throw DomainError("beta", "thermal oracle needs finite beta");
        rep = ed::thermal_report(ed::sigma_z_block_spectrum(p, n_max), p.beta, p.n_atoms);
        const double delta =
            std::abs(ed::sigma_z_matrix_lnz(p, n_max + 10) - rep.ln_z_total);
        rep.truncation.converged = delta <= 1e-6;
        rep.truncation.tail_estimate = delta;
        if (!rep.truncation.converged) throw TruncationUnconverged(delta, n_max);
    } else {
        ed::BasisSpec basis;
        basis.n_max = n_max;
        basis.n_atoms = p.n_atoms;
        const auto h = ed::build_hamiltonian(kind, p, basis);
        if (p.zero_temperature) {
            const auto gs = ed::ground_state(h);
            rep.source = ReportSource::oracle;
            rep.mean_energy = gs.energy;
            double acc = 0.0;
            for (long k = 0; k < h.dimension; ++k)
                acc += static_cast<double>(h.basis.boson_of(k)) * gs.vector[k] * gs.vector[k];
            rep.order_parameter = acc / static_cast<double>(p.n_atoms);
            rep.entropy = 0.0;
            rep.ln_z_total = std::numeric_limits<double>::quiet_NaN();
        } else {
            rep = ed::thermal_report(ed::spectral_data(h, ed::diagonalize(h)), p.beta,
                                     p.n_atoms);
            ed::BasisSpec bigger = basis;
            bigger.n_max += 10;
            const auto h2 = ed::build_hamiltonian(kind, p, bigger);
            const auto rep2 = ed::thermal_report(ed::spectral_data(h2, ed::diagonalize(h2)),
                                                 p.beta, p.n_atoms);
            const double delta = std::abs(rep2.ln_z_total - rep.ln_z_total);
            rep.truncation.converged = delta <= 1e-6;
            rep.truncation.tail_estimate = delta;
            if (!rep.truncation.converged) throw TruncationUnconverged(delta, n_max);
        }
    }
    rep.truncation.fock_cutoff = n_max;

    json j = report_to_json(rep);
    j["params"] = params_to_json(kind, p);
    if (!observables.empty()) {
        json sel;
        std::stringstream ss(observables);
        std::string tok;
        json all = report_to_json(rep);
        while (std::getline(ss, tok, ','))
            if (all.contains(tok)) sel[tok] = all[tok];
        j = sel;
        j["params"] = params_to_json(kind, p);
    }
    sink.stream() << j.dump(2) << "\n";
    return 0;
}

// --------------------------------------------------------------------- sweep-ed

int cmd_sweep_ed(const GlobalOptions& g, const ParamFlags& f, long n_max,
                 const std::string& which, double gmin, double gmax, long steps) {
    auto [kind, p] = resolve_params(g, f, {Model::generalized_dicke, CouplingMode::general});
    ed::SweepCoupling coupling = ed::SweepCoupling::g_equal;
    if (which == "g1") coupling = ed::SweepCoupling::g1_only;
    else if (which == "g2") coupling = ed::SweepCoupling::g2_only;
    else if (which != "g") throw DomainError("coupling", "--coupling must be g, g1 or g2");
    if (steps < 3) throw DomainError("steps", "--steps must be >= 3");
    std::vector<double> grid(static_cast<size_t>(steps));
    for (long i = 0; i < steps; ++i)
        grid[static_cast<size_t>(i)] =
            gmin + (gmax - gmin) * static_cast<double>(i) / static_cast<double>(steps - 1);
    ed::BasisSpec basis;
    basis.n_max = n_max;
    basis.n_atoms = p.n_atoms;
    const auto res = ed::order_parameter_sweep(kind, p, coupling, grid, basis);
    OutputSink sink(g.out_path);
    if (g.format == "json") {
        json pts = json::array();
        for (const auto& pt : res.points)
            pts.push_back({{"g", pt.g},
                           {"order_parameter", pt.order_parameter},
                           {"susceptibility", pt.susceptibility},
                           {"converged", pt.converged}});
        json j;
        j["points"] = pts;
        j["susceptibility_argmax"] = res.susceptibility_argmax;
        j["params"] = params_to_json(kind, p);
        sink.stream() << j.dump(2) << "\n";
    } else {
        sink.stream() << "g,order_parameter,susceptibility,converged_flag\r\n";
        for (const auto& pt : res.points)
            sink.stream() << fmt(pt.g) << ',' << fmt(pt.order_parameter) << ','
                          << fmt(pt.susceptibility) << ',' << (pt.converged ? 1 : 0)
                          << "\r\n";
    }
    return 0;
}

// ------------------------------------------------------------------------ sweep

int cmd_sweep(const GlobalOptions& g, const std::vector<std::string>& overrides,
              bool format_given, bool threads_given) {
    auto kv = load_config(g.config_path);
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw DomainError("set", "--set expects key=value, got: " + ov);
        kv[ov.substr(0, eq)] = ov.substr(eq + 1);
    }
    sweep::SweepConfig cfg = sweep::config_from_kv(kv);
    if (!g.out_path.empty()) cfg.output_path = g.out_path;
    if (format_given)
        cfg.format = g.format == "json" ? sweep::Format::json : sweep::Format::csv;
    if (threads_given) cfg.threads = g.threads;
    sweep::validate_config(cfg);
    const sweep::SweepResult res = sweep::run_sweep(cfg);

    OutputSink sink(cfg.output_path);
    if (cfg.format == sweep::Format::json) {
        sweep::write_json(sink.stream(), cfg, res);
    } else {
        sweep::write_csv(sink.stream(), cfg, res);
        if (!cfg.output_path.empty()) {
            const std::string spath = cfg.output_path + ".summary.json";
            std::ofstream s(spath);
            if (!s) throw IoError(spath, "cannot write summary");
            s << sweep::summary_json(cfg, res).dump(2) << "\n";
        }
    }
    if (g.verbose)
        std::cerr << "sweep: " << res.points.size() << " points, "
                  << res.critical_line.size() << " critical-line vertices\n";
    return 0;
}

// -------------------------------------------------------------- matsubara-check

int cmd_matsubara_check(const GlobalOptions& g, double omega_big, double beta, long cutoff,
                        int n_bosonic) {
    OutputSink sink(g.out_path);
    sink.stream() << "omega,big_omega,beta,sum,closed_form,abs_err\r\n";
    auto row = [&](double w, double sum, double closed) {
        sink.stream() << fmt(w) << ',' << fmt(omega_big) << ',' << fmt(beta) << ','
                      << fmt(sum) << ',' << fmt(closed) << ',' << fmt(std::abs(sum - closed))
                      << "\r\n";
    };
    const auto lor = matsubara::lorentzian_fermi_sum(omega_big, beta, cutoff);
    row(0.0, lor.value, matsubara::lorentzian_closed_form(omega_big, beta));
    const auto k0 = matsubara::cancellation_kernel_sum(0.0, omega_big, beta, cutoff);
    row(0.0, k0.value, matsubara::cancellation_kernel_zero_closed_form(omega_big, beta));
    for (int n = 1; n <= n_bosonic; ++n) {
        const double w = 2.0 * M_PI * n / beta;
        const auto k = matsubara::cancellation_kernel_sum(w, omega_big, beta, cutoff);
        row(w, k.value, 0.0);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spin-boson superradiance toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    GlobalOptions g;
    app.add_option("--config", g.config_path, "flat key=value config file");
    app.add_option("--out", g.out_path, "output path (default: stdout)");
    auto* format_opt = app.add_option("--format", g.format, "csv | json")
                           ->check(CLI::IsMember({"csv", "json"}));
    auto* threads_opt = app.add_option("--threads", g.threads, "worker threads for sweeps");
    app.add_option("--seed", g.seed, "reserved; no stochastic components currently");
    app.add_flag("--verbose", g.verbose, "progress to stderr");

    ParamFlags f;
    std::string zero_mode = "keep";
    auto* thermo_cmd = app.add_subcommand("thermo", "analytic ThermoReport as JSON");
    add_param_flags(thermo_cmd, f);
    thermo_cmd->add_option("--zero-mode", zero_mode, "keep | drop (sigma-z policy)")
        ->check(CLI::IsMember({"keep", "drop"}));

    auto* betac_cmd = app.add_subcommand("betac", "critical temperature / quantum critical point");
    add_param_flags(betac_cmd, f);

    long ratio_cutoff = thermo::kDefaultRatioCutoff;
    bool with_bound = false;
    auto* ratio_cmd = app.add_subcommand("ratio", "partition-function ratio Z/Z0");
    add_param_flags(ratio_cmd, f);
    ratio_cmd->add_option("--cutoff", ratio_cutoff, "bosonic product cutoff M");
    ratio_cmd->add_flag("--with-bound", with_bound, "also evaluate the product upper bound");

    std::string beta_arg;
    double e_max = 0.0;
    long grid_n = 0;
    auto* spectrum_cmd = app.add_subcommand("spectrum", "collective excitation roots");
    add_param_flags(spectrum_cmd, f, false);
    spectrum_cmd->add_option("--beta", beta_arg, "number or 'critical'");
    spectrum_cmd->add_option("--e-max", e_max, "scan window upper edge");
    spectrum_cmd->add_option("--grid", grid_n, "scan cells");

    long n_max = 40;
    std::string observables;
    bool as_printed = false, convergence = false;
    auto* ed_cmd = app.add_subcommand("exactdiag", "finite-N truncated-Fock oracle");
    add_param_flags(ed_cmd, f);
    ed_cmd->add_option("--n-max", n_max, "boson truncation");
    ed_cmd->add_option("--observables", observables, "comma list to select fields");
    ed_cmd->add_flag("--nonhermitian-as-printed", as_printed,
                     "print the as-printed intensity matrix; refuses thermal use");
    ed_cmd->add_flag("--convergence-report", convergence,
                     "sigma-z finite-N vs thermodynamic-limit shift table");

    std::string coupling = "g";
    double gmin = 0.0, gmax = 1.0;
    long steps = 33;
    auto* sweep_ed_cmd = app.add_subcommand("sweep-ed", "ground-state order parameter sweep");
    add_param_flags(sweep_ed_cmd, f);
    sweep_ed_cmd->add_option("--n-max", n_max, "boson truncation");
    sweep_ed_cmd->add_option("--coupling", coupling, "swept coupling: g (g1=g2), g1, g2");
    sweep_ed_cmd->add_option("--min", gmin, "grid start");
    sweep_ed_cmd->add_option("--max", gmax, "grid end");
    sweep_ed_cmd->add_option("--steps", steps, "grid points");

    std::vector<std::string> overrides;
    auto* sweep_cmd = app.add_subcommand("sweep", "phase-diagram sweep from config");
    sweep_cmd->add_option("--set", overrides, "override config entries key=value");

    double mc_omega = 1.0, mc_beta = 3.0;
    long mc_cutoff = matsubara::kDefaultCutoff;
    int mc_n = 5;
    auto* mc_cmd = app.add_subcommand("matsubara-check", "kernel sums vs closed forms (CSV)");
    mc_cmd->add_option("--big-omega", mc_omega, "atomic gap Omega");
    mc_cmd->add_option("--beta", mc_beta, "inverse temperature");
    mc_cmd->add_option("--cutoff", mc_cutoff, "fermionic cutoff M");
    mc_cmd->add_option("--n-bosonic", mc_n, "bosonic frequencies to check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (thermo_cmd->parsed()) return cmd_thermo(g, f, zero_mode);
        if (betac_cmd->parsed()) return cmd_betac(g, f);
        if (ratio_cmd->parsed()) return cmd_ratio(g, f, ratio_cutoff, with_bound);
        if (spectrum_cmd->parsed()) return cmd_spectrum(g, f, beta_arg, e_max, grid_n);
        if (ed_cmd->parsed())
            return cmd_exactdiag(g, f, n_max, observables, as_printed, convergence);
        if (sweep_ed_cmd->parsed())
            return cmd_sweep_ed(g, f, n_max, coupling, gmin, gmax, steps);
        if (sweep_cmd->parsed())
            return cmd_sweep(g, overrides, format_opt->count() > 0, threads_opt->count() > 0);
        if (mc_cmd->parsed())
            return cmd_matsubara_check(g, mc_omega, mc_beta, mc_cutoff, mc_n);
    } catch (const DomainError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
