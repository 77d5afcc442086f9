#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinboson/errors.hpp"
#include "spinboson/exact_diag.hpp"
#include "spinboson/model.hpp"
#include "spinboson/spectrum.hpp"
#include "spinboson/thermo.hpp"
#include "spinboson/version.hpp"

namespace spinboson::sweep {

enum class AxisScale { linear, log };

struct Axis {
    std::string param; // one of: g1, g2, g, beta, omega, omega0
    double min = 0.0;
    double max = 1.0;
    long steps = 2;
    AxisScale scale = AxisScale::linear;
};

enum class Output { betac, condition, ratio, spectrum, order_parameter };

inline std::string to_string(Output o) {
    switch (o) {
    case Output::betac: return "betac";
    case Output::condition: return "condition";
    case Output::ratio: return "ratio";
    case Output::spectrum: return "spectrum";
    case Output::order_parameter: return "order_parameter";
    }
    return "";
}

inline Output parse_output(const std::string& s) {
    if (s == "betac") return Output::betac;
    if (s == "condition") return Output::condition;
    if (s == "ratio") return Output::ratio;
    if (s == "spectrum") return Output::spectrum;
    if (s == "order_parameter") return Output::order_parameter;
    throw DomainError("outputs", "unknown sweep output: " + s);
}

enum class Format { csv, json };

struct SweepConfig {
    ModelKind kind;
    ModelParams params;
    std::vector<Axis> axes;           // 1 or 2
    std::vector<Output> outputs;      // nonempty, unique, ordered as given
    std::string output_path;          // empty -> stdout
    std::string cache_path;           // empty -> no cache
    Format format = Format::csv;
    int threads = 1;
    long n_max = 40;                  // Fock cutoff for order_parameter points
    long ratio_cutoff = thermo::kDefaultRatioCutoff;
};

inline void validate_config(const SweepConfig& cfg) {
    if (cfg.axes.empty() || cfg.axes.size() > 2)
        throw DomainError("axes", "sweep needs 1 or 2 axes");
    std::set<std::string> names;
    for (const Axis& ax : cfg.axes) {
        static const std::set<std::string> allowed = {"g1", "g2", "g",
                                                      "beta", "omega", "omega0"};
        if (!allowed.count(ax.param))
            throw DomainError("axis.param", "cannot sweep parameter: " + ax.param);
        if (!names.insert(ax.param).second)
            throw DomainError("axis.param", "swept parameters must be distinct");
        if (ax.steps < 2)
            throw DomainError("axis.steps", "each axis needs steps >= 2");
        if (ax.scale == AxisScale::log && (ax.min <= 0.0 || ax.max <= 0.0))
            throw DomainError("axis.scale", "log scale requires a positive range");
    }
    if (cfg.outputs.empty())
        throw DomainError("outputs", "sweep output set must not be empty");
    if (cfg.threads < 1)
        throw DomainError("threads", "threads must be >= 1");
}

inline double axis_value(const Axis& ax, long i) {
    const double t = static_cast<double>(i) / static_cast<double>(ax.steps - 1);
    if (ax.scale == AxisScale::log)
        return ax.min * std::pow(ax.max / ax.min, t);
    return ax.min + (ax.max - ax.min) * t;
}

inline void apply_axis(ModelParams& p, const std::string& name, double v) {
    if (name == "g1") p.g1 = v;
    else if (name == "g2") p.g2 = v;
    else if (name == "g") { p.g = v; }
    else if (name == "beta") { p.beta = v; p.zero_temperature = false; }
    else if (name == "omega") p.omega_big = v;
    else if (name == "omega0") p.omega0 = v;
}

enum class Phase { normal, superradiant, no_transition, quantum_critical };

inline std::string to_string(Phase ph) {
    switch (ph) {
    case Phase::normal: return "normal";
    case Phase::superradiant: return "superradiant";
    case Phase::no_transition: return "no_transition";
    case Phase::quantum_critical: return "quantum_critical";
    }
    return "";
}

struct PhasePoint {
    std::vector<double> axis_values;
    Phase phase = Phase::no_transition;
    std::map<std::string, double> outputs;
    std::string diagnostics; // per-point error text; empty when clean
};

inline constexpr double kBoundaryTol = 1e-9;

// Transition condition used for labeling; NaN where no closed-form
// condition exists (sigma-z everywhere; intensity at finite temperature).
inline double labeling_condition(const ModelKind& kind, const ModelParams& p) {
    switch (kind.model) {
    case Model::sigma_z:
        return std::numeric_limits<double>::quiet_NaN();
    case Model::generalized_dicke:
        return thermo::transition_condition(p);
    case Model::intensity_dependent:
        if (p.zero_temperature)
            return p.g2 * p.g2 / (p.omega_big * p.omega0);
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline Phase classify(const ModelKind& kind, const ModelParams& p, double cond) {
    if (std::isnan(cond)) return kind.model == Model::sigma_z ? Phase::no_transition
                                                              : Phase::normal;
    // ties within tolerance of the boundary go to the boundary label
    if (std::abs(cond - 1.0) <= kBoundaryTol) return Phase::quantum_critical;
    if (cond > 1.0) return Phase::superradiant;
    if (kind.model == Model::generalized_dicke && !p.zero_temperature) {
        const double s = p.g1 + p.g2;
        if (s * s > p.omega_big * p.omega0) return Phase::normal;
        return Phase::no_transition;
    }
    return p.zero_temperature ? Phase::no_transition : Phase::normal;
}

inline PhasePoint evaluate_point(const SweepConfig& cfg, ModelParams p,
                                 const std::vector<double>& axis_values) {
    PhasePoint pt;
    pt.axis_values = axis_values;
    try {
        p = validate_params(cfg.kind, p); // axis values may leave the domain
    } catch (const DomainError& e) {
        pt.phase = Phase::no_transition;
        pt.diagnostics = std::string("params: ") + e.what();
        return pt;
    }
    const double cond = labeling_condition(cfg.kind, p);
    pt.phase = classify(cfg.kind, p, cond);
    std::string errors;
    auto record_error = [&errors](const std::string& name, const std::exception& e) {
        if (!errors.empty()) errors += "; ";
        errors += name + ": " + e.what();
    };
    for (Output o : cfg.outputs) {
        switch (o) {
        case Output::condition:
            pt.outputs["condition"] = cond;
            break;
        case Output::betac: {
            double bc = std::numeric_limits<double>::quiet_NaN();
            if (cfg.kind.model == Model::generalized_dicke) {
                const thermo::CriticalPoint cp = thermo::critical_beta(p);
                if (cp.kind == thermo::CriticalCase::thermal) bc = cp.beta_c;
            }
            pt.outputs["betac"] = bc;
            break;
        }
        case Output::ratio: {
            double val = std::numeric_limits<double>::quiet_NaN();
            try {
                if (cfg.kind.model == Model::sigma_z) {
                    val = std::exp(thermo::lnz_shift_sigma_z(p));
                } else if (cfg.kind.model == Model::generalized_dicke) {
                    val = thermo::ratio_product(p, cfg.ratio_cutoff).value;
                } else if (p.zero_temperature) {
                    val = thermo::intensity_zero_t_ratio(p, cfg.ratio_cutoff).value;
                }
            } catch (const NumericalError& e) {
                record_error("ratio", e);
            } catch (const DomainError& e) {
                record_error("ratio", e);
            }
            pt.outputs["ratio"] = val;
            break;
        }
        case Output::spectrum: {
            double r0 = std::numeric_limits<double>::quiet_NaN();
            double r1 = std::numeric_limits<double>::quiet_NaN();
            try {
                if (cfg.kind.model == Model::generalized_dicke && !p.zero_temperature) {
                    const auto res = spectrum::solve_spectrum(p, p.beta);
                    if (!res.roots.empty()) r0 = res.roots[0].energy;
                    if (res.roots.size() > 1) r1 = res.roots[1].energy;
                }
            } catch (const NumericalError& e) {
                record_error("spectrum", e);
            }
            pt.outputs["spectrum_root0"] = r0;
            pt.outputs["spectrum_root1"] = r1;
            break;
        }
        case Output::order_parameter: {
            double val = std::numeric_limits<double>::quiet_NaN();
            try {
                ed::BasisSpec basis;
                basis.n_max = cfg.n_max;
                basis.n_atoms = p.n_atoms;
                val = ed::ground_order_parameter(cfg.kind, p, basis);
            } catch (const NumericalError& e) {
                record_error("order_parameter", e);
            }
            pt.outputs["order_parameter"] = val;
            break;
        }
        }
    }
    pt.diagnostics = errors;
    return pt;
}

struct CriticalVertex {
    std::vector<double> axis_values; // crossing location (bisected along last axis)
};

struct SweepResult {
    std::vector<PhasePoint> points; // row-major: axis2 fastest when present
    std::vector<CriticalVertex> critical_line;
    std::vector<long> shape; // points per axis
};

inline std::string config_cache_key(const SweepConfig& cfg) {
    std::ostringstream os;
    os << kVersion << '|' << to_string(cfg.kind) << '|'
       << params_to_json(cfg.kind, cfg.params).dump() << '|' << cfg.n_max << '|'
       << cfg.ratio_cutoff;
    for (const Axis& ax : cfg.axes)
        os << '|' << ax.param << ',' << ax.min << ',' << ax.max << ',' << ax.steps
           << ',' << (ax.scale == AxisScale::log ? "log" : "linear");
    for (Output o : cfg.outputs) os << '|' << to_string(o);
    // FNV-1a over the canonical string
    const std::string s = os.str();
    unsigned long long h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", h);
    return buf;
}

inline SweepResult run_sweep(const SweepConfig& cfg) {
    validate_config(cfg);
    const ModelParams base = validate_params(cfg.kind, cfg.params);

    SweepResult out;
    for (const Axis& ax : cfg.axes) out.shape.push_back(ax.steps);
    const long n1 = cfg.axes[0].steps;
    const long n2 = cfg.axes.size() > 1 ? cfg.axes[1].steps : 1;
    const long total = n1 * n2;
    out.points.resize(static_cast<size_t>(total));

    // cache lookup
    const std::string key = config_cache_key(cfg);
    bool from_cache = false;
    if (!cfg.cache_path.empty()) {
        std::ifstream in(cfg.cache_path);
        if (in) {
            try {
                nlohmann::json j;
                in >> j;
                if (j.value("key", std::string()) == key &&
                    j["points"].size() == static_cast<size_t>(total)) {
                    for (long i = 0; i < total; ++i) {
                        const auto& jp = j["points"][static_cast<size_t>(i)];
                        PhasePoint& pt = out.points[static_cast<size_t>(i)];
                        pt.axis_values = jp["axis_values"].get<std::vector<double>>();
                        pt.phase = static_cast<Phase>(jp["phase_id"].get<int>());
                        for (auto it = jp["outputs"].begin(); it != jp["outputs"].end(); ++it)
                            pt.outputs[it.key()] =
                                it.value().is_null()
                                    ? std::numeric_limits<double>::quiet_NaN()
                                    : it.value().get<double>(); // NaN serializes as null
                        pt.diagnostics = jp.value("diagnostics", std::string());
                    }
                    from_cache = true;
                }
            } catch (const nlohmann::json::exception&) {
                // stale or foreign cache; recompute
            }
        }
    }

    if (!from_cache) {
        std::atomic<long> next{0};
        auto worker = [&]() {
            for (;;) {
                const long i = next.fetch_add(1);
                if (i >= total) return;
                const long i1 = i / n2, i2 = i % n2;
                ModelParams p = base;
                std::vector<double> vals;
                const double v1 = axis_value(cfg.axes[0], i1);
                apply_axis(p, cfg.axes[0].param, v1);
                vals.push_back(v1);
                if (cfg.axes.size() > 1) {
                    const double v2 = axis_value(cfg.axes[1], i2);
                    apply_axis(p, cfg.axes[1].param, v2);
                    vals.push_back(v2);
                }
                out.points[static_cast<size_t>(i)] = evaluate_point(cfg, p, vals);
            }
        };
        if (cfg.threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < cfg.threads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
    }

    if (!from_cache && !cfg.cache_path.empty()) {
        nlohmann::json j;
        j["key"] = key;
        j["points"] = nlohmann::json::array();
        for (const PhasePoint& pt : out.points) {
            nlohmann::json jp;
            jp["axis_values"] = pt.axis_values;
            jp["phase_id"] = static_cast<int>(pt.phase);
            jp["outputs"] = pt.outputs;
            jp["diagnostics"] = pt.diagnostics;
            j["points"].push_back(std::move(jp));
        }
        std::ofstream outf(cfg.cache_path);
        if (!outf) throw IoError(cfg.cache_path, "cannot write cache");
        outf << j.dump();
    }

    // per-row bisection of the transition condition along the last axis
    const Axis& line_axis = cfg.axes.back();
    const long rows = cfg.axes.size() > 1 ? n1 : 1;
    const long cols = cfg.axes.size() > 1 ? n2 : n1;
    for (long r = 0; r < rows; ++r) {
        ModelParams row_params = base;
        std::vector<double> prefix;
        if (cfg.axes.size() > 1) {
            const double v1 = axis_value(cfg.axes[0], r);
            apply_axis(row_params, cfg.axes[0].param, v1);
            prefix.push_back(v1);
        }
        auto cond_at = [&](double v) {
            ModelParams p = row_params;
            apply_axis(p, line_axis.param, v);
            return labeling_condition(cfg.kind, p) - 1.0;
        };
        for (long cidx = 0; cidx + 1 < cols; ++cidx) {
            double lo = axis_value(line_axis, cidx);
            double hi = axis_value(line_axis, cidx + 1);
            double flo = cond_at(lo), fhi = cond_at(hi);
            if (std::isnan(flo) || std::isnan(fhi)) continue;
            auto emit = [&](double v_at) {
                CriticalVertex v;
                v.axis_values = prefix;
                v.axis_values.push_back(v_at);
                out.critical_line.push_back(std::move(v));
            };
            // exact zeros on grid points belong to the cell on their left
            if (flo == 0.0) {
                if (cidx == 0) emit(lo);
                continue;
            }
            if (fhi == 0.0) {
                emit(hi);
                continue;
            }
            if (flo * fhi > 0.0) continue;
            while (hi - lo > 1e-6) {
                const double mid = 0.5 * (lo + hi);
                const double fm = cond_at(mid);
                if (fm * flo <= 0.0)
                    hi = mid;
                else {
                    lo = mid;
                    flo = fm;
                }
            }
            emit(0.5 * (lo + hi));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output writers. Full double precision, locale-independent.

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

inline std::vector<std::string> output_columns(const SweepConfig& cfg) {
    std::vector<std::string> cols;
    for (Output o : cfg.outputs) {
        if (o == Output::spectrum) {
            cols.push_back("spectrum_root0");
            cols.push_back("spectrum_root1");
        } else {
            cols.push_back(to_string(o));
        }
    }
    return cols;
}

inline void write_csv(std::ostream& os, const SweepConfig& cfg, const SweepResult& res) {
    std::vector<std::string> header;
    for (const Axis& ax : cfg.axes) header.push_back(ax.param);
    header.push_back("phase");
    for (const std::string& c : output_columns(cfg)) header.push_back(c);
    header.push_back("diagnostics");
    for (size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << csv_quote(header[i]);
    os << "\r\n";
    for (const PhasePoint& pt : res.points) {
        bool first = true;
        for (double v : pt.axis_values) {
            os << (first ? "" : ",") << format_double(v);
            first = false;
        }
        os << ',' << to_string(pt.phase);
        for (const std::string& c : output_columns(cfg)) {
            auto it = pt.outputs.find(c);
            os << ',' << (it == pt.outputs.end() ? "" : format_double(it->second));
        }
        os << ',' << csv_quote(pt.diagnostics) << "\r\n";
    }
}

inline nlohmann::json summary_json(const SweepConfig& cfg, const SweepResult& res) {
    nlohmann::json s;
    s["version"] = kVersion;
    s["config"] = params_to_json(cfg.kind, cfg.params);
    nlohmann::json axes = nlohmann::json::array();
    for (const Axis& ax : cfg.axes) {
        axes.push_back({{"param", ax.param},
                        {"min", ax.min},
                        {"max", ax.max},
                        {"steps", ax.steps},
                        {"scale", ax.scale == AxisScale::log ? "log" : "linear"}});
    }
    s["axes"] = axes;
    nlohmann::json line = nlohmann::json::array();
    for (const CriticalVertex& v : res.critical_line) line.push_back(v.axis_values);
    s["critical_line"] = line;
    return s;
}

inline void write_json(std::ostream& os, const SweepConfig& cfg, const SweepResult& res) {
    nlohmann::json j;
    j["points"] = nlohmann::json::array();
    for (const PhasePoint& pt : res.points) {
        nlohmann::json jp;
        jp["axis_values"] = pt.axis_values;
        jp["phase"] = to_string(pt.phase);
        jp["outputs"] = pt.outputs;
        jp["diagnostics"] = pt.diagnostics;
        j["points"].push_back(std::move(jp));
    }
    j["summary"] = summary_json(cfg, res);
    os << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Flat key=value config: '#' comments, dotted axis keys, outputs as a
// comma-separated list. CLI flags override file values by rewriting the map
// before this call.

inline std::map<std::string, std::string> parse_kv_text(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DomainError("config", "expected key=value, got: " + line);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline SweepConfig config_from_kv(const std::map<std::string, std::string>& kv) {
    SweepConfig cfg;
    std::optional<ModelKind> kind;
    auto to_double = [&](const std::string& key, const std::string& v) {
        try {
            return std::stod(v);
        } catch (const std::exception&) {
            throw DomainError(key, "cannot parse " + key + "=" + v);
        }
    };
    for (const auto& [key, value] : kv) {
        if (apply_param_key(key, value, kind, cfg.params)) continue;
        if (key.rfind("axis", 0) == 0) {
            const auto dot = key.find('.');
            if (dot == std::string::npos || (key[4] != '1' && key[4] != '2'))
                throw DomainError("config", "bad axis key: " + key);
            const size_t idx = static_cast<size_t>(key[4] - '1');
            while (cfg.axes.size() <= idx) cfg.axes.push_back(Axis{});
            const std::string field = key.substr(dot + 1);
            Axis& ax = cfg.axes[idx];
            if (field == "param") ax.param = value;
            else if (field == "min") ax.min = to_double(key, value);
            else if (field == "max") ax.max = to_double(key, value);
            else if (field == "steps") ax.steps = static_cast<long>(to_double(key, value));
            else if (field == "scale")
                ax.scale = value == "log" ? AxisScale::log : AxisScale::linear;
            else throw DomainError("config", "unknown axis field: " + key);
        } else if (key == "outputs") {
            std::stringstream ss(value);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) cfg.outputs.push_back(parse_output(tok));
        } else if (key == "out") {
            cfg.output_path = value;
        } else if (key == "cache") {
            cfg.cache_path = value;
        } else if (key == "format") {
            if (value == "csv") cfg.format = Format::csv;
            else if (value == "json") cfg.format = Format::json;
            else throw DomainError("format", "format must be csv or json");
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(to_double(key, value));
        } else if (key == "n_max") {
            cfg.n_max = static_cast<long>(to_double(key, value));
        } else if (key == "ratio_cutoff") {
            cfg.ratio_cutoff = static_cast<long>(to_double(key, value));
        } else {
            throw DomainError("config", "unknown config key: " + key);
        }
    }
    if (kind) cfg.kind = *kind;
    return cfg;
}

} // namespace spinboson::sweep
