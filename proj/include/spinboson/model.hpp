#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "spinboson/errors.hpp"

namespace spinboson {

// Units: hbar = k_B = c = 1. All frequencies and couplings share one
// arbitrary energy unit; beta is its inverse.

enum class Model {
    sigma_z,            // sigma^z-coupled reservoir model
    generalized_dicke,  // independent rotating (g1) / counter-rotating (g2)
    intensity_dependent // Buck-Sukumar intensity factor on the rotating terms
};

enum class CouplingMode {
    general,      // both g1 and g2 may be nonzero
    rwa_only,     // g2 = 0
    counter_only  // g1 = 0
};

struct ModelKind {
    Model model = Model::generalized_dicke;
    CouplingMode mode = CouplingMode::general; // meaningful for Dicke-type kinds

    friend bool operator==(const ModelKind&, const ModelKind&) = default;
};

inline std::string to_string(const ModelKind& kind) {
    switch (kind.model) {
    case Model::sigma_z:
        return "sigma-z";
    case Model::generalized_dicke:
        switch (kind.mode) {
        case CouplingMode::rwa_only: return "dicke-rwa";
        case CouplingMode::counter_only: return "dicke-crw";
        default: return "dicke";
        }
    case Model::intensity_dependent:
        switch (kind.mode) {
        case CouplingMode::rwa_only: return "intensity-rwa";
        case CouplingMode::counter_only: return "intensity-crw";
        default: return "intensity";
        }
    }
    return "dicke";
}

inline ModelKind parse_model_kind(const std::string& name) {
    static const std::map<std::string, ModelKind> table = {
        {"sigma-z", {Model::sigma_z, CouplingMode::general}},
        {"sigma_z", {Model::sigma_z, CouplingMode::general}},
        {"dicke", {Model::generalized_dicke, CouplingMode::general}},
        {"dicke-rwa", {Model::generalized_dicke, CouplingMode::rwa_only}},
        {"dicke-crw", {Model::generalized_dicke, CouplingMode::counter_only}},
        {"intensity", {Model::intensity_dependent, CouplingMode::general}},
        {"intensity-rwa", {Model::intensity_dependent, CouplingMode::rwa_only}},
        {"intensity-crw", {Model::intensity_dependent, CouplingMode::counter_only}},
    };
    auto it = table.find(name);
    if (it == table.end())
        throw DomainError("model", "unknown model kind: " + name);
    return it->second;
}

// Physical parameters shared by every module. For sigma-z only `g` is used;
// Dicke-type kinds use g1/g2 (g1 = g2 = g represents the standard Dicke model).
struct ModelParams {
    double omega_big = 1.0; // atomic gap Omega > 0
    double omega0 = 1.0;    // mode frequency omega_0 > 0
    double g1 = 0.0;        // rotating coupling >= 0
    double g2 = 0.0;        // counter-rotating coupling >= 0
    double g = 0.0;         // single coupling of the sigma-z model >= 0
    long n_atoms = 1;       // N >= 1
    double beta = 1.0;      // inverse temperature > 0 (ignored if zero_temperature)
    bool zero_temperature = false; // distinguished zero-T marker, not beta = inf

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline ModelParams validate_params(const ModelKind& kind, ModelParams p) {
    auto check_finite_nonneg = [](double v, const char* field) {
        if (!std::isfinite(v) || v < 0.0)
            throw DomainError(field, std::string(field) + " must be finite and >= 0");
    };
    if (!std::isfinite(p.omega_big) || p.omega_big <= 0.0)
        throw DomainError("omega", "omega (atomic gap) must be > 0");
    if (!std::isfinite(p.omega0) || p.omega0 <= 0.0)
        throw DomainError("omega0", "omega0 (mode frequency) must be > 0");
    check_finite_nonneg(p.g1, "g1");
    check_finite_nonneg(p.g2, "g2");
    check_finite_nonneg(p.g, "g");
    if (p.n_atoms < 1)
        throw DomainError("n_atoms", "n_atoms must be >= 1");
    if (p.zero_temperature) {
        p.beta = std::numeric_limits<double>::infinity(); // canonical marker form
    } else if (!std::isfinite(p.beta) || p.beta <= 0.0) {
        throw DomainError("beta", "beta must be > 0 (or the zero-temperature marker)");
    }
    if (kind.model != Model::sigma_z) {
        if (kind.mode == CouplingMode::rwa_only && p.g2 != 0.0)
            throw DomainError("g2", "rwa-only coupling mode requires g2 = 0");
        if (kind.mode == CouplingMode::counter_only && p.g1 != 0.0)
            throw DomainError("g1", "counter-only coupling mode requires g1 = 0");
    }
    return p;
}

// ---------------------------------------------------------------------------
// ThermoReport

enum class ReportSource { analytic, oracle };

struct TruncationMetadata {
    long fock_cutoff = -1;       // boson n_max (oracle) or -1
    long frequency_cutoff = -1;  // Matsubara/product cutoff M or -1
    double tail_estimate = 0.0;  // reported, never silently absorbed
    bool converged = true;

    friend bool operator==(const TruncationMetadata&, const TruncationMetadata&) = default;
};

struct ThermoReport {
    double ln_z_ratio = 0.0;      // ln(Z/Z0)
    double ln_z_total = 0.0;      // ln Z
    double mean_energy = 0.0;
    double entropy = 0.0;
    double order_parameter = 0.0; // <b^dag b>/N, >= 0
    ReportSource source = ReportSource::analytic;
    TruncationMetadata truncation;
};

// ---------------------------------------------------------------------------
// Serialization: flat key=value config and JSON with identical keys.

inline nlohmann::json params_to_json(const ModelKind& kind, const ModelParams& p) {
    nlohmann::json j;
    j["model"] = to_string(kind);
    j["omega"] = p.omega_big;
    j["omega0"] = p.omega0;
    j["g1"] = p.g1;
    j["g2"] = p.g2;
    j["g"] = p.g;
    j["n_atoms"] = p.n_atoms;
    if (p.zero_temperature)
        j["beta"] = "inf";
    else
        j["beta"] = p.beta;
    return j;
}

inline std::pair<ModelKind, ModelParams> params_from_json(const nlohmann::json& j) {
    ModelKind kind = parse_model_kind(j.at("model").get<std::string>());
    ModelParams p;
    p.omega_big = j.value("omega", 1.0);
    p.omega0 = j.value("omega0", 1.0);
    p.g1 = j.value("g1", 0.0);
    p.g2 = j.value("g2", 0.0);
    p.g = j.value("g", 0.0);
    p.n_atoms = j.value("n_atoms", 1L);
    if (j.contains("beta") && j["beta"].is_string()) {
        p.zero_temperature = true;
    } else {
        p.beta = j.value("beta", 1.0);
    }
    return {kind, validate_params(kind, p)};
}

inline bool parse_beta_token(const std::string& tok, double& beta, bool& zero_t) {
    if (tok == "inf" || tok == "infinity" || tok == "zero-t" || tok == "zeroT") {
        zero_t = true;
        beta = std::numeric_limits<double>::infinity();
        return true;
    }
    try {
        size_t pos = 0;
        beta = std::stod(tok, &pos);
        if (pos != tok.size()) return false;
        zero_t = false;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

// Applies one config entry; returns false for keys that are not model
// parameters (callers with larger config schemas skip those).
inline bool apply_param_key(const std::string& key, const std::string& value,
                            std::optional<ModelKind>& kind, ModelParams& p) {
    auto to_double = [&](const char* field) {
        try {
            size_t pos = 0;
            double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw DomainError(field, std::string("cannot parse ") + field + "=" + value);
        }
    };
    if (key == "model") {
        kind = parse_model_kind(value);
    } else if (key == "omega") {
        p.omega_big = to_double("omega");
    } else if (key == "omega0") {
        p.omega0 = to_double("omega0");
    } else if (key == "g1") {
        p.g1 = to_double("g1");
    } else if (key == "g2") {
        p.g2 = to_double("g2");
    } else if (key == "g") {
        p.g = to_double("g");
    } else if (key == "n_atoms") {
        p.n_atoms = static_cast<long>(to_double("n_atoms"));
    } else if (key == "beta") {
        if (!parse_beta_token(value, p.beta, p.zero_temperature))
            throw DomainError("beta", "cannot parse beta=" + value);
    } else {
        return false;
    }
    return true;
}

} // namespace spinboson
