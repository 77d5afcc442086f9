#include <catch2/catch_amalgamated.hpp>

#include "spinboson/model.hpp"

using namespace spinboson;

TEST_CASE("validate_params accepts a standard generalized Dicke point") {
    ModelParams p;
    p.omega_big = 1.0;
    p.omega0 = 1.0;
    p.g1 = 1.0;
    p.g2 = 0.0;
    p.n_atoms = 10;
    p.beta = 1.0;
    const ModelKind kind{Model::generalized_dicke, CouplingMode::general};
    REQUIRE_NOTHROW(validate_params(kind, p));
}

TEST_CASE("validate_params rejects boundary violations naming the field") {
    ModelParams p;
    const ModelKind kind{Model::generalized_dicke, CouplingMode::general};

    SECTION("omega0 = 0") {
        p.omega0 = 0.0;
        try {
            validate_params(kind, p);
            FAIL("expected DomainError");
        } catch (const DomainError& e) {
            CHECK(e.field() == "omega0");
        }
    }
    SECTION("n_atoms = 0") {
        p.n_atoms = 0;
        try {
            validate_params(kind, p);
            FAIL("expected DomainError");
        } catch (const DomainError& e) {
            CHECK(e.field() == "n_atoms");
        }
    }
    SECTION("omega <= 0") {
        p.omega_big = -1.0;
        CHECK_THROWS_AS(validate_params(kind, p), DomainError);
    }
    SECTION("negative coupling") {
        p.g1 = -0.25;
        CHECK_THROWS_AS(validate_params(kind, p), DomainError);
    }
    SECTION("beta <= 0 without the zero-T marker") {
        p.beta = 0.0;
        CHECK_THROWS_AS(validate_params(kind, p), DomainError);
    }
}

TEST_CASE("validate_params is idempotent and canonicalizes the zero-T marker") {
    ModelParams p;
    p.zero_temperature = true;
    p.beta = 123.0; // stale value; canonicalization overwrites it
    const ModelKind kind{Model::generalized_dicke, CouplingMode::general};
    const ModelParams once = validate_params(kind, p);
    CHECK(std::isinf(once.beta));
    const ModelParams twice = validate_params(kind, once);
    CHECK(once == twice);
}

TEST_CASE("coupling-mode metadata must be consistent with couplings") {
    ModelParams p;
    p.g1 = 0.5;
    p.g2 = 0.5;
    CHECK_THROWS_AS(
        validate_params(ModelKind{Model::generalized_dicke, CouplingMode::rwa_only}, p),
        DomainError);
    CHECK_THROWS_AS(
        validate_params(ModelKind{Model::intensity_dependent, CouplingMode::counter_only}, p),
        DomainError);
    p.g2 = 0.0;
    CHECK_NOTHROW(
        validate_params(ModelKind{Model::generalized_dicke, CouplingMode::rwa_only}, p));
}

TEST_CASE("model kind round-trips through names and JSON") {
    for (const char* name : {"sigma-z", "dicke", "dicke-rwa", "dicke-crw",
                             "intensity", "intensity-rwa", "intensity-crw"}) {
        const ModelKind kind = parse_model_kind(name);
        CHECK(to_string(kind) == name);
    }
    CHECK_THROWS_AS(parse_model_kind("bogus"), DomainError);

    ModelParams p;
    p.omega_big = 1.5;
    p.omega0 = 0.75;
    p.g1 = 0.0;
    p.g2 = 0.25;
    p.n_atoms = 4;
    p.beta = 2.5;
    const ModelKind kind{Model::generalized_dicke, CouplingMode::counter_only};
    const auto j = params_to_json(kind, p);
    const auto [kind2, p2] = params_from_json(j);
    CHECK(kind2 == kind);
    CHECK(p2 == p);
}

TEST_CASE("zero-T marker survives JSON round trip") {
    ModelParams p;
    p.g2 = 0.5;
    p.zero_temperature = true;
    const ModelKind kind{Model::intensity_dependent, CouplingMode::counter_only};
    const auto j = params_to_json(kind, validate_params(kind, p));
    CHECK(j["beta"] == "inf");
    const auto [kind2, p2] = params_from_json(j);
    CHECK(p2.zero_temperature);
}

TEST_CASE("key=value parameter entries apply with overrides") {
    std::optional<ModelKind> kind;
    ModelParams p;
    CHECK(apply_param_key("model", "dicke-rwa", kind, p));
    CHECK(apply_param_key("omega", "2.0", kind, p));
    CHECK(apply_param_key("g1", "1.25", kind, p));
    CHECK(apply_param_key("beta", "inf", kind, p));
    CHECK(!apply_param_key("not_a_param", "1", kind, p));
    REQUIRE(kind.has_value());
    CHECK(kind->mode == CouplingMode::rwa_only);
    CHECK(p.omega_big == 2.0);
    CHECK(p.g1 == 1.25);
    CHECK(p.zero_temperature);
    CHECK_THROWS_AS(apply_param_key("g2", "abc", kind, p), DomainError);
}
