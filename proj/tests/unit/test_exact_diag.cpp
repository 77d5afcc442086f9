#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "spinboson/exact_diag.hpp"
#include "spinboson/thermo.hpp"

using namespace spinboson;
using namespace spinboson::ed;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const ModelKind kSigmaZ{Model::sigma_z, CouplingMode::general};
const ModelKind kDicke{Model::generalized_dicke, CouplingMode::general};
const ModelKind kIntensity{Model::intensity_dependent, CouplingMode::general};

ModelParams params(double omega, double omega0, double g1, double g2, double beta,
                   long n_atoms = 1) {
    ModelParams p;
    p.omega_big = omega;
    p.omega0 = omega0;
    p.g1 = g1;
    p.g2 = g2;
    p.beta = beta;
    p.n_atoms = n_atoms;
    return p;
}

} // namespace

TEST_CASE("free Hamiltonian is the diagonal omega0 n + Omega m") {
    BasisSpec basis;
    basis.n_max = 3;
    basis.n_atoms = 2;
    const OperatorMatrix h = build_hamiltonian(kDicke, params(1.3, 0.7, 0.0, 0.0, 1.0, 2), basis);
    Eigen::MatrixXd dense(h.matrix);
    for (long n = 0; n <= 3; ++n)
        for (long ms = 0; ms <= 2; ++ms) {
            const double m = ms - 1.0;
            CHECK_THAT(dense(basis.index(n, ms), basis.index(n, ms)),
                       WithinAbs(0.7 * n + 1.3 * m, 1e-15));
        }
    CHECK_THAT((dense - Eigen::MatrixXd(dense.diagonal().asDiagonal())).norm(),
               WithinAbs(0.0, 1e-15));
}

TEST_CASE("Jaynes-Cummings 2x2 excitation block") {
    BasisSpec basis;
    basis.n_max = 1;
    basis.n_atoms = 1;
    const auto p = params(1.0, 1.0, 0.1, 0.0, 1.0);
    const OperatorMatrix h = build_hamiltonian(kDicke, p, basis);
    Eigen::MatrixXd dense(h.matrix);
    const long i10 = basis.index(1, 0); // |n=1, m=-1/2>
    const long i01 = basis.index(0, 1); // |n=0, m=+1/2>
    CHECK_THAT(dense(i10, i10), WithinAbs(0.5, 1e-15));
    CHECK_THAT(dense(i01, i01), WithinAbs(0.5, 1e-15));
    CHECK_THAT(dense(i10, i01), WithinAbs(0.1, 1e-15));
    CHECK_THAT(dense(i01, i10), WithinAbs(0.1, 1e-15));
    const EigenSystem sys = diagonalize(h);
    // spectrum {-0.5, 0.4, 0.6, 1.5}: ground, dressed pair, truncated top state
    CHECK_THAT(sys.values[1], WithinAbs(0.4, 1e-12));
    CHECK_THAT(sys.values[2], WithinAbs(0.6, 1e-12));
}

TEST_CASE("diagonalize is deterministic") {
    BasisSpec basis;
    basis.n_max = 8;
    basis.n_atoms = 3;
    const auto p = params(1.1, 0.9, 0.4, 0.3, 1.0, 3);
    const OperatorMatrix h = build_hamiltonian(kDicke, p, basis);
    const EigenSystem a = diagonalize(h);
    const EigenSystem b = diagonalize(h);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("intensity-dependent matrix elements and Hermitian ordering") {
    BasisSpec basis;
    basis.n_max = 4;
    basis.n_atoms = 1;
    const auto p = params(1.0, 1.0, 1.0, 0.0, 1.0);
    SECTION("rotating element n=3 -> n=2 equals 3 (Buck-Sukumar pair)") {
        const OperatorMatrix h = build_hamiltonian(kIntensity, p, basis);
        Eigen::MatrixXd dense(h.matrix);
        // |3, m=-1/2> -> |2, m=+1/2>, jp(-1/2) = 1 for N=1
        CHECK_THAT(dense(basis.index(2, 1), basis.index(3, 0)), WithinAbs(3.0, 1e-15));
        CHECK_THAT(dense(basis.index(3, 0), basis.index(2, 1)), WithinAbs(3.0, 1e-15));
        CHECK(h.symmetry_defect() < 1e-12);
    }
    SECTION("as-printed ordering is not self-adjoint and is refused downstream") {
        const OperatorMatrix h = build_hamiltonian(kIntensity, p, basis, true);
        Eigen::MatrixXd dense(h.matrix);
        CHECK_THAT(dense(basis.index(2, 1), basis.index(3, 0)), WithinAbs(3.0, 1e-15));
        CHECK_THAT(dense(basis.index(3, 0), basis.index(2, 1)),
                   WithinAbs(std::sqrt(6.0), 1e-15)); // sqrt(n(n-1)) = sqrt(6) at n=3
        CHECK(h.symmetry_defect() > 0.1);
        CHECK_THROWS_AS(diagonalize(h), NumericalError);
    }
}

TEST_CASE("generalized Dicke conserves the (n + m + N/2) parity") {
    BasisSpec basis;
    basis.n_max = 6;
    basis.n_atoms = 3;
    const auto p = params(1.0, 0.8, 0.7, 0.25, 1.0, 3);
    const OperatorMatrix h = build_hamiltonian(kDicke, p, basis);
    for (int k = 0; k < h.matrix.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(h.matrix, k); it; ++it) {
            const long pi = (basis.boson_of(it.row()) + basis.spin_of(it.row())) % 2;
            const long pj = (basis.boson_of(it.col()) + basis.spin_of(it.col())) % 2;
            if (pi != pj) CHECK_THAT(it.value(), WithinAbs(0.0, 1e-12));
        }
    }
}

TEST_CASE("ground energy is non-increasing in n_max") {
    const auto p = params(1.0, 1.0, 0.9, 0.9, 1.0, 4);
    double prev = std::numeric_limits<double>::infinity();
    for (long n_max : {4L, 8L, 16L, 32L}) {
        BasisSpec basis;
        basis.n_max = n_max;
        basis.n_atoms = 4;
        const double e = ground_state(build_hamiltonian(kDicke, p, basis)).energy;
        CHECK(e <= prev + 1e-12);
        prev = e;
    }
}

TEST_CASE("lanczos agrees with the dense ground state") {
    const auto p = params(1.0, 1.0, 0.8, 0.5, 1.0, 6);
    BasisSpec basis;
    basis.n_max = 30;
    basis.n_atoms = 6;
    const OperatorMatrix h = build_hamiltonian(kDicke, p, basis);
    const EigenSystem dense = diagonalize(h);
    const GroundState lz = lanczos_ground(h.matrix);
    CHECK_THAT(lz.energy, WithinAbs(dense.values[0], 1e-9));
    const double hnorm = dense.values.cwiseAbs().maxCoeff();
    CHECK(lz.residual <= 1e-9 * hnorm * 10);
    // per-pair residual of the dense path
    for (long i : {0L, 1L, h.dimension / 2, h.dimension - 1}) {
        const Eigen::VectorXd r =
            h.matrix * dense.vectors.col(i) - dense.values[i] * dense.vectors.col(i);
        CHECK(r.norm() < 1e-9 * hnorm);
    }
}

TEST_CASE("dressed-state blocks match the RWA spectrum across n <= 20") {
    // N=1, g2=0: excitation number is conserved, so each 2x2 block is exact
    // in the truncated space; hand-built blocks are the oracle. Blocks
    // interleave in energy at this coupling, so compare everything below a
    // cutoff under which both lists are complete.
    const double W = 1.2, w0 = 0.9, g1 = 0.35;
    const auto p = params(W, w0, g1, 0.0, 1.0);
    BasisSpec basis;
    basis.n_max = 30;
    basis.n_atoms = 1;
    const EigenSystem sys = diagonalize(build_hamiltonian(kDicke, p, basis));

    auto block = [&](long n) {
        const double ea = w0 * (n + 1.0) - W / 2.0;
        const double eb = w0 * n + W / 2.0;
        const double mid = 0.5 * (ea + eb);
        const double delta = 0.5 * (ea - eb);
        const double split = std::hypot(delta, g1 * std::sqrt(n + 1.0));
        return std::pair<double, double>(mid - split, mid + split);
    };
    std::vector<double> analytic;
    analytic.push_back(-W / 2.0); // uncoupled ground |0, down>
    for (long n = 0; n <= 25; ++n) {
        const auto [lo, hi] = block(n);
        analytic.push_back(lo);
        analytic.push_back(hi);
    }
    const double e_star = block(26).first - 1e-9; // blocks >= 26 lie above
    REQUIRE(block(20).second < e_star);           // n <= 20 fully covered
    std::sort(analytic.begin(), analytic.end());
    size_t count = 0;
    while (count < analytic.size() && analytic[count] < e_star) ++count;
    REQUIRE(count >= 43);
    for (size_t i = 0; i < count; ++i)
        CHECK_THAT(sys.values[static_cast<long>(i)], WithinAbs(analytic[i], 1e-10));
}

TEST_CASE("sigma-z matrix oracle vs analytic finite-N solution") {
    SECTION("g=0 reduces to the free partition function") {
        const ModelParams p = [] {
            ModelParams q;
            q.g = 0.0;
            q.beta = 1.3;
            q.n_atoms = 3;
            return q;
        }();
        CHECK_THAT(sigma_z_analytic_finite_n(p).ln_z_total,
                   WithinAbs(thermo::free_lnz(p), 1e-12));
    }
    SECTION("frozen N=1 value: two displaced k = +-1 blocks") {
        ModelParams p;
        p.g = 1.0;
        p.beta = 1.0;
        p.n_atoms = 1;
        CHECK_THAT(sigma_z_analytic_finite_n(p).ln_z_total,
                   WithinAbs(2.2719368329053047251, 1e-12));
    }
    SECTION("matrix path matches the analytic finite-N ln Z to 1e-10") {
        for (long n : {1L, 2L, 4L}) {
            for (double beta : {0.5, 2.0}) {
                ModelParams p;
                p.g = 0.8;
                p.beta = beta;
                p.n_atoms = n;
                const double matrix_lnz = sigma_z_matrix_lnz(p, 70);
                const double analytic = sigma_z_analytic_finite_n(p).ln_z_total;
                CHECK_THAT(matrix_lnz, WithinAbs(analytic, 1e-10));
            }
        }
    }
    SECTION("thermal consistency of the analytic finite-N E and S") {
        ModelParams p;
        p.g = 0.6;
        p.beta = 1.1;
        p.n_atoms = 5;
        auto lnz = [&](double b) {
            ModelParams q = p;
            q.beta = b;
            return sigma_z_analytic_finite_n(q).ln_z_total;
        };
        const auto rep = sigma_z_analytic_finite_n(p);
        CHECK_THAT(rep.mean_energy, WithinAbs(-thermo::d_dbeta(lnz, p.beta), 1e-7));
        CHECK_THAT(rep.entropy, WithinAbs(rep.ln_z_total + p.beta * rep.mean_energy, 1e-10));
    }
}

TEST_CASE("thermal report from the matrix oracle") {
    SECTION("free model at N=1 matches free_lnz once the Fock tail is dead") {
        ModelParams p = params(1.0, 1.0, 0.0, 0.0, 2.0);
        BasisSpec basis;
        basis.n_max = 40; // e^{-beta w0 n_max} ~ 1e-35
        basis.n_atoms = 1;
        const OperatorMatrix h = build_hamiltonian(kDicke, p, basis);
        const auto rep = thermal_report(spectral_data(h, diagonalize(h)), p.beta, 1);
        CHECK_THAT(rep.ln_z_total, WithinAbs(thermo::free_lnz(p), 1e-10));
        CHECK(rep.source == ReportSource::oracle);
    }
    SECTION("oracle entropy is non-negative, random draws") {
        std::mt19937 rng(17);
        std::uniform_real_distribution<double> u(0.2, 1.5);
        for (int k = 0; k < 8; ++k) {
            ModelParams p = params(u(rng), u(rng), u(rng), u(rng), u(rng), 2);
            BasisSpec basis;
            basis.n_max = 25;
            basis.n_atoms = 2;
            const OperatorMatrix h = build_hamiltonian(kDicke, p, basis);
            const auto rep = thermal_report(spectral_data(h, diagonalize(h)), p.beta, 2);
            CHECK(rep.entropy >= -1e-10);
            CHECK(rep.order_parameter >= 0.0);
        }
    }
}

TEST_CASE("order parameter sweep") {
    SECTION("zero couplings give an identically zero order parameter") {
        BasisSpec basis;
        basis.n_max = 10;
        basis.n_atoms = 4;
        const auto res =
            order_parameter_sweep(kDicke, params(1.0, 1.0, 0.0, 0.0, 1.0, 4),
                                  SweepCoupling::g_equal, {0.0, 1e-7, 2e-7}, basis);
        for (const auto& pt : res.points) CHECK(pt.order_parameter < 1e-10);
    }
    SECTION("crossover near g = 0.5 for a small system") {
        BasisSpec basis;
        basis.n_max = 30;
        basis.n_atoms = 8;
        std::vector<double> grid;
        for (double g = 0.40; g <= 0.801; g += 0.025) grid.push_back(g);
        const auto res = order_parameter_sweep(kDicke, params(1.0, 1.0, 0.0, 0.0, 1.0, 8),
                                               SweepCoupling::g_equal, grid, basis);
        CHECK(res.susceptibility_argmax > 0.5);
        CHECK(res.susceptibility_argmax < 0.75);
        // order parameter grows monotonically through the crossover
        CHECK(res.points.front().order_parameter < 0.05);
        CHECK(res.points.back().order_parameter > 0.3);
    }
    SECTION("unconverged truncation at the extremes is refused") {
        BasisSpec basis;
        basis.n_max = 3; // hopeless at strong coupling
        basis.n_atoms = 8;
        CHECK_THROWS_AS(
            order_parameter_sweep(kDicke, params(1.0, 1.0, 0.0, 0.0, 1.0, 8),
                                  SweepCoupling::g_equal, {0.7, 0.75, 0.8}, basis),
            TruncationUnconverged);
    }
}

TEST_CASE("dimension caps") {
    BasisSpec basis;
    basis.n_max = 100000;
    basis.n_atoms = 10;
    CHECK_THROWS_AS(validate_basis(basis), DimensionOverflow);

    BasisSpec big;
    big.n_max = 2000;
    big.n_atoms = 3; // dim 8004 > dense cap
    const auto p = params(1.0, 1.0, 0.1, 0.0, 1.0, 3);
    const OperatorMatrix h = build_hamiltonian(kDicke, p, big);
    CHECK_THROWS_AS(diagonalize(h), DimensionOverflow);
    CHECK_NOTHROW(ground_state(h)); // iterative path handles it
}

TEST_CASE("sigma-z convergence report emits both candidate limits") {
    ModelParams p;
    p.g = 1.0;
    p.beta = 2.0;
    const auto rows = sigma_z_convergence_report(p, {1, 2, 4, 8, 16});
    REQUIRE(rows.size() == 5);
    const double t4 = std::tanh(0.5), t2 = std::tanh(1.0);
    CHECK_THAT(rows[0].tanh_quarter_shift, WithinRel(2.0 * t4 * t4, 1e-12));
    CHECK_THAT(rows[0].tanh_half_shift, WithinRel(2.0 * t2 * t2, 1e-12));
    // the finite-N shift is emitted as data; no agreement asserted either way
    for (const auto& r : rows) CHECK(std::isfinite(r.finite_n_shift));
}
