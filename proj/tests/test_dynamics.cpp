#include <gtest/gtest.h>

#include "support.hpp"

using namespace relmodal;

namespace {

double spectral_norm(const Matrix &h) {
    return Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace

TEST(Hamiltonian, FreeTermIsDiagonal) {
    auto space = build_fock_space("A", {boson("a", 2)});
    auto h     = build_hamiltonian(space, free_terms({{"a", 2.0}}));
    Matrix expected = Matrix::Zero(3, 3);
    expected(1, 1)  = 2.0;
    expected(2, 2)  = 4.0;
    EXPECT_EQ(max_abs(h.assembled.matrix - expected), 0.0);
    EXPECT_TRUE(h.assembled.hermitian);
}

TEST(Hamiltonian, NoTermsIsZero) {
    auto space = build_fock_space("A", {boson("a", 2), fermion("f")});
    EXPECT_EQ(max_abs(build_hamiltonian(space, {}).assembled.matrix), 0.0);
}

TEST(Hamiltonian, TrilinearConservesCombinations) {
    auto space = build_fock_space("R", {boson("a", 1), boson("b", 1), boson("c", 1)});
    auto h     = build_hamiltonian(space, trilinear_terms("a", "b", "c", 0.7)).assembled.matrix;
    EXPECT_EQ(hermitian_deviation(h), 0.0);
    const Matrix nab = number_operator(space, "a").matrix + number_operator(space, "b").matrix;
    const Matrix nac = number_operator(space, "a").matrix + number_operator(space, "c").matrix;
    EXPECT_LT(max_abs(h * nab - nab * h), 1e-15);
    EXPECT_LT(max_abs(h * nac - nac * h), 1e-15);
    // n_b alone is not conserved
    const Matrix nb = number_operator(space, "b").matrix;
    EXPECT_GT(max_abs(h * nb - nb * h), 0.1);
    // with charges making a -> b + c additive, the charge commutes too
    auto charged = build_fock_space("R", {boson("a", 1, {{ChargeKind::electric, 0}}), boson("b", 1, {{ChargeKind::electric, 1}}),
                                          boson("c", 1, {{ChargeKind::electric, -1}})});
    auto hq = build_hamiltonian(charged, trilinear_terms("a", "b", "c", 0.7)).assembled.matrix;
    auto q  = charge_operator(charged, ChargeKind::electric).matrix;
    EXPECT_LT(max_abs(hq * q - q * hq), 1e-15);
}

TEST(Hamiltonian, Errors) {
    auto space = build_fock_space("A", {boson("a", 2)});
    EXPECT_THROW(build_hamiltonian(space, free_terms({{"zz", 1.0}})), InvalidArgument);
    EXPECT_THROW(build_hamiltonian(space, free_terms({{"a", std::nan("")}})), InvalidArgument);
}

TEST(Evolve, ZeroHamiltonianIsIdentity) {
    auto space = build_fock_space("A", {boson("a", 2), fermion("f")});
    auto h     = build_hamiltonian(space, {});
    Rng  rng(2);
    StateVector psi{"A", random_unit_vector(6, rng)};
    for(double t : {0.0, 1.0, 37.5}) EXPECT_LT(max_abs(evolve(psi, h, t).amplitudes - psi.amplitudes), 1e-15);
}

TEST(Evolve, StationaryStatePhase) {
    auto  r     = build_fock_space("R", {boson("a", 2), boson("b", 1)});
    auto  h     = build_hamiltonian(r, free_terms({{"a", 1.3}, {"b", 0.4}}));
    auto  pe    = partition_embedding(r, {"a"}, {"b"}, "A", "B");
    auto  psi0  = basis_state(r, Occupation{1, 0});
    auto  rho0  = relational_state(psi0, pe.embedding, Factor::a);
    for(double t : {0.5, 2.0, 11.0}) {
        auto psi = evolve(psi0, h, t);
        EXPECT_LT(std::abs(psi.amplitudes(r.index_of(Occupation{1, 0})) - std::polar(1.0, -1.3 * t)), 1e-13);
        EXPECT_LT(max_abs(relational_state(psi, pe.embedding, Factor::a).matrix - rho0.matrix), 1e-13);
    }
}

TEST(Evolve, RabiMatchesClosedForm) {
    auto         q = build_fock_space("Q", {boson("q", 1)});
    const double g = 0.8;
    auto         h = build_hamiltonian(q, {{g, {{OpFactor::Kind::create, "q"}}}});
    auto excited   = basis_state(q, Index{1});
    for(int k = 0; k <= 40; ++k) {
        const double t = 0.1 * k;
        // exp(-i g t sigma_x) = cos(gt) 1 - i sin(gt) sigma_x
        Vector oracle(2);
        oracle(0) = cplx(0.0, -std::sin(g * t));
        oracle(1) = std::cos(g * t);
        auto psi  = evolve(excited, h, t);
        EXPECT_LT(max_abs(psi.amplitudes - oracle), 1e-12);
        EXPECT_NEAR(std::norm(psi.amplitudes(1)), std::pow(std::cos(g * t), 2), 1e-12);
    }
    EXPECT_LT(max_abs(evolve(excited, h, std::numbers::pi / g).amplitudes + excited.amplitudes), 1e-12);
}

TEST(Evolve, SpaceMismatch) {
    auto a = build_fock_space("A", {boson("a", 1)});
    auto h = build_hamiltonian(a, {});
    EXPECT_THROW(evolve({"B", Vector::Ones(2) / std::sqrt(2.0)}, h, 1.0), SpaceMismatch);
}

TEST(Evolve, ConservationAndComposition) {
    auto space = build_fock_space("R", {boson("a", 2, {{ChargeKind::electric, 2}}), boson("b", 2, {{ChargeKind::electric, 1}}),
                                        boson("c", 2, {{ChargeKind::electric, 1}})});
    auto terms = trilinear_terms("a", "b", "c", 0.9);
    auto more  = hopping_terms("b", "c", 0.4);
    auto freq  = free_terms({{"a", 1.1}, {"b", 0.5}, {"c", 0.6}});
    terms.insert(terms.end(), more.begin(), more.end());
    terms.insert(terms.end(), freq.begin(), freq.end());
    auto         h     = build_hamiltonian(space, terms);
    const double hnorm = spectral_norm(h.assembled.matrix);
    auto         q     = charge_operator(space, ChargeKind::electric);
    ASSERT_LT(max_abs(h.assembled.matrix * q.matrix - q.matrix * h.assembled.matrix), 1e-14);
    const double qnorm = spectral_norm(q.matrix);

    Rng         rng(19);
    StateVector psi0{"R", random_unit_vector(space.dimension(), rng)};
    std::vector<double> times;
    for(int k = 0; k <= 50; ++k) times.push_back(100.0 / hnorm * k / 50.0);
    auto traj = evolve_trajectory(psi0, h, times, MonitorSet{{{"Q", q}}, {}});
    const double e0 = traj.monitors.front().energy, q0 = traj.monitors.front().charges.at("Q");
    for(const auto &m : traj.monitors) {
        EXPECT_LT(std::abs(m.norm - 1.0), 1e-9);
        EXPECT_LT(std::abs(m.energy - e0), 1e-9 * hnorm);
        EXPECT_LT(std::abs(m.charges.at("Q") - q0), 1e-9 * qnorm);
    }
    const double t1 = 3.7, t2 = 8.2;
    EXPECT_LT((evolve(psi0, h, t1 + t2).amplitudes - evolve(evolve(psi0, h, t1), h, t2).amplitudes).norm(), 1e-9);
}

TEST(TraceTrajectory, NoCouplingNoDeficit) {
    auto r    = build_fock_space("R", {boson("a", 1), boson("b", 1), boson("c", 1)});
    auto pe   = partition_embedding(r, {"b"}, {"c"}, "B", "C");
    auto h    = build_hamiltonian(r, free_terms({{"a", 1.0}, {"b", 2.0}, {"c", 0.5}}));
    auto psi0 = basis_state(r, Occupation{0, 1, 1});
    auto traj = trace_deficit_trajectory(psi0, h, pe.embedding, {0.0, 1.0, 5.0, 20.0});
    for(const auto &m : traj.monitors) EXPECT_NEAR(m.relational_traces.at("B"), 1.0, 1e-14);
}

TEST(TraceTrajectory, TrilinearAnnihilationOnset) {
    auto         r    = build_fock_space("R", {boson("a", 1), boson("b", 1), boson("c", 1)});
    auto         pe   = partition_embedding(r, {"b"}, {"c"}, "B", "C");
    const double g    = 0.5;
    auto         h    = build_hamiltonian(r, trilinear_terms("a", "b", "c", g));
    auto         psi0 = basis_state(r, Occupation{0, 1, 1});
    std::vector<double> times;
    for(int k = 0; k <= 30; ++k) times.push_back(0.1 * k);
    auto traj = trace_deficit_trajectory(psi0, h, pe.embedding, times);
    EXPECT_EQ(1.0 - traj.monitors.front().relational_traces.at("B"), 0.0);
    double previous = -1.0;
    for(std::size_t k = 0; k < times.size(); ++k) {
        const double deficit = 1.0 - traj.monitors[k].relational_traces.at("B");
        const double oracle  = relmodal::testing::oracle_deficit(traj.states[k].amplitudes, pe.embedding.isometry);
        EXPECT_NEAR(deficit, oracle, 1e-12);
        EXPECT_NEAR(deficit, std::pow(std::sin(g * times[k]), 2), 1e-12); // two-level closed form
        EXPECT_GE(deficit, previous - 1e-15); // monotone until g t = pi/2
        previous = deficit;
    }
    EXPECT_GT(previous, 0.5);
}
