#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "support.hpp"

using namespace relmodal;
using relmodal::testing::oracle_reduce_a;
using relmodal::testing::oracle_reduce_b;

namespace {

FockSpace two_qubits() { return build_fock_space("R", {boson("a", 1), boson("b", 1)}); }

StateVector bell(const FockSpace &r) {
    Vector v = Vector::Zero(4);
    v(0) = v(3) = 1.0 / std::sqrt(2.0);
    return {r.id(), v};
}

// R = qubits a, b plus a spectator c pinned to vacuum in the embedding
struct Leaky {
    FockSpace          r = build_fock_space("R", {boson("a", 1), boson("b", 1), boson("c", 1)});
    PartitionEmbedding pe = partition_embedding(r, {"a"}, {"b"}, "A", "B");

    StateVector state() const {
        Vector v = Vector::Zero(8);
        const double w = std::sqrt(0.7) / std::sqrt(2.0);
        v(r.index_of(Occupation{0, 0, 0})) = w;
        v(r.index_of(Occupation{1, 1, 0})) = w;
        v(r.index_of(Occupation{0, 0, 1})) = std::sqrt(0.3);
        return {r.id(), v};
    }
};

} // namespace

TEST(RelationalState, BellIsMaximallyMixed) {
    auto r   = two_qubits();
    auto pe  = partition_embedding(r, {"a"}, {"b"}, "A", "B");
    auto rho = relational_state(bell(r), pe.embedding, Factor::a);
    EXPECT_LT(max_abs(rho.matrix - 0.5 * Matrix::Identity(2, 2)), 1e-15);
    EXPECT_NEAR(rho.trace, 1.0, 1e-15);
    EXPECT_EQ(rho.space_id, "A");
}

TEST(RelationalState, ProductStateIsPure) {
    auto a = build_fock_space("A", {boson("a", 2)});
    auto b = build_fock_space("B", {fermion("f")});
    auto e = identity_embedding(a, b);
    Rng  rng(5);
    StateVector pa{"A", random_unit_vector(3, rng)};
    StateVector pb{"B", random_unit_vector(2, rng)};
    StateVector psi{e.r_id, kron(pa.amplitudes, pb.amplitudes)};
    auto        rho = relational_state(psi, e, Factor::a);
    EXPECT_LT(max_abs(rho.matrix - pa.amplitudes * pa.amplitudes.adjoint()), 1e-15);
    auto rho_b = relational_state(psi, e, Factor::b);
    EXPECT_LT(max_abs(rho_b.matrix - pb.amplitudes * pb.amplitudes.adjoint()), 1e-15);
}

TEST(RelationalState, TraceDeficitAgainstProjectorOracle) {
    Leaky      s;
    const auto psi = s.state();
    // oracle: full projector on R, then element-wise partial trace
    const Matrix oracle = oracle_reduce_a(psi.amplitudes, s.pe.embedding);
    EXPECT_LT(max_abs(oracle - 0.35 * Matrix::Identity(2, 2)), 1e-15);
    auto rho = relational_state(psi, s.pe.embedding, Factor::a);
    EXPECT_LT(max_abs(rho.matrix - oracle), 1e-15);
    EXPECT_NEAR(rho.trace, 0.7, 1e-15);
    EXPECT_NEAR(rho.trace_deficit, 0.3, 1e-15);
    EXPECT_NEAR(rho.trace_deficit, relmodal::testing::oracle_deficit(psi.amplitudes, s.pe.embedding.isometry), 1e-15);
}

TEST(RelationalState, Errors) {
    Leaky s;
    StateVector elsewhere{"Q", s.state().amplitudes};
    EXPECT_THROW(relational_state(elsewhere, s.pe.embedding, Factor::a), SpaceMismatch);
    StateVector unnormalized{"R", 2.0 * s.state().amplitudes};
    EXPECT_THROW(relational_state(unnormalized, s.pe.embedding, Factor::a), ValidationError);
}

TEST(RelationalState, RandomPropertiesAndSecondRoute) {
    Rng rng(2024);
    for(int trial = 0; trial < 300; ++trial) {
        const Index da = 1 + static_cast<Index>(rng.uniform() * 5), db = 1 + static_cast<Index>(rng.uniform() * 5);
        const Index dr = da * db + static_cast<Index>(rng.uniform() * (64 - da * db + 1));
        auto        e  = make_embedding("A", "B", "R", da, db, random_isometry(dr, da * db, rng));
        StateVector psi{"R", random_unit_vector(dr, rng)};
        for(auto factor : {Factor::a, Factor::b}) {
            auto rho   = relational_state(psi, e, factor);
            auto check = check_density(rho);
            EXPECT_TRUE(check.ok);
            EXPECT_LE(check.trace, 1.0 + 1e-10);
            EXPECT_NEAR(rho.trace, project_onto_image(psi, e).component.squaredNorm(), 1e-10);
            const Matrix oracle = factor == Factor::a ? oracle_reduce_a(psi.amplitudes, e) : oracle_reduce_b(psi.amplitudes, e);
            EXPECT_LT(max_abs(rho.matrix - oracle), 1e-12);
        }
    }
}

TEST(RelationalState, IdentityEmbeddingHasUnitTrace) {
    Rng rng(99);
    for(int trial = 0; trial < 50; ++trial) {
        const Index da = 1 + static_cast<Index>(rng.uniform() * 6), db = 1 + static_cast<Index>(rng.uniform() * 6);
        auto        e  = make_embedding("A", "B", "R", da, db, Matrix::Identity(da * db, da * db));
        StateVector psi{"R", random_unit_vector(da * db, rng)};
        EXPECT_NEAR(relational_state(psi, e, Factor::a).trace, 1.0, 1e-10);
    }
}

TEST(PossibleInternalStates, HalfIdentityIsOneDegenerateGroup) {
    DensityOperator rho{"A", 0.5 * Matrix::Identity(2, 2), 1.0, 0.0};
    auto            dec = possible_internal_states(rho);
    ASSERT_EQ(dec.size(), 2u);
    EXPECT_NEAR(dec.eigenvalues[0], 0.5, 1e-15);
    EXPECT_NEAR(dec.eigenvalues[1], 0.5, 1e-15);
    ASSERT_EQ(dec.degeneracy_groups.size(), 1u);
    EXPECT_EQ(dec.degeneracy_groups[0].size(), 2u);
    EXPECT_TRUE(dec.degenerate());
    EXPECT_NEAR(dec.annihilation_probability, 0.0, 1e-15);
    // canonical representative basis of a full degenerate span is the standard basis
    EXPECT_LT(max_abs(dec.basis() - Matrix::Identity(2, 2)), 1e-12);
}

TEST(PossibleInternalStates, RankOneProjector) {
    Rng    rng(8);
    Vector psi = random_unit_vector(4, rng);
    auto   dec = possible_internal_states({"A", psi * psi.adjoint(), 1.0, 0.0});
    ASSERT_EQ(dec.size(), 1u);
    EXPECT_NEAR(dec.eigenvalues[0], 1.0, 1e-14);
    EXPECT_NEAR(std::abs(dec.eigenvectors[0].amplitudes.dot(psi)), 1.0, 1e-14);
    EXPECT_EQ(dec.dropped_count, 3u);
}

TEST(PossibleInternalStates, DeficitBecomesAnnihilationProbability) {
    Leaky s;
    auto  dec = possible_internal_states(relational_state(s.state(), s.pe.embedding, Factor::a));
    ASSERT_EQ(dec.size(), 2u);
    EXPECT_NEAR(dec.eigenvalues[0], 0.35, 1e-14);
    EXPECT_NEAR(dec.eigenvalues[1], 0.35, 1e-14);
    EXPECT_NEAR(dec.annihilation_probability, 0.3, 1e-14);
}

TEST(PossibleInternalStates, RejectsInvalidInput) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0)  = 1.2;
    EXPECT_THROW(possible_internal_states({"A", m, 1.2, -0.2}), ValidationError);
    m(0, 0) = -0.1;
    EXPECT_THROW(possible_internal_states({"A", m, -0.1, 1.1}), ValidationError);
    Matrix h = Matrix::Zero(2, 2);
    h(0, 1)  = 0.1;
    EXPECT_THROW(possible_internal_states({"A", h, 0.0, 1.0}), ValidationError);
}

TEST(PossibleInternalStates, CanonicalBasisIgnoresSolverRotation) {
    // the same degenerate operator written in two rotated bases gives the same representative vectors
    Rng    rng(17);
    Matrix u   = random_unitary(4, rng);
    Matrix d   = Matrix::Zero(4, 4);
    d(0, 0)    = 0.3;
    d(1, 1)    = 0.3;
    d(2, 2)    = 0.3;
    d(3, 3)    = 0.1;
    Matrix rho = u * d * u.adjoint();
    auto   one = possible_internal_states({"A", rho, 1.0, 0.0});
    Matrix w   = Matrix::Identity(4, 4);
    w.topLeftCorner(3, 3) = random_unitary(3, rng);
    Matrix rho2 = (u * w) * d * (u * w).adjoint();
    auto   two  = possible_internal_states({"A", rho2, 1.0, 0.0});
    ASSERT_EQ(one.degeneracy_groups.size(), 2u);
    EXPECT_LT(max_abs(one.basis() - two.basis()), 1e-10);
    for(std::size_t j = 0; j < one.size(); ++j) {
        const auto &v    = one.eigenvectors[j].amplitudes;
        const Index lead = relmodal::detail::leading_component(v);
        EXPECT_NEAR(v(lead).imag(), 0.0, 1e-15);
        EXPECT_GT(v(lead).real(), 0.0);
    }
}

TEST(PossibleInternalStates, ReconstructionProperty) {
    Rng rng(41);
    for(int trial = 0; trial < 200; ++trial) {
        const Index da = 1 + static_cast<Index>(rng.uniform() * 4), db = 1 + static_cast<Index>(rng.uniform() * 4);
        const Index dr = da * db + static_cast<Index>(rng.uniform() * 10);
        auto        e  = make_embedding("A", "B", "R", da, db, random_isometry(dr, da * db, rng));
        StateVector psi{"R", random_unit_vector(dr, rng)};
        auto        rho = relational_state(psi, e, Factor::a);
        auto        dec = possible_internal_states(rho);
        EXPECT_LT(max_abs(rho.matrix - dec.reconstruct()), 1e-10);
        const Matrix gram = dec.basis().adjoint() * dec.basis();
        EXPECT_LT(max_abs(gram - Matrix::Identity(gram.rows(), gram.cols())), 1e-10);
        double sum = 0.0;
        for(double l : dec.eigenvalues) {
            EXPECT_GE(l, 0.0);
            EXPECT_LE(l, 1.0);
            sum += l;
        }
        EXPECT_LE(sum, 1.0 + 1e-10);
        EXPECT_NEAR(sum + dec.annihilation_probability, 1.0, 1e-12);
        EXPECT_TRUE(std::is_sorted(dec.eigenvalues.rbegin(), dec.eigenvalues.rend()));
    }
}

TEST(Sampling, Certainties) {
    SpectralDecomposition sure;
    sure.eigenvalues  = {1.0};
    sure.eigenvectors = {{"A", Vector::Ones(1)}};
    SpectralDecomposition gone;
    gone.annihilation_probability = 1.0;
    for(std::uint64_t seed = 0; seed < 200; ++seed) {
        EXPECT_EQ(sample_internal_state(sure, seed), (SampleOutcome{SampleOutcome::Kind::state, 0}));
        EXPECT_EQ(sample_internal_state(gone, seed).kind, SampleOutcome::Kind::annihilated);
    }
}

TEST(Sampling, FirstOfStreamEqualsSingleDraw) {
    SpectralDecomposition dec;
    dec.eigenvalues              = {0.4, 0.3};
    dec.annihilation_probability = 0.3;
    for(std::uint64_t seed = 0; seed < 50; ++seed) EXPECT_EQ(sample_internal_states(dec, seed, 5).front(), sample_internal_state(dec, seed));
}

TEST(Sampling, HalfHalfWithinBinomialBand) {
    SpectralDecomposition dec;
    dec.eigenvalues = {0.5, 0.5};
    const std::size_t n = 100000;
    auto              draws = sample_internal_states(dec, 12345, n);
    const auto        zeros = std::count_if(draws.begin(), draws.end(), [](const auto &o) { return o.kind == SampleOutcome::Kind::state && o.index == 0; });
    const double      sigma = std::sqrt(n * 0.25);
    EXPECT_LT(std::abs(static_cast<double>(zeros) - 0.5 * n), 3 * sigma);
}

TEST(Sampling, ChiSquareWithAnnihilation) {
    SpectralDecomposition dec;
    dec.eigenvalues              = {0.35, 0.35};
    dec.annihilation_probability = 0.3;
    const std::size_t n          = 100000;
    auto              draws      = sample_internal_states(dec, 777, n);
    std::array<double, 3> counts{};
    for(const auto &o : draws) counts[o.kind == SampleOutcome::Kind::annihilated ? 2 : o.index] += 1;
    const std::array<double, 3> p{0.35, 0.35, 0.3};
    double                      chi2 = 0.0;
    for(int k = 0; k < 3; ++k) chi2 += std::pow(counts[k] - n * p[k], 2) / (n * p[k]);
    const double critical = boost::math::quantile(boost::math::complement(boost::math::chi_squared(2), 0.001));
    EXPECT_LT(chi2, critical);
    EXPECT_EQ(draws, sample_internal_states(dec, 777, n));
}

TEST(IsolatedIndependence, ProductPasses) {
    auto a = build_fock_space("I", {boson("a", 2)});
    auto b = build_fock_space("E", {boson("b", 1), fermion("f")});
    auto e = identity_embedding(a, b);
    Rng  rng(4);
    StateVector psi{e.r_id, kron(random_unit_vector(3, rng), random_unit_vector(4, rng))};
    auto        rep = check_isolated_independence(psi, e);
    EXPECT_EQ(rep.status, CheckStatus::pass);
    EXPECT_LT(rep.deviation, 1e-10);
    EXPECT_EQ(rep.rank, 1u);
}

TEST(IsolatedIndependence, BellNotApplicable) {
    auto r   = two_qubits();
    auto pe  = partition_embedding(r, {"a"}, {"b"}, "A", "B");
    auto rep = check_isolated_independence(bell(r), pe.embedding);
    EXPECT_EQ(rep.status, CheckStatus::not_applicable);
    EXPECT_EQ(rep.rank, 2u);
    EXPECT_NE(rep.message.find("entangled"), std::string::npos);
}

TEST(IsolatedIndependence, TinyNoiseStillPasses) {
    auto a = build_fock_space("I", {boson("a", 2)});
    auto b = build_fock_space("E", {boson("b", 2)});
    auto e = identity_embedding(a, b);
    Rng  rng(21);
    Vector v = kron(random_unit_vector(3, rng), random_unit_vector(3, rng));
    for(Index i = 0; i < v.size(); ++i) v(i) += 1e-12 * rng.complex_normal();
    v /= v.norm();
    auto rep = check_isolated_independence({e.r_id, v}, e);
    EXPECT_EQ(rep.status, CheckStatus::pass);
    EXPECT_LT(rep.deviation, 1e-10);
}
