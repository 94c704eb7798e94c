#ifndef RELMODAL_DYNAMICS_HPP
#define RELMODAL_DYNAMICS_HPP

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hilbert.hpp"
#include "relational.hpp"

namespace relmodal {

struct OpFactor {
    enum class Kind { create, annihilate, number };
    Kind        kind = Kind::number;
    std::string mode;
};

/// coefficient * (product of factors, leftmost applied last). Terms that
/// are not self-adjoint are added together with their adjoint.
struct HamiltonianTerm {
    double                coefficient = 0.0;
    std::vector<OpFactor> factors;
};

/// Units with hbar = 1.
struct HamiltonianSpec {
    std::string                  space_id;
    std::vector<HamiltonianTerm> terms;
    LinearOperator               assembled;
};

inline HamiltonianSpec build_hamiltonian(const FockSpace &space, std::vector<HamiltonianTerm> terms, const Tolerances &tol = {}) {
    const Index dim = space.dimension();
    Matrix      h   = Matrix::Zero(dim, dim);
    for(const auto &term : terms) {
        if(!std::isfinite(term.coefficient)) throw InvalidArgument("build_hamiltonian: non-finite coefficient");
        Matrix product = Matrix::Identity(dim, dim);
        for(const auto &f : term.factors) {
            switch(f.kind) {
                case OpFactor::Kind::create: product = (product * ladder_operator(space, f.mode, LadderKind::create).matrix).eval(); break;
                case OpFactor::Kind::annihilate: product = (product * ladder_operator(space, f.mode, LadderKind::annihilate).matrix).eval(); break;
                case OpFactor::Kind::number: product = (product * number_operator(space, f.mode).matrix).eval(); break;
            }
        }
        if(hermitian_deviation(product) < tol.herm)
            h += term.coefficient * product;
        else
            h += term.coefficient * (product + product.adjoint());
    }
    LinearOperator op = make_operator(space.id(), space.id(), std::move(h), true, tol);
    return {space.id(), std::move(terms), std::move(op)};
}

/// sum_i omega_i n_i
inline std::vector<HamiltonianTerm> free_terms(const std::vector<std::pair<std::string, double>> &frequencies) {
    std::vector<HamiltonianTerm> out;
    for(const auto &[mode, omega] : frequencies) out.push_back({omega, {{OpFactor::Kind::number, mode}}});
    return out;
}

/// g (a^dagger b c + h.c.): one quantum of `a` converts into one each of `b` and `c`.
inline std::vector<HamiltonianTerm> trilinear_terms(const std::string &a, const std::string &b, const std::string &c, double g) {
    return {{g, {{OpFactor::Kind::create, a}, {OpFactor::Kind::annihilate, b}, {OpFactor::Kind::annihilate, c}}}};
}

/// t (a^dagger b + h.c.)
inline std::vector<HamiltonianTerm> hopping_terms(const std::string &a, const std::string &b, double t) {
    return {{t, {{OpFactor::Kind::create, a}, {OpFactor::Kind::annihilate, b}}}};
}

/// exp(-i H t) through the eigendecomposition of H, computed once.
class Propagator {
  public:
    explicit Propagator(const HamiltonianSpec &h) : space_id_(h.space_id), solver_(h.assembled.matrix) {}

    StateVector evolve(const StateVector &psi0, double t) const {
        require_same_space(psi0.space_id, space_id_, "evolve");
        if(t == 0.0) return psi0;
        const Matrix &u     = solver_.eigenvectors();
        Vector        coeff = u.adjoint() * psi0.amplitudes;
        for(Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::polar(1.0, -solver_.eigenvalues()(k) * t);
        return {space_id_, u * coeff};
    }

    const Eigen::VectorXd &energies() const { return solver_.eigenvalues(); }

  private:
    std::string                           space_id_;
    Eigen::SelfAdjointEigenSolver<Matrix> solver_;
};

inline StateVector evolve(const StateVector &psi0, const HamiltonianSpec &h, double t, const Tolerances &tol = {}) {
    require_same_space(psi0.space_id, h.space_id, "evolve");
    require_unit_norm(psi0, tol, "evolve");
    return Propagator(h).evolve(psi0, t);
}

inline double expectation(const Matrix &op, const Vector &psi) { return psi.dot(op * psi).real(); }

struct MonitorRecord {
    double                        norm   = 0.0;
    double                        energy = 0.0;
    std::map<std::string, double> charges;
    std::map<std::string, double> relational_traces;
};

struct Trajectory {
    std::vector<double>        times;
    std::vector<StateVector>   states;
    std::vector<MonitorRecord> monitors;
};

struct MonitorSet {
    std::vector<std::pair<std::string, LinearOperator>> charges;
    std::vector<std::pair<std::string, Embedding>>      embeddings;
};

inline Trajectory evolve_trajectory(const StateVector &psi0, const HamiltonianSpec &h, const std::vector<double> &times, const MonitorSet &monitors,
                                    const Tolerances &tol = {}) {
    require_same_space(psi0.space_id, h.space_id, "evolve_trajectory");
    require_unit_norm(psi0, tol, "evolve_trajectory");
    for(const auto &[name, e] : monitors.embeddings) require_same_space(e.r_id, h.space_id, "evolve_trajectory embedding");
    const Propagator prop(h);
    Trajectory       traj;
    for(double t : times) {
        StateVector   psi = prop.evolve(psi0, t);
        MonitorRecord rec;
        rec.norm   = psi.amplitudes.norm();
        rec.energy = expectation(h.assembled.matrix, psi.amplitudes);
        for(const auto &[name, q] : monitors.charges) rec.charges[name] = expectation(q.matrix, psi.amplitudes);
        for(const auto &[name, e] : monitors.embeddings) rec.relational_traces[name] = relational_state(psi, e, Factor::a, tol).trace;
        traj.times.push_back(t);
        traj.states.push_back(std::move(psi));
        traj.monitors.push_back(std::move(rec));
    }
    return traj;
}

/// Records Tr rho_A(R)(t) under the embedding's A id; the deficit is 1 minus it.
inline Trajectory trace_deficit_trajectory(const StateVector &psi0, const HamiltonianSpec &h, const Embedding &e, const std::vector<double> &times,
                                           const Tolerances &tol = {}) {
    require_same_space(e.r_id, h.space_id, "trace_deficit_trajectory");
    return evolve_trajectory(psi0, h, times, MonitorSet{{}, {{e.a_id, e}}}, tol);
}

} // namespace relmodal

#endif
