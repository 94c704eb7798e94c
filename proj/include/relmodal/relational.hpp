#ifndef RELMODAL_RELATIONAL_HPP
#define RELMODAL_RELATIONAL_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hilbert.hpp"
#include "random.hpp"

namespace relmodal {

enum class Factor { a, b };

/// Relational state rho_X(R). Its trace may be below one when the reference
/// state leaves the embedded product space; the missing weight is
/// `trace_deficit`.
struct DensityOperator {
    std::string space_id;
    Matrix      matrix;
    double      trace         = 0.0;
    double      trace_deficit = 0.0;

    Index dimension() const { return matrix.rows(); }
};

struct DensityReport {
    double hermitian_deviation = 0.0;
    double min_eigenvalue      = 0.0;
    double trace               = 0.0;
    bool   ok                  = false;
};

inline DensityReport check_density(const DensityOperator &rho, const Tolerances &tol = {}) {
    DensityReport r;
    r.hermitian_deviation = hermitian_deviation(rho.matrix);
    r.trace               = rho.matrix.trace().real();
    if(rho.dimension() > 0) {
        Matrix h = 0.5 * (rho.matrix + rho.matrix.adjoint());
        r.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    }
    r.ok = r.hermitian_deviation < tol.herm && r.min_eigenvalue > -tol.psd && r.trace <= 1.0 + tol.norm;
    return r;
}

namespace detail {

// Reshape of phi (length dim_a*dim_b, A-major) into the dim_a x dim_b matrix M(a,b).
inline Matrix reshape_a_major(const Vector &phi, Index dim_a, Index dim_b) {
    return Eigen::Map<const Matrix>(phi.data(), dim_b, dim_a).transpose();
}

} // namespace detail

/// rho_X(R) = Tr_{other factor} of the reference projector restricted to
/// the embedded product space.
inline DensityOperator relational_state(const StateVector &psi, const Embedding &e, Factor factor, const Tolerances &tol = {}) {
    require_same_space(psi.space_id, e.r_id, "relational_state");
    require_unit_norm(psi, tol, "relational_state");
    const auto   proj = project_onto_image(psi, e);
    const Matrix m    = detail::reshape_a_major(proj.component, e.dim_a, e.dim_b);
    Matrix       rho  = factor == Factor::a ? Matrix(m * m.adjoint()) : Matrix(m.transpose() * m.conjugate());
    rho               = 0.5 * (rho + rho.adjoint()).eval();
    const double tr   = rho.trace().real();
    return {factor == Factor::a ? e.a_id : e.b_id, std::move(rho), tr, 1.0 - tr};
}

/// Possible internal states: the eigenpairs of a relational state, sorted by
/// descending eigenvalue, with near-zero eigenvalues removed.
struct SpectralDecomposition {
    std::string                           space_id;
    std::vector<double>                   eigenvalues;
    std::vector<StateVector>              eigenvectors;
    std::vector<std::vector<std::size_t>> degeneracy_groups;
    double                                annihilation_probability = 0.0;
    std::size_t                           dropped_count            = 0;

    std::size_t size() const { return eigenvalues.size(); }

    bool degenerate() const {
        return std::any_of(degeneracy_groups.begin(), degeneracy_groups.end(), [](const auto &g) { return g.size() > 1; });
    }

    Matrix projector(std::size_t j) const { return eigenvectors[j].amplitudes * eigenvectors[j].amplitudes.adjoint(); }

    /// Eigenvectors as columns.
    Matrix basis() const {
        const Index dim = eigenvectors.empty() ? 0 : eigenvectors.front().dimension();
        Matrix      out(dim, static_cast<Index>(eigenvectors.size()));
        for(std::size_t j = 0; j < eigenvectors.size(); ++j) out.col(static_cast<Index>(j)) = eigenvectors[j].amplitudes;
        return out;
    }

    Matrix reconstruct() const {
        const Index dim = eigenvectors.empty() ? 0 : eigenvectors.front().dimension();
        Matrix      out = Matrix::Zero(dim, dim);
        for(std::size_t j = 0; j < eigenvalues.size(); ++j) out += eigenvalues[j] * projector(j);
        return out;
    }
};

namespace detail {

inline Index leading_component(const Vector &v) {
    const double peak = v.cwiseAbs().maxCoeff();
    for(Index i = 0; i < v.size(); ++i)
        if(std::abs(v(i)) >= peak * (1.0 - 1e-8)) return i;
    return 0;
}

/// Deterministic orthonormal basis for span(columns of q), independent of
/// which basis of the span the solver returned. Pivoted Gram-Schmidt on the
/// span's projector, then each vector's largest-modulus component is made
/// real positive and vectors are ordered by the index of that component.
inline std::vector<Vector> canonical_basis(const Matrix &q) {
    const Index k        = q.cols();
    Matrix      residual = q * q.adjoint();
    std::vector<Vector> picked;
    for(Index step = 0; step < k; ++step) {
        const Eigen::VectorXd norms = residual.colwise().norm().transpose();
        const double          peak  = norms.maxCoeff();
        Index                 pivot = 0;
        while(norms(pivot) < peak * (1.0 - 1e-8)) ++pivot;
        Vector v = residual.col(pivot);
        for(int pass = 0; pass < 2; ++pass)
            for(const auto &u : picked) v -= u * u.dot(v);
        v /= v.norm();
        residual -= v * (v.adjoint() * residual);
        picked.push_back(std::move(v));
    }
    std::vector<std::pair<Index, Vector>> keyed;
    for(auto &v : picked) {
        const Index lead  = leading_component(v);
        const cplx  phase = v(lead) / std::abs(v(lead));
        v *= std::conj(phase);
        v(lead) = std::abs(v(lead));
        keyed.emplace_back(lead, std::move(v));
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto &x, const auto &y) { return x.first < y.first; });
    std::vector<Vector> out;
    for(auto &kv : keyed) out.push_back(std::move(kv.second));
    return out;
}

/// Groups of consecutive entries of a descending list within `tol` of the
/// group's first entry.
inline std::vector<std::vector<std::size_t>> group_descending(const std::vector<double> &values, double tol) {
    std::vector<std::vector<std::size_t>> groups;
    for(std::size_t j = 0; j < values.size(); ++j) {
        if(groups.empty() || values[groups.back().front()] - values[j] > tol) groups.emplace_back();
        groups.back().push_back(j);
    }
    return groups;
}

} // namespace detail

inline SpectralDecomposition possible_internal_states(const DensityOperator &rho, const Tolerances &tol = {}) {
    const auto check = check_density(rho, tol);
    if(!check.ok)
        throw ValidationError("possible_internal_states: input is not a valid relational state (herm dev " + std::to_string(check.hermitian_deviation) +
                              ", min eig " + std::to_string(check.min_eigenvalue) + ", trace " + std::to_string(check.trace) + ")");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (rho.matrix + rho.matrix.adjoint()));
    const Eigen::VectorXd                &evals = solver.eigenvalues();
    const Matrix                         &evecs = solver.eigenvectors();

    SpectralDecomposition dec;
    dec.space_id = rho.space_id;
    std::vector<double> kept;
    std::vector<Index>  cols;
    for(Index i = evals.size(); i-- > 0;) { // ascending -> descending
        if(evals(i) < tol.zero_eig) {
            ++dec.dropped_count;
            continue;
        }
        kept.push_back(std::min(evals(i), 1.0));
        cols.push_back(i);
    }
    dec.degeneracy_groups = detail::group_descending(kept, tol.degen);
    for(const auto &group : dec.degeneracy_groups) {
        Matrix q(rho.dimension(), static_cast<Index>(group.size()));
        for(std::size_t g = 0; g < group.size(); ++g) q.col(static_cast<Index>(g)) = evecs.col(cols[group[g]]);
        auto vectors = detail::canonical_basis(q);
        for(std::size_t g = 0; g < group.size(); ++g) {
            // eigenvalue from the canonical vector keeps reconstruction exact within the group
            const double lambda = std::clamp(vectors[g].dot(rho.matrix * vectors[g]).real(), 0.0, 1.0);
            dec.eigenvalues.push_back(lambda);
            dec.eigenvectors.push_back({rho.space_id, std::move(vectors[g])});
        }
    }
    dec.annihilation_probability = std::max(0.0, 1.0 - std::accumulate(dec.eigenvalues.begin(), dec.eigenvalues.end(), 0.0));
    return dec;
}

struct SampleOutcome {
    enum class Kind { state, annihilated };
    Kind        kind  = Kind::annihilated;
    std::size_t index = 0;

    bool operator==(const SampleOutcome &) const = default;
};

namespace detail {

inline SampleOutcome draw(const SpectralDecomposition &dec, double u) {
    double cumulative = 0.0;
    for(std::size_t j = 0; j < dec.eigenvalues.size(); ++j) {
        cumulative += dec.eigenvalues[j];
        if(u < cumulative) return {SampleOutcome::Kind::state, j};
    }
    // u landed in the rounding gap above the last eigenvalue
    if(dec.annihilation_probability <= 0.0 && !dec.eigenvalues.empty()) return {SampleOutcome::Kind::state, dec.eigenvalues.size() - 1};
    return {SampleOutcome::Kind::annihilated, 0};
}

} // namespace detail

/// Realized internal state: State(j) with probability lambda_j, Annihilated
/// with the trace deficit. One uniform from Rng(seed) drives the draw.
inline SampleOutcome sample_internal_state(const SpectralDecomposition &dec, std::uint64_t seed) {
    Rng rng(seed);
    return detail::draw(dec, rng.uniform());
}

/// `count` draws from one stream; the first equals sample_internal_state(dec, seed).
inline std::vector<SampleOutcome> sample_internal_states(const SpectralDecomposition &dec, std::uint64_t seed, std::size_t count) {
    Rng                        rng(seed);
    std::vector<SampleOutcome> out;
    out.reserve(count);
    for(std::size_t i = 0; i < count; ++i) out.push_back(detail::draw(dec, rng.uniform()));
    return out;
}

enum class CheckStatus { pass, fail, not_applicable };

inline std::string_view to_string(CheckStatus s) {
    switch(s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::not_applicable: return "not_applicable";
    }
    return "?";
}

struct IsolationReport {
    CheckStatus status        = CheckStatus::not_applicable;
    std::size_t rank          = 0;
    double      trace_deficit = 0.0;
    double      deviation     = 0.0; // max |rho_I(R) - |psi_I><psi_I||
    std::string message;
};

/// When the image component of psi factorizes as psi_I (x) psi_rest, the
/// state of I with respect to R must be the pure projector on psi_I.
inline IsolationReport check_isolated_independence(const StateVector &psi, const Embedding &e, const Tolerances &tol = {}) {
    const DensityOperator rho = relational_state(psi, e, Factor::a, tol);
    IsolationReport       report;
    report.trace_deficit = rho.trace_deficit;

    Eigen::SelfAdjointEigenSolver<Matrix> solver(rho.matrix);
    const Eigen::VectorXd                &evals = solver.eigenvalues();
    for(Index i = 0; i < evals.size(); ++i)
        if(evals(i) >= tol.zero_eig) ++report.rank;
    if(report.rank != 1) {
        report.message = "not applicable: state entangled (rank " + std::to_string(report.rank) + ")";
        return report;
    }
    if(!(std::abs(rho.trace_deficit) < tol.norm)) {
        report.message = "not applicable: reference state leaves the embedded product space";
        return report;
    }
    // psi_I is the leading left singular vector of the reshaped image component
    const auto   proj = project_onto_image(psi, e);
    const Matrix m    = detail::reshape_a_major(proj.component, e.dim_a, e.dim_b);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
    const Vector psi_i = svd.matrixU().col(0);
    report.deviation   = max_abs(rho.matrix - psi_i * psi_i.adjoint());
    report.status      = report.deviation < tol.herm ? CheckStatus::pass : CheckStatus::fail;
    report.message     = report.status == CheckStatus::pass ? "state independent of reference" : "state depends on reference";
    return report;
}

} // namespace relmodal

#endif
