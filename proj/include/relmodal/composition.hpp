#ifndef RELMODAL_COMPOSITION_HPP
#define RELMODAL_COMPOSITION_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hilbert.hpp"
#include "relational.hpp"

namespace relmodal {

/// psi_R = sum_j c_j V(a_j (x) b_j) + residual, with the residual orthogonal
/// to the whole embedded product space.
struct SchmidtDecomposition {
    std::vector<double>                   coefficients; // c_j >= 0, descending
    std::vector<StateVector>              a_vectors;
    std::vector<StateVector>              b_vectors;
    std::vector<std::vector<std::size_t>> degeneracy_groups;
    StateVector                           residual;
    double                                residual_norm_sq = 0.0;

    std::size_t rank() const { return coefficients.size(); }

    bool degenerate() const {
        return std::any_of(degeneracy_groups.begin(), degeneracy_groups.end(), [](const auto &g) { return g.size() > 1; });
    }

    /// sum_j c_j a_j (x) b_j in A (x) B coordinates.
    Vector product_part() const {
        if(a_vectors.empty()) return {};
        Vector out = Vector::Zero(a_vectors.front().dimension() * b_vectors.front().dimension());
        for(std::size_t j = 0; j < coefficients.size(); ++j) out += coefficients[j] * kron(a_vectors[j].amplitudes, b_vectors[j].amplitudes);
        return out;
    }
};

inline SchmidtDecomposition schmidt_decompose(const StateVector &psi, const Embedding &e, const Tolerances &tol = {}) {
    require_same_space(psi.space_id, e.r_id, "schmidt_decompose");
    require_unit_norm(psi, tol, "schmidt_decompose");
    const auto   proj = project_onto_image(psi, e);
    const Matrix m    = detail::reshape_a_major(proj.component, e.dim_a, e.dim_b);

    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd   &sv = svd.singularValues();
    Index                    rank = 0;
    while(rank < sv.size() && sv(rank) > tol.zero_schmidt) ++rank;

    std::vector<double> squares(static_cast<std::size_t>(rank));
    for(Index j = 0; j < rank; ++j) squares[static_cast<std::size_t>(j)] = sv(j) * sv(j);

    SchmidtDecomposition out;
    out.degeneracy_groups = detail::group_descending(squares, tol.degen);
    for(const auto &group : out.degeneracy_groups) {
        if(group.size() == 1) {
            const Index j     = static_cast<Index>(group.front());
            Vector      a     = svd.matrixU().col(j);
            Vector      b     = svd.matrixV().col(j).conjugate();
            const Index lead  = detail::leading_component(a);
            const cplx  phase = a(lead) / std::abs(a(lead));
            a *= std::conj(phase);
            b *= phase;
            out.coefficients.push_back(sv(j));
            out.a_vectors.push_back({e.a_id, std::move(a)});
            out.b_vectors.push_back({e.b_id, std::move(b)});
            continue;
        }
        // degenerate: canonical A-side basis of the group's span, B side from M^T conj(a)
        Matrix q(e.dim_a, static_cast<Index>(group.size()));
        for(std::size_t g = 0; g < group.size(); ++g) q.col(static_cast<Index>(g)) = svd.matrixU().col(static_cast<Index>(group[g]));
        for(auto &a : detail::canonical_basis(q)) {
            Vector       b = m.transpose() * a.conjugate();
            const double c = b.norm();
            out.coefficients.push_back(c);
            out.a_vectors.push_back({e.a_id, std::move(a)});
            out.b_vectors.push_back({e.b_id, b / c});
        }
    }
    out.residual         = {psi.space_id, psi.amplitudes - e.isometry * proj.component};
    out.residual_norm_sq = out.residual.squared_norm();
    return out;
}

/// Embedding of A_1 (x) ... (x) A_n (x) B into R, with the factor structure
/// of the A side kept explicit.
struct ComposedEmbedding {
    Embedding                joint; // A = A_1 (x) ... (x) A_n
    std::vector<std::string> factor_ids;
    std::vector<Index>       factor_dims;

    std::size_t factor_count() const { return factor_ids.size(); }
};

inline ComposedEmbedding make_composed(Embedding joint, std::vector<std::string> factor_ids, std::vector<Index> factor_dims,
                                       const Tolerances &tol = {}) {
    if(factor_ids.size() != factor_dims.size() || factor_ids.empty()) throw ShapeError("make_composed: factor ids and dims disagree");
    const Index product = std::accumulate(factor_dims.begin(), factor_dims.end(), Index{1}, std::multiplies<>());
    if(product != joint.dim_a) throw ShapeError("make_composed: factor dimensions do not multiply to dim(A)");
    return {require_valid(std::move(joint), tol), std::move(factor_ids), std::move(factor_dims)};
}

struct ComposedPartition {
    std::vector<FockSpace> factors;
    FockSpace              complement;
    ComposedEmbedding      composed;
};

namespace detail {

inline std::string join_ids(const std::vector<std::string> &ids) {
    std::string out;
    for(const auto &id : ids) out += (out.empty() ? "" : "*") + id;
    return out;
}

} // namespace detail

/// Mode-partition composition: factor i holds `groups[i]`, the complementer
/// holds `complement`, and every other mode of R is pinned to the vacuum.
/// Groups that share a mode do not give an isometry and are rejected.
inline ComposedPartition compose_embeddings(const FockSpace &reference, const std::vector<std::vector<std::string>> &groups,
                                            const std::vector<std::string> &complement, const std::vector<std::string> &factor_ids,
                                            std::string complement_id, const Tolerances &tol = {}) {
    if(groups.empty() || groups.size() != factor_ids.size()) throw InvalidArgument("compose_embeddings: need one id per mode group");
    std::vector<FockSpace>                spaces;
    std::vector<std::vector<std::size_t>> slots(groups.size() + 1);
    for(std::size_t k = 0; k < groups.size(); ++k) {
        if(groups[k].empty()) throw InvalidArgument("compose_embeddings: empty mode group");
        spaces.push_back(detail::subspace_of_modes(reference, factor_ids[k], groups[k], slots[k]));
    }
    FockSpace rest = detail::subspace_of_modes(reference, complement_id, complement, slots.back());
    spaces.push_back(rest);
    Matrix v = detail::placement_map(reference, spaces, slots);
    spaces.pop_back();

    std::vector<Index> dims;
    for(const auto &s : spaces) dims.push_back(s.dimension());
    const Index dim_a = std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
    Embedding joint = make_embedding(detail::join_ids(factor_ids), rest.id(), reference.id(), dim_a, rest.dimension(), std::move(v));
    ComposedEmbedding composed = make_composed(std::move(joint), factor_ids, std::move(dims), tol);
    return {std::move(spaces), std::move(rest), std::move(composed)};
}

/// Chains nested complementer embeddings: steps[0] embeds A_1 (x) B_1 into R
/// and steps[k] embeds A_{k+1} (x) B_{k+1} into B_k. The result embeds
/// A_1 (x) ... (x) A_n (x) B_n into R.
inline ComposedEmbedding chain_embeddings(const std::vector<Embedding> &steps, const Tolerances &tol = {}) {
    if(steps.empty()) throw InvalidArgument("chain_embeddings: no steps");
    Matrix                   v = steps.front().isometry;
    std::vector<std::string> ids{steps.front().a_id};
    std::vector<Index>       dims{steps.front().dim_a};
    Index                    dim_left = steps.front().dim_a;
    for(std::size_t k = 1; k < steps.size(); ++k) {
        require_same_space(steps[k].r_id, steps[k - 1].b_id, "chain_embeddings");
        if(steps[k].dim_r() != steps[k - 1].dim_b) throw ShapeError("chain_embeddings: step dimension mismatch");
        v = (v * kron(Matrix::Identity(dim_left, dim_left), steps[k].isometry)).eval();
        ids.push_back(steps[k].a_id);
        dims.push_back(steps[k].dim_a);
        dim_left *= steps[k].dim_a;
    }
    Embedding joint = make_embedding(detail::join_ids(ids), steps.back().b_id, steps.front().r_id, dim_left, steps.back().dim_b, std::move(v));
    return make_composed(std::move(joint), std::move(ids), std::move(dims), tol);
}

/// Embedding of factor i against everything else (other factors, then the
/// complementer, in their original order).
inline Embedding factor_embedding(const ComposedEmbedding &c, std::size_t i) {
    const std::size_t n = c.factor_count();
    if(i >= n) throw InvalidArgument("factor_embedding: factor index out of range");
    std::vector<Index> dims = c.factor_dims;
    dims.push_back(c.joint.dim_b);
    const Index dim_i    = dims[i];
    const Index dim_rest = c.joint.isometry.cols() / dim_i;

    Matrix             v(c.joint.dim_r(), c.joint.isometry.cols());
    std::vector<Index> digits(dims.size());
    for(Index col = 0; col < c.joint.isometry.cols(); ++col) {
        Index r = col;
        for(std::size_t k = dims.size(); k-- > 0;) {
            digits[k] = r % dims[k];
            r /= dims[k];
        }
        Index rest = 0;
        for(std::size_t k = 0; k < dims.size(); ++k)
            if(k != i) rest = rest * dims[k] + digits[k];
        v.col(digits[i] * dim_rest + rest) = c.joint.isometry.col(col);
    }
    std::vector<std::string> rest_ids;
    for(std::size_t k = 0; k < n; ++k)
        if(k != i) rest_ids.push_back(c.factor_ids[k]);
    rest_ids.push_back(c.joint.b_id);
    return {c.factor_ids[i], detail::join_ids(rest_ids), c.joint.r_id, dim_i, dim_rest, std::move(v)};
}

/// P(j_1, ..., j_n) stored row-major (first subsystem most significant).
struct JointDistribution {
    std::vector<std::string> subsystem_ids;
    std::vector<std::size_t> index_ranges;
    std::vector<double>      probabilities;
    double                   total              = 0.0;
    double                   marginal_deviation = 0.0; // max over axes of |sum_axis P - P_without_axis|
    bool                     degenerate         = false;

    std::size_t rank() const { return index_ranges.size(); }

    std::size_t flat_index(std::span<const std::size_t> idx) const {
        std::size_t flat = 0;
        for(std::size_t k = 0; k < index_ranges.size(); ++k) flat = flat * index_ranges[k] + idx[k];
        return flat;
    }

    double at(std::span<const std::size_t> idx) const { return probabilities[flat_index(idx)]; }

    /// Sums out one subsystem.
    JointDistribution marginalize(std::size_t axis) const {
        if(axis >= rank()) throw InvalidArgument("marginalize: axis out of range");
        JointDistribution out;
        for(std::size_t k = 0; k < rank(); ++k)
            if(k != axis) {
                out.subsystem_ids.push_back(subsystem_ids[k]);
                out.index_ranges.push_back(index_ranges[k]);
            }
        std::size_t size = 1;
        for(auto r : out.index_ranges) size *= r;
        out.probabilities.assign(size, 0.0);
        std::vector<std::size_t> idx(rank(), 0), sub;
        for(std::size_t flat = 0; flat < probabilities.size(); ++flat) {
            std::size_t r = flat;
            for(std::size_t k = rank(); k-- > 0;) {
                idx[k] = r % index_ranges[k];
                r /= index_ranges[k];
            }
            sub.clear();
            for(std::size_t k = 0; k < rank(); ++k)
                if(k != axis) sub.push_back(idx[k]);
            out.probabilities[out.flat_index(sub)] += probabilities[flat];
        }
        out.total      = std::accumulate(out.probabilities.begin(), out.probabilities.end(), 0.0);
        out.degenerate = degenerate;
        return out;
    }
};

namespace detail {

/// Contracts axis `axis` of a row-major tensor with conj(basis): the new
/// axis runs over basis columns.
inline Vector contract_axis(const Vector &t, std::vector<Index> &dims, std::size_t axis, const Matrix &basis) {
    Index outer = 1, inner = 1;
    for(std::size_t k = 0; k < axis; ++k) outer *= dims[k];
    for(std::size_t k = axis + 1; k < dims.size(); ++k) inner *= dims[k];
    const Index d = dims[axis], kout = basis.cols();
    Vector      out = Vector::Zero(outer * kout * inner);
    for(Index o = 0; o < outer; ++o)
        for(Index j = 0; j < kout; ++j)
            for(Index a = 0; a < d; ++a) {
                const cplx w = std::conj(basis(a, j));
                if(w == cplx{0.0, 0.0}) continue;
                out.segment((o * kout + j) * inner, inner) += w * t.segment((o * d + a) * inner, inner);
            }
    dims[axis] = kout;
    return out;
}

/// Probabilities over the axes in `included`; the other factor axes are
/// summed like the complementer.
inline std::vector<double> joint_probabilities(const Vector &phi, const ComposedEmbedding &c, const std::vector<Matrix> &bases,
                                               const std::vector<bool> &included) {
    std::vector<Index> dims = c.factor_dims;
    dims.push_back(c.joint.dim_b);
    Vector t = phi;
    for(std::size_t k = 0; k < c.factor_count(); ++k)
        if(included[k]) t = contract_axis(t, dims, k, bases[k]);
    std::size_t out_size = 1;
    for(std::size_t k = 0; k < c.factor_count(); ++k)
        if(included[k]) out_size *= static_cast<std::size_t>(dims[k]);
    std::vector<double> p(out_size, 0.0);
    std::vector<Index>  digits(dims.size());
    for(Index flat = 0; flat < t.size(); ++flat) {
        Index r = flat;
        for(std::size_t k = dims.size(); k-- > 0;) {
            digits[k] = r % dims[k];
            r /= dims[k];
        }
        std::size_t o = 0;
        for(std::size_t k = 0; k < c.factor_count(); ++k)
            if(included[k]) o = o * static_cast<std::size_t>(dims[k]) + static_cast<std::size_t>(digits[k]);
        p[o] += std::norm(t(flat));
    }
    return p;
}

} // namespace detail

/// P(j_1..j_n) = Tr[(pi_1j1 (x) ... (x) pi_njn) rho_{A_1...A_n}(I)].
/// Each spectrum must be the possible-internal-state decomposition of the
/// same psi for the corresponding factor; mismatches are rejected.
inline JointDistribution joint_distribution(const StateVector &psi, const ComposedEmbedding &c, const std::vector<SpectralDecomposition> &spectra,
                                            const Tolerances &tol = {}) {
    require_same_space(psi.space_id, c.joint.r_id, "joint_distribution");
    require_unit_norm(psi, tol, "joint_distribution");
    const std::size_t n = c.factor_count();
    if(spectra.size() != n) throw InvalidArgument("joint_distribution: need one spectrum per subsystem");

    std::vector<Matrix> bases;
    JointDistribution   out;
    for(std::size_t k = 0; k < n; ++k) {
        const auto &spec = spectra[k];
        require_same_space(spec.space_id, c.factor_ids[k], "joint_distribution spectrum");
        if(!spec.eigenvectors.empty() && spec.eigenvectors.front().dimension() != c.factor_dims[k])
            throw ShapeError("joint_distribution: spectrum dimension does not match subsystem " + c.factor_ids[k]);
        const DensityOperator rho = relational_state(psi, factor_embedding(c, k), Factor::a, tol);
        const double          dev = max_abs(rho.matrix - spec.reconstruct());
        if(!(dev < tol.herm)) throw ValidationError("joint_distribution: spectrum of " + c.factor_ids[k] + " was not computed from this reference state");
        bases.push_back(spec.basis());
        out.subsystem_ids.push_back(c.factor_ids[k]);
        out.index_ranges.push_back(spec.size());
        out.degenerate = out.degenerate || spec.degenerate();
    }
    const Vector phi  = project_onto_image(psi, c.joint).component;
    out.probabilities = detail::joint_probabilities(phi, c, bases, std::vector<bool>(n, true));
    out.total         = std::accumulate(out.probabilities.begin(), out.probabilities.end(), 0.0);

    if(n > 1) {
        for(std::size_t axis = 0; axis < n; ++axis) {
            std::vector<bool> included(n, true);
            included[axis]       = false;
            const auto lower     = detail::joint_probabilities(phi, c, bases, included);
            const auto summed    = out.marginalize(axis).probabilities;
            for(std::size_t i = 0; i < lower.size(); ++i) out.marginal_deviation = std::max(out.marginal_deviation, std::abs(lower[i] - summed[i]));
        }
    }
    return out;
}

} // namespace relmodal

#endif
