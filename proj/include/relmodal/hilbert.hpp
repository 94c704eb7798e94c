#ifndef RELMODAL_HILBERT_HPP
#define RELMODAL_HILBERT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core.hpp"

namespace relmodal {

enum class Statistics { boson, fermion };

enum class ChargeKind { electric, baryon, lepton };

inline constexpr std::array<ChargeKind, 3> all_charge_kinds{ChargeKind::electric, ChargeKind::baryon, ChargeKind::lepton};

inline std::string_view to_string(ChargeKind kind) {
    switch(kind) {
        case ChargeKind::electric: return "electric";
        case ChargeKind::baryon: return "baryon";
        case ChargeKind::lepton: return "lepton";
    }
    return "?";
}

inline ChargeKind parse_charge_kind(std::string_view name) {
    for(auto kind : all_charge_kinds)
        if(to_string(kind) == name) return kind;
    throw InvalidArgument("unknown charge kind '" + std::string(name) + "'");
}

struct ModeSpec {
    std::string                    label;
    Statistics                     statistics     = Statistics::boson;
    int                            max_occupation = 1;
    std::map<ChargeKind, long long> charges;

    long long charge(ChargeKind kind) const {
        auto it = charges.find(kind);
        return it == charges.end() ? 0 : it->second;
    }
};

inline ModeSpec boson(std::string label, int max_occupation, std::map<ChargeKind, long long> charges = {}) {
    return {std::move(label), Statistics::boson, max_occupation, std::move(charges)};
}

inline ModeSpec fermion(std::string label, std::map<ChargeKind, long long> charges = {}) {
    return {std::move(label), Statistics::fermion, 1, std::move(charges)};
}

using Occupation = std::vector<int>;

/// Truncated Fock space over an ordered list of modes. Basis states are
/// occupation tuples in lexicographic order; the first mode is the most
/// significant digit.
class FockSpace {
  public:
    FockSpace() = default;

    const std::string           &id() const { return id_; }
    const std::vector<ModeSpec> &modes() const { return modes_; }
    Index                        dimension() const { return dimension_; }
    std::size_t                  mode_count() const { return modes_.size(); }

    std::optional<std::size_t> find_mode(std::string_view label) const {
        for(std::size_t m = 0; m < modes_.size(); ++m)
            if(modes_[m].label == label) return m;
        return std::nullopt;
    }

    std::size_t mode_index(std::string_view label) const {
        if(auto m = find_mode(label)) return *m;
        throw InvalidArgument("space '" + id_ + "' has no mode '" + std::string(label) + "'");
    }

    Occupation occupation(Index index) const {
        if(index < 0 || index >= dimension_) throw InvalidArgument("basis index out of range");
        Occupation occ(modes_.size());
        for(std::size_t m = 0; m < modes_.size(); ++m) occ[m] = static_cast<int>((index / strides_[m]) % levels(m));
        return occ;
    }

    Index index_of(std::span<const int> occ) const {
        if(occ.size() != modes_.size()) throw ShapeError("occupation tuple has wrong length");
        Index index = 0;
        for(std::size_t m = 0; m < modes_.size(); ++m) {
            if(occ[m] < 0 || occ[m] > modes_[m].max_occupation)
                throw InvalidArgument("occupation of mode '" + modes_[m].label + "' out of range");
            index += occ[m] * strides_[m];
        }
        return index;
    }

    std::vector<Occupation> basis() const {
        std::vector<Occupation> out;
        out.reserve(static_cast<std::size_t>(dimension_));
        for(Index i = 0; i < dimension_; ++i) out.push_back(occupation(i));
        return out;
    }

    Index stride(std::size_t mode) const { return strides_[mode]; }

    long long total_charge(Index index, ChargeKind kind) const {
        long long q = 0;
        for(std::size_t m = 0; m < modes_.size(); ++m) q += static_cast<long long>((index / strides_[m]) % levels(m)) * modes_[m].charge(kind);
        return q;
    }

  private:
    friend FockSpace build_fock_space(std::string id, std::vector<ModeSpec> modes);
    friend FockSpace vacuum_space(std::string id);

    Index levels(std::size_t m) const { return modes_[m].max_occupation + 1; }

    void finish() {
        strides_.assign(modes_.size(), 1);
        dimension_ = 1;
        for(std::size_t m = modes_.size(); m-- > 0;) {
            strides_[m] = dimension_;
            dimension_ *= levels(m);
        }
    }

    std::string           id_;
    std::vector<ModeSpec> modes_;
    std::vector<Index>    strides_;
    Index                 dimension_ = 1;
};

inline FockSpace build_fock_space(std::string id, std::vector<ModeSpec> modes) {
    if(modes.empty()) throw InvalidArgument("build_fock_space: empty mode list for '" + id + "'");
    std::set<std::string> seen;
    for(const auto &mode : modes) {
        if(!seen.insert(mode.label).second) throw InvalidArgument("build_fock_space: duplicate mode label '" + mode.label + "'");
        if(mode.max_occupation < 0) throw InvalidArgument("build_fock_space: negative max_occupation for '" + mode.label + "'");
        if(mode.statistics == Statistics::fermion && mode.max_occupation > 1)
            throw InvalidArgument("build_fock_space: fermion mode '" + mode.label + "' cannot hold more than one particle");
    }
    FockSpace space;
    space.id_    = std::move(id);
    space.modes_ = std::move(modes);
    space.finish();
    return space;
}

/// One-dimensional space without modes; the complementer when every
/// remaining mode is pinned to the vacuum.
inline FockSpace vacuum_space(std::string id) {
    FockSpace space;
    space.id_ = std::move(id);
    space.finish();
    return space;
}

struct StateVector {
    std::string space_id;
    Vector      amplitudes;

    Index  dimension() const { return amplitudes.size(); }
    double squared_norm() const { return amplitudes.squaredNorm(); }
};

inline StateVector basis_state(const FockSpace &space, std::span<const int> occ) {
    Vector v = Vector::Zero(space.dimension());
    v(space.index_of(occ)) = 1.0;
    return {space.id(), v};
}

inline StateVector basis_state(const FockSpace &space, Index index) {
    if(index < 0 || index >= space.dimension()) throw InvalidArgument("basis_state: index out of range");
    Vector v = Vector::Zero(space.dimension());
    v(index) = 1.0;
    return {space.id(), v};
}

inline void require_unit_norm(const StateVector &psi, const Tolerances &tol, const char *what) {
    const double dev = std::abs(psi.squared_norm() - 1.0);
    if(!(dev <= tol.norm)) throw ValidationError(std::string(what) + ": state is not normalized (|norm^2 - 1| = " + std::to_string(dev) + ")");
}

struct LinearOperator {
    std::string domain_id;
    std::string codomain_id;
    Matrix      matrix;
    bool        hermitian = false;

    StateVector apply(const StateVector &psi) const {
        require_same_space(psi.space_id, domain_id, "LinearOperator::apply");
        return {codomain_id, matrix * psi.amplitudes};
    }
};

/// Checks the asserted Hermitian flag against the matrix.
inline LinearOperator make_operator(std::string domain, std::string codomain, Matrix matrix, bool hermitian, const Tolerances &tol = {}) {
    if(hermitian) {
        if(domain != codomain || matrix.rows() != matrix.cols()) throw ValidationError("Hermitian operator must be square on one space");
        const double dev = hermitian_deviation(matrix);
        if(!(dev < tol.herm)) throw ValidationError("operator flagged Hermitian deviates by " + std::to_string(dev));
    }
    return {std::move(domain), std::move(codomain), std::move(matrix), hermitian};
}

inline LinearOperator identity_operator(const FockSpace &space) {
    return {space.id(), space.id(), Matrix::Identity(space.dimension(), space.dimension()), true};
}

enum class LadderKind { create, annihilate };

/// Truncated ladder operator. Creation on the top occupation gives zero;
/// fermionic operators carry a Jordan-Wigner string over the fermion modes
/// preceding the target mode in the space's mode order.
inline LinearOperator ladder_operator(const FockSpace &space, std::string_view label, LadderKind kind) {
    const std::size_t target = space.mode_index(label);
    const auto       &mode   = space.modes()[target];
    const Index       dim    = space.dimension();
    Matrix            m      = Matrix::Zero(dim, dim);
    for(Index col = 0; col < dim; ++col) {
        Occupation occ = space.occupation(col);
        const int  n   = occ[target];
        const int  np  = kind == LadderKind::create ? n + 1 : n - 1;
        if(np < 0 || np > mode.max_occupation) continue;
        double amplitude = std::sqrt(static_cast<double>(kind == LadderKind::create ? n + 1 : n));
        if(mode.statistics == Statistics::fermion) {
            int parity = 0;
            for(std::size_t j = 0; j < target; ++j)
                if(space.modes()[j].statistics == Statistics::fermion) parity += occ[j];
            if(parity % 2) amplitude = -amplitude;
        }
        occ[target] = np;
        m(space.index_of(occ), col) = amplitude;
    }
    return {space.id(), space.id(), std::move(m), false};
}

inline LinearOperator number_operator(const FockSpace &space, std::string_view label) {
    const std::size_t target = space.mode_index(label);
    Matrix            m      = Matrix::Zero(space.dimension(), space.dimension());
    for(Index i = 0; i < space.dimension(); ++i) m(i, i) = static_cast<double>(space.occupation(i)[target]);
    return {space.id(), space.id(), std::move(m), true};
}

inline LinearOperator charge_operator(const FockSpace &space, ChargeKind kind) {
    Matrix m = Matrix::Zero(space.dimension(), space.dimension());
    for(Index i = 0; i < space.dimension(); ++i) m(i, i) = static_cast<double>(space.total_charge(i, kind));
    return {space.id(), space.id(), std::move(m), true};
}

inline std::string product_id(const std::string &a, const std::string &b) { return a + "*" + b; }

/// Product space with A's modes first, so the basis index is A-major.
inline FockSpace tensor_product(const FockSpace &a, const FockSpace &b) {
    std::vector<ModeSpec> modes = a.modes();
    modes.insert(modes.end(), b.modes().begin(), b.modes().end());
    if(modes.empty()) return vacuum_space(product_id(a.id(), b.id()));
    return build_fock_space(product_id(a.id(), b.id()), std::move(modes));
}

inline StateVector tensor_product(const StateVector &a, const StateVector &b) {
    return {product_id(a.space_id, b.space_id), kron(a.amplitudes, b.amplitudes)};
}

inline LinearOperator tensor_product(const LinearOperator &a, const LinearOperator &b) {
    return {product_id(a.domain_id, b.domain_id), product_id(a.codomain_id, b.codomain_id), kron(a.matrix, b.matrix),
            a.hermitian && b.hermitian};
}

/// Isometry V realizing A (x) B inside R. Column index is a * dim_b + b.
struct Embedding {
    std::string a_id;
    std::string b_id;
    std::string r_id;
    Index       dim_a = 0;
    Index       dim_b = 0;
    Matrix      isometry;

    Index dim_r() const { return isometry.rows(); }
};

/// Checks shapes only; isometry quality is reported by validate_embedding.
inline Embedding make_embedding(std::string a_id, std::string b_id, std::string r_id, Index dim_a, Index dim_b, Matrix isometry) {
    if(dim_a <= 0 || dim_b <= 0) throw ShapeError("embedding factor dimensions must be positive");
    if(isometry.cols() != dim_a * dim_b)
        throw ShapeError("embedding has " + std::to_string(isometry.cols()) + " columns, expected dim(A)*dim(B) = " + std::to_string(dim_a * dim_b));
    if(isometry.rows() < isometry.cols()) throw ShapeError("embedding image dimension exceeds dim(R)");
    return {std::move(a_id), std::move(b_id), std::move(r_id), dim_a, dim_b, std::move(isometry)};
}

struct EmbeddingReport {
    double deviation = 0.0; // max |V^dagger V - 1|
    bool   pass      = false;
};

inline EmbeddingReport validate_embedding(const Embedding &e, const Tolerances &tol = {}) {
    if(e.isometry.cols() != e.dim_a * e.dim_b || e.isometry.rows() < e.isometry.cols())
        throw ShapeError("validate_embedding: inconsistent embedding shape");
    const Index  n   = e.isometry.cols();
    const double dev = max_abs(e.isometry.adjoint() * e.isometry - Matrix::Identity(n, n));
    return {dev, dev < tol.herm};
}

inline Embedding require_valid(Embedding e, const Tolerances &tol) {
    auto report = validate_embedding(e, tol);
    if(!report.pass)
        throw ValidationError("embedding of " + e.a_id + " (x) " + e.b_id + " into " + e.r_id + " is not an isometry (deviation " +
                              std::to_string(report.deviation) + ")");
    return e;
}

/// R = A (x) B with V = identity.
inline Embedding identity_embedding(const FockSpace &a, const FockSpace &b) {
    const Index n = a.dimension() * b.dimension();
    return make_embedding(a.id(), b.id(), product_id(a.id(), b.id()), a.dimension(), b.dimension(), Matrix::Identity(n, n));
}

namespace detail {

/// Builds the basis-placement map from the product of the mode groups into
/// `reference`: each group's occupations are written into the corresponding
/// modes of R and every unlisted mode stays empty. Overlapping groups give a
/// map that is not an isometry; callers validate.
inline Matrix placement_map(const FockSpace &reference, const std::vector<FockSpace> &factors, const std::vector<std::vector<std::size_t>> &slots) {
    Index cols = 1;
    for(const auto &f : factors) cols *= f.dimension();
    Matrix v = Matrix::Zero(reference.dimension(), cols);
    std::vector<Index> digits(factors.size());
    for(Index col = 0; col < cols; ++col) {
        Index rest = col;
        for(std::size_t k = factors.size(); k-- > 0;) {
            digits[k] = rest % factors[k].dimension();
            rest /= factors[k].dimension();
        }
        Occupation occ(reference.mode_count(), 0);
        for(std::size_t k = 0; k < factors.size(); ++k) {
            const Occupation local = factors[k].occupation(digits[k]);
            for(std::size_t m = 0; m < local.size(); ++m) occ[slots[k][m]] = local[m];
        }
        v(reference.index_of(occ), col) += 1.0;
    }
    return v;
}

inline FockSpace subspace_of_modes(const FockSpace &reference, const std::string &id, const std::vector<std::string> &labels,
                                   std::vector<std::size_t> &slots) {
    slots.clear();
    std::vector<ModeSpec> modes;
    for(const auto &label : labels) {
        const std::size_t m = reference.mode_index(label);
        slots.push_back(m);
        modes.push_back(reference.modes()[m]);
    }
    if(modes.empty()) return vacuum_space(id);
    return build_fock_space(id, std::move(modes));
}

} // namespace detail

struct PartitionEmbedding {
    FockSpace a;
    FockSpace b;
    Embedding embedding;
};

/// Embeds A = modes `a_modes` and B = modes `b_modes` of `reference`; modes
/// in neither list are pinned to the vacuum, so A (x) B can be a proper
/// subspace of R. An empty `b_modes` gives a one-dimensional complementer.
inline PartitionEmbedding partition_embedding(const FockSpace &reference, const std::vector<std::string> &a_modes,
                                              const std::vector<std::string> &b_modes, std::string a_id, std::string b_id,
                                              const Tolerances &tol = {}) {
    if(a_modes.empty()) throw InvalidArgument("partition_embedding: subsystem needs at least one mode");
    std::vector<std::vector<std::size_t>> slots(2);
    FockSpace a = detail::subspace_of_modes(reference, a_id, a_modes, slots[0]);
    FockSpace b = detail::subspace_of_modes(reference, b_id, b_modes, slots[1]);
    Matrix    v = detail::placement_map(reference, {a, b}, slots);
    Embedding e = require_valid(make_embedding(a.id(), b.id(), reference.id(), a.dimension(), b.dimension(), std::move(v)), tol);
    return {std::move(a), std::move(b), std::move(e)};
}

struct ImageProjection {
    Vector component;  // V^dagger psi in A (x) B coordinates
    double deficiency; // ||psi||^2 - ||V^dagger psi||^2, clamped at 0
    double raw_deficiency;
};

inline ImageProjection project_onto_image(const StateVector &psi, const Embedding &e) {
    require_same_space(psi.space_id, e.r_id, "project_onto_image");
    if(psi.dimension() != e.dim_r()) throw ShapeError("project_onto_image: state dimension does not match reference");
    Vector       phi = e.isometry.adjoint() * psi.amplitudes;
    const double raw = psi.squared_norm() - phi.squaredNorm();
    return {std::move(phi), std::max(raw, 0.0), raw};
}

} // namespace relmodal

#endif
