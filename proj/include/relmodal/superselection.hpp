#ifndef RELMODAL_SUPERSELECTION_HPP
#define RELMODAL_SUPERSELECTION_HPP

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hilbert.hpp"
#include "relational.hpp"

namespace relmodal {

/// Basis indices of a Fock space grouped by total charge. Charges are
/// exact integers.
struct SectorDecomposition {
    std::string                             space_id;
    ChargeKind                              kind = ChargeKind::electric;
    std::map<long long, std::vector<Index>> sectors;
    std::vector<long long>                  charge_of; // per basis index

    Matrix projector(long long charge) const {
        const Index n = static_cast<Index>(charge_of.size());
        Matrix      p = Matrix::Zero(n, n);
        for(Index i = 0; i < n; ++i)
            if(charge_of[static_cast<std::size_t>(i)] == charge) p(i, i) = 1.0;
        return p;
    }
};

inline SectorDecomposition sector_decomposition(const FockSpace &space, ChargeKind kind) {
    SectorDecomposition dec;
    dec.space_id = space.id();
    dec.kind     = kind;
    dec.charge_of.resize(static_cast<std::size_t>(space.dimension()));
    for(Index i = 0; i < space.dimension(); ++i) {
        const long long q                        = space.total_charge(i, kind);
        dec.charge_of[static_cast<std::size_t>(i)] = q;
        dec.sectors[q].push_back(i);
    }
    return dec;
}

/// The sector carrying all amplitude weight above tol.norm, if there is exactly one.
inline std::optional<long long> is_charge_eigenstate(const StateVector &psi, const SectorDecomposition &dec, const Tolerances &tol = {}) {
    require_same_space(psi.space_id, dec.space_id, "is_charge_eigenstate");
    std::map<long long, double> weight;
    for(Index i = 0; i < psi.dimension(); ++i) weight[dec.charge_of[static_cast<std::size_t>(i)]] += std::norm(psi.amplitudes(i));
    std::optional<long long> found;
    for(const auto &[q, w] : weight) {
        if(w <= tol.norm) continue;
        if(found) return std::nullopt;
        found = q;
    }
    return found;
}

/// Largest amplitude that V sends from a product basis vector of charge
/// q_A + q_B into a different sector of R.
inline double charge_compatibility_deviation(const Embedding &e, const SectorDecomposition &a, const SectorDecomposition &b,
                                             const SectorDecomposition &r) {
    require_same_space(a.space_id, e.a_id, "charge compatibility (A)");
    require_same_space(b.space_id, e.b_id, "charge compatibility (B)");
    require_same_space(r.space_id, e.r_id, "charge compatibility (R)");
    double worst = 0.0;
    for(Index ia = 0; ia < e.dim_a; ++ia)
        for(Index ib = 0; ib < e.dim_b; ++ib) {
            const long long q    = a.charge_of[static_cast<std::size_t>(ia)] + b.charge_of[static_cast<std::size_t>(ib)];
            const Index     col  = ia * e.dim_b + ib;
            double          leak = 0.0;
            for(Index ir = 0; ir < e.dim_r(); ++ir)
                if(r.charge_of[static_cast<std::size_t>(ir)] != q) leak += std::norm(e.isometry(ir, col));
            worst = std::max(worst, std::sqrt(leak));
        }
    return worst;
}

struct SuperselectionReport {
    CheckStatus              status = CheckStatus::not_applicable;
    ChargeKind               kind   = ChargeKind::electric;
    std::optional<long long> reference_charge;
    bool                     premise_holds            = false; // reference is a charge eigenstate
    bool                     embedding_compatible     = false;
    double                   compatibility_deviation  = 0.0;
    double                   max_off_block            = 0.0;
    std::string              message;
};

/// Largest |rho_A(R)(i,j)| over A basis pairs of different charge. For a
/// charge-eigenstate reference and a charge-compatible embedding this
/// vanishes (additivity of the charge); otherwise the report shows how far
/// the relational state is from block diagonal.
inline SuperselectionReport check_superselection(const StateVector &psi, const Embedding &e, const FockSpace &a, const FockSpace &b,
                                                 const FockSpace &r, ChargeKind kind, const Tolerances &tol = {}) {
    require_same_space(psi.space_id, e.r_id, "check_superselection");
    const auto sa = sector_decomposition(a, kind);
    const auto sb = sector_decomposition(b, kind);
    const auto sr = sector_decomposition(r, kind);

    SuperselectionReport report;
    report.kind                    = kind;
    report.compatibility_deviation = charge_compatibility_deviation(e, sa, sb, sr);
    report.embedding_compatible    = report.compatibility_deviation < tol.herm;
    if(!report.embedding_compatible) {
        report.message = "not applicable: embedding does not respect charge additivity";
        return report;
    }
    report.reference_charge = is_charge_eigenstate(psi, sr, tol);
    report.premise_holds    = report.reference_charge.has_value();

    const DensityOperator rho = relational_state(psi, e, Factor::a, tol);
    for(Index i = 0; i < rho.dimension(); ++i)
        for(Index j = 0; j < rho.dimension(); ++j)
            if(sa.charge_of[static_cast<std::size_t>(i)] != sa.charge_of[static_cast<std::size_t>(j)])
                report.max_off_block = std::max(report.max_off_block, std::abs(rho.matrix(i, j)));
    report.status = report.max_off_block < tol.ssr ? CheckStatus::pass : CheckStatus::fail;
    if(report.premise_holds)
        report.message = report.status == CheckStatus::pass ? "block diagonal in charge sectors" : "off-sector coherence in a charge eigenstate reference";
    else
        report.message = report.status == CheckStatus::pass ? "reference mixes charge sectors; relational state still block diagonal"
                                                            : "reference mixes charge sectors; off-sector coherence present";
    return report;
}

} // namespace relmodal

#endif
