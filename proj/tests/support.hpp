// Test-only oracles and generators. Everything here works on dense
// matrices over the full reference space and avoids the library's reshape
// and contraction paths, so it can check them independently.
#ifndef RELMODAL_TESTS_SUPPORT_HPP
#define RELMODAL_TESTS_SUPPORT_HPP

#include <cmath>
#include <vector>

#include <relmodal/relmodal.hpp>

namespace relmodal::testing {

/// rho_A(j,k) = sum_l <V(e_j (x) e_l)|psi> <psi|V(e_k (x) e_l)>, element by element.
inline Matrix oracle_reduce_a(const Vector &psi, const Embedding &e) {
    Matrix rho = Matrix::Zero(e.dim_a, e.dim_a);
    for(Index j = 0; j < e.dim_a; ++j)
        for(Index k = 0; k < e.dim_a; ++k) {
            cplx sum = 0.0;
            for(Index l = 0; l < e.dim_b; ++l) {
                const Vector xj = e.isometry.col(j * e.dim_b + l);
                const Vector xk = e.isometry.col(k * e.dim_b + l);
                sum += xj.dot(psi) * std::conj(xk.dot(psi));
            }
            rho(j, k) = sum;
        }
    return rho;
}

inline Matrix oracle_reduce_b(const Vector &psi, const Embedding &e) {
    Matrix rho = Matrix::Zero(e.dim_b, e.dim_b);
    for(Index j = 0; j < e.dim_b; ++j)
        for(Index k = 0; k < e.dim_b; ++k) {
            cplx sum = 0.0;
            for(Index l = 0; l < e.dim_a; ++l) {
                const Vector xj = e.isometry.col(l * e.dim_b + j);
                const Vector xk = e.isometry.col(l * e.dim_b + k);
                sum += xj.dot(psi) * std::conj(xk.dot(psi));
            }
            rho(j, k) = sum;
        }
    return rho;
}

/// 1 - <psi|V V^dagger|psi> through the full projector on R.
inline double oracle_deficit(const Vector &psi, const Matrix &v) {
    const Matrix projector = v * v.adjoint();
    return 1.0 - psi.dot(projector * psi).real();
}

/// <psi| V (pi_1 (x) ... (x) pi_n (x) 1_B) V^dagger |psi> for every outcome tuple.
inline std::vector<double> oracle_joint(const Vector &psi, const ComposedEmbedding &c, const std::vector<SpectralDecomposition> &spectra) {
    const std::size_t        n = spectra.size();
    std::vector<std::size_t> ranges;
    std::size_t              total = 1;
    for(const auto &s : spectra) {
        ranges.push_back(s.size());
        total *= s.size();
    }
    const Matrix        image = c.joint.isometry * c.joint.isometry.adjoint();
    std::vector<double> out(total, 0.0);
    std::vector<std::size_t> idx(n);
    for(std::size_t flat = 0; flat < total; ++flat) {
        std::size_t r = flat;
        for(std::size_t k = n; k-- > 0;) {
            idx[k] = r % ranges[k];
            r /= ranges[k];
        }
        Matrix op = spectra[0].projector(idx[0]);
        for(std::size_t k = 1; k < n; ++k) op = kron(op, spectra[k].projector(idx[k]));
        op                  = kron(op, Matrix::Identity(c.joint.dim_b, c.joint.dim_b));
        const Matrix lifted = c.joint.isometry * op * c.joint.isometry.adjoint();
        out[flat]           = psi.dot(image * lifted * image * psi).real();
    }
    return out;
}

/// Two-mode Jordan-Wigner operators from explicit Pauli products:
/// a_1 = s (x) 1, a_2 = Z (x) s with s = |0><1| and Z = diag(1, -1).
inline Matrix pauli_annihilator(int mode) {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 1)  = 1.0;
    Matrix z = Matrix::Zero(2, 2);
    z(0, 0)  = 1.0;
    z(1, 1)  = -1.0;
    const Matrix id = Matrix::Identity(2, 2);
    return mode == 0 ? kron(s, id) : kron(z, s);
}

/// Charge-compatible random embedding: a mode partition followed by an
/// independent random unitary inside each charge sector of R.
inline Embedding scramble_within_sectors(const Embedding &e, const FockSpace &r, Rng &rng, const std::vector<ChargeKind> &kinds) {
    // joint sector label over all listed kinds
    std::map<std::vector<long long>, std::vector<Index>> sectors;
    for(Index i = 0; i < r.dimension(); ++i) {
        std::vector<long long> key;
        for(auto kind : kinds) key.push_back(r.total_charge(i, kind));
        sectors[key].push_back(i);
    }
    Matrix u = Matrix::Zero(r.dimension(), r.dimension());
    for(const auto &[key, members] : sectors) {
        const Index  k     = static_cast<Index>(members.size());
        const Matrix block = random_unitary(k, rng);
        for(Index i = 0; i < k; ++i)
            for(Index j = 0; j < k; ++j) u(members[i], members[j]) = block(i, j);
    }
    Embedding out = e;
    out.isometry  = u * e.isometry;
    return out;
}

inline Vector random_in_sector(const FockSpace &r, ChargeKind kind, long long charge, Rng &rng) {
    Vector v = Vector::Zero(r.dimension());
    for(Index i = 0; i < r.dimension(); ++i)
        if(r.total_charge(i, kind) == charge) v(i) = rng.complex_normal();
    return v / v.norm();
}

/// Unit vector with weight `inside` in the image of V and the rest outside it.
inline Vector partially_outside(const Matrix &v, double inside, Rng &rng) {
    const Index dim_r = v.rows();
    Vector      in    = v * random_unit_vector(v.cols(), rng);
    if(v.cols() == dim_r) return in; // image is all of R
    Vector      out   = random_unit_vector(dim_r, rng);
    out -= v * (v.adjoint() * out);
    out /= out.norm();
    return std::sqrt(inside) * in + std::sqrt(1.0 - inside) * out;
}

} // namespace relmodal::testing

#endif
