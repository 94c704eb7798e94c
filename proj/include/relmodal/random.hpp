#ifndef RELMODAL_RANDOM_HPP
#define RELMODAL_RANDOM_HPP

#include <cmath>
#include <numbers>
#include <random>

#include "core.hpp"

namespace relmodal {

/// Portable random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard. Uniform variates take the top 53 bits
/// of one engine output; normal variates use Box-Muller on two uniforms.
/// No std:: distribution is involved, so streams are identical everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if(has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while(u1 == 0.0) u1 = uniform();
        const double u2     = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle  = 2.0 * std::numbers::pi * u2;
        spare_              = radius * std::sin(angle);
        has_spare_          = true;
        return radius * std::cos(angle);
    }

    cplx complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re, im};
    }

  private:
    std::mt19937_64 engine_;
    double          spare_     = 0.0;
    bool            has_spare_ = false;
};

/// splitmix64 finalizer; used to derive independent per-task seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Vector random_unit_vector(Index dim, Rng &rng) {
    Vector v(dim);
    for(Index i = 0; i < dim; ++i) v(i) = rng.complex_normal();
    return v / v.norm();
}

/// Haar-like random isometry of shape rows x cols (orthonormal columns).
inline Matrix random_isometry(Index rows, Index cols, Rng &rng) {
    if(cols > rows) throw ShapeError("random_isometry: more columns than rows");
    Matrix g(rows, cols);
    for(Index j = 0; j < cols; ++j)
        for(Index i = 0; i < rows; ++i) g(i, j) = rng.complex_normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    // fix the phase freedom of QR so the distribution is unitarily invariant
    Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for(Index j = 0; j < cols; ++j) {
        const cplx d = r(j, j);
        if(std::abs(d) > 0) q.col(j) *= d / std::abs(d);
    }
    return q;
}

inline Matrix random_unitary(Index dim, Rng &rng) { return random_isometry(dim, dim, rng); }

} // namespace relmodal

#endif
