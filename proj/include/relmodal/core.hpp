#ifndef RELMODAL_CORE_HPP
#define RELMODAL_CORE_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace relmodal {

using cplx   = std::complex<double>;
using Index  = Eigen::Index;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr const char *version = "0.1.0";

/// Numerical slack for every check in the library. A default-constructed
/// value carries the standard tolerances; callers override fields as needed.
struct Tolerances {
    double norm         = 1e-10; // unit-norm and trace bounds
    double herm         = 1e-10; // Hermiticity and isometry deviation
    double psd          = 1e-10; // allowed negative eigenvalue of a density operator
    double ssr          = 1e-12; // off-sector block magnitude
    double degen        = 1e-9;  // eigenvalue grouping
    double zero_eig     = 1e-12; // eigenvalues below this are not possible internal states
    double zero_schmidt = 1e-13; // Schmidt coefficients at or below this are dropped
    double evolve       = 1e-9;  // norm drift under time evolution
};

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Operands live in different spaces.
class SpaceMismatch : public Error {
  public:
    using Error::Error;
};

// Matrix or vector shapes are inconsistent with the declared dimensions.
class ShapeError : public Error {
  public:
    using Error::Error;
};

class InvalidArgument : public Error {
  public:
    using Error::Error;
};

// An invariant the input must satisfy does not hold (norm, Hermiticity, isometry).
class ValidationError : public Error {
  public:
    using Error::Error;
};

inline void require_same_space(const std::string &have, const std::string &want, const char *what) {
    if(have != want) throw SpaceMismatch(std::string(what) + ": expected space '" + want + "', got '" + have + "'");
}

inline double max_abs(const Matrix &m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double hermitian_deviation(const Matrix &m) { return max_abs(m - m.adjoint()); }

inline Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for(Index i = 0; i < a.rows(); ++i)
        for(Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vector kron(const Vector &a, const Vector &b) {
    Vector out(a.size() * b.size());
    for(Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

} // namespace relmodal

#endif
