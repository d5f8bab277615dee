#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace mixdag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class NotPositiveDefiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense symmetric matrix. Construction checks symmetry to 1e-12 relative
/// tolerance and stores the exactly symmetrized average.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix m);

    static SymMatrix identity(Eigen::Index dim);

    Eigen::Index dim() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

private:
    Matrix m_;
};

/// Lower-triangular L with L * L^T = m. Throws NotPositiveDefiniteError when a
/// pivot falls to 1e-12 or below.
Matrix cholesky_lower(const SymMatrix& m);

struct EigenDecomposition {
    Vector values;   // descending
    Matrix vectors;  // orthonormal columns matching values
};

EigenDecomposition sym_eigen(const SymMatrix& m);

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
Matrix spd_inverse(const SymMatrix& m);

}  // namespace mixdag
