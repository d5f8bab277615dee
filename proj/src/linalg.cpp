#include "mixdag/linalg.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace mixdag {

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("SymMatrix: matrix must be square");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::fabs(m_(i, j) - m_(j, i)) > 1e-12 * scale)
                throw std::invalid_argument("SymMatrix: matrix is not symmetric");
            const double avg = 0.5 * (m_(i, j) + m_(j, i));
            m_(i, j) = avg;
            m_(j, i) = avg;
        }
    }
}

SymMatrix SymMatrix::identity(Eigen::Index dim) { return SymMatrix(Matrix::Identity(dim, dim)); }

Matrix cholesky_lower(const SymMatrix& sym) {
    const Matrix& m = sym.matrix();
    const Eigen::Index n = m.rows();
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = m(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 1e-12)) throw NotPositiveDefiniteError("cholesky_lower: matrix is not positive definite");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

EigenDecomposition sym_eigen(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
    if (solver.info() != Eigen::Success) throw std::runtime_error("sym_eigen: decomposition failed");
    const Eigen::Index n = m.dim();
    // Eigen returns ascending order
    EigenDecomposition out{Vector(n), Matrix(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = solver.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

Matrix spd_inverse(const SymMatrix& m) {
    const Matrix l = cholesky_lower(m);
    const Eigen::Index n = m.dim();
    Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    Matrix inv = linv.transpose() * linv;
    return 0.5 * (inv + inv.transpose());
}

}  // namespace mixdag
