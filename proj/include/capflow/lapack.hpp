#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "capflow/config.hpp"

extern "C" {
void dsygvd_(const int* itype, const char* jobz, const char* uplo, const int* n,
             double* a, const int* lda, double* b, const int* ldb, double* w,
             double* work, const int* lwork, int* iwork, const int* liwork, int* info);
void dsytrf_(const char* uplo, const int* n, double* a, const int* lda, int* ipiv,
             double* work, const int* lwork, int* info);
void dsytrs_(const char* uplo, const int* n, const int* nrhs, const double* a,
             const int* lda, const int* ipiv, double* b, const int* ldb, int* info);
void dpotrf_(const char* uplo, const int* n, double* a, const int* lda, int* info);
void dpotrs_(const char* uplo, const int* n, const int* nrhs, const double* a,
             const int* lda, double* b, const int* ldb, int* info);
}

namespace capflow::lapack {

inline Eigen::MatrixXd dense(const Eigen::SparseMatrix<double>& s) {
    return Eigen::MatrixXd(s);
}

struct GevpResult {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns, B-orthonormal; empty unless requested
};

// Generalized symmetric-definite eigenproblem A x = lambda B x (B > 0).
inline GevpResult sym_gevp(Eigen::MatrixXd A, Eigen::MatrixXd B, bool want_vectors) {
    const int n = static_cast<int>(A.rows());
    if (n == 0 || A.cols() != n || B.rows() != n || B.cols() != n)
        throw DomainError("sym_gevp: matrices must be square and matching");
    if (n > defaults::max_eig_dofs)
        throw NumericError("sym_gevp: problem exceeds the dense eigensolver size cap");
    const int itype = 1;
    const char jobz = want_vectors ? 'V' : 'N';
    const char uplo = 'L';
    Eigen::VectorXd w(n);
    int info = 0, lwork = -1, liwork = -1;
    double wq = 0.0;
    int iq = 0;
    dsygvd_(&itype, &jobz, &uplo, &n, A.data(), &n, B.data(), &n, w.data(),
            &wq, &lwork, &iq, &liwork, &info);
    if (info != 0) throw NumericError("sym_gevp: workspace query failed");
    lwork = static_cast<int>(wq);
    liwork = iq;
    std::vector<double> work(static_cast<size_t>(lwork));
    std::vector<int> iwork(static_cast<size_t>(liwork));
    dsygvd_(&itype, &jobz, &uplo, &n, A.data(), &n, B.data(), &n, w.data(),
            work.data(), &lwork, iwork.data(), &liwork, &info);
    if (info > n) throw NumericError("sym_gevp: mass matrix is not positive definite");
    if (info != 0) throw NumericError("sym_gevp: eigensolver failed to converge");
    GevpResult r;
    r.values = w;
    if (want_vectors) r.vectors = A;
    return r;
}

struct Inertia {
    int negative = 0, zero = 0, positive = 0;
};

// Inertia of a symmetric matrix from its Bunch-Kaufman factorization; each
// 2x2 pivot block is indefinite by construction and contributes one
// eigenvalue of each sign.
inline Inertia sym_inertia(Eigen::MatrixXd A, double zero_scale = 0.0) {
    const int n = static_cast<int>(A.rows());
    if (n == 0 || A.cols() != n) throw DomainError("sym_inertia: matrix must be square");
    if (n > defaults::max_inertia_dofs)
        throw NumericError("sym_inertia: problem exceeds the factorization size cap");
    const char uplo = 'L';
    std::vector<int> ipiv(n);
    int info = 0, lwork = -1;
    double wq = 0.0;
    dsytrf_(&uplo, &n, A.data(), &n, ipiv.data(), &wq, &lwork, &info);
    if (info != 0) throw NumericError("sym_inertia: workspace query failed");
    lwork = static_cast<int>(wq);
    std::vector<double> work(static_cast<size_t>(lwork));
    dsytrf_(&uplo, &n, A.data(), &n, ipiv.data(), work.data(), &lwork, &info);
    if (info < 0) throw NumericError("sym_inertia: factorization failed");
    const double tiny = zero_scale > 0.0 ? zero_scale
                                         : 1e-13 * std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
    Inertia r;
    for (int k = 0; k < n; ++k) {
        if (ipiv[k] > 0) {
            const double d = A(k, k);
            if (d > tiny) ++r.positive;
            else if (d < -tiny) ++r.negative;
            else ++r.zero;
        } else {
            ++r.positive;
            ++r.negative;
            ++k;  // 2x2 block spans k and k+1
        }
    }
    return r;
}

// Factor-once solver for a symmetric system: Cholesky when positive
// definite, Bunch-Kaufman otherwise.
class SymSolver {
  public:
    explicit SymSolver(Eigen::MatrixXd A) : fact_(std::move(A)) {
        n_ = static_cast<int>(fact_.rows());
        if (n_ == 0 || fact_.cols() != n_) throw DomainError("SymSolver: matrix must be square");
        Eigen::MatrixXd chol = fact_;
        int info = 0;
        const char uplo = 'L';
        dpotrf_(&uplo, &n_, chol.data(), &n_, &info);
        if (info == 0) {
            cholesky_ = true;
            fact_ = std::move(chol);
            return;
        }
        ipiv_.resize(n_);
        int lwork = -1;
        double wq = 0.0;
        dsytrf_(&uplo, &n_, fact_.data(), &n_, ipiv_.data(), &wq, &lwork, &info);
        if (info != 0) throw NumericError("SymSolver: workspace query failed");
        lwork = static_cast<int>(wq);
        std::vector<double> work(static_cast<size_t>(lwork));
        dsytrf_(&uplo, &n_, fact_.data(), &n_, ipiv_.data(), work.data(), &lwork, &info);
        if (info != 0) throw NumericError("SymSolver: matrix is singular");
    }

    Eigen::MatrixXd solve(Eigen::MatrixXd rhs) const {
        const int nrhs = static_cast<int>(rhs.cols());
        if (rhs.rows() != n_) throw DomainError("SymSolver: right-hand side size mismatch");
        int info = 0;
        const char uplo = 'L';
        if (cholesky_)
            dpotrs_(&uplo, &n_, &nrhs, fact_.data(), &n_, rhs.data(), &n_, &info);
        else
            dsytrs_(&uplo, &n_, &nrhs, fact_.data(), &n_, ipiv_.data(), rhs.data(), &n_, &info);
        if (info != 0) throw NumericError("SymSolver: solve failed");
        return rhs;
    }

    bool positive_definite() const { return cholesky_; }

  private:
    Eigen::MatrixXd fact_;
    std::vector<int> ipiv_;
    int n_ = 0;
    bool cholesky_ = false;
};

} // namespace capflow::lapack
