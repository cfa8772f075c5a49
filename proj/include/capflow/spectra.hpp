#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "capflow/fem.hpp"
#include "capflow/lapack.hpp"

namespace capflow {

// Zero-classification tolerance scaled with the O(h^2) eigenvalue error of
// the P1 discretization.
inline double default_zero_tol(const TriMesh& mesh) {
    const double h = mesh.max_edge_length();
    return defaults::zero_tol_factor * h * h;
}

namespace detail {

inline Eigen::MatrixXd submatrix(const Eigen::SparseMatrix<double>& A,
                                 const std::vector<int>& rows,
                                 const std::vector<int>& cols) {
    std::vector<int> rpos(A.rows(), -1);
    for (size_t k = 0; k < rows.size(); ++k) rpos[rows[k]] = static_cast<int>(k);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.size(), cols.size());
    for (size_t j = 0; j < cols.size(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, cols[j]); it; ++it) {
            const int r = rpos[it.row()];
            if (r >= 0) out(r, j) = it.value();
        }
    return out;
}

// #{generalized eigenvalues of (A, M) below tau}, optionally including the
// ones the factorization classifies as exactly at tau.
inline int count_below(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, double tau,
                       bool include_zero) {
    Eigen::MatrixXd shifted = A - tau * M;
    const lapack::Inertia in = lapack::sym_inertia(std::move(shifted));
    return in.negative + (include_zero ? in.zero : 0);
}

inline void fix_signs(Eigen::MatrixXd& vectors) {
    for (int j = 0; j < vectors.cols(); ++j) {
        int imax = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&imax);
        if (vectors(imax, j) < 0.0) vectors.col(j) = -vectors.col(j);
    }
}

inline void append_band_warnings(const Eigen::VectorXd& values, double zero_tol,
                                 const std::string& label, std::vector<std::string>& out) {
    int hits = 0;
    for (int i = 0; i < values.size(); ++i) {
        const double a = std::abs(values[i]);
        if (a > zero_tol && a < 2.0 * zero_tol) ++hits;
    }
    if (hits > 0)
        out.push_back("ambiguous classification: " + std::to_string(hits) + " " + label
                      + " eigenvalue(s) inside the (zero_tol, 2 zero_tol) band");
}

} // namespace detail

struct EigenPairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

// Lowest `count` eigenpairs of A x = lambda B x for symmetric A and positive
// definite B; deterministic ordering and signs.
inline EigenPairs solve_gevp(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             int count = -1, bool want_vectors = true) {
    lapack::GevpResult r = lapack::sym_gevp(A, B, want_vectors);
    const int n = static_cast<int>(r.values.size());
    const int m = (count <= 0 || count > n) ? n : count;
    EigenPairs out;
    out.values = r.values.head(m);
    if (want_vectors) {
        out.vectors = r.vectors.leftCols(m);
        detail::fix_signs(out.vectors);
    }
    return out;
}

struct SpectrumReport {
    Eigen::VectorXd values;       // ascending
    Eigen::MatrixXd vectors;      // full vertex space, one column per value
    double zero_tol = 0.0;
    int dirichlet_kernel_dim = 0; // populated by the Steklov path
    std::vector<std::string> warnings;
};

// Robin problem: (K - M_p - B_q) v = lambda M v on the whole vertex space.
inline SpectrumReport robin_spectrum(const AssembledForm& f, double zero_tol,
                                     int count = -1, bool want_vectors = false) {
    const EigenPairs ep = solve_gevp(lapack::dense(f.robin()), lapack::dense(f.mass),
                                     count, want_vectors);
    SpectrumReport r;
    r.values = ep.values;
    r.vectors = ep.vectors;
    r.zero_tol = zero_tol;
    detail::append_band_warnings(r.values, zero_tol, "Robin", r.warnings);
    return r;
}

// Dirichlet problem: interior restriction; eigenvectors are zero-extended to
// the full vertex space.
inline SpectrumReport dirichlet_spectrum(const AssembledForm& f, double zero_tol,
                                         int count = -1, bool want_vectors = false) {
    if (f.interior.empty()) throw DomainError("dirichlet_spectrum: no interior vertices");
    const Eigen::MatrixXd A = detail::submatrix(f.bilinear(), f.interior, f.interior);
    const Eigen::MatrixXd M = detail::submatrix(f.mass, f.interior, f.interior);
    const EigenPairs ep = solve_gevp(A, M, count, want_vectors);
    SpectrumReport r;
    r.values = ep.values;
    r.zero_tol = zero_tol;
    for (int i = 0; i < r.values.size(); ++i)
        if (std::abs(r.values[i]) <= zero_tol) ++r.dirichlet_kernel_dim;
    if (want_vectors) {
        r.vectors = Eigen::MatrixXd::Zero(f.n, ep.vectors.cols());
        for (size_t k = 0; k < f.interior.size(); ++k)
            r.vectors.row(f.interior[k]) = ep.vectors.row(k);
    }
    detail::append_band_warnings(r.values, zero_tol, "Dirichlet", r.warnings);
    return r;
}

// The boundary reduction of the form: Schur complement T of A = K - M_p onto
// the boundary vertices minus B_q, the boundary mass B, and (when the
// Dirichlet problem has a kernel W0) the trial-space basis Z orthogonal to
// the discrete Neumann traces of W0.
struct SteklovSystem {
    Eigen::MatrixXd T;           // reduced form matrix on boundary dofs
    Eigen::MatrixXd B;           // boundary mass on boundary dofs
    Eigen::MatrixXd Z;           // orthonormal trial basis, nG x (nG - dim)
    Eigen::MatrixXd neumann_traces; // g_w = (A w)_Gamma, one column per kernel field
    int kernel_dim = 0;
    std::vector<int> boundary;   // global vertex ids of the rows
    // Interior extension operator: u_I = -solve(A_IGamma u_Gamma).
    std::shared_ptr<lapack::SymSolver> interior_solver;
    Eigen::MatrixXd A_gi;        // boundary x interior coupling block

    Eigen::VectorXd extend(const Eigen::VectorXd& trace) const {
        return -interior_solver->solve(A_gi.transpose() * trace);
    }
};

namespace detail {

// M-orthonormal basis of the near-kernel of the interior Dirichlet pencil by
// inverse subspace iteration with Rayleigh-Ritz extraction.
inline Eigen::MatrixXd dirichlet_kernel_basis(const Eigen::MatrixXd& A,
                                              const Eigen::MatrixXd& M, int dim,
                                              double zero_tol) {
    const int n = static_cast<int>(A.rows());
    lapack::SymSolver shifted(A - zero_tol * M);
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd V(n, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < n; ++i) V(i, j) = gauss(rng);

    const double scale = A.diagonal().cwiseAbs().maxCoeff();
    for (int iter = 0; iter < 60; ++iter) {
        Eigen::MatrixXd X = shifted.solve(M * V);
        Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(X.transpose() * M * X));
        if (llt.info() != Eigen::Success)
            throw NumericError("dirichlet_kernel_basis: iterate became rank deficient");
        V = llt.matrixL().solve(X.transpose()).transpose();
        const Eigen::MatrixXd H = V.transpose() * A * V;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        V = V * es.eigenvectors();
        double worst = 0.0;
        for (int j = 0; j < dim; ++j) {
            const Eigen::VectorXd res = A * V.col(j) - es.eigenvalues()[j] * (M * V.col(j));
            worst = std::max(worst, res.norm() / scale);
        }
        if (worst < 1e-10) return V;
    }
    throw NumericError("dirichlet_kernel_basis: subspace iteration did not converge");
}

} // namespace detail

inline SteklovSystem build_steklov_system(const AssembledForm& f, double zero_tol) {
    if (f.boundary.empty()) throw DomainError("build_steklov_system: surface has no boundary");
    if (f.interior.empty()) throw DomainError("build_steklov_system: no interior vertices");

    const Eigen::SparseMatrix<double> A = f.bilinear();
    const Eigen::MatrixXd A_ii = detail::submatrix(A, f.interior, f.interior);
    const Eigen::MatrixXd M_ii = detail::submatrix(f.mass, f.interior, f.interior);

    SteklovSystem s;
    s.boundary = f.boundary;
    s.A_gi = detail::submatrix(A, f.boundary, f.interior);
    const Eigen::MatrixXd A_gg = detail::submatrix(A, f.boundary, f.boundary);
    s.B = detail::submatrix(f.boundary_mass, f.boundary, f.boundary);
    const Eigen::MatrixXd Bq = detail::submatrix(f.boundary_mass_q, f.boundary, f.boundary);
    const int ng = static_cast<int>(f.boundary.size());

    // Kernel dimension of the interior pencil from two inertia counts.
    const int at_most_tol = detail::count_below(A_ii, M_ii, zero_tol, true);
    const int below_neg_tol = detail::count_below(A_ii, M_ii, -zero_tol, false);
    s.kernel_dim = at_most_tol - below_neg_tol;

    if (s.kernel_dim > 0) {
        const Eigen::MatrixXd W =
            detail::dirichlet_kernel_basis(A_ii, M_ii, s.kernel_dim, zero_tol);
        s.neumann_traces = s.A_gi * W;
        // Push the near-kernel far into the positive spectrum before
        // inverting; the trial projection below suppresses the remainder.
        const double sigma = 1e3 * A_ii.diagonal().cwiseAbs().maxCoeff();
        const Eigen::MatrixXd MW = M_ii * W;
        try {
            s.interior_solver = std::make_shared<lapack::SymSolver>(
                Eigen::MatrixXd(A_ii + sigma * MW * MW.transpose()));
        } catch (const NumericError&) {
            throw NumericError("build_steklov_system: interior block singular after deflating "
                               + std::to_string(s.kernel_dim) + " kernel field(s)");
        }
        // Trial space: orthogonal complement of span{B g_w}.
        const Eigen::MatrixXd BG = s.B * s.neumann_traces;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(BG);
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(ng, ng);
        s.Z = Q.rightCols(ng - s.kernel_dim);
    } else {
        try {
            s.interior_solver = std::make_shared<lapack::SymSolver>(A_ii);
        } catch (const NumericError&) {
            throw NumericError("build_steklov_system: interior block singular with empty "
                               "detected kernel; decrease zero_tol");
        }
        s.Z = Eigen::MatrixXd::Identity(ng, ng);
    }

    const Eigen::MatrixXd X = s.interior_solver->solve(s.A_gi.transpose());
    Eigen::MatrixXd T = A_gg - s.A_gi * X - Bq;
    s.T = 0.5 * (T + T.transpose());
    return s;
}

// Modified Steklov spectrum: eigenvalues of the (projected) boundary pencil
// (T, B); eigenvectors are reported as their interior extensions.
inline SpectrumReport steklov_spectrum(const AssembledForm& f, double zero_tol,
                                       int count = -1, bool want_vectors = false) {
    const SteklovSystem s = build_steklov_system(f, zero_tol);
    const Eigen::MatrixXd Ar = s.Z.transpose() * s.T * s.Z;
    const Eigen::MatrixXd Br = s.Z.transpose() * s.B * s.Z;
    const EigenPairs ep = solve_gevp(Ar, Br, count, want_vectors);

    SpectrumReport r;
    r.values = ep.values;
    r.zero_tol = zero_tol;
    r.dirichlet_kernel_dim = s.kernel_dim;
    if (want_vectors) {
        r.vectors = Eigen::MatrixXd::Zero(f.n, ep.vectors.cols());
        for (int j = 0; j < ep.vectors.cols(); ++j) {
            const Eigen::VectorXd trace = s.Z * ep.vectors.col(j);
            const Eigen::VectorXd inner = s.extend(trace);
            for (size_t k = 0; k < s.boundary.size(); ++k)
                r.vectors(s.boundary[k], j) = trace[k];
            for (size_t k = 0; k < f.interior.size(); ++k)
                r.vectors(f.interior[k], j) = inner[k];
        }
        detail::fix_signs(r.vectors);
    }
    detail::append_band_warnings(r.values, zero_tol, "Steklov", r.warnings);
    return r;
}

struct IndexReport {
    int a = 0;            // #{Dirichlet eigenvalues <= zero_tol}
    int b = 0;            // #{Steklov eigenvalues < -zero_tol}
    int ind = 0;          // a + b
    int ind_robin = 0;    // #{Robin eigenvalues < -zero_tol}
    int ind0_robin = 0;   // #{Robin eigenvalues <= zero_tol}
    int nullity = 0;      // #{|Steklov| <= zero_tol}, or Robin zeros if closed
    int dirichlet_kernel_dim = 0;
    bool agreement = false;
    bool closed = false;
    double zero_tol = 0.0;
    std::vector<std::string> warnings;
};

// Index bookkeeping via matrix inertia; eigenvalues themselves are only
// computed for the (small) boundary-reduced problem.
inline IndexReport index_count(const AssembledForm& f, double zero_tol,
                               bool check_bands = true) {
    IndexReport r;
    r.zero_tol = zero_tol;
    r.closed = f.boundary.empty();

    if (r.closed) {
        const Eigen::MatrixXd R = lapack::dense(f.robin());
        const Eigen::MatrixXd M = lapack::dense(f.mass);
        r.ind_robin = detail::count_below(R, M, -zero_tol, false);
        r.ind0_robin = detail::count_below(R, M, zero_tol, true);
        r.a = r.ind = r.ind_robin;
        r.nullity = r.ind0_robin - r.ind_robin;
        r.agreement = true;
        if (check_bands) {
            const int lo = detail::count_below(R, M, -2.0 * zero_tol, true);
            const int hi = detail::count_below(R, M, 2.0 * zero_tol, false);
            if (r.ind_robin - lo > 0 || hi - r.ind0_robin > 0)
                r.warnings.push_back("ambiguous classification: Robin eigenvalue(s) inside "
                                     "the (zero_tol, 2 zero_tol) band");
        }
        return r;
    }

    const Eigen::SparseMatrix<double> A = f.bilinear();
    const Eigen::MatrixXd A_ii = detail::submatrix(A, f.interior, f.interior);
    const Eigen::MatrixXd M_ii = detail::submatrix(f.mass, f.interior, f.interior);
    const int at_most = detail::count_below(A_ii, M_ii, zero_tol, true);
    const int below = detail::count_below(A_ii, M_ii, -zero_tol, false);
    r.a = at_most;
    r.dirichlet_kernel_dim = at_most - below;
    if (check_bands) {
        const int lo = detail::count_below(A_ii, M_ii, -2.0 * zero_tol, true);
        const int hi = detail::count_below(A_ii, M_ii, 2.0 * zero_tol, false);
        if (below - lo > 0 || hi - at_most > 0)
            r.warnings.push_back("ambiguous classification: Dirichlet eigenvalue(s) inside "
                                 "the (zero_tol, 2 zero_tol) band");
    }

    const SpectrumReport st = steklov_spectrum(f, zero_tol);
    for (int i = 0; i < st.values.size(); ++i) {
        if (st.values[i] < -zero_tol) ++r.b;
        if (std::abs(st.values[i]) <= zero_tol) ++r.nullity;
    }
    r.warnings.insert(r.warnings.end(), st.warnings.begin(), st.warnings.end());

    const Eigen::MatrixXd R = lapack::dense(f.robin());
    const Eigen::MatrixXd M = lapack::dense(f.mass);
    r.ind_robin = detail::count_below(R, M, -zero_tol, false);
    r.ind0_robin = detail::count_below(R, M, zero_tol, true);
    if (check_bands) {
        const int lo = detail::count_below(R, M, -2.0 * zero_tol, true);
        const int hi = detail::count_below(R, M, 2.0 * zero_tol, false);
        if (r.ind_robin - lo > 0 || hi - r.ind0_robin > 0)
            r.warnings.push_back("ambiguous classification: Robin eigenvalue(s) inside "
                                 "the (zero_tol, 2 zero_tol) band");
    }

    r.ind = r.a + r.b;
    r.agreement = (r.ind == r.ind_robin);
    return r;
}

// Discrete normal trace of a vertex field: B^{-1} of the boundary residual
// of the interior equation; first-order accurate.
inline Eigen::VectorXd normal_trace(const AssembledForm& f, const Eigen::VectorXd& u) {
    const Eigen::VectorXd full = f.bilinear() * u;
    Eigen::VectorXd rhs(f.boundary.size());
    for (size_t k = 0; k < f.boundary.size(); ++k) rhs[k] = full[f.boundary[k]];
    const Eigen::MatrixXd B = detail::submatrix(f.boundary_mass, f.boundary, f.boundary);
    return Eigen::LDLT<Eigen::MatrixXd>(B).solve(rhs);
}

struct ComparisonReport {
    bool ok = true;
    double worst_slack = 0.0; // most negative slack seen across all trials
    bool steklov_gap_checked = false;
    bool steklov_gap_ok = true;
    std::vector<std::string> failures;
};

// Discrete counterpart of the variational comparison inequalities: Dirichlet
// lower bound on boundary-zero trials, Robin <= Dirichlet bottom, projected
// Steklov lower bound on boundary trials, minimality of the interior
// extension, and simplicity of the Steklov bottom when there is no kernel.
inline ComparisonReport comparison_check(const AssembledForm& f, double zero_tol,
                                         int n_trials = 100, unsigned seed = 2024) {
    ComparisonReport rep;
    const double slack = 1e-8;
    auto record = [&rep](double margin, const std::string& what) {
        rep.worst_slack = std::min(rep.worst_slack, margin);
        if (margin < -1e-8) {
            rep.ok = false;
            rep.failures.push_back(what + " violated by " + std::to_string(-margin));
        }
    };

    const SpectrumReport dir = dirichlet_spectrum(f, zero_tol, 2);
    const SpectrumReport rob = robin_spectrum(f, zero_tol, 2);
    const SteklovSystem sys = build_steklov_system(f, zero_tol);
    const Eigen::MatrixXd Ar = sys.Z.transpose() * sys.T * sys.Z;
    const Eigen::MatrixXd Br = sys.Z.transpose() * sys.B * sys.Z;
    const EigenPairs st = solve_gevp(Ar, Br, -1, false);
    const double lam_d0 = dir.values[0];
    const double lam_s0 = st.values[0];

    record(lam_d0 - rob.values[0], "Robin bottom below Dirichlet bottom");

    const Eigen::MatrixXd A_ii = detail::submatrix(f.bilinear(), f.interior, f.interior);
    const Eigen::MatrixXd M_ii = detail::submatrix(f.mass, f.interior, f.interior);
    const Eigen::MatrixXd A_full = lapack::dense(f.bilinear());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const int ni = static_cast<int>(f.interior.size());
    const int ng = static_cast<int>(f.boundary.size());

    for (int trial = 0; trial < n_trials; ++trial) {
        // (1) boundary-zero trial vs Dirichlet bottom.
        Eigen::VectorXd u(ni);
        for (int i = 0; i < ni; ++i) u[i] = uni(rng);
        u /= std::sqrt(u.dot(M_ii * u));
        record(u.dot(A_ii * u) - lam_d0 + slack, "Dirichlet lower bound");

        // (3)/(4) projected boundary trial vs Steklov bottom.
        Eigen::VectorXd t(ng);
        for (int i = 0; i < ng; ++i) t[i] = uni(rng);
        Eigen::VectorXd tz = sys.Z * (sys.Z.transpose() * t);
        const double bn = tz.dot(sys.B * tz);
        if (bn > 1e-14) {
            tz /= std::sqrt(bn);
            record(tz.dot(sys.T * tz) - lam_s0 + slack, "Steklov lower bound");
        }

        // Extension minimality: full random field vs extension of its trace.
        Eigen::VectorXd w = Eigen::VectorXd::Zero(f.n);
        for (int i = 0; i < f.n; ++i) w[i] = uni(rng);
        Eigen::VectorXd trace(ng);
        for (int k = 0; k < ng; ++k) trace[k] = w[f.boundary[k]];
        const Eigen::VectorXd inner = sys.extend(trace);
        Eigen::VectorXd ext = Eigen::VectorXd::Zero(f.n);
        for (int k = 0; k < ng; ++k) ext[f.boundary[k]] = trace[k];
        for (int k = 0; k < ni; ++k) ext[f.interior[k]] = inner[k];
        const double qw = w.dot(A_full * w), qe = ext.dot(A_full * ext);
        const double scale = std::max(1.0, std::abs(qw));
        record((qw - qe) / scale + slack, "extension minimality");
    }

    if (lam_d0 > zero_tol && st.values.size() > 1) {
        rep.steklov_gap_checked = true;
        rep.steklov_gap_ok = (st.values[1] - st.values[0] > zero_tol);
        if (!rep.steklov_gap_ok) {
            rep.ok = false;
            rep.failures.push_back("first Steklov eigenvalue is not simple");
        }
    }
    return rep;
}

} // namespace capflow
