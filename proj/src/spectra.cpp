#include "entanglab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

namespace entanglab::spectra {

namespace {

// Makes the first component of magnitude above 1e-8 real and positive.
void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    const double cut = 1e-8 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > cut) {
            v *= std::conj(v[i]) / std::abs(v[i]);
            return;
        }
    }
}

bool is_real(const SparseMatrix& h) {
    for (int k = 0; k < h.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(h, k); it; ++it)
            if (it.value().imag() != 0.0) return false;
    return true;
}

double max_abs_adjoint_defect(const SparseMatrix& h) {
    const SparseMatrix diff = h - SparseMatrix(h.adjoint());
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
}

int count_degeneracy(const std::vector<double>& evals, double tol) {
    int n = 0;
    for (double e : evals)
        if (e - evals.front() <= tol) ++n;
    return n;
}

void require_hermitian(const SparseMatrix& h) {
    double scale = 1.0;
    for (int k = 0; k < h.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(h, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    if (max_abs_adjoint_defect(h) > 1e-12 * scale) throw NumericalError("Hamiltonian is not hermitian");
}

} // namespace

void matvec(const SparseMatrix& a, const Eigen::VectorXcd& x, Eigen::VectorXcd& y, int threads) {
    const auto rows = a.rows();
    y.resize(rows);
    auto work = [&](Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index r = begin; r < end; ++r) {
            cplx s{};
            for (SparseMatrix::InnerIterator it(a, r); it; ++it) s += it.value() * x[it.col()];
            y[r] = s;
        }
    };
    if (threads <= 1 || rows < 2048) {
        work(0, rows);
        return;
    }
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (rows + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const Eigen::Index b = t * chunk;
        const Eigen::Index e = std::min(rows, b + chunk);
        if (b >= e) break;
        pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
}

double residual(const SparseMatrix& h, const FockVector& v, double energy) {
    Eigen::VectorXcd hv;
    matvec(h, v.amplitudes(), hv);
    return (hv - energy * v.amplitudes()).norm();
}

SpectrumResult dense_spectrum(const SparseMatrix& h, const BasisPtr& basis, const SolverOptions& options) {
    const auto n = h.rows();
    if (static_cast<std::size_t>(n) > options.dense_cap)
        throw ConfigError("dimension " + std::to_string(n) + " exceeds dense cap " +
                          std::to_string(options.dense_cap));
    SpectrumResult out;
    out.path = SolverPath::dense;
    out.complete = true;
    out.degeneracy_tol = options.degeneracy_tol;
    Eigen::MatrixXcd vecs;
    Eigen::VectorXd vals;
    if (is_real(h)) {
        const Eigen::MatrixXd dense = Eigen::MatrixXcd(h).real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
        if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
        vals = es.eigenvalues();
        vecs = es.eigenvectors().cast<cplx>();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es{Eigen::MatrixXcd(h)};
        if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
        vals = es.eigenvalues();
        vecs = es.eigenvectors();
    }
    out.eigenvalues.assign(vals.data(), vals.data() + vals.size());
    out.eigenvectors.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXcd col = vecs.col(i);
        fix_phase(col);
        out.eigenvectors.emplace_back(basis, std::move(col));
    }
    if (n > 0) out.ground_degeneracy = count_degeneracy(out.eigenvalues, options.degeneracy_tol);
    return out;
}

namespace {

struct LanczosPair {
    double value;
    Eigen::VectorXcd vector;
    int iterations;
};

// Lowest eigenpair of h restricted to the complement of `locked`.
LanczosPair lanczos_lowest(const SparseMatrix& h, const std::vector<Eigen::VectorXcd>& locked,
                           const SolverOptions& options, std::uint64_t seed) {
    const auto n = h.rows();
    const auto free_dim = n - static_cast<Eigen::Index>(locked.size());
    if (free_dim <= 0) throw NumericalError("no room left in the complement");

    auto project_out = [&](Eigen::VectorXcd& w, const std::vector<Eigen::VectorXcd>& basis) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) w -= q * q.dot(w);
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(gauss(rng), gauss(rng));
    project_out(v, locked);
    v.normalize();

    double scale = 1.0;
    for (int k = 0; k < h.outerSize(); ++k) {
        double row = 0.0;
        for (SparseMatrix::InnerIterator it(h, k); it; ++it) row += std::abs(it.value());
        scale = std::max(scale, row);
    }

    std::vector<Eigen::VectorXcd> krylov;
    std::vector<double> alpha, beta;
    const int max_steps = static_cast<int>(std::min<Eigen::Index>(options.max_iterations, free_dim));
    Eigen::VectorXcd w;
    double last_estimate = 0.0;
    double last_ritz = 0.0;

    for (int j = 0; j < max_steps; ++j) {
        krylov.push_back(v);
        matvec(h, v, w, options.threads);
        const double a = v.dot(w).real();
        alpha.push_back(a);
        w -= a * v;
        if (j > 0) w -= beta.back() * krylov[krylov.size() - 2];
        project_out(w, locked);
        project_out(w, krylov);
        const double b = w.norm();

        const bool exhausted = b < 1e-13 * scale || j + 1 == max_steps;
        if (j % 4 == 3 || exhausted) {
            const auto m = static_cast<Eigen::Index>(alpha.size());
            Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
            Eigen::VectorXd sub(std::max<Eigen::Index>(m - 1, 0));
            for (Eigen::Index i = 0; i + 1 < m; ++i) sub[i] = beta[static_cast<std::size_t>(i)];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
            tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            const double ritz = tri.eigenvalues()[0];
            const Eigen::VectorXd s = tri.eigenvectors().col(0);
            last_ritz = ritz;
            last_estimate = b * std::abs(s[m - 1]);
            const double target = 0.05 * options.residual_tol * std::max(1.0, std::abs(ritz));
            if (last_estimate < target || exhausted) {
                Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
                for (Eigen::Index i = 0; i < m; ++i) x += s[i] * krylov[static_cast<std::size_t>(i)];
                project_out(x, locked);
                x.normalize();
                // Refine once: Rayleigh quotient of the assembled vector.
                Eigen::VectorXcd hx;
                matvec(h, x, hx, options.threads);
                const double rq = x.dot(hx).real();
                const double res = (hx - rq * x).norm();
                if (res <= options.residual_tol * std::max(1.0, std::abs(rq)))
                    return LanczosPair{rq, std::move(x), j + 1};
                if (exhausted && b < 1e-13 * scale)
                    return LanczosPair{rq, std::move(x), j + 1};
                if (exhausted) break;
            }
        }
        if (b < 1e-13 * scale) break;
        beta.push_back(b);
        v = w / b;
    }
    std::ostringstream os;
    os << "no convergence: Lanczos stopped after " << krylov.size() << " iterations, lowest Ritz value "
       << last_ritz << ", residual estimate " << last_estimate;
    throw NumericalError(os.str());
}

} // namespace

SpectrumResult lanczos_spectrum(const SparseMatrix& h, const BasisPtr& basis, int k, const SolverOptions& options) {
    const auto n = h.rows();
    if (k < 1 || k > n) throw ConfigError("requested eigenpair count outside [1, dimension]");
    SpectrumResult out;
    out.path = SolverPath::lanczos;
    out.degeneracy_tol = options.degeneracy_tol;
    std::vector<Eigen::VectorXcd> locked;
    std::vector<double> values;
    for (int i = 0; i < k; ++i) {
        auto pair = lanczos_lowest(h, locked, options, options.seed + static_cast<std::uint64_t>(i));
        out.iterations += pair.iterations;
        fix_phase(pair.vector);
        values.push_back(pair.value);
        locked.push_back(std::move(pair.vector));
    }
    // Deflated runs can return pairs slightly out of order.
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    for (auto i : order) {
        out.eigenvalues.push_back(values[i]);
        out.eigenvectors.emplace_back(basis, locked[i]);
        out.max_residual = std::max(out.max_residual, residual(h, out.eigenvectors.back(), values[i]));
    }
    out.complete = k == n;
    out.ground_degeneracy = count_degeneracy(out.eigenvalues, options.degeneracy_tol);
    return out;
}

namespace {

SparseMatrix checked_matrix(const SecondQuantizedOperator& h, const BasisPtr& basis) {
    if (basis->size() == 0) throw ConfigError("empty basis");
    SparseMatrix m = fock::materialize_sparse(h, *basis);
    require_hermitian(m);
    return m;
}

void fill_residuals(const SparseMatrix& m, SpectrumResult& r) {
    r.max_residual = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        r.max_residual = std::max(r.max_residual, residual(m, r.eigenvectors[i], r.eigenvalues[i]));
}

} // namespace

SpectrumResult low_spectrum(const SecondQuantizedOperator& h, const BasisPtr& basis, int k,
                            const SolverOptions& options) {
    const SparseMatrix m = checked_matrix(h, basis);
    const auto n = static_cast<int>(m.rows());
    if (k < 1 || k > n) throw ConfigError("requested eigenpair count outside [1, dimension]");
    const bool dense = options.path == SolverPath::dense ||
                       (options.path == SolverPath::automatic && basis->size() <= options.dense_cap);
    if (!dense) return lanczos_spectrum(m, basis, k, options);
    SpectrumResult full = dense_spectrum(m, basis, options);
    full.eigenvalues.resize(static_cast<std::size_t>(k));
    full.eigenvectors.erase(full.eigenvectors.begin() + k, full.eigenvectors.end());
    full.complete = k == n;
    full.ground_degeneracy = count_degeneracy(full.eigenvalues, options.degeneracy_tol);
    fill_residuals(m, full);
    return full;
}

SpectrumResult full_spectrum(const SecondQuantizedOperator& h, const BasisPtr& basis, const SolverOptions& options) {
    const SparseMatrix m = checked_matrix(h, basis);
    SpectrumResult r = dense_spectrum(m, basis, options);
    fill_residuals(m, r);
    return r;
}

GroundState ground_state(const SecondQuantizedOperator& h, const BasisPtr& basis, const SolverOptions& options) {
    const SparseMatrix m = checked_matrix(h, basis);
    const auto n = static_cast<int>(m.rows());
    const bool dense = options.path == SolverPath::dense ||
                       (options.path == SolverPath::automatic && basis->size() <= options.dense_cap);

    SpectrumResult spec;
    if (dense) {
        spec = dense_spectrum(m, basis, options);
    } else {
        // Two pairs suffice to detect a degenerate ground state; keep going
        // while the newest pair is still degenerate with the first.
        SolverOptions o = options;
        int k = std::min(2, n);
        spec = lanczos_spectrum(m, basis, k, o);
        while (k < n && spec.eigenvalues.back() - spec.eigenvalues.front() <= options.degeneracy_tol) {
            k = std::min(n, k + 2);
            spec = lanczos_spectrum(m, basis, k, o);
        }
    }
    const double e0 = spec.eigenvalues.front();
    const int degeneracy = count_degeneracy(spec.eigenvalues, options.degeneracy_tol);

    GroundState g{e0, spec.eigenvectors.front(), degeneracy, false, 0.0};
    if (degeneracy > 1) {
        if (!options.allow_degenerate) {
            std::ostringstream os;
            os << "degenerate ground state: " << degeneracy << " levels within " << options.degeneracy_tol
               << " of E0 = " << e0 << " in sector " << basis->sector().describe();
            throw NumericalError(os.str());
        }
        // Tie-break: project the lowest-index basis word with nonzero overlap
        // onto the ground eigenspace.
        for (std::size_t b = 0; b < basis->size(); ++b) {
            Eigen::VectorXcd p = Eigen::VectorXcd::Zero(n);
            for (int d = 0; d < degeneracy; ++d) {
                const auto& q = spec.eigenvectors[static_cast<std::size_t>(d)].amplitudes();
                p += q * std::conj(q[static_cast<Eigen::Index>(b)]);
            }
            if (p.norm() > 1e-8) {
                p.normalize();
                fix_phase(p);
                g.state = FockVector(basis, std::move(p));
                g.tie_broken = true;
                break;
            }
        }
    }
    g.residual = residual(m, g.state, e0);
    if (g.residual > options.residual_tol * std::max(1.0, std::abs(e0)) && !g.tie_broken) {
        std::ostringstream os;
        os << "no convergence: ground-state residual " << g.residual << " exceeds tolerance";
        throw NumericalError(os.str());
    }
    return g;
}

} // namespace entanglab::spectra
