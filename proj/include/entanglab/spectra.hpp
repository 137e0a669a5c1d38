#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "entanglab/fock.hpp"

namespace entanglab::spectra {

using fock::BasisPtr;
using fock::FockVector;
using fock::SecondQuantizedOperator;
using fock::SparseMatrix;

enum class SolverPath { automatic, dense, lanczos };

struct SolverOptions {
    SolverPath path = SolverPath::automatic;
    // Largest dimension handled by full dense diagonalization.
    std::size_t dense_cap = 4096;
    double degeneracy_tol = 1e-9;
    // Residual bound is residual_tol * max(1, |E|).
    double residual_tol = 1e-10;
    int max_iterations = 2000;
    int threads = 1;
    // Return a degenerate ground state (deterministic tie-break) instead of throwing.
    bool allow_degenerate = false;
    std::uint64_t seed = 0x1a2c05;
};

struct SpectrumResult {
    std::vector<double> eigenvalues; // ascending
    std::vector<FockVector> eigenvectors;
    int ground_degeneracy = 1;
    double degeneracy_tol = 1e-9;
    double max_residual = 0.0;
    // True when every eigenpair of the basis is present.
    bool complete = false;
    SolverPath path = SolverPath::dense;
    int iterations = 0;

    std::size_t size() const { return eigenvalues.size(); }
};

struct GroundState {
    double energy = 0.0;
    FockVector state;
    int degeneracy = 1;
    bool tie_broken = false;
    double residual = 0.0;
};

// y = A x with rows split over `threads` workers; each row is summed
// serially so the result does not depend on the worker count.
void matvec(const SparseMatrix& a, const Eigen::VectorXcd& x, Eigen::VectorXcd& y, int threads = 1);

// Dense Hermitian eigendecomposition (all eigenpairs, ascending).
SpectrumResult dense_spectrum(const SparseMatrix& h, const BasisPtr& basis, const SolverOptions& options = {});

// k lowest eigenpairs by Lanczos with full reorthogonalization; further
// eigenpairs are found in the orthogonal complement of the converged ones.
SpectrumResult lanczos_spectrum(const SparseMatrix& h, const BasisPtr& basis, int k,
                                const SolverOptions& options = {});

SpectrumResult low_spectrum(const SecondQuantizedOperator& h, const BasisPtr& basis, int k,
                            const SolverOptions& options = {});
SpectrumResult full_spectrum(const SecondQuantizedOperator& h, const BasisPtr& basis,
                             const SolverOptions& options = {});

GroundState ground_state(const SecondQuantizedOperator& h, const BasisPtr& basis,
                         const SolverOptions& options = {});

// ‖Hv − Ev‖
double residual(const SparseMatrix& h, const FockVector& v, double energy);

} // namespace entanglab::spectra
