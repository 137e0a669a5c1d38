#pragma once

// Fermionic Fock space on bit-encoded occupation words.
//
// Convention shared by every module: mode k is bit k (mode 0 is the
// rightmost bit). A ladder operator acting on mode k picks up the sign
// (-1)^(number of occupied modes with index < k). Operator products are
// written left to right and act on kets right to left, so the term
// c†_0 c_1 first annihilates mode 1.

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "entanglab/error.hpp"

namespace entanglab {

using cplx = std::complex<double>;
using Word = std::uint64_t;

namespace fock {

inline constexpr int max_modes = 62;

struct LadderResult {
    Word word;
    int sign;
};

std::optional<LadderResult> apply_ladder(Word word, int mode, bool dagger);

// Hard-core bosons: same Pauli blocking, no string sign. Only used to check
// that the algebra tests actually detect a broken sign rule.
std::optional<LadderResult> hardcore_boson_ladder(Word word, int mode, bool dagger);

using LadderRule = std::optional<LadderResult> (*)(Word, int, bool);

class Sector {
public:
    enum class Kind { all, number, parity };

    static Sector all() { return Sector(Kind::all, 0); }
    static Sector number(int n) { return Sector(Kind::number, n); }
    static Sector parity(int p) { return Sector(Kind::parity, p & 1); }

    Kind kind() const { return kind_; }
    int value() const { return value_; }

    bool contains(Word w) const;
    // Sector reached after adding dn particles.
    Sector shifted(int dn) const;
    std::string describe() const;

    friend bool operator==(const Sector&, const Sector&) = default;
    friend auto operator<=>(const Sector&, const Sector&) = default;

private:
    Sector(Kind k, int v) : kind_(k), value_(v) {}
    Kind kind_;
    int value_;
};

class FockBasis {
public:
    FockBasis(int mode_count, Sector sector = Sector::all());

    int mode_count() const { return modes_; }
    const Sector& sector() const { return sector_; }
    std::size_t size() const { return states_.size(); }
    std::span<const Word> states() const { return states_; }
    Word state(std::size_t i) const { return states_[i]; }
    std::optional<std::size_t> index_of(Word w) const;

private:
    int modes_;
    Sector sector_;
    std::vector<Word> states_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

BasisPtr make_basis(int mode_count, Sector sector = Sector::all());

class FockVector {
public:
    explicit FockVector(BasisPtr basis);
    FockVector(BasisPtr basis, Eigen::VectorXcd amplitudes);

    static FockVector basis_state(BasisPtr basis, Word w);
    static FockVector random(BasisPtr basis, std::uint64_t seed);

    const FockBasis& basis() const { return *basis_; }
    const BasisPtr& basis_ptr() const { return basis_; }
    std::size_t size() const { return static_cast<std::size_t>(amps_.size()); }

    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    Eigen::VectorXcd& amplitudes() { return amps_; }
    cplx operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }

    double norm() const { return amps_.norm(); }
    bool is_normalized(double tol = 1e-12) const { return std::abs(norm() - 1.0) < tol; }
    FockVector normalized() const;
    // <this|other>
    cplx dot(const FockVector& other) const;

    FockVector& operator+=(const FockVector& other);
    FockVector& operator-=(const FockVector& other);
    FockVector& operator*=(cplx s);

private:
    BasisPtr basis_;
    Eigen::VectorXcd amps_;
};

FockVector operator+(FockVector a, const FockVector& b);
FockVector operator-(FockVector a, const FockVector& b);
FockVector operator*(cplx s, FockVector v);

// Re-expresses v in another basis over the same modes; amplitudes on words
// missing from the target must vanish.
FockVector embed(const FockVector& v, BasisPtr target, double tol = 1e-12);

struct Ladder {
    int mode;
    bool dagger;
    friend bool operator==(const Ladder&, const Ladder&) = default;
};

struct Term {
    cplx coefficient;
    std::vector<Ladder> factors;
};

class SecondQuantizedOperator {
public:
    SecondQuantizedOperator() = default;
    explicit SecondQuantizedOperator(std::vector<Term> terms, bool hermitian = false);

    static SecondQuantizedOperator identity(cplx c = 1.0);
    static SecondQuantizedOperator create(int mode);
    static SecondQuantizedOperator annihilate(int mode);
    static SecondQuantizedOperator number(int mode);
    // Σ_i coeffs[i] c†_i (dagger) or Σ_i coeffs[i] c_i.
    static SecondQuantizedOperator linear(std::span<const cplx> coeffs, bool dagger);

    SecondQuantizedOperator& add(cplx coefficient, std::vector<Ladder> factors);

    const std::vector<Term>& terms() const { return terms_; }
    bool hermitian() const { return hermitian_; }
    SecondQuantizedOperator& mark_hermitian(bool h = true) {
        hermitian_ = h;
        return *this;
    }

    SecondQuantizedOperator adjoint() const;
    int max_mode() const;
    // Net change in particle number if every term agrees, nullopt otherwise.
    std::optional<int> particle_change() const;
    bool conserves_number() const { return particle_change() == 0; }
    bool conserves_parity() const;

    SecondQuantizedOperator& operator+=(const SecondQuantizedOperator& other);
    SecondQuantizedOperator& operator*=(cplx s);

private:
    std::vector<Term> terms_;
    bool hermitian_ = false;
};

SecondQuantizedOperator operator+(SecondQuantizedOperator a, const SecondQuantizedOperator& b);
SecondQuantizedOperator operator-(SecondQuantizedOperator a, const SecondQuantizedOperator& b);
SecondQuantizedOperator operator*(cplx s, SecondQuantizedOperator a);
// Operator product; factor lists are concatenated.
SecondQuantizedOperator operator*(const SecondQuantizedOperator& a, const SecondQuantizedOperator& b);

// Applies one term to a word; nullopt if annihilated.
std::optional<LadderResult> apply_term(std::span<const Ladder> factors, Word w,
                                       LadderRule rule = apply_ladder);

// Result in the input basis; throws "operator leaves sector" when an output
// word is not part of it.
FockVector apply_operator(const SecondQuantizedOperator& op, const FockVector& v,
                          LadderRule rule = apply_ladder);
// Result in `target`, which may be a different sector of the same modes.
FockVector apply_operator(const SecondQuantizedOperator& op, const FockVector& v,
                          const BasisPtr& target, LadderRule rule = apply_ladder);

cplx expectation(const SecondQuantizedOperator& op, const FockVector& v,
                 LadderRule rule = apply_ladder);

struct MaterializeOptions {
    std::size_t max_dimension = std::size_t{1} << 22;
    std::size_t max_dense_dimension = 8192;
};

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

SparseMatrix materialize_sparse(const SecondQuantizedOperator& op, const FockBasis& basis,
                                const MaterializeOptions& options = {});
Eigen::MatrixXcd materialize_dense(const SecondQuantizedOperator& op, const FockBasis& basis,
                                   const MaterializeOptions& options = {});

// Max entrywise deviation of the materialized matrix from its adjoint.
double hermiticity_defect(const SecondQuantizedOperator& op, const FockBasis& basis);
bool is_hermitian(const SecondQuantizedOperator& op, const FockBasis& basis, double tol = 1e-12);

struct SelfTestReport {
    int modes = 0;
    double max_anticommutator_error = 0.0; // {c_i, c_j†} - δ_ij
    double max_annihilator_error = 0.0;    // {c_i, c_j}
    double max_nilpotency_error = 0.0;     // c_i c_i
    double tolerance = 1e-12;
    bool passed = false;
};

// Checks the canonical anticommutation relations on random vectors.
SelfTestReport algebra_selftest(int modes, LadderRule rule = apply_ladder,
                                std::uint64_t seed = 0x5eed, double tolerance = 1e-12);

} // namespace fock
} // namespace entanglab
