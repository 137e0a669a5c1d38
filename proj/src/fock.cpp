#include "entanglab/fock.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

namespace entanglab::fock {

namespace {

int count_below(Word w, int mode) {
    const Word mask = (Word{1} << mode) - 1;
    return std::popcount(w & mask);
}

} // namespace

std::optional<LadderResult> apply_ladder(Word word, int mode, bool dagger) {
    const Word bit = Word{1} << mode;
    const bool occupied = (word & bit) != 0;
    if (occupied == dagger) return std::nullopt;
    const int sign = (count_below(word, mode) & 1) ? -1 : 1;
    return LadderResult{word ^ bit, sign};
}

std::optional<LadderResult> hardcore_boson_ladder(Word word, int mode, bool dagger) {
    const Word bit = Word{1} << mode;
    const bool occupied = (word & bit) != 0;
    if (occupied == dagger) return std::nullopt;
    return LadderResult{word ^ bit, 1};
}

// ---------------------------------------------------------------- Sector

bool Sector::contains(Word w) const {
    switch (kind_) {
    case Kind::all: return true;
    case Kind::number: return std::popcount(w) == value_;
    case Kind::parity: return (std::popcount(w) & 1) == value_;
    }
    return false;
}

Sector Sector::shifted(int dn) const {
    switch (kind_) {
    case Kind::all: return all();
    case Kind::number: return number(value_ + dn);
    case Kind::parity: return parity(value_ + (dn & 1));
    }
    return all();
}

std::string Sector::describe() const {
    std::ostringstream os;
    switch (kind_) {
    case Kind::all: os << "all"; break;
    case Kind::number: os << "N=" << value_; break;
    case Kind::parity: os << (value_ ? "odd" : "even"); break;
    }
    return os.str();
}

// ---------------------------------------------------------------- FockBasis

FockBasis::FockBasis(int mode_count, Sector sector) : modes_(mode_count), sector_(sector) {
    if (mode_count < 0 || mode_count > max_modes)
        throw ConfigError("mode count " + std::to_string(mode_count) + " outside [0, 62]");

    if (sector.kind() == Sector::Kind::number) {
        const int n = sector.value();
        if (n < 0 || n > mode_count) return; // empty sector
        if (n == 0) {
            states_.push_back(0);
            return;
        }
        // Gosper's hack walks the n-subsets in increasing order.
        Word w = (Word{1} << n) - 1;
        const Word limit = Word{1} << mode_count;
        while (w < limit) {
            states_.push_back(w);
            const Word c = w & (~w + 1);
            const Word r = w + c;
            w = (((r ^ w) >> 2) / c) | r;
        }
        return;
    }

    if (mode_count > 24)
        throw ConfigError("all-sector/parity basis over " + std::to_string(mode_count) +
                          " modes exceeds the 24-mode cap");
    const Word limit = Word{1} << mode_count;
    states_.reserve(sector.kind() == Sector::Kind::all ? limit : limit / 2);
    for (Word w = 0; w < limit; ++w)
        if (sector.contains(w)) states_.push_back(w);
}

std::optional<std::size_t> FockBasis::index_of(Word w) const {
    if (sector_.kind() == Sector::Kind::all) {
        if (w < states_.size()) return static_cast<std::size_t>(w);
        return std::nullopt;
    }
    const auto it = std::lower_bound(states_.begin(), states_.end(), w);
    if (it == states_.end() || *it != w) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
}

BasisPtr make_basis(int mode_count, Sector sector) {
    return std::make_shared<const FockBasis>(mode_count, sector);
}

// ---------------------------------------------------------------- FockVector

FockVector::FockVector(BasisPtr basis)
    : basis_(std::move(basis)),
      amps_(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis_->size()))) {}

FockVector::FockVector(BasisPtr basis, Eigen::VectorXcd amplitudes)
    : basis_(std::move(basis)), amps_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amps_.size()) != basis_->size())
        throw ConfigError("amplitude count does not match basis dimension");
}

FockVector FockVector::basis_state(BasisPtr basis, Word w) {
    FockVector v(basis);
    const auto idx = basis->index_of(w);
    if (!idx) throw ConfigError("word not in basis");
    v.amps_[static_cast<Eigen::Index>(*idx)] = 1.0;
    return v;
}

FockVector FockVector::random(BasisPtr basis, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    FockVector v(basis);
    for (Eigen::Index i = 0; i < v.amps_.size(); ++i) v.amps_[i] = cplx(gauss(rng), gauss(rng));
    return v.normalized();
}

FockVector FockVector::normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("cannot normalize a zero vector");
    FockVector out = *this;
    out.amps_ /= n;
    return out;
}

cplx FockVector::dot(const FockVector& other) const {
    if (other.basis_.get() != basis_.get() &&
        (other.basis_->size() != basis_->size() || other.basis_->sector() != basis_->sector()))
        throw ConfigError("dot product across different bases");
    return amps_.dot(other.amps_);
}

FockVector& FockVector::operator+=(const FockVector& other) {
    amps_ += other.amps_;
    return *this;
}

FockVector& FockVector::operator-=(const FockVector& other) {
    amps_ -= other.amps_;
    return *this;
}

FockVector& FockVector::operator*=(cplx s) {
    amps_ *= s;
    return *this;
}

FockVector operator+(FockVector a, const FockVector& b) { return a += b; }
FockVector operator-(FockVector a, const FockVector& b) { return a -= b; }
FockVector operator*(cplx s, FockVector v) { return v *= s; }

FockVector embed(const FockVector& v, BasisPtr target, double tol) {
    if (target->mode_count() != v.basis().mode_count())
        throw ConfigError("embed: mode counts differ");
    FockVector out(target);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const cplx a = v[i];
        if (a == cplx{}) continue;
        const auto j = target->index_of(v.basis().state(i));
        if (!j) {
            if (std::abs(a) > tol) throw ConfigError("embed: vector has weight outside target sector");
            continue;
        }
        out.amplitudes()[static_cast<Eigen::Index>(*j)] = a;
    }
    return out;
}

// ---------------------------------------------------------------- operators

SecondQuantizedOperator::SecondQuantizedOperator(std::vector<Term> terms, bool hermitian)
    : terms_(std::move(terms)), hermitian_(hermitian) {}

SecondQuantizedOperator SecondQuantizedOperator::identity(cplx c) {
    return SecondQuantizedOperator({Term{c, {}}}, c.imag() == 0.0);
}

SecondQuantizedOperator SecondQuantizedOperator::create(int mode) {
    return SecondQuantizedOperator({Term{1.0, {{mode, true}}}});
}

SecondQuantizedOperator SecondQuantizedOperator::annihilate(int mode) {
    return SecondQuantizedOperator({Term{1.0, {{mode, false}}}});
}

SecondQuantizedOperator SecondQuantizedOperator::number(int mode) {
    return SecondQuantizedOperator({Term{1.0, {{mode, true}, {mode, false}}}}, true);
}

SecondQuantizedOperator SecondQuantizedOperator::linear(std::span<const cplx> coeffs, bool dagger) {
    SecondQuantizedOperator op;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        if (coeffs[i] != cplx{}) op.add(coeffs[i], {{static_cast<int>(i), dagger}});
    return op;
}

SecondQuantizedOperator& SecondQuantizedOperator::add(cplx coefficient, std::vector<Ladder> factors) {
    terms_.push_back(Term{coefficient, std::move(factors)});
    return *this;
}

SecondQuantizedOperator SecondQuantizedOperator::adjoint() const {
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) {
        Term a{std::conj(t.coefficient), {}};
        a.factors.reserve(t.factors.size());
        for (auto it = t.factors.rbegin(); it != t.factors.rend(); ++it)
            a.factors.push_back({it->mode, !it->dagger});
        out.push_back(std::move(a));
    }
    return SecondQuantizedOperator(std::move(out), hermitian_);
}

int SecondQuantizedOperator::max_mode() const {
    int m = -1;
    for (const auto& t : terms_)
        for (const auto& f : t.factors) m = std::max(m, f.mode);
    return m;
}

std::optional<int> SecondQuantizedOperator::particle_change() const {
    std::optional<int> change;
    for (const auto& t : terms_) {
        int d = 0;
        for (const auto& f : t.factors) d += f.dagger ? 1 : -1;
        if (!change) change = d;
        else if (*change != d) return std::nullopt;
    }
    return change.value_or(0);
}

bool SecondQuantizedOperator::conserves_parity() const {
    for (const auto& t : terms_)
        if (t.factors.size() % 2 != 0) return false;
    return true;
}

SecondQuantizedOperator& SecondQuantizedOperator::operator+=(const SecondQuantizedOperator& other) {
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    hermitian_ = hermitian_ && other.hermitian_;
    return *this;
}

SecondQuantizedOperator& SecondQuantizedOperator::operator*=(cplx s) {
    for (auto& t : terms_) t.coefficient *= s;
    if (s.imag() != 0.0) hermitian_ = false;
    return *this;
}

SecondQuantizedOperator operator+(SecondQuantizedOperator a, const SecondQuantizedOperator& b) {
    return a += b;
}

SecondQuantizedOperator operator-(SecondQuantizedOperator a, const SecondQuantizedOperator& b) {
    return a += (-1.0 * b);
}

SecondQuantizedOperator operator*(cplx s, SecondQuantizedOperator a) { return a *= s; }

SecondQuantizedOperator operator*(const SecondQuantizedOperator& a, const SecondQuantizedOperator& b) {
    std::vector<Term> out;
    out.reserve(a.terms().size() * b.terms().size());
    for (const auto& ta : a.terms())
        for (const auto& tb : b.terms()) {
            Term t{ta.coefficient * tb.coefficient, ta.factors};
            t.factors.insert(t.factors.end(), tb.factors.begin(), tb.factors.end());
            out.push_back(std::move(t));
        }
    return SecondQuantizedOperator(std::move(out));
}

// ---------------------------------------------------------------- action

std::optional<LadderResult> apply_term(std::span<const Ladder> factors, Word w, LadderRule rule) {
    int sign = 1;
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
        const auto r = rule(w, it->mode, it->dagger);
        if (!r) return std::nullopt;
        w = r->word;
        sign *= r->sign;
    }
    return LadderResult{w, sign};
}

namespace {

void check_modes(const SecondQuantizedOperator& op, const FockBasis& basis) {
    if (op.max_mode() >= basis.mode_count())
        throw ConfigError("operator acts on mode " + std::to_string(op.max_mode()) + " but basis has " +
                          std::to_string(basis.mode_count()) + " modes");
}

} // namespace

FockVector apply_operator(const SecondQuantizedOperator& op, const FockVector& v,
                          const BasisPtr& target, LadderRule rule) {
    check_modes(op, v.basis());
    if (target->mode_count() != v.basis().mode_count())
        throw ConfigError("apply_operator: target basis has a different mode count");
    FockVector out(target);
    auto& o = out.amplitudes();
    const auto& in = v.amplitudes();
    const auto& basis = v.basis();
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const cplx a = in[static_cast<Eigen::Index>(i)];
        if (a == cplx{}) continue;
        const Word w = basis.state(i);
        for (const auto& t : op.terms()) {
            const auto r = apply_term(t.factors, w, rule);
            if (!r) continue;
            const auto j = target->index_of(r->word);
            if (!j) throw NumericalError("operator leaves sector " + target->sector().describe());
            o[static_cast<Eigen::Index>(*j)] += t.coefficient * static_cast<double>(r->sign) * a;
        }
    }
    return out;
}

FockVector apply_operator(const SecondQuantizedOperator& op, const FockVector& v, LadderRule rule) {
    return apply_operator(op, v, v.basis_ptr(), rule);
}

cplx expectation(const SecondQuantizedOperator& op, const FockVector& v, LadderRule rule) {
    if (!v.is_normalized()) throw NumericalError("expectation requires a normalized state");
    const cplx e = v.dot(apply_operator(op, v, rule));
    return op.hermitian() ? cplx(e.real(), 0.0) : e;
}

SparseMatrix materialize_sparse(const SecondQuantizedOperator& op, const FockBasis& basis,
                                const MaterializeOptions& options) {
    check_modes(op, basis);
    if (basis.size() > options.max_dimension)
        throw ConfigError("basis dimension " + std::to_string(basis.size()) + " exceeds cap " +
                          std::to_string(options.max_dimension));
    std::vector<Eigen::Triplet<cplx>> entries;
    entries.reserve(basis.size() * std::max<std::size_t>(1, op.terms().size() / 4));
    for (std::size_t c = 0; c < basis.size(); ++c) {
        const Word w = basis.state(c);
        for (const auto& t : op.terms()) {
            const auto r = apply_term(t.factors, w);
            if (!r) continue;
            const auto row = basis.index_of(r->word);
            if (!row) throw NumericalError("operator leaves sector " + basis.sector().describe());
            entries.emplace_back(static_cast<int>(*row), static_cast<int>(c),
                                 t.coefficient * static_cast<double>(r->sign));
        }
    }
    const auto n = static_cast<Eigen::Index>(basis.size());
    SparseMatrix m(n, n);
    m.setFromTriplets(entries.begin(), entries.end());
    m.prune(cplx{});
    m.makeCompressed();
    return m;
}

Eigen::MatrixXcd materialize_dense(const SecondQuantizedOperator& op, const FockBasis& basis,
                                   const MaterializeOptions& options) {
    if (basis.size() > options.max_dense_dimension)
        throw ConfigError("basis dimension " + std::to_string(basis.size()) + " exceeds dense cap " +
                          std::to_string(options.max_dense_dimension));
    return Eigen::MatrixXcd(materialize_sparse(op, basis, options));
}

double hermiticity_defect(const SecondQuantizedOperator& op, const FockBasis& basis) {
    const SparseMatrix m = materialize_sparse(op, basis);
    const SparseMatrix adj = m.adjoint();
    const SparseMatrix diff = m - adj;
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
}

bool is_hermitian(const SecondQuantizedOperator& op, const FockBasis& basis, double tol) {
    return hermiticity_defect(op, basis) <= tol;
}

SelfTestReport algebra_selftest(int modes, LadderRule rule, std::uint64_t seed, double tolerance) {
    SelfTestReport report;
    report.modes = modes;
    report.tolerance = tolerance;
    const auto basis = make_basis(modes);
    const FockVector v = FockVector::random(basis, seed);

    auto apply = [&](const SecondQuantizedOperator& op, const FockVector& x) {
        return apply_operator(op, x, rule);
    };
    for (int i = 0; i < modes; ++i) {
        const auto ci = SecondQuantizedOperator::annihilate(i);
        const auto ci_ci = apply(ci, apply(ci, v));
        report.max_nilpotency_error = std::max(report.max_nilpotency_error, ci_ci.amplitudes().cwiseAbs().maxCoeff());
        for (int j = 0; j < modes; ++j) {
            const auto cj = SecondQuantizedOperator::annihilate(j);
            const auto cjd = SecondQuantizedOperator::create(j);
            FockVector mixed = apply(ci, apply(cjd, v)) + apply(cjd, apply(ci, v));
            if (i == j) mixed -= v;
            report.max_anticommutator_error =
                std::max(report.max_anticommutator_error, mixed.amplitudes().cwiseAbs().maxCoeff());
            const FockVector both = apply(ci, apply(cj, v)) + apply(cj, apply(ci, v));
            report.max_annihilator_error =
                std::max(report.max_annihilator_error, both.amplitudes().cwiseAbs().maxCoeff());
        }
    }
    report.passed = report.max_anticommutator_error <= tolerance &&
                    report.max_annihilator_error <= tolerance && report.max_nilpotency_error <= tolerance;
    return report;
}

} // namespace entanglab::fock
