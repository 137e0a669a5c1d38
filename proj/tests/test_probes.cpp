#include "doctest.h"

#include <cmath>
#include <random>

#include "entanglab/probes.hpp"
#include "oracles.hpp"

using namespace entanglab;
using namespace entanglab::probes;
using models::BuiltModel;
using models::ModelConfig;

namespace {

ProbeSpec on_mode(int k, Character c = Character::particle, double energy = 1.0) {
    ProbeSpec p;
    p.mode = k;
    p.character = c;
    p.energy = energy;
    return p;
}

// Eigenmode with the largest weight on a site; pairing-toy modes are site-localized.
int mode_of_site(const models::ModeBasis& mb, int site) {
    int best = 0;
    for (int k = 1; k < mb.size(); ++k)
        if (std::abs(mb.transform(site, k)) > std::abs(mb.transform(site, best))) best = k;
    return best;
}

models::ModelGround ground_of(const BuiltModel& b) { return models::solve_ground(b); }

BuiltModel random_quadratic(std::mt19937_64& rng, int m) {
    // random hermitian hopping, fed through the pairing-free toy route
    models::FreeChain fc{m, 1.0};
    BuiltModel b = models::build_hamiltonian(ModelConfig{fc});
    b.quadratic.hopping = oracle::random_hermitian(m, rng);
    b.hamiltonian = models::quadratic_operator(b.quadratic);
    b.modes = models::single_particle_modes(b.quadratic);
    return b;
}

} // namespace

TEST_CASE("select_mode") {
    const auto b = models::build_hamiltonian(ModelConfig{models::FreeChain{2, 1.0}});
    CHECK(select_mode(b.modes, -1.0, 0.1) == 0);
    CHECK(select_mode(b.modes, 1.05, 0.1) == 1);
    CHECK_THROWS_WITH(select_mode(b.modes, 0.0, 5.0), doctest::Contains("ambiguous"));
    CHECK_THROWS_WITH(select_mode(b.modes, 0.0, 0.1), doctest::Contains("no mode"));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    const auto r = random_quadratic(rng, 8);
    for (int i = 0; i < 50; ++i) {
        const double e = u(rng);
        int best = 0;
        for (int k = 1; k < 8; ++k)
            if (std::abs(r.modes.energies[k] - e) < std::abs(r.modes.energies[best] - e)) best = k;
        CHECK(select_mode(r.modes, e, 100.0 * 0 + 1e9 * 0 + std::abs(r.modes.energies[best] - e) + 1e-12) == best);
    }
}

TEST_CASE("noninteracting nullity of the mode flavor") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const auto b = random_quadratic(rng, 6);
        const auto g = ground_of(b);
        for (int k0 = 0; k0 < 6; ++k0)
            for (int k1 = 0; k1 < 6; ++k1) {
                if (k0 == k1) continue;
                for (auto c0 : {Character::particle, Character::hole})
                    for (auto c1 : {Character::particle, Character::hole}) {
                        const auto m = occupation_moments(g.ground.state, b.modes, k0, c0, k1, c1);
                        CHECK(std::abs(m.covariance) < 1e-12);
                    }
            }
    }
}

TEST_CASE("pairing toy mode flavor") {
    const auto b = models::build_hamiltonian(ModelConfig{models::PairingToy{{{0.0, 1.0}}}});
    const auto g = ground_of(b);
    const auto r = mode_occupation_correlator(g.ground.state, b.modes, on_mode(0), on_mode(1));
    CHECK(std::abs(r.mean0 - 0.5) < 1e-12);
    CHECK(std::abs(r.cross - 0.5) < 1e-12);
    CHECK(std::abs(r.alpha - 1.0) < 1e-12);
    CHECK(std::abs(r.covariance - (r.cross - r.mean0 * r.mean1)) < 1e-12);
}

TEST_CASE("Bogoliubov battery") {
    const std::vector<models::PairLevel> pairs{{0.3, 1.0}, {-0.6, 0.5}, {1.1, 0.8}, {0.0, 0.4}};
    const auto b = models::build_hamiltonian(ModelConfig{models::PairingToy{pairs}});
    const auto g = ground_of(b);
    for (int k = 0; k < 4; ++k) {
        const auto r = mode_occupation_correlator(g.ground.state, b.modes, on_mode(mode_of_site(b.modes, 2 * k)),
                                                  on_mode(mode_of_site(b.modes, 2 * k + 1)));
        CHECK(std::abs(r.alpha - models::bcs_uv_oracle(pairs[k].xi, pairs[k].gap).alpha_pred) < 1e-8);
    }
    for (int a = 0; a < 8; ++a)
        for (int c = 0; c < 8; ++c)
            if (a / 2 != c / 2) {
                const auto m = occupation_moments(g.ground.state, b.modes, mode_of_site(b.modes, a),
                                                  Character::particle, mode_of_site(b.modes, c), Character::hole);
                CHECK(std::abs(m.covariance) < 1e-12);
            }
}

TEST_CASE("character symmetry") {
    const auto b = models::build_hamiltonian(ModelConfig{models::InteractingChain{6, 1.0, 0.8}});
    const auto g = ground_of(b);
    const auto& s = g.ground.state;
    const auto pp = occupation_moments(s, b.modes, 1, Character::particle, 4, Character::particle);
    const auto hh = occupation_moments(s, b.modes, 1, Character::hole, 4, Character::hole);
    const auto ph = occupation_moments(s, b.modes, 1, Character::particle, 4, Character::hole);
    CHECK(std::abs(pp.covariance) > 1e-6);
    CHECK(std::abs(pp.covariance - hh.covariance) < 1e-13);
    CHECK(std::abs(pp.covariance + ph.covariance) < 1e-13);
    CHECK(std::abs(hh.mean0 - (1.0 - pp.mean0)) < 1e-13);
}

TEST_CASE("vanishing probe current") {
    const auto b = models::build_hamiltonian(ModelConfig{models::FreeChain{4, 1.0}});
    const auto g = ground_of(b);
    // particle probe on an empty mode
    CHECK_THROWS_WITH(mode_occupation_correlator(g.ground.state, b.modes, on_mode(3), on_mode(0)),
                      doctest::Contains("vanishes"));
    CHECK_THROWS_WITH(mode_occupation_correlator(g.ground.state, b.modes, on_mode(1), on_mode(1)),
                      doctest::Contains("same mode"));
}

TEST_CASE("cone-state functionals") {
    const auto toy = models::build_hamiltonian(ModelConfig{models::PairingToy{{{0.0, 1.0}}}});
    const auto gt = ground_of(toy);
    auto cs = cone_states(gt.ground.state, toy.modes, on_mode(0), on_mode(1));
    CHECK(std::abs(cs.first.values[1] - 1.0) < 1e-12);
    CHECK(std::abs(cs.ground.values[1] - 0.5) < 1e-12);
    CHECK(std::abs(cs.second.values[1]) < 1e-14);

    const auto b = models::build_hamiltonian(ModelConfig{models::InteractingChain{6, 1.0, 0.5}});
    const auto g = ground_of(b);
    for (auto c0 : {Character::particle, Character::hole})
        for (auto c1 : {Character::particle, Character::hole}) {
            const auto p0 = on_mode(c0 == Character::hole ? 2 : 1, c0), p1 = on_mode(c1 == Character::hole ? 0 : 4, c1);
            cs = cone_states(g.ground.state, b.modes, p0, p1);
            const auto r = mode_occupation_correlator(g.ground.state, b.modes, p0, p1);
            CHECK(std::abs(cs.first.values[1] / cs.ground.values[1] - 1.0 - r.alpha) < 1e-12);
            CHECK(std::abs(cs.second.values[1]) < 1e-14);
        }
}

TEST_CASE("pauli check and the sign mutation") {
    const auto b = models::build_hamiltonian(ModelConfig{models::InteractingChain{6, 1.0, 0.5}});
    const auto g = ground_of(b);
    for (int k = 0; k < 6; ++k)
        for (auto c : {Character::particle, Character::hole})
            CHECK(std::abs(pauli_check(g.ground.state, b.modes, on_mode(k, c))) < 1e-14);
    const auto vac = fock::FockVector::basis_state(fock::make_basis(3), 0);
    const auto fc = models::build_hamiltonian(ModelConfig{models::FreeChain{3, 1.0}});
    CHECK(std::abs(pauli_check(vac, fc.modes, on_mode(1, Character::hole))) < 1e-14);
    double worst = 0.0;
    for (int k = 0; k < 6; ++k)
        worst = std::max(worst, std::abs(pauli_check(g.ground.state, b.modes, on_mode(k, Character::hole),
                                                     fock::hardcore_boson_ladder)));
    CHECK(worst > 1e-3);
}

TEST_CASE("probe warnings") {
    ProbeSpec p;
    p.energy = -1.0;
    CHECK(p.warnings().size() == 1);
    p.character = Character::hole;
    CHECK(p.warnings().empty());
    p.width = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("filtered flavor matches a Wick evaluation on quadratic models") {
    // Particle filters on a Slater determinant: ñ_j g = B_j g with the
    // one-body B_j = Σ_{l, k occ} U_{x l} w_k U*_{x k} ψ†_l ψ_k, so
    // cov = Σ_{k occ, l empty} conj(b0_lk) b1_lk.
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 3; ++trial) {
        const int m = 6, n = 3;
        const auto b = random_quadratic(rng, m);
        const auto g = ground_of(b);
        ProbeSpec p0, p1;
        p0.site = 0;
        p1.site = 4;
        p0.energy = -b.modes.energies[0];
        p1.energy = -b.modes.energies[2];
        p0.width = p1.width = 0.3;
        const auto spec = filter_spectra(b, g, p0, p1);
        const auto r = filtered_correlator(g, spec, b, p0, p1);

        const auto& u = b.modes.transform;
        auto w2 = [](double x, double gm) { return gm * gm / (x * x + gm * gm); };
        double mean[2] = {0, 0};
        cplx cov = 0.0;
        const ProbeSpec* ps[2] = {&p0, &p1};
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < n; ++k)
                mean[j] += w2(-b.modes.energies[k] - ps[j]->energy, 0.3) * std::norm(u(ps[j]->site, k));
        for (int k = 0; k < n; ++k)
            for (int l = n; l < m; ++l) {
                const cplx b0 = u(p0.site, l) * w2(-b.modes.energies[k] - p0.energy, 0.3) * std::conj(u(p0.site, k));
                const cplx b1 = u(p1.site, l) * w2(-b.modes.energies[k] - p1.energy, 0.3) * std::conj(u(p1.site, k));
                cov += std::conj(b0) * b1;
            }
        CHECK(std::abs(r.mean0 - mean[0]) < 1e-10);
        CHECK(std::abs(r.mean1 - mean[1]) < 1e-10);
        CHECK(std::abs(r.covariance - cov.real()) < 1e-10);
    }
}

TEST_CASE("filtered flavor on the pairing toy tracks the mode flavor") {
    const std::vector<models::PairLevel> pairs{{0.4, 1.0}, {-0.3, 0.6}};
    const auto b = models::build_hamiltonian(ModelConfig{models::PairingToy{pairs}});
    const auto g = ground_of(b);
    const double e0 = std::hypot(0.4, 1.0), e1 = std::hypot(0.3, 0.6);
    const double gamma = 0.1 * std::abs(e0 - e1);
    // pair 0 occupies modes 0 and 1, site basis equals mode basis here
    ProbeSpec p0, p1;
    p0.site = 0;
    p1.site = 1;
    p0.energy = p1.energy = e0;
    p0.width = p1.width = gamma;
    const auto spec = filter_spectra(b, g, p0, p1);
    const auto f = filtered_correlator(g, spec, b, p0, p1);
    const auto m = mode_occupation_correlator(g.ground.state, b.modes, on_mode(mode_of_site(b.modes, 0)),
                                              on_mode(mode_of_site(b.modes, 1)));
    CHECK(std::abs(f.alpha / m.alpha - 1.0) < 0.02);
}

TEST_CASE("filtered expectations do not depend on the eigenbasis inside degenerate levels") {
    const std::vector<models::PairLevel> pairs{{0.5, 1.0}, {0.5, 1.0}};
    const auto b = models::build_hamiltonian(ModelConfig{models::PairingToy{pairs}});
    const auto g = ground_of(b);
    ProbeSpec p0, p1;
    p0.site = 0;
    p1.site = 3;
    p0.energy = p1.energy = std::hypot(0.5, 1.0);
    p0.width = p1.width = 0.2;
    auto spec = filter_spectra(b, g, p0, p1);
    const auto a = filtered_correlator(g, spec, b, p0, p1);
    std::mt19937_64 rng(3);
    for (auto& [sector, s] : spec.by_sector) {
        std::size_t i = 0;
        while (i < s.size()) {
            std::size_t j = i + 1;
            while (j < s.size() && s.eigenvalues[j] - s.eigenvalues[i] < 1e-9) ++j;
            if (j - i > 1) {
                const auto q = oracle::random_hermitian(static_cast<int>(j - i), rng);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q);
                std::vector<fock::FockVector> mixed;
                for (std::size_t c = 0; c < j - i; ++c) {
                    fock::FockVector v(s.eigenvectors[i].basis_ptr());
                    for (std::size_t r = 0; r < j - i; ++r)
                        v += es.eigenvectors()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
                             s.eigenvectors[i + r];
                    mixed.push_back(v);
                }
                for (std::size_t c = 0; c < j - i; ++c) s.eigenvectors[i + c] = mixed[c];
            }
            i = j;
        }
    }
    const auto c = filtered_correlator(g, spec, b, p0, p1);
    CHECK(std::abs(a.mean0 - c.mean0) < 1e-12);
    CHECK(std::abs(a.cross - c.cross) < 1e-12);
}

TEST_CASE("truncated spectra are rejected") {
    const auto b = models::build_hamiltonian(ModelConfig{models::InteractingChain{6, 1.0, 0.5}});
    const auto g = ground_of(b);
    ProbeSpec p0, p1;
    p0.site = 0;
    p1.site = 5;
    p0.energy = 0.5;
    p1.energy = 3.0;
    p0.width = p1.width = 0.1;
    auto spec = filter_spectra(b, g, p0, p1);
    for (auto& [sector, s] : spec.by_sector) {
        s.eigenvalues.resize(3);
        s.eigenvectors.erase(s.eigenvectors.begin() + 3, s.eigenvectors.end());
        s.complete = false;
    }
    CHECK_THROWS_WITH(filtered_correlator(g, spec, b, p0, p1), doctest::Contains("insufficient spectrum"));
}

TEST_CASE("probe-level flavor") {
    SUBCASE("eigenmode coupling to a noninteracting chain gives zero") {
        // hole probe injects into an empty mode, particle probe drains an occupied one
        ProbeSpec p0 = on_mode(4, Character::hole, -1.0), p1 = on_mode(1, Character::particle, 1.0);
        p0.target = p1.target = CouplingTarget::eigenmode;
        const auto r = probe_level_correlator(models::InnerConfig{models::FreeChain{6, 1.0}}, p0, p1);
        CHECK(std::abs(r.alpha) < 1e-9);
        REQUIRE(r.extrapolated);
        CHECK(std::abs(*r.extrapolated) < 1e-9);
    }
    SUBCASE("site coupling to a noninteracting chain approaches the hybridization limit") {
        // α → −|Σ a_k b_k|² / (Σ a_k² Σ b_k²) for two particle probes,
        // a_k = U_{x0 k}/(ε₀ − ε_k) over occupied k, likewise b_k.
        const models::FreeChain fc{6, 1.0};
        const auto inner = models::build_hamiltonian(models::InnerConfig{fc});
        ProbeSpec p0, p1;
        p0.site = 0;
        p1.site = 2;
        p0.energy = 1.5;
        p1.energy = 2.5;
        p0.coupling = p1.coupling = 0.01;
        const auto r = probe_level_correlator(models::InnerConfig{fc}, p0, p1);
        cplx ab = 0.0;
        double aa = 0.0, bb = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double ek = inner.modes.energies[k];
            const cplx a = inner.modes.transform(0, k) / (p0.energy - ek);
            const cplx c = inner.modes.transform(2, k) / (p1.energy - ek);
            ab += std::conj(a) * c;
            aa += std::norm(a);
            bb += std::norm(c);
        }
        REQUIRE(r.extrapolated);
        CHECK(*r.extrapolated == doctest::Approx(-std::norm(ab) / (aa * bb)).epsilon(1e-4));
    }
    SUBCASE("pairing toy agrees with the mode flavor when detuned") {
        ProbeSpec p0 = on_mode(0, Character::particle, 50.0), p1 = on_mode(1, Character::particle, 50.0);
        p0.target = p1.target = CouplingTarget::eigenmode;
        const models::InnerConfig inner{models::PairingToy{{{0.0, 1.0}}}};
        const auto r = probe_level_correlator(inner, p0, p1);
        CHECK(r.alpha > 0.0);
        CHECK(std::abs(r.alpha / 1.0 - 1.0) < 0.05);
        CHECK(std::abs(r.sequence[1] / r.sequence[0] - 1.0) < 0.05);
        CHECK_FALSE(r.flagged);
        const double d1 = std::abs(r.sequence[1] - r.sequence[0]), d2 = std::abs(r.sequence[2] - r.sequence[1]);
        CHECK(d2 < d1);
    }
}
