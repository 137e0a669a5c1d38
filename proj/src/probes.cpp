#include "entanglab/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace entanglab::probes {

using fock::SecondQuantizedOperator;
using fock::Sector;

namespace {

constexpr double vanishing_mean = 1e-14;

Sector reached(const Sector& s, Character c) { return s.shifted(c == Character::particle ? -1 : +1); }

fock::BasisPtr sector_basis(const FockVector& g, Character c) {
    return fock::make_basis(g.basis().mode_count(), reached(g.basis().sector(), c));
}

// f = ψ (particle) or ψ† (hole) on a given single-particle orbital.
struct Transfer {
    SecondQuantizedOperator f;
    SecondQuantizedOperator f_dagger;
    Character character;
};

Transfer mode_transfer(const ModeBasis& basis, int k, Character c) {
    if (c == Character::particle) return {basis.annihilation(k), basis.creation(k), c};
    return {basis.creation(k), basis.annihilation(k), c};
}

Transfer site_transfer(int site, Character c) {
    if (c == Character::particle)
        return {SecondQuantizedOperator::annihilate(site), SecondQuantizedOperator::create(site), c};
    return {SecondQuantizedOperator::create(site), SecondQuantizedOperator::annihilate(site), c};
}

// m g = f† f g; m = n for particle, 1 − n for hole, without the 1 − n cancellation.
FockVector apply_occupation(const Transfer& t, const FockVector& g, fock::LadderRule rule = fock::apply_ladder) {
    const FockVector fg = fock::apply_operator(t.f, g, sector_basis(g, t.character), rule);
    return fock::apply_operator(t.f_dagger, fg, g.basis_ptr(), rule);
}

Moments moments_from(const FockVector& g, const FockVector& a0, const FockVector& a1) {
    Moments m;
    m.mean0 = g.dot(a0).real();
    m.mean1 = g.dot(a1).real();
    m.cross = a0.dot(a1).real();
    m.covariance = m.cross - m.mean0 * m.mean1;
    return m;
}

AlphaResult finish(const Moments& m, Flavor flavor) {
    if (m.mean0 < vanishing_mean || m.mean1 < vanishing_mean)
        throw NumericalError("probe current vanishes, alpha undefined");
    AlphaResult r;
    r.flavor = flavor;
    r.mean0 = m.mean0;
    r.mean1 = m.mean1;
    r.cross = m.cross;
    r.covariance = m.covariance;
    r.alpha = m.covariance / (m.mean0 * m.mean1);
    r.negative = r.alpha < 0.0;
    return r;
}

void require_normalized(const FockVector& g) {
    if (!g.is_normalized(1e-10)) throw ConfigError("state must be normalized");
}

} // namespace

void ProbeSpec::validate() const {
    if (!(width > 0.0)) throw ConfigError("probe width must be positive");
    if (site < 0) throw ConfigError("probe site must be non-negative");
    if (coupling < 0.0) throw ConfigError("probe coupling must be non-negative");
    if (mode && *mode < 0) throw ConfigError("probe mode must be non-negative");
    if (target == CouplingTarget::eigenmode && !mode) throw ConfigError("eigenmode coupling needs an explicit mode");
}

std::vector<std::string> ProbeSpec::warnings() const {
    std::vector<std::string> w;
    if (character == Character::particle && energy <= 0.0) w.push_back("particle probe with energy <= 0");
    if (character == Character::hole && energy >= 0.0) w.push_back("hole probe with energy >= 0");
    return w;
}

std::string to_string(Flavor f) {
    switch (f) {
    case Flavor::mode: return "mode";
    case Flavor::filtered: return "filtered";
    case Flavor::probe_level: return "probe_level";
    }
    return "?";
}

Flavor parse_flavor(const std::string& s) {
    if (s == "mode") return Flavor::mode;
    if (s == "filtered") return Flavor::filtered;
    if (s == "probe_level") return Flavor::probe_level;
    throw ConfigError("unknown flavor '" + s + "'");
}

std::string to_string(Character c) { return c == Character::particle ? "particle" : "hole"; }

int select_mode(const ModeBasis& basis, double energy, double tol) {
    if (!(tol > 0.0)) throw ConfigError("mode selection tolerance must be positive");
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    int within = 0;
    for (int k = 0; k < basis.size(); ++k) {
        const double d = std::abs(basis.energies[static_cast<std::size_t>(k)] - energy);
        if (d <= tol) ++within;
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    if (within > 1) {
        std::ostringstream os;
        os << "ambiguous mode selection: " << within << " modes within " << tol << " of " << energy;
        throw ConfigError(os.str());
    }
    if (best < 0 || best_d > tol) {
        std::ostringstream os;
        os << "no mode at energy " << energy << " (nearest is " << best_d << " away)";
        throw ConfigError(os.str());
    }
    return best;
}

int resolve_mode(const ModeBasis& basis, const ProbeSpec& probe) {
    if (probe.mode) {
        if (*probe.mode >= basis.size()) throw ConfigError("probe mode index out of range");
        return *probe.mode;
    }
    return select_mode(basis, basis.chemical_potential + probe.energy, probe.width);
}

Moments occupation_moments(const FockVector& g, const ModeBasis& basis, int k0, Character c0, int k1,
                           Character c1) {
    const FockVector a0 = apply_occupation(mode_transfer(basis, k0, c0), g);
    const FockVector a1 = apply_occupation(mode_transfer(basis, k1, c1), g);
    return moments_from(g, a0, a1);
}

AlphaResult mode_occupation_correlator(const FockVector& g, const ModeBasis& basis, const ProbeSpec& p0,
                                       const ProbeSpec& p1) {
    require_normalized(g);
    const int k0 = resolve_mode(basis, p0), k1 = resolve_mode(basis, p1);
    if (k0 == k1) throw ConfigError("probes select the same mode");
    AlphaResult r = finish(occupation_moments(g, basis, k0, p0.character, k1, p1.character), Flavor::mode);
    r.diagnostics.push_back("modes " + std::to_string(k0) + "," + std::to_string(k1));
    return r;
}

ConeStates cone_states(const FockVector& g, const ModeBasis& basis, const ProbeSpec& p0, const ProbeSpec& p1,
                       fock::LadderRule rule) {
    require_normalized(g);
    const int k0 = resolve_mode(basis, p0), k1 = resolve_mode(basis, p1);
    if (k0 == k1) throw ConfigError("probes select the same mode");
    const Transfer t1 = mode_transfer(basis, k1, p1.character);

    // ⟨m₁⟩ in the normalized state f|g⟩
    auto conditioned = [&](const ProbeSpec& p, int k) {
        const FockVector fg =
            fock::apply_operator(mode_transfer(basis, k, p.character).f, g, sector_basis(g, p.character), rule);
        const double w = fg.dot(fg).real();
        if (w < vanishing_mean) throw NumericalError("state undefined: f|g> has zero norm");
        return fg.dot(apply_occupation(t1, fg, rule)).real() / w;
    };

    ConeStates s;
    const double mg = g.dot(apply_occupation(t1, g, rule)).real();
    s.ground = {{1.0, mg}, "lambda_g"};
    s.first = {{1.0, conditioned(p0, k0)}, "lambda_0"};
    s.second = {{1.0, conditioned(p1, k1)}, "lambda_1"};
    return s;
}

double pauli_check(const FockVector& g, const ModeBasis& basis, const ProbeSpec& probe, fock::LadderRule rule) {
    require_normalized(g);
    const int k = resolve_mode(basis, probe);
    const Transfer t = mode_transfer(basis, k, probe.character);
    const FockVector fg = fock::apply_operator(t.f, g, sector_basis(g, probe.character), rule);
    const double w = fg.dot(fg).real();
    if (w < vanishing_mean) throw NumericalError("state undefined: f|g> has zero norm");
    return fg.dot(apply_occupation(t, fg, rule)).real() / w;
}

SectorSpectra filter_spectra(const models::BuiltModel& model, const models::ModelGround& ground,
                             const ProbeSpec& p0, const ProbeSpec& p1, const spectra::SolverOptions& options) {
    SectorSpectra out;
    for (const auto* p : {&p0, &p1}) {
        const Sector s = reached(ground.sector, p->character);
        if (out.by_sector.contains(s)) continue;
        const auto basis = fock::make_basis(model.mode_count, s);
        if (basis->size() == 0) {
            out.by_sector.emplace(s, spectra::SpectrumResult{});
            continue;
        }
        if (basis->size() <= options.dense_cap) {
            out.by_sector.emplace(s, spectra::full_spectrum(model.hamiltonian, basis, options));
        } else {
            const int k = static_cast<int>(std::min<std::size_t>(basis->size(), 64));
            out.by_sector.emplace(s, spectra::low_spectrum(model.hamiltonian, basis, k, options));
        }
    }
    return out;
}

AlphaResult filtered_correlator(const models::ModelGround& ground, const SectorSpectra& spectra,
                                const models::BuiltModel& model, const ProbeSpec& p0, const ProbeSpec& p1) {
    const FockVector& g = ground.ground.state;
    require_normalized(g);
    const double eg = ground.ground.energy;
    AlphaResult diag_holder;
    if (std::max(p0.width, p1.width) >= std::abs(p0.energy - p1.energy))
        diag_holder.diagnostics.push_back("filter width not below the probe separation");

    // ñ_j g = F_j† W_j² F_j g
    auto filtered = [&](const ProbeSpec& p) {
        if (p.site < 0 || p.site >= model.mode_count) throw ConfigError("probe site outside the model");
        const Sector s = reached(ground.sector, p.character);
        const auto it = spectra.by_sector.find(s);
        if (it == spectra.by_sector.end()) throw ConfigError("no spectrum for sector " + s.describe());
        const auto& spec = it->second;
        const double eps = std::abs(p.energy), gamma = p.width;
        if (spec.size() == 0) return FockVector(g.basis_ptr());
        if (!spec.complete && spec.eigenvalues.back() - eg < eps + 3.0 * gamma) {
            std::ostringstream os;
            os << "insufficient spectrum: sector " << s.describe() << " covers excitations up to "
               << spec.eigenvalues.back() - eg << ", filter needs " << eps + 3.0 * gamma;
            throw NumericalError(os.str());
        }
        const Transfer f = site_transfer(p.site, p.character);
        const auto target = spec.eigenvectors.front().basis_ptr();
        const FockVector fg = fock::apply_operator(f.f, g, target);
        FockVector w2fg(target);
        int in_window = 0;
        for (std::size_t m = 0; m < spec.size(); ++m) {
            const double x = spec.eigenvalues[m] - eg - eps;
            const double w2 = gamma * gamma / (x * x + gamma * gamma);
            if (std::abs(x) <= 3.0 * gamma) ++in_window;
            const auto& vm = spec.eigenvectors[m];
            w2fg += (w2 * vm.dot(fg)) * vm;
        }
        int degenerate = 0;
        for (std::size_t m = 1; m < spec.size(); ++m) {
            const double x = spec.eigenvalues[m] - eg - eps;
            if (std::abs(x) <= 3.0 * gamma && spec.eigenvalues[m] - spec.eigenvalues[m - 1] <= spec.degeneracy_tol)
                ++degenerate;
        }
        std::ostringstream os;
        os << to_string(p.character) << " filter at site " << p.site << ": " << in_window << " levels in window";
        if (degenerate > 0) os << ", " << degenerate << " degenerate";
        diag_holder.diagnostics.push_back(os.str());
        return fock::apply_operator(f.f_dagger, w2fg, g.basis_ptr());
    };

    const FockVector a0 = filtered(p0);
    const FockVector a1 = filtered(p1);
    AlphaResult r = finish(moments_from(g, a0, a1), Flavor::filtered);
    r.diagnostics = std::move(diag_holder.diagnostics);
    return r;
}

AlphaResult probe_level_correlator(const models::InnerConfig& inner, const ProbeSpec& p0, const ProbeSpec& p1,
                                   const spectra::SolverOptions& options) {
    for (const auto* p : {&p0, &p1}) {
        p->validate();
        if (!(p->coupling > 0.0)) throw ConfigError("probe-level flavor needs v' > 0");
    }
    auto level = [](const ProbeSpec& p, double scale) {
        models::ProbeLevel l;
        l.energy = p.energy;
        l.coupling = p.coupling * scale;
        l.site = p.site;
        l.character = p.character;
        l.target = p.target;
        l.mode = p.mode;
        return l;
    };

    AlphaResult r;
    r.flavor = Flavor::probe_level;
    for (double scale : {1.0, 0.5, 0.25}) {
        const models::ProbeCoupled pc{inner, {level(p0, scale), level(p1, scale)}};
        const auto model = models::build_hamiltonian(models::ModelConfig{pc});
        const auto ground = models::solve_ground(model, options);
        const FockVector& g = ground.ground.state;
        const Moments m = moments_from(g, apply_occupation(site_transfer(model.probe_modes[0], p0.character), g),
                                       apply_occupation(site_transfer(model.probe_modes[1], p1.character), g));
        const AlphaResult point = finish(m, Flavor::probe_level);
        if (scale == 1.0) {
            r.alpha = point.alpha;
            r.mean0 = point.mean0;
            r.mean1 = point.mean1;
            r.cross = point.cross;
            r.covariance = point.covariance;
        }
        r.couplings.push_back(std::max(p0.coupling, p1.coupling) * scale);
        r.sequence.push_back(point.alpha);
    }
    const auto& a = r.sequence;
    // α(v′) = α₀ + c v′² + …
    r.extrapolated = (4.0 * a[2] - a[1]) / 3.0;
    const double d1 = std::abs(a[1] - a[0]), d2 = std::abs(a[2] - a[1]);
    if (d2 > d1) {
        r.flagged = true;
        r.diagnostics.push_back("v' extrapolation not converging");
    }
    r.negative = r.alpha < 0.0;
    std::ostringstream os;
    os << "alpha(v') sequence " << a[0] << ", " << a[1] << ", " << a[2] << "; extrapolated " << *r.extrapolated;
    r.diagnostics.push_back(os.str());
    return r;
}

} // namespace entanglab::probes
