#include "entanglab/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace entanglab::models {

using fock::FockVector;
using fock::Ladder;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

Eigen::MatrixXcd chain_hopping(int sites, double t) {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(sites, sites);
    for (int i = 0; i + 1 < sites; ++i) h(i, i + 1) = h(i + 1, i) = -t;
    return h;
}

} // namespace

// ---------------------------------------------------------------- quadratic

bool QuadraticModel::has_pairing() const {
    return pairing.size() > 0 && pairing.cwiseAbs().maxCoeff() > 0.0;
}

void QuadraticModel::validate() const {
    require(hopping.rows() == hopping.cols(), "hopping matrix must be square");
    require((hopping - hopping.adjoint()).cwiseAbs().maxCoeff() <= 1e-12, "hopping matrix must be hermitian");
    if (pairing.size() > 0) {
        require(pairing.rows() == hopping.rows() && pairing.cols() == hopping.cols(),
                "pairing matrix must match the hopping matrix");
        require((pairing + pairing.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                "pairing matrix must be antisymmetric");
    }
}

SecondQuantizedOperator ModeBasis::creation(int k) const {
    const Eigen::VectorXcd col = transform.col(k);
    return SecondQuantizedOperator::linear(std::span<const cplx>(col.data(), static_cast<std::size_t>(col.size())),
                                           true);
}

SecondQuantizedOperator ModeBasis::annihilation(int k) const {
    const Eigen::VectorXcd col = transform.col(k).conjugate();
    return SecondQuantizedOperator::linear(std::span<const cplx>(col.data(), static_cast<std::size_t>(col.size())),
                                           false);
}

SecondQuantizedOperator ModeBasis::number(int k) const {
    SecondQuantizedOperator n;
    const auto m = transform.rows();
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            const cplx c = transform(i, k) * std::conj(transform(j, k));
            if (std::abs(c) > 0.0) n.add(c, {{static_cast<int>(i), true}, {static_cast<int>(j), false}});
        }
    return n.mark_hermitian();
}

ModeBasis single_particle_modes(const QuadraticModel& q) {
    q.validate();
    const auto m = q.hopping.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q.hopping);
    if (es.info() != Eigen::Success) throw NumericalError("single-particle eigensolver failed");
    Eigen::VectorXd evals = es.eigenvalues();
    Eigen::MatrixXcd vecs = es.eigenvectors();

    ModeBasis out;
    out.chemical_potential = q.chemical_potential;
    out.transform = Eigen::MatrixXcd::Zero(m, m);
    const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());
    const double tol = 1e-10 * scale;

    // Inside a degenerate cluster the eigensolver's basis is arbitrary;
    // replace it by Gram-Schmidt on the site vectors projected onto the
    // cluster, which depends only on the eigenspace.
    Eigen::Index start = 0;
    while (start < m) {
        Eigen::Index end = start + 1;
        while (end < m && evals[end] - evals[end - 1] <= tol) ++end;
        const Eigen::Index d = end - start;
        if (d == 1) {
            out.transform.col(start) = vecs.col(start);
        } else {
            out.degenerate = true;
            const Eigen::MatrixXcd cluster = vecs.middleCols(start, d);
            const Eigen::MatrixXcd proj = cluster * cluster.adjoint();
            Eigen::Index found = 0;
            for (Eigen::Index i = 0; i < m && found < d; ++i) {
                Eigen::VectorXcd u = proj.col(i);
                for (Eigen::Index f = 0; f < found; ++f) {
                    const auto prev = out.transform.col(start + f);
                    u -= prev * prev.dot(u);
                }
                const double nrm = u.norm();
                if (nrm > 1e-6) out.transform.col(start + found++) = u / nrm;
            }
            const double mean = evals.segment(start, d).mean();
            evals.segment(start, d).setConstant(mean);
        }
        start = end;
    }
    for (Eigen::Index k = 0; k < m; ++k) {
        auto col = out.transform.col(k);
        const double cut = 1e-8;
        for (Eigen::Index i = 0; i < m; ++i)
            if (std::abs(col[i]) > cut) {
                col *= std::conj(col[i]) / std::abs(col[i]);
                break;
            }
    }
    out.energies.assign(evals.data(), evals.data() + m);
    out.fermi_index = static_cast<int>(
        std::count_if(out.energies.begin(), out.energies.end(), [&](double e) { return e < q.chemical_potential; }));
    return out;
}

SecondQuantizedOperator quadratic_operator(const QuadraticModel& q) {
    q.validate();
    SecondQuantizedOperator h;
    const int m = q.mode_count();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            cplx c = q.hopping(i, j);
            if (i == j) c -= q.chemical_potential;
            if (c != cplx{}) h.add(c, {{i, true}, {j, false}});
        }
    if (q.pairing.size() > 0)
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                const cplx d = q.pairing(i, j);
                if (d == cplx{}) continue;
                h.add(d, {{i, true}, {j, true}});
                h.add(std::conj(d), {{j, false}, {i, false}});
            }
    return h.mark_hermitian();
}

SecondQuantizedOperator interaction_operator(const InteractionSpec& spec, int modes) {
    SecondQuantizedOperator h;
    for (const auto& dd : spec.density_density) {
        require(dd.i != dd.j, "density-density term needs two distinct modes");
        require(dd.i >= 0 && dd.j >= 0 && dd.i < modes && dd.j < modes, "density-density mode out of range");
        h.add(dd.strength, {{dd.i, true}, {dd.i, false}, {dd.j, true}, {dd.j, false}});
    }
    if (spec.charging) {
        // E_c (N̂ − N0)² = E_c (Σ_ij n_i n_j − 2 N0 N̂ + N0²)
        const double ec = spec.charging->energy;
        const double n0 = spec.charging->offset;
        for (int i = 0; i < modes; ++i) {
            for (int j = 0; j < modes; ++j) {
                if (i == j) h.add(ec, {{i, true}, {i, false}});
                else h.add(ec, {{i, true}, {i, false}, {j, true}, {j, false}});
            }
            h.add(-2.0 * ec * n0, {{i, true}, {i, false}});
        }
        h.add(ec * n0 * n0, {});
    }
    return h.mark_hermitian();
}

// ---------------------------------------------------------------- presets

std::string preset_name(const ModelConfig& config) {
    return std::visit(overloaded{
                          [](const FreeChain&) { return std::string("free_chain"); },
                          [](const InteractingChain&) { return std::string("interacting_chain"); },
                          [](const PairingToy&) { return std::string("pairing_toy"); },
                          [](const ProximityChain&) { return std::string("proximity_chain"); },
                          [](const ProbeCoupled&) { return std::string("probe_coupled"); },
                      },
                      config);
}

namespace {

BuiltModel finish(QuadraticModel q, InteractionSpec interaction, std::vector<Sector> sectors, std::string id) {
    BuiltModel b;
    b.mode_count = q.mode_count();
    if (b.mode_count < 1) throw ConfigError("model needs at least one mode");
    if (b.mode_count > max_total_modes)
        throw ConfigError("model has " + std::to_string(b.mode_count) + " modes; cap is " +
                          std::to_string(max_total_modes));
    b.system_modes = b.mode_count;
    b.hamiltonian = quadratic_operator(q) + interaction_operator(interaction, b.mode_count);
    b.hamiltonian.mark_hermitian();
    QuadraticModel normal = q;
    normal.pairing.resize(0, 0);
    b.modes = single_particle_modes(normal);
    b.number_conserving = !q.has_pairing();
    b.quadratic = std::move(q);
    b.interaction = std::move(interaction);
    b.candidate_sectors = std::move(sectors);
    b.id = std::move(id);
    return b;
}

int resolve_filling(std::optional<int> filling, int sites) {
    const int n = filling.value_or(sites / 2);
    require(n >= 0 && n <= sites, "filling outside [0, sites]");
    return n;
}

BuiltModel build_inner(const InnerConfig& config) {
    return std::visit(
        overloaded{
            [](const FreeChain& c) {
                require(c.sites >= 1, "free_chain needs at least one site");
                require(c.hopping > 0.0, "free_chain hopping must be positive");
                QuadraticModel q{chain_hopping(c.sites, c.hopping), {}, c.chemical_potential};
                InteractionSpec inter;
                inter.charging = c.charging;
                return finish(std::move(q), std::move(inter), {Sector::number(resolve_filling(c.filling, c.sites))},
                              "free_chain");
            },
            [](const InteractingChain& c) {
                require(c.sites >= 2, "interacting_chain needs at least two sites");
                require(c.hopping > 0.0, "interacting_chain hopping must be positive");
                QuadraticModel q{chain_hopping(c.sites, c.hopping), {}, 0.0};
                InteractionSpec inter;
                for (int i = 0; i + 1 < c.sites; ++i) inter.density_density.push_back({i, i + 1, c.interaction});
                return finish(std::move(q), std::move(inter), {Sector::number(resolve_filling(c.filling, c.sites))},
                              "interacting_chain");
            },
            [](const PairingToy& c) {
                require(!c.pairs.empty(), "pairing_toy needs at least one pair");
                const int m = 2 * static_cast<int>(c.pairs.size());
                QuadraticModel q{Eigen::MatrixXcd::Zero(m, m), Eigen::MatrixXcd::Zero(m, m), 0.0};
                for (int k = 0; k < static_cast<int>(c.pairs.size()); ++k) {
                    const auto& p = c.pairs[static_cast<std::size_t>(k)];
                    require(p.gap >= 0.0, "pairing_toy gaps must be non-negative");
                    q.hopping(2 * k, 2 * k) = q.hopping(2 * k + 1, 2 * k + 1) = p.xi;
                    q.pairing(2 * k, 2 * k + 1) = p.gap;
                    q.pairing(2 * k + 1, 2 * k) = -p.gap;
                }
                return finish(std::move(q), {}, {Sector::parity(0), Sector::parity(1)}, "pairing_toy");
            },
            [](const ProximityChain& c) {
                require(c.normal_sites >= 1 && c.sc_sites >= 1, "proximity_chain needs >=1 normal and >=1 sc site");
                require(c.hopping > 0.0 && c.gap > 0.0, "proximity_chain hopping and gap must be positive");
                require(c.transmission > 0.0 && c.transmission <= 1.0, "proximity_chain transmission must be in (0, 1]");
                // spin-1/2 chain: site i carries modes 2i (up) and 2i+1 (down)
                const int sites = c.normal_sites + c.sc_sites;
                const int m = 2 * sites;
                QuadraticModel q{Eigen::MatrixXcd::Zero(m, m), Eigen::MatrixXcd::Zero(m, m), 0.0};
                for (int i = 0; i + 1 < sites; ++i) {
                    const double t = i == c.normal_sites - 1 ? c.hopping * std::sqrt(c.transmission) : c.hopping;
                    for (int s = 0; s < 2; ++s) q.hopping(2 * i + s, 2 * i + 2 + s) = q.hopping(2 * i + 2 + s, 2 * i + s) = -t;
                }
                for (int i = c.normal_sites; i < sites; ++i) {
                    q.pairing(2 * i, 2 * i + 1) = c.gap;
                    q.pairing(2 * i + 1, 2 * i) = -c.gap;
                }
                return finish(std::move(q), {}, {Sector::parity(0), Sector::parity(1)}, "proximity_chain");
            },
        },
        config);
}

BuiltModel build_probe_coupled(const ProbeCoupled& c) {
    const BuiltModel inner = build_inner(c.inner);
    require(!c.probes.empty(), "probe_coupled needs at least one probe");
    const int ms = inner.mode_count;
    const int m = ms + static_cast<int>(c.probes.size());
    if (m > max_total_modes)
        throw ConfigError("probe_coupled model has " + std::to_string(m) + " modes; cap is " +
                          std::to_string(max_total_modes));

    QuadraticModel q;
    q.chemical_potential = inner.quadratic.chemical_potential;
    q.hopping = Eigen::MatrixXcd::Zero(m, m);
    q.hopping.topLeftCorner(ms, ms) = inner.quadratic.hopping;
    if (inner.quadratic.pairing.size() > 0) {
        q.pairing = Eigen::MatrixXcd::Zero(m, m);
        q.pairing.topLeftCorner(ms, ms) = inner.quadratic.pairing;
    }
    int holes = 0;
    for (std::size_t j = 0; j < c.probes.size(); ++j) {
        const auto& p = c.probes[j];
        const int d = ms + static_cast<int>(j);
        require(p.coupling >= 0.0, "probe coupling must be non-negative");
        // μ is subtracted from every diagonal entry, so the level sits at ε_j relative to it.
        q.hopping(d, d) = p.energy + q.chemical_potential;
        if (p.target == CouplingTarget::site) {
            require(p.site >= 0 && p.site < ms, "probe site outside the system");
            q.hopping(p.site, d) = p.coupling;
            q.hopping(d, p.site) = p.coupling;
        } else {
            require(p.mode.has_value() && *p.mode >= 0 && *p.mode < ms, "eigenmode probe needs a valid mode index");
            for (int i = 0; i < ms; ++i) {
                const cplx u = inner.modes.transform(i, *p.mode);
                q.hopping(i, d) = p.coupling * u;
                q.hopping(d, i) = p.coupling * std::conj(u);
            }
        }
        if (p.character == Character::hole) ++holes;
    }

    std::vector<Sector> sectors;
    if (inner.number_conserving && inner.candidate_sectors.size() == 1 &&
        inner.candidate_sectors.front().kind() == Sector::Kind::number) {
        sectors.push_back(inner.candidate_sectors.front().shifted(holes));
    } else {
        sectors = {Sector::parity(0), Sector::parity(1)};
    }

    InteractionSpec inter = inner.interaction; // acts on system modes only
    BuiltModel b;
    b.mode_count = m;
    b.system_modes = ms;
    for (int j = ms; j < m; ++j) b.probe_modes.push_back(j);
    b.hamiltonian = quadratic_operator(q) + interaction_operator(inter, m);
    b.hamiltonian.mark_hermitian();
    QuadraticModel normal = q;
    normal.pairing.resize(0, 0);
    b.modes = single_particle_modes(normal);
    b.number_conserving = !q.has_pairing();
    b.quadratic = std::move(q);
    b.interaction = std::move(inter);
    b.candidate_sectors = std::move(sectors);
    b.id = "probe_coupled(" + inner.id + ")";
    return b;
}

} // namespace

BuiltModel build_hamiltonian(const InnerConfig& config) { return build_inner(config); }

BuiltModel build_hamiltonian(const ModelConfig& config) {
    return std::visit(overloaded{
                          [](const ProbeCoupled& c) { return build_probe_coupled(c); },
                          [](const auto& c) { return build_inner(InnerConfig(c)); },
                      },
                      config);
}

ModelGround solve_ground(const BuiltModel& model, const spectra::SolverOptions& options) {
    std::optional<ModelGround> best;
    double second = std::numeric_limits<double>::infinity();
    // Degeneracy only matters in the winning sector.
    spectra::SolverOptions relaxed = options;
    relaxed.allow_degenerate = true;
    for (const auto& s : model.candidate_sectors) {
        const auto basis = fock::make_basis(model.mode_count, s);
        if (basis->size() == 0) continue;
        auto g = spectra::ground_state(model.hamiltonian, basis, relaxed);
        if (!best || g.energy < best->ground.energy) {
            if (best) second = std::min(second, best->ground.energy);
            best = ModelGround{std::move(g), s};
        } else {
            second = std::min(second, g.energy);
        }
    }
    if (!best) throw ConfigError("no non-empty candidate sector");
    if (best->ground.degeneracy > 1 && !options.allow_degenerate) {
        std::ostringstream os;
        os << "degenerate ground state: " << best->ground.degeneracy << " levels at E0 = " << best->ground.energy
           << " in sector " << best->sector.describe();
        throw NumericalError(os.str());
    }
    if (second - best->ground.energy <= options.degeneracy_tol && !options.allow_degenerate) {
        std::ostringstream os;
        os << "degenerate ground state across sectors at E0 = " << best->ground.energy;
        throw NumericalError(os.str());
    }
    return std::move(*best);
}

// ---------------------------------------------------------------- closed forms

BcsOracle bcs_uv_oracle(double xi, double gap) {
    if (gap < 0.0) throw ConfigError("bcs_uv_oracle: gap must be non-negative");
    if (xi == 0.0 && gap == 0.0) throw ConfigError("bcs_uv_oracle: (xi, gap) = (0, 0) has no unique ground state");
    const double e = std::hypot(xi, gap);
    BcsOracle o{};
    // Evaluate the smaller weight directly to avoid cancellation in (1 ∓ ξ/E)/2.
    if (xi >= 0.0) {
        o.v2 = gap * gap / (2.0 * e * (e + xi));
        o.u2 = 1.0 - o.v2;
    } else {
        o.u2 = gap * gap / (2.0 * e * (e - xi));
        o.v2 = 1.0 - o.u2;
    }
    if (o.v2 == 0.0) throw NumericalError("empty mode, alpha undefined");
    o.alpha_pred = o.u2 / o.v2;
    return o;
}

QdFormulaResult qd_entanglement_formula(const QdFormulaInputs& in) {
    require(in.channels >= 1, "channel count must be >= 1");
    require(in.width0 > 0.0 && in.width1 > 0.0, "level widths must be positive");
    require(in.energy1 > in.energy0, "need energy1 > energy0");
    const double spacing = in.energy1 - in.energy0;
    const double n = in.channels;
    QdFormulaResult r{};
    r.gamma_bar = 2.0 / (1.0 / in.width0 + 1.0 / in.width1);
    const double x = r.gamma_bar / (n * spacing);
    r.alpha_int = x;
    r.alpha_nonint = -in.width0 * in.width1 / (spacing * spacing);
    r.entanglement = x * (std::log(n * spacing / r.gamma_bar) + 1.0);
    r.valid = (in.width0 + in.width1) / (2.0 * spacing) < 1.0 / n;
    return r;
}

PerturbativeAlpha perturbation_oracle(const InteractingChain& config, int hole_mode, int particle_mode) {
    const BuiltModel model = build_inner(InnerConfig(config));
    const int m = model.mode_count;
    const int n = model.candidate_sectors.front().value();
    const ModeBasis& modes = model.modes;
    require(hole_mode >= 0 && hole_mode < n, "hole mode must lie below the Fermi level");
    require(particle_mode >= n && particle_mode < m, "particle mode must lie above the Fermi level");
    if (n > 0 && n < m && modes.energies[static_cast<std::size_t>(n)] - modes.energies[static_cast<std::size_t>(n - 1)] < 1e-12)
        throw NumericalError("vanishing denominator: Fermi sea is degenerate");

    const auto basis = fock::make_basis(m);
    FockVector fs = FockVector::basis_state(basis, 0);
    for (int k = 0; k < n; ++k) fs = fock::apply_operator(modes.creation(k), fs);

    const SecondQuantizedOperator hv = interaction_operator(model.interaction, m);
    const FockVector hv_fs = fock::apply_operator(hv, fs);

    std::vector<SecondQuantizedOperator> create, destroy;
    for (int k = 0; k < m; ++k) {
        create.push_back(modes.creation(k));
        destroy.push_back(modes.annihilation(k));
    }
    auto eps = [&](int k) { return modes.energies[static_cast<std::size_t>(k)]; };

    PerturbativeAlpha out;
    FockVector g = fs;
    auto add_excitation = [&](const FockVector& x, double excitation) {
        if (std::abs(excitation) < 1e-12) throw NumericalError("vanishing denominator in perturbation oracle");
        const cplx c = x.dot(hv_fs) / (-excitation);
        out.max_amplitude = std::max(out.max_amplitude, std::abs(c));
        ++out.excitations;
        g += c * x;
    };
    for (int h = 0; h < n; ++h)
        for (int p = n; p < m; ++p) {
            const FockVector x = fock::apply_operator(create[p], fock::apply_operator(destroy[h], fs));
            add_excitation(x, eps(p) - eps(h));
        }
    for (int h1 = 0; h1 < n; ++h1)
        for (int h2 = h1 + 1; h2 < n; ++h2)
            for (int p1 = n; p1 < m; ++p1)
                for (int p2 = p1 + 1; p2 < m; ++p2) {
                    FockVector x = fock::apply_operator(destroy[h2], fs);
                    x = fock::apply_operator(destroy[h1], x);
                    x = fock::apply_operator(create[p1], x);
                    x = fock::apply_operator(create[p2], x);
                    add_excitation(x, eps(p1) + eps(p2) - eps(h1) - eps(h2));
                }
    g = g.normalized();

    const auto n_hole = modes.number(hole_mode);
    const auto n_part = modes.number(particle_mode);
    const FockVector g_hole = g - fock::apply_operator(n_hole, g); // (1 − n_{k0}) g
    const FockVector g_part = fock::apply_operator(n_part, g);
    out.mean_hole = g.dot(g_hole).real();
    out.mean_particle = g.dot(g_part).real();
    const double cross = g_hole.dot(g_part).real();
    out.covariance = cross - out.mean_hole * out.mean_particle;
    if (out.mean_hole > 1e-14 && out.mean_particle > 1e-14)
        out.alpha = out.covariance / (out.mean_hole * out.mean_particle);
    return out;
}

} // namespace entanglab::models
