#include "entanglab/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "entanglab/cone.hpp"
#include "entanglab/probes.hpp"

namespace entanglab::verify {

namespace {

using models::BuiltModel;
using models::Character;
using models::ModelConfig;
using probes::ProbeSpec;

ProbeSpec on_mode(int k, Character c = Character::particle, double energy = 1.0) {
    ProbeSpec p;
    p.mode = k;
    p.character = c;
    p.energy = energy;
    return p;
}

models::FreeChain free_chain(int sites) {
    models::FreeChain c;
    c.sites = sites;
    return c;
}

models::InteractingChain interacting_chain(int sites, double v) {
    models::InteractingChain c;
    c.sites = sites;
    c.interaction = v;
    return c;
}

int mode_of_site(const models::ModeBasis& mb, int site) {
    int best = 0;
    for (int k = 1; k < mb.size(); ++k)
        if (std::abs(mb.transform(site, k)) > std::abs(mb.transform(site, best))) best = k;
    return best;
}

Eigen::MatrixXcd random_hermitian(int m, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXcd a(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = cplx(nd(rng), nd(rng));
    return 0.5 * (a + a.adjoint());
}

BuiltModel random_quadratic(std::mt19937_64& rng, int m) {
    BuiltModel b = models::build_hamiltonian(ModelConfig{free_chain(m)});
    b.quadratic.hopping = random_hermitian(m, rng);
    b.hamiltonian = models::quadratic_operator(b.quadratic);
    b.modes = models::single_particle_modes(b.quadratic);
    return b;
}

class Runner {
public:
    explicit Runner(const Options& o) : opt_(o) {}

    // `body` returns the measured deviation; it is held to the named tolerance.
    void check(const std::string& battery, const std::string& name, const std::string& tol_name,
               const std::function<double()>& body) {
        Check c;
        c.battery = battery;
        c.name = name;
        c.tolerance_name = tol_name;
        c.tolerance = opt_.tolerances.get(tol_name);
        try {
            c.value = body();
            c.passed = std::isfinite(c.value) && c.value <= c.tolerance;
            if (!c.passed) c.note = "exceeds tolerance " + tol_name;
        } catch (const std::exception& e) {
            c.passed = false;
            c.value = std::numeric_limits<double>::quiet_NaN();
            c.note = std::string("error: ") + e.what();
        }
        report_.checks.push_back(std::move(c));
    }

    // Pass/fail property without a tolerance.
    void property(const std::string& battery, const std::string& name, const std::function<bool()>& body) {
        Check c;
        c.battery = battery;
        c.name = name;
        try {
            c.passed = body();
            if (!c.passed) c.note = "property violated";
        } catch (const std::exception& e) {
            c.note = std::string("error: ") + e.what();
        }
        report_.checks.push_back(std::move(c));
    }

    Report take() { return std::move(report_); }

private:
    const Options& opt_;
    Report report_;
};

fock::LadderRule rule_of(const Options& o) { return o.inject_sign_bug ? fock::hardcore_boson_ladder : fock::apply_ladder; }

void algebra_battery(Runner& r, const Options& o) {
    for (int m : {3, 6}) {
        r.check("algebra", "anticommutation relations, " + std::to_string(m) + " modes", "algebra", [&] {
            const auto s = fock::algebra_selftest(m, rule_of(o), 0x5eed, o.tolerances.get("algebra"));
            return std::max({s.max_anticommutator_error, s.max_annihilator_error, s.max_nilpotency_error});
        });
    }
}

void nullity_battery(Runner& r, const Options& o) {
    const auto solver = o.tolerances.solver_options();
    r.check("nullity", "random quadratic models, all mode pairs", "nullity", [&] {
        std::mt19937_64 rng(20240611);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const int m = 4 + trial % 5;
            const auto b = random_quadratic(rng, m);
            const auto g = models::solve_ground(b, solver);
            for (int k0 = 0; k0 < m; ++k0)
                for (int k1 = 0; k1 < m; ++k1) {
                    if (k0 == k1) continue;
                    for (auto c0 : {Character::particle, Character::hole})
                        for (auto c1 : {Character::particle, Character::hole}) {
                            const auto mo = probes::occupation_moments(g.ground.state, b.modes, k0, c0, k1, c1);
                            worst = std::max(worst, std::abs(mo.covariance));
                        }
                }
        }
        return worst;
    });
    // E_c (N − N0)² commutes with every mode occupation
    r.check("nullity", "charging energy alone leaves the mode flavor at zero", "charging", [&] {
        auto fc = free_chain(6);
        fc.charging = models::Charging{2.0, 3.0};
        const auto b = models::build_hamiltonian(ModelConfig{fc});
        const auto g = models::solve_ground(b, solver);
        double worst = 0.0;
        for (int k0 = 0; k0 < 6; ++k0)
            for (int k1 = 0; k1 < 6; ++k1)
                if (k0 != k1) {
                    const auto mo = probes::occupation_moments(g.ground.state, b.modes, k0, Character::particle, k1,
                                                               Character::hole);
                    worst = std::max(worst, std::abs(mo.covariance));
                }
        return worst;
    });
}

void bogoliubov_battery(Runner& r, const Options& o) {
    const auto solver = o.tolerances.solver_options();
    r.check("bogoliubov", "two-mode pairing toy gives alpha = 1", "pairing", [&] {
        const auto b = models::build_hamiltonian(ModelConfig{models::PairingToy{{{0.0, 1.0}}}});
        const auto g = models::solve_ground(b, solver);
        const auto a = probes::mode_occupation_correlator(g.ground.state, b.modes, on_mode(0), on_mode(1));
        return std::max(std::abs(a.alpha - 1.0), std::abs(cone::e1_closed_form(a.alpha) - std::numbers::ln2));
    });

    const std::vector<models::PairLevel> pairs{{0.3, 1.0}, {-0.6, 0.5}, {1.1, 0.8}, {0.0, 0.4}};
    const auto b = models::build_hamiltonian(ModelConfig{models::PairingToy{pairs}});
    std::optional<models::ModelGround> g;
    r.check("bogoliubov", "paired modes follow u^2/v^2", "bogoliubov", [&] {
        g = models::solve_ground(b, solver);
        double worst = 0.0;
        for (int k = 0; k < 4; ++k) {
            const auto a = probes::mode_occupation_correlator(g->ground.state, b.modes,
                                                             on_mode(mode_of_site(b.modes, 2 * k)),
                                                             on_mode(mode_of_site(b.modes, 2 * k + 1)));
            const double pred = models::bcs_uv_oracle(pairs[k].xi, pairs[k].gap).alpha_pred;
            worst = std::max(worst, std::abs(a.alpha - pred));
        }
        return worst;
    });
    r.check("bogoliubov", "modes of different pairs are uncorrelated", "cross_pair", [&] {
        if (!g) g = models::solve_ground(b, solver);
        double worst = 0.0;
        for (int a = 0; a < 8; ++a)
            for (int c = 0; c < 8; ++c)
                if (a / 2 != c / 2)
                    for (auto ca : {Character::particle, Character::hole})
                        for (auto cc : {Character::particle, Character::hole}) {
                            const auto mo = probes::occupation_moments(g->ground.state, b.modes,
                                                                       mode_of_site(b.modes, a), ca,
                                                                       mode_of_site(b.modes, c), cc);
                            worst = std::max(worst, std::abs(mo.covariance));
                        }
        return worst;
    });
}

void flavor_battery(Runner& r, const Options& o) {
    const auto solver = o.tolerances.solver_options();
    r.check("flavor", "filtered flavor tracks the mode flavor on a pairing toy", "flavor_filtered", [&] {
        const std::vector<models::PairLevel> pairs{{0.4, 1.0}, {-0.3, 0.6}};
        const auto b = models::build_hamiltonian(ModelConfig{models::PairingToy{pairs}});
        const auto g = models::solve_ground(b, solver);
        const double e0 = std::hypot(0.4, 1.0), e1 = std::hypot(0.3, 0.6);
        ProbeSpec p0, p1;
        p0.site = 0;
        p1.site = 1;
        p0.energy = p1.energy = e0;
        p0.width = p1.width = 0.1 * std::abs(e0 - e1);
        const auto spec = probes::filter_spectra(b, g, p0, p1, solver);
        const auto f = probes::filtered_correlator(g, spec, b, p0, p1);
        const auto m = probes::mode_occupation_correlator(g.ground.state, b.modes, on_mode(mode_of_site(b.modes, 0)),
                                                          on_mode(mode_of_site(b.modes, 1)));
        return std::abs(f.alpha / m.alpha - 1.0);
    });
    r.check("flavor", "probe-level flavor tracks the mode flavor on a detuned pairing toy", "flavor_probe_level", [&] {
        ProbeSpec p0 = on_mode(0, Character::particle, 50.0), p1 = on_mode(1, Character::particle, 50.0);
        p0.target = p1.target = models::CouplingTarget::eigenmode;
        const models::InnerConfig inner{models::PairingToy{{{0.0, 1.0}}}};
        const auto pl = probes::probe_level_correlator(inner, p0, p1, solver);
        return std::abs(pl.alpha - 1.0);
    });
}

void qd_battery(Runner& r, const Options& o) {
    (void)o;
    r.check("qd_formula", "reference substitution N=10, widths 0.01, spacing 1", "qd_formula", [] {
        return std::abs(models::qd_entanglement_formula({10, 0.01, 0.01, -0.5, 0.5}).entanglement - 7.9078e-3);
    });
    r.property("qd_formula", "E1 decreases with N and with the level spacing where valid", [] {
        for (double spacing : {0.5, 1.0, 2.0}) {
            double prev = std::numeric_limits<double>::infinity();
            for (int n = 1; n <= 40; ++n) {
                const auto q = models::qd_entanglement_formula({n, 0.01, 0.01, 0.0, spacing});
                if (!q.valid) break;
                if (!(q.entanglement < prev)) return false;
                prev = q.entanglement;
            }
        }
        for (int n : {1, 5, 20}) {
            double prev = std::numeric_limits<double>::infinity();
            for (double spacing = 0.25; spacing <= 8.0; spacing *= 1.25) {
                const auto q = models::qd_entanglement_formula({n, 0.01, 0.01, 0.0, spacing});
                if (!q.valid) continue;
                if (!(q.entanglement < prev)) return false;
                prev = q.entanglement;
            }
        }
        return true;
    });
    r.property("qd_formula", "interaction term dominates exactly under the validity condition", [] {
        for (int n : {1, 2, 5, 10, 30})
            for (double width : {0.001, 0.01, 0.05, 0.2})
                for (double spacing : {0.1, 0.3, 1.0, 3.0}) {
                    const auto q = models::qd_entanglement_formula({n, width, width, 0.0, spacing});
                    const bool dominant = std::abs(q.alpha_int / q.alpha_nonint) > 1.0;
                    if (dominant != q.valid) return false;
                }
        return true;
    });
}

void cone_battery(Runner& r, const Options& o) {
    r.check("cone", "E1(1) = ln 2 and E1(alpha) = E1(1/alpha)", "closed_form", [] {
        double worst = std::abs(cone::e1_closed_form(1.0) - std::numbers::ln2);
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int i = 0; i < 100; ++i) {
            const double a = std::pow(10.0, u(rng));
            worst = std::max(worst, std::abs(cone::e1_closed_form(a) - cone::e1_closed_form(1.0 / a)));
        }
        return worst;
    });
    r.check("cone", "general solver on two pure states matches the closed form", "closed_form", [&] {
        double worst = 0.0;
        for (double a : {0.01, 0.3, 1.0, 2.5, 40.0}) {
            const cone::StateFunctional l0{{1.0, 0.0}, "l0"}, l1{{1.0, 1.0}, "l1"};
            const cone::StateFunctional g{{1.0, a / (1.0 + a)}, "g"};
            const auto rep = cone::entanglement_general(g, cone::ConeSpec{{l0, l1}}, o.threads);
            worst = std::max(worst, std::abs(rep.entanglement - cone::e1_closed_form(a)));
        }
        return worst;
    });
    r.check("cone", "vertex minimum is not beaten by a grid over three pure states", "cone", [&] {
        std::mt19937_64 rng(4242);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> x{u(rng), u(rng), u(rng)};
            std::vector<double> w{u(rng) + 0.05, u(rng) + 0.05, u(rng) + 0.05};
            const double sw = w[0] + w[1] + w[2];
            double t = 0.0;
            for (int i = 0; i < 3; ++i) t += w[i] / sw * x[i];
            cone::ConeSpec spec;
            for (int i = 0; i < 3; ++i) spec.pure.push_back({{1.0, x[i]}, "p" + std::to_string(i)});
            const auto rep = cone::entanglement_general({{1.0, t}, "target"}, spec, o.threads);
            // weights (p, q, 1 − p − q) with p x0 + q x1 + (1 − p − q) x2 = t
            double grid = std::numeric_limits<double>::infinity();
            for (int i = 0; i <= 1000; ++i) {
                const double p = i * 1e-3;
                const double denom = x[1] - x[2];
                if (std::abs(denom) < 1e-12) continue;
                const double q = (t - x[2] - p * (x[0] - x[2])) / denom;
                const double rest = 1.0 - p - q;
                if (q < 0.0 || rest < 0.0) continue;
                const std::array<double, 3> ws{p, q, rest};
                grid = std::min(grid, cone::shannon_entropy(ws));
            }
            worst = std::max(worst, rep.entanglement - grid);
        }
        return std::max(worst, 0.0);
    });
}

void cone_identity_battery(Runner& r, const Options& o) {
    const auto solver = o.tolerances.solver_options();
    const auto rule = rule_of(o);
    struct Case {
        std::string label;
        ModelConfig model;
        std::vector<std::pair<ProbeSpec, ProbeSpec>> pairs;
    };
    std::vector<Case> cases;
    cases.push_back({"pairing toy", models::PairingToy{{{0.0, 1.0}}}, {{on_mode(0), on_mode(1)}}});
    cases.push_back({"interacting chain",
                     interacting_chain(6, 0.5),
                     {{on_mode(1), on_mode(4)},
                      {on_mode(2, Character::hole), on_mode(0, Character::hole)},
                      {on_mode(2, Character::hole), on_mode(4)},
                      {on_mode(1), on_mode(0, Character::hole)}}});
    cases.push_back({"bogoliubov toy",
                     models::PairingToy{{{0.3, 1.0}, {-0.6, 0.5}}},
                     {{on_mode(0), on_mode(1)}, {on_mode(2), on_mode(3)}}});
    for (const auto& c : cases) {
        r.check("cone_identity", "cone-state alpha equals the correlator, " + c.label, "cone_identity", [&] {
            const auto b = models::build_hamiltonian(c.model);
            const auto g = models::solve_ground(b, solver);
            double worst = 0.0;
            for (const auto& [p0, p1] : c.pairs) {
                const auto cs = probes::cone_states(g.ground.state, b.modes, p0, p1, rule);
                const auto u = cone::decompose_unique(cs.ground, cs.first, cs.second);
                const auto a = probes::mode_occupation_correlator(g.ground.state, b.modes, p0, p1);
                worst = std::max(worst, std::abs(u.alpha - a.alpha) / std::max(1.0, std::abs(a.alpha)));
            }
            return worst;
        });
        r.check("cone_identity", "Pauli nilpotency, " + c.label, "pauli", [&] {
            const auto b = models::build_hamiltonian(c.model);
            const auto g = models::solve_ground(b, solver);
            double worst = 0.0;
            for (int k = 0; k < b.mode_count; ++k)
                for (auto ch : {Character::particle, Character::hole}) {
                    const auto v = probes::pauli_check(g.ground.state, b.modes, on_mode(k, ch), rule);
                    worst = std::max(worst, std::abs(v));
                }
            return worst;
        });
    }
}

void solver_battery(Runner& r, const Options& o) {
    const std::vector<std::pair<std::string, ModelConfig>> cases{
        {"free chain", free_chain(8)},
        {"interacting chain", interacting_chain(8, 0.7)},
        {"pairing toy", models::PairingToy{{{0.3, 1.0}, {-0.6, 0.5}, {1.1, 0.8}}}},
        {"proximity chain", models::ProximityChain{}},
    };
    for (const auto& [label, cfg] : cases) {
        r.check("solver", "lanczos and dense ground energies, " + label, "solver_agreement", [&] {
            const auto b = models::build_hamiltonian(cfg);
            auto dense = o.tolerances.solver_options();
            dense.path = spectra::SolverPath::dense;
            auto lanczos = dense;
            lanczos.path = spectra::SolverPath::lanczos;
            double worst = 0.0;
            for (const auto& s : b.candidate_sectors) {
                const auto basis = fock::make_basis(b.mode_count, s);
                dense.allow_degenerate = lanczos.allow_degenerate = true;
                const auto a = spectra::ground_state(b.hamiltonian, basis, dense);
                const auto l = spectra::ground_state(b.hamiltonian, basis, lanczos);
                worst = std::max(worst, std::abs(a.energy - l.energy));
                const double bound = o.tolerances.get("residual") * std::max(1.0, std::abs(a.energy));
                if (a.residual > bound || l.residual > bound)
                    throw NumericalError("eigen-residual " + std::to_string(std::max(a.residual, l.residual)) +
                                         " above the residual tolerance");
            }
            return worst;
        });
    }
}

} // namespace

bool Report::passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return !checks.empty();
}

Report run(const Options& options) {
    const auto start = std::chrono::steady_clock::now();
    Runner r(options);
    algebra_battery(r, options);
    nullity_battery(r, options);
    bogoliubov_battery(r, options);
    flavor_battery(r, options);
    qd_battery(r, options);
    cone_battery(r, options);
    cone_identity_battery(r, options);
    solver_battery(r, options);
    auto report = r.take();
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::string format(const Report& report) {
    std::ostringstream os;
    int failed = 0;
    for (const auto& c : report.checks) {
        os << (c.passed ? "PASS" : "FAIL") << "  [" << c.battery << "] " << c.name;
        if (!c.tolerance_name.empty()) os << "  (" << c.value << " vs " << c.tolerance_name << "=" << c.tolerance << ")";
        if (!c.note.empty()) os << "  " << c.note;
        os << "\n";
        if (!c.passed) ++failed;
    }
    os << report.checks.size() - failed << "/" << report.checks.size() << " checks passed in " << report.seconds
       << " s\n";
    return os.str();
}

} // namespace entanglab::verify
