// Acceptance run: one PASS/FAIL line per criterion, then the total runtime.
// Exit status is nonzero when any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "entanglab/cone.hpp"
#include "entanglab/driver.hpp"
#include "entanglab/kernel.hpp"
#include "entanglab/probes.hpp"
#include "entanglab/verify.hpp"
#include "oracles.hpp"

using namespace entanglab;
using models::BuiltModel;
using models::Character;
using models::ModelConfig;
using probes::ProbeSpec;

namespace {

using clock_type = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ProbeSpec on_mode(int k, Character c = Character::particle) {
    ProbeSpec p;
    p.mode = k;
    p.character = c;
    p.energy = 1.0;
    return p;
}

int mode_of_site(const models::ModeBasis& mb, int site) {
    int best = 0;
    for (int k = 1; k < mb.size(); ++k)
        if (std::abs(mb.transform(site, k)) > std::abs(mb.transform(site, best))) best = k;
    return best;
}

BuiltModel random_quadratic(std::mt19937_64& rng, int m) {
    models::FreeChain fc;
    fc.sites = m;
    BuiltModel b = models::build_hamiltonian(ModelConfig{fc});
    b.quadratic.hopping = oracle::random_hermitian(m, rng);
    b.hamiltonian = models::quadratic_operator(b.quadratic);
    b.modes = models::single_particle_modes(b.quadratic);
    return b;
}

// (1 + ξ/E) / (1 − ξ/E) from the pair's 2×2 even-sector problem
double bogoliubov_ratio(double xi, double gap) {
    const double e = std::hypot(xi, gap);
    return (e + xi) / (e - xi);
}

Outcome noninteracting_nullity() {
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(1729);
    std::uniform_int_distribution<int> size(2, 10);
    double worst = 0.0;
    long pairs = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int m = size(rng);
        const auto b = random_quadratic(rng, m);
        const auto g = models::solve_ground(b);
        for (int k0 = 0; k0 < m; ++k0)
            for (int k1 = 0; k1 < m; ++k1) {
                if (k0 == k1) continue;
                for (auto c0 : {Character::particle, Character::hole})
                    for (auto c1 : {Character::particle, Character::hole}) {
                        const auto mo = probes::occupation_moments(g.ground.state, b.modes, k0, c0, k1, c1);
                        worst = std::max(worst, std::abs(mo.covariance));
                        ++pairs;
                    }
            }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-12 && secs < 10.0,
            fmt("50 models, %ld probe pairs, max |cov| = %.2e (< 1e-12), %.2f s (< 10 s)", pairs, worst, secs)};
}

Outcome pairing_toy_exactness() {
    const auto b = models::build_hamiltonian(ModelConfig{models::PairingToy{{{0.0, 1.0}}}});
    const auto g = models::solve_ground(b);
    const auto r = probes::mode_occupation_correlator(g.ground.state, b.modes, on_mode(0), on_mode(1));
    const double e1 = cone::entanglement_from_alpha(r.alpha).entanglement;
    const double da = std::abs(r.alpha - 1.0), de = std::abs(e1 - std::numbers::ln2);
    return {da < 1e-12 && de < 1e-12, fmt("|alpha - 1| = %.2e, |E1 - ln 2| = %.2e (< 1e-12)", da, de)};
}

Outcome bogoliubov_battery() {
    const std::vector<models::PairLevel> pairs{{0.3, 1.0}, {-0.6, 0.5}, {1.1, 0.8}, {0.0, 0.4}};
    const auto b = models::build_hamiltonian(ModelConfig{models::PairingToy{pairs}});
    const auto g = models::solve_ground(b);
    double worst = 0.0, cross = 0.0;
    for (int k = 0; k < 4; ++k) {
        const auto r = probes::mode_occupation_correlator(g.ground.state, b.modes,
                                                          on_mode(mode_of_site(b.modes, 2 * k)),
                                                          on_mode(mode_of_site(b.modes, 2 * k + 1)));
        worst = std::max(worst, std::abs(r.alpha - bogoliubov_ratio(pairs[k].xi, pairs[k].gap)));
    }
    for (int a = 0; a < 8; ++a)
        for (int c = 0; c < 8; ++c)
            if (a / 2 != c / 2)
                for (auto ca : {Character::particle, Character::hole})
                    for (auto cc : {Character::particle, Character::hole})
                        cross = std::max(cross, std::abs(probes::occupation_moments(g.ground.state, b.modes,
                                                                                    mode_of_site(b.modes, a), ca,
                                                                                    mode_of_site(b.modes, c), cc)
                                                             .covariance));
    return {worst < 1e-8 && cross < 1e-12,
            fmt("max |alpha - u^2/v^2| = %.2e (< 1e-8), max cross-pair |cov| = %.2e (< 1e-12)", worst, cross)};
}

Outcome proximity_peak() {
    const auto t0 = clock_type::now();
    const double gamma = 0.004, from = 0.1, to = 2.5;
    const int steps = 241;
    const double step = (to - from) / (steps - 1);

    // excitations of the removal sector that a site-0 probe can see
    const models::ProximityChain pc;
    const auto b = models::build_hamiltonian(ModelConfig{pc});
    const auto g = models::solve_ground(b);
    ProbeSpec p;
    p.energy = 1.0;
    const auto spec = probes::filter_spectra(b, g, p, p);
    const auto& removal = spec.by_sector.begin()->second;
    const auto c0g = fock::apply_operator(fock::SecondQuantizedOperator::annihilate(0), g.ground.state,
                                          removal.eigenvectors.front().basis_ptr());
    std::vector<double> levels;
    for (std::size_t m = 0; m < removal.size(); ++m) {
        const double e = removal.eigenvalues[m] - g.ground.energy;
        if (e < from + 5 * step || e > to - 5 * step) continue;
        if (std::norm(removal.eigenvectors[m].dot(c0g)) < 1e-3) continue;
        if (!levels.empty() && e - levels.back() < 2 * gamma) continue;
        levels.push_back(e);
    }

    int hits = 0;
    std::ostringstream peaks;
    for (double level : levels) {
        std::ostringstream y;
        y << "model: {preset: proximity_chain, params: {normal_sites: " << pc.normal_sites
          << ", sc_sites: " << pc.sc_sites << "}}\n"
          << "probes:\n"
          << "  - {energy: " << driver::format_number(-level) << ", width: " << gamma << ", site: 0}\n"
          << "  - {energy: " << from << ", width: " << gamma << ", site: 0}\n"
          << "flavor: filtered\n"
          << "sweep: {path: probes.1.energy, from: " << from << ", to: " << to << ", steps: " << steps << "}\n";
        const auto rows = driver::run(config::parse_run_config(y.str()));
        std::size_t best = 0;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].alpha && (!rows[best].alpha || std::abs(*rows[i].alpha) > std::abs(*rows[best].alpha))) best = i;
        const double target = level; // grid point nearest −ε₀
        std::size_t nearest = 0;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (std::abs(rows[i].eps1 - target) < std::abs(rows[nearest].eps1 - target)) nearest = i;
        const bool hit = best == nearest;
        hits += hit;
        peaks << " " << fmt("%.4f->%.2f%s", -level, rows[best].eps1, hit ? "" : "(miss)");
    }
    const double secs = seconds_since(t0);
    return {hits >= 3 && secs < 120.0,
            fmt("M = %d, gamma = %.3f, eps0 -> argmax eps1:%s; %d/%zu at the nearest grid point (>= 3), %.1f s (< 120 s)",
                b.mode_count, gamma, peaks.str().c_str(), hits, levels.size(), secs)};
}

Outcome closed_form_properties() {
    const double at1 = std::abs(cone::e1_closed_form(1.0) - std::numbers::ln2);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double sym = 0.0, gen = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double a = std::pow(10.0, u(rng));
        sym = std::max(sym, std::abs(cone::e1_closed_form(a) - cone::e1_closed_form(1.0 / a)));
        // two pure states with λ_g = (λ₀ + α λ₁)/(1 + α)
        const cone::StateFunctional l0{{1.0, 0.2}, "0"}, l1{{1.0, 0.9}, "1"};
        const cone::StateFunctional tg{{1.0, (0.2 + a * 0.9) / (1.0 + a)}, "g"};
        const auto r = cone::entanglement_general(tg, cone::ConeSpec{{l0, l1}});
        gen = std::max(gen, std::abs(r.entanglement - oracle::shannon({1.0 / (1.0 + a), a / (1.0 + a)})));
    }
    return {at1 < 1e-12 && sym < 1e-12 && gen < 1e-12,
            fmt("|E1(1) - ln 2| = %.2e, max |E1(a) - E1(1/a)| = %.2e, general vs closed form %.2e (< 1e-12)", at1, sym,
                gen)};
}

Outcome qd_formula() {
    const double e = models::qd_entanglement_formula({10, 0.01, 0.01, 0.0, 1.0}).entanglement;
    const double dev = std::abs(e - 7.9078e-3);
    bool mono = true;
    for (double spacing : {0.3, 1.0, 3.0}) {
        double prev = INFINITY;
        for (int n = 1; n <= 60; ++n) {
            const auto q = models::qd_entanglement_formula({n, 0.01, 0.01, 0.0, spacing});
            if (!q.valid) continue;
            mono = mono && q.entanglement < prev;
            prev = q.entanglement;
        }
    }
    for (int n : {1, 3, 10, 30}) {
        double prev = INFINITY;
        for (double spacing = 0.05; spacing < 20.0; spacing *= 1.1) {
            const auto q = models::qd_entanglement_formula({n, 0.01, 0.01, 0.0, spacing});
            if (!q.valid) continue;
            mono = mono && q.entanglement < prev;
            prev = q.entanglement;
        }
    }
    int agree = 0, total = 0, ties = 0;
    for (int n = 1; n <= 40; n += 3)
        for (double width = 0.002; width < 0.5; width *= 1.7)
            for (double spacing = 0.05; spacing < 5.0; spacing *= 1.6) {
                // on N Γ = Δ both sides are equalities and rounding decides
                if (std::abs(n * width / spacing - 1.0) < 1e-9) {
                    ++ties;
                    continue;
                }
                const auto q = models::qd_entanglement_formula({n, width, width, 0.0, spacing});
                const bool dominates = std::abs(q.alpha_int / q.alpha_nonint) > 1.0;
                const bool condition = (width + width) / (2.0 * spacing) < 1.0 / n;
                agree += dominates == condition;
                ++total;
            }
    return {dev < 1e-6 && mono && agree == total,
            fmt("E1 = %.7e (|dev| %.1e < 1e-6), monotone: %s, dominance matches condition %d/%d (%d boundary ties "
                "skipped)",
                e, dev, mono ? "yes" : "no", agree, total, ties)};
}

Outcome kernel_checks() {
    auto tabulate = [](auto s, double w, int points) {
        probes::SpectrumTable t;
        for (int i = 0; i < points; ++i) {
            const double x = -w + 2.0 * w * i / (points - 1);
            t.omega.push_back(x);
            t.value.push_back(s(x));
        }
        for (int i = 0; i < points / 2; ++i) t.omega[points - 1 - i] = -t.omega[i];
        t.omega[points / 2] = 0.0;
        return t;
    };
    const probes::KernelParams flat_k{0.2, 5.0};
    const double flat = std::abs(
        probes::alpha_from_spectrum(tabulate([](double) { return 3.0; }, 10.0, 401), 1.0, 1.0, flat_k).alpha);

    const double gamma = 0.4, tau = 1.0 / gamma, lam = gamma / 2.0, c = 1.3;
    auto s = [&](double w) { return 2.0 * lam * c / (w * w + lam * lam); };
    const double e = std::exp(-gamma * tau);
    auto integrand = [&](double w) {
        return (std::cos(w * tau) - e) / (1.0 - e) * gamma * gamma / (w * w + gamma * gamma) * s(w) /
               (2.0 * std::numbers::pi);
    };
    const double ref = oracle::trapezoid_full_line(integrand, gamma, 1'000'000);
    const double lor =
        std::abs(probes::alpha_from_spectrum(tabulate(s, 50.0 * gamma, 4001), 1.0, 1.0, {gamma, tau}).alpha / ref - 1.0);
    double norm = 0.0;
    for (double g : {0.01, 0.3, 2.0}) norm = std::max(norm, std::abs(probes::kernel_normalization(g) / (g / 2.0) - 1.0));
    return {flat < 1e-8 && lor < 1e-6 && norm < 1e-10,
            fmt("flat |alpha| = %.2e (< 1e-8), Lorentzian rel. dev. %.2e (< 1e-6), normalization rel. dev. %.2e (< 1e-10)",
                flat, lor, norm)};
}

Outcome perturbation_agreement() {
    models::InteractingChain ic;
    ic.sites = 6;
    ic.interaction = 0.01;
    const auto b = models::build_hamiltonian(ModelConfig{ic});
    const auto g = models::solve_ground(b);
    // hole probe on the highest occupied mode, particle probe on the lowest empty one
    const auto r = probes::mode_occupation_correlator(g.ground.state, b.modes, on_mode(2, Character::hole),
                                                      on_mode(3, Character::particle));
    const auto pt = models::perturbation_oracle(ic, 2, 3);
    if (!pt.alpha) return {false, "perturbation oracle has vanishing means"};
    const double rel = std::abs(r.alpha / *pt.alpha - 1.0);
    return {rel < 0.1, fmt("exact alpha = %.6g, first order = %.6g, rel. dev. %.3f (< 0.10)", r.alpha, *pt.alpha, rel)};
}

struct SuiteModel {
    std::string label;
    ModelConfig config;
};

std::vector<SuiteModel> model_suite() {
    std::vector<SuiteModel> s;
    models::FreeChain fc;
    fc.sites = 8;
    s.push_back({"free_chain(8)", fc});
    models::FreeChain charged = fc;
    charged.sites = 6;
    charged.charging = models::Charging{1.5, 3.0};
    s.push_back({"free_chain(6)+charging", charged});
    for (double v : {0.01, 0.5, 2.0}) {
        models::InteractingChain ic;
        ic.sites = 8;
        ic.interaction = v;
        s.push_back({fmt("interacting_chain(8, V=%g)", v), ic});
    }
    s.push_back({"pairing_toy(1 pair)", models::PairingToy{{{0.0, 1.0}}}});
    s.push_back({"pairing_toy(4 pairs)", models::PairingToy{{{0.3, 1.0}, {-0.6, 0.5}, {1.1, 0.8}, {0.0, 0.4}}}});
    s.push_back({"proximity_chain", models::ProximityChain{}});
    return s;
}

Outcome cone_state_identity() {
    double worst = 0.0, pauli = 0.0;
    long pairs = 0, skipped = 0, undefined = 0;
    for (const auto& m : model_suite()) {
        const auto b = models::build_hamiltonian(m.config);
        const auto g = models::solve_ground(b);
        const int n = b.modes.size();
        for (int k0 = 0; k0 < n; ++k0)
            for (int k1 = 0; k1 < n; ++k1) {
                if (k0 == k1) continue;
                for (auto c0 : {Character::particle, Character::hole})
                    for (auto c1 : {Character::particle, Character::hole}) {
                        const auto mo = probes::occupation_moments(g.ground.state, b.modes, k0, c0, k1, c1);
                        if (mo.mean0 < 1e-8 || mo.mean1 < 1e-8) {
                            ++skipped;
                            continue;
                        }
                        const auto p0 = on_mode(k0, c0), p1 = on_mode(k1, c1);
                        const auto cs = probes::cone_states(g.ground.state, b.modes, p0, p1);
                        const auto u = cone::decompose_unique(cs.ground, cs.first, cs.second);
                        const auto r = probes::mode_occupation_correlator(g.ground.state, b.modes, p0, p1);
                        worst = std::max(worst, std::abs(u.alpha - r.alpha) / std::max(1.0, std::abs(r.alpha)));
                        pauli = std::max(pauli, std::abs(cs.second.values[1]));
                        ++pairs;
                    }
            }
        for (int k = 0; k < n; ++k)
            for (auto c : {Character::particle, Character::hole}) {
                try {
                    pauli = std::max(pauli, std::abs(probes::pauli_check(g.ground.state, b.modes, on_mode(k, c))));
                } catch (const NumericalError&) {
                    ++undefined; // f|g> = 0, e.g. draining an empty mode
                }
            }
    }
    return {worst < 1e-12 && pauli < 1e-14,
            fmt("%zu models, %ld probe pairs (%ld with a vanishing mean skipped): max |dalpha|/max(1,|alpha|) = %.2e "
                "(< 1e-12), max |lambda1(A1)| = %.2e (< 1e-14, %ld single-probe states undefined)",
                model_suite().size(), pairs, skipped, worst, pauli, undefined)};
}

Outcome solver_integrity() {
    auto suite = model_suite();
    models::FreeChain big;
    big.sites = 12;
    suite.push_back({"free_chain(12)", big});
    models::InteractingChain ibig;
    ibig.sites = 12;
    ibig.interaction = 1.0;
    suite.push_back({"interacting_chain(12)", ibig});
    double agree = 0.0, resid = 0.0;
    int sectors = 0;
    for (const auto& m : suite) {
        const auto b = models::build_hamiltonian(m.config);
        for (const auto& s : b.candidate_sectors) {
            const auto basis = fock::make_basis(b.mode_count, s);
            if (basis->size() > 4096 || basis->size() == 0) continue;
            spectra::SolverOptions dense, lanczos;
            dense.path = spectra::SolverPath::dense;
            lanczos.path = spectra::SolverPath::lanczos;
            dense.allow_degenerate = lanczos.allow_degenerate = true;
            const auto a = spectra::ground_state(b.hamiltonian, basis, dense);
            const auto l = spectra::ground_state(b.hamiltonian, basis, lanczos);
            const auto h = fock::materialize_sparse(b.hamiltonian, *basis);
            agree = std::max(agree, std::abs(a.energy - l.energy));
            resid = std::max({resid, spectra::residual(h, a.state, a.energy), spectra::residual(h, l.state, l.energy)});
            ++sectors;
        }
    }
    return {agree < 1e-9 && resid < 1e-10,
            fmt("%d sectors over %zu models: max |E_lanczos - E_dense| = %.2e (< 1e-9), max residual %.2e (< 1e-10)",
                sectors, suite.size(), agree, resid)};
}

Outcome cone_oracle() {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.0, 1.0);
    double worst = -INFINITY;
    int sets = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int d = trial % 2 == 0 ? 2 : 3;
        const int m = d == 2 ? 3 + trial % 4 / 2 : 3 + (trial / 2) % 3;
        cone::ConeSpec spec;
        Eigen::MatrixXd a(d, m);
        for (int j = 0; j < m; ++j) {
            std::vector<double> v{1.0};
            for (int i = 1; i < d; ++i) v.push_back(u(rng));
            spec.pure.push_back({v, "p" + std::to_string(j)});
            for (int i = 0; i < d; ++i) a(i, j) = v[static_cast<std::size_t>(i)];
        }
        std::vector<double> p(static_cast<std::size_t>(m));
        double s = 0.0;
        for (auto& x : p) s += (x = w(rng));
        Eigen::VectorXd t = Eigen::VectorXd::Zero(d);
        for (int j = 0; j < m; ++j) t += (p[static_cast<std::size_t>(j)] / s) * a.col(j);
        const auto r = cone::entanglement_general({{t.data(), t.data() + d}, "t"}, spec);
        const double grid = oracle::grid_min_entropy(a, t, 1e-3);
        worst = std::max(worst, r.entanglement - grid);
        ++sets;
    }
    return {worst <= 1e-6, fmt("%d sets: max (vertex min - grid min) = %.2e (<= 1e-6)", sets, worst)};
}

} // namespace

int main() {
    const auto t0 = clock_type::now();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 noninteracting nullity", noninteracting_nullity},
        {"2 pairing toy exactness", pairing_toy_exactness},
        {"3 Bogoliubov battery", bogoliubov_battery},
        {"4 proximity peak", proximity_peak},
        {"5 closed-form properties", closed_form_properties},
        {"6 quantum-dot formula", qd_formula},
        {"7 spectrum kernel", kernel_checks},
        {"8 perturbation agreement", perturbation_agreement},
        {"9 cone-state identity", cone_state_identity},
        {"10 solver integrity", solver_integrity},
        {"11 cone-solver oracle", cone_oracle},
    };
    bool all = true;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        all = all && o.pass;
        std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }

    const auto report = verify::run(verify::Options{});
    const bool verify_ok = report.passed() && report.seconds < 300.0;
    all = all && verify_ok;
    std::printf("%s  verify suite: %zu checks, %s, %.2f s (< 300 s)\n", verify_ok ? "PASS" : "FAIL",
                report.checks.size(), report.passed() ? "all passed" : "failures", report.seconds);

    const double total = seconds_since(t0);
    const bool fast = total < 300.0;
    all = all && fast;
    std::printf("%s  total runtime: %.1f s (< 300 s)\n", fast ? "PASS" : "FAIL", total);
    return all ? 0 : 1;
}
