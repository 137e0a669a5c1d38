#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "entanglab/fock.hpp"
#include "entanglab/spectra.hpp"

namespace entanglab::models {

using fock::SecondQuantizedOperator;
using fock::Sector;

/// Number-conserving hopping h plus optional antisymmetric pairing; the
/// Hamiltonian is Σ h_ij c†_i c_j − μ N̂ + Σ_{i<j} (Δ_ij c†_i c†_j + h.c.).
struct QuadraticModel {
    Eigen::MatrixXcd hopping;
    Eigen::MatrixXcd pairing; // empty or M×M antisymmetric
    double chemical_potential = 0.0;

    int mode_count() const { return static_cast<int>(hopping.rows()); }
    bool has_pairing() const;
    void validate() const;
};

struct DensityDensity {
    int i;
    int j;
    double strength;
};

struct Charging {
    double energy; // E_c
    double offset; // N0
};

struct InteractionSpec {
    std::vector<DensityDensity> density_density;
    std::optional<Charging> charging;

    bool empty() const { return density_density.empty() && !charging; }
};

/// Single-particle eigenmodes of the hopping matrix. Column k of `transform`
/// is mode k in the site basis: ψ†_k = Σ_i U_ik c†_i.
struct ModeBasis {
    Eigen::MatrixXcd transform;
    std::vector<double> energies; // ascending
    int fermi_index = 0;          // modes with energy < μ
    double chemical_potential = 0.0;
    bool degenerate = false;      // some levels coincide within 1e-10

    int size() const { return static_cast<int>(energies.size()); }
    SecondQuantizedOperator creation(int k) const;
    SecondQuantizedOperator annihilation(int k) const;
    SecondQuantizedOperator number(int k) const;
};

ModeBasis single_particle_modes(const QuadraticModel& q);

// ---------------------------------------------------------------- presets

struct FreeChain {
    int sites = 4;
    double hopping = 1.0;
    std::optional<int> filling; // defaults to sites / 2
    double chemical_potential = 0.0;
    std::optional<Charging> charging;
};

struct InteractingChain {
    int sites = 6;
    double hopping = 1.0;
    double interaction = 0.5; // V on nearest-neighbour bonds
    std::optional<int> filling;
};

struct PairLevel {
    double xi;  // ξ_k, shared by modes 2k and 2k+1
    double gap; // Δ_k
};

struct PairingToy {
    std::vector<PairLevel> pairs;
};

/// Spin-1/2 chain: normal segment on sites [0, normal_sites), s-wave
/// superconducting segment after it, μ = 0. Site i holds modes 2i (up) and
/// 2i+1 (down). The interface bond carries hopping t·√T.
struct ProximityChain {
    int normal_sites = 2;
    int sc_sites = 3;
    double hopping = 1.0;
    double gap = 0.5;
    double transmission = 0.1;
};

enum class Character { particle, hole };

enum class CouplingTarget { site, eigenmode };

/// A resonant level d_j: energy ε_j, tunnelling v′_j to the system.
struct ProbeLevel {
    double energy = 0.0;
    double coupling = 0.02;
    int site = 0;
    Character character = Character::particle;
    CouplingTarget target = CouplingTarget::site;
    // Eigenmode index for CouplingTarget::eigenmode.
    std::optional<int> mode;
};

using InnerConfig = std::variant<FreeChain, InteractingChain, PairingToy, ProximityChain>;

struct ProbeCoupled {
    InnerConfig inner;
    std::vector<ProbeLevel> probes;
};

using ModelConfig = std::variant<FreeChain, InteractingChain, PairingToy, ProximityChain, ProbeCoupled>;

std::string preset_name(const ModelConfig& config);

struct BuiltModel {
    SecondQuantizedOperator hamiltonian;
    QuadraticModel quadratic;
    InteractionSpec interaction;
    ModeBasis modes; // of the Δ = 0, interaction = 0 part
    int mode_count = 0;
    int system_modes = 0;
    std::vector<int> probe_modes; // appended after the system modes
    bool number_conserving = true;
    // Sectors that may hold the ground state; the solver picks the lowest.
    std::vector<Sector> candidate_sectors;
    std::string id;
};

inline constexpr int max_total_modes = 20;

BuiltModel build_hamiltonian(const ModelConfig& config);
BuiltModel build_hamiltonian(const InnerConfig& config);

SecondQuantizedOperator quadratic_operator(const QuadraticModel& q);
SecondQuantizedOperator interaction_operator(const InteractionSpec& spec, int modes);

struct ModelGround {
    spectra::GroundState ground;
    Sector sector = Sector::all();
};

// Ground state over the candidate sectors; throws on a cross-sector tie.
ModelGround solve_ground(const BuiltModel& model, const spectra::SolverOptions& options = {});

// ---------------------------------------------------------------- closed forms

struct BcsOracle {
    double u2;
    double v2;
    double alpha_pred; // u²/v²
};

BcsOracle bcs_uv_oracle(double xi, double gap);

struct QdFormulaInputs {
    int channels;       // N
    double width0;      // Γ₀
    double width1;      // Γ₁
    double energy0;     // ε₀
    double energy1;     // ε₁
};

struct QdFormulaResult {
    double entanglement;     // E₁
    double alpha_int;
    double alpha_nonint;
    double gamma_bar;
    bool valid;
};

QdFormulaResult qd_entanglement_formula(const QdFormulaInputs& in);

struct PerturbativeAlpha {
    std::optional<double> alpha; // empty when the means vanish
    double covariance = 0.0;
    double mean_hole = 0.0;
    double mean_particle = 0.0;
    double max_amplitude = 0.0;
    std::size_t excitations = 0;
};

// First-order Rayleigh-Schrodinger estimate of the occupation correlator for
// a hole probe on eigenmode `hole_mode` and a particle probe on
// `particle_mode`, with H_V treated as the perturbation.
PerturbativeAlpha perturbation_oracle(const InteractingChain& config, int hole_mode, int particle_mode);

} // namespace entanglab::models
