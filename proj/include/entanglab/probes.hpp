#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entanglab/cone.hpp"
#include "entanglab/fock.hpp"
#include "entanglab/models.hpp"
#include "entanglab/spectra.hpp"

namespace entanglab::probes {

using fock::FockVector;
using models::Character;
using models::CouplingTarget;
using models::ModeBasis;

/// One detector. Particle probes remove an electron (f = ψ, m = n); hole
/// probes inject one (f = ψ†, m = 1 − n). Energies are relative to μ.
struct ProbeSpec {
    double energy = 0.0;
    Character character = Character::particle;
    double width = 0.05; // γ
    int site = 0;
    std::optional<int> mode; // explicit eigenmode, bypasses energy selection
    double coupling = 0.02;  // v′, probe-level flavor only
    CouplingTarget target = CouplingTarget::site;

    void validate() const;
    // Sign of ε inconsistent with the character.
    std::vector<std::string> warnings() const;
};

enum class Flavor { mode, filtered, probe_level };

std::string to_string(Flavor f);
Flavor parse_flavor(const std::string& s);
std::string to_string(Character c);

struct AlphaResult {
    double alpha = 0.0;
    double mean0 = 0.0;
    double mean1 = 0.0;
    double cross = 0.0;
    double covariance = 0.0;
    Flavor flavor = Flavor::mode;
    std::vector<std::string> diagnostics;
    bool negative = false; // α < 0 is returned as-is
    bool flagged = false;  // probe-level extrapolation did not settle
    std::optional<double> extrapolated;
    std::vector<double> couplings; // v′ sequence (probe-level)
    std::vector<double> sequence;  // α at each v′
};

// Index of the mode nearest to ε.
int select_mode(const ModeBasis& basis, double energy, double tol);
int resolve_mode(const ModeBasis& basis, const ProbeSpec& probe);

struct Moments {
    double mean0 = 0.0;
    double mean1 = 0.0;
    double cross = 0.0;
    double covariance = 0.0;
};

// Occupation moments of m₀, m₁ on eigenmodes k₀ ≠ k₁; never throws on
// vanishing means.
Moments occupation_moments(const FockVector& g, const ModeBasis& basis, int k0, Character c0, int k1,
                           Character c1);

AlphaResult mode_occupation_correlator(const FockVector& g, const ModeBasis& basis, const ProbeSpec& p0,
                                       const ProbeSpec& p1);

struct ConeStates {
    cone::StateFunctional ground; // λ_g
    cone::StateFunctional first;  // λ₀
    cone::StateFunctional second; // λ₁
};

ConeStates cone_states(const FockVector& g, const ModeBasis& basis, const ProbeSpec& p0, const ProbeSpec& p1,
                       fock::LadderRule rule = fock::apply_ladder);

// ⟨m⟩ in the normalized state f|g⟩ for a single probe; zero for fermions.
double pauli_check(const FockVector& g, const ModeBasis& basis, const ProbeSpec& probe,
                   fock::LadderRule rule = fock::apply_ladder);

/// Eigenpairs of the sectors reached from the ground state by one removal or
/// addition.
struct SectorSpectra {
    std::map<fock::Sector, spectra::SpectrumResult> by_sector;
};

SectorSpectra filter_spectra(const models::BuiltModel& model, const models::ModelGround& ground,
                             const ProbeSpec& p0, const ProbeSpec& p1, const spectra::SolverOptions& options = {});

AlphaResult filtered_correlator(const models::ModelGround& ground, const SectorSpectra& spectra,
                                const models::BuiltModel& model, const ProbeSpec& p0, const ProbeSpec& p1);

// α at v′, v′/2, v′/4 on the enlarged system, with v′ → 0 extrapolation.
AlphaResult probe_level_correlator(const models::InnerConfig& inner, const ProbeSpec& p0, const ProbeSpec& p1,
                                   const spectra::SolverOptions& options = {});

} // namespace entanglab::probes
