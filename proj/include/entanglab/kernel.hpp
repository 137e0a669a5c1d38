#pragma once

#include <filesystem>
#include <istream>
#include <vector>

namespace entanglab::probes {

struct KernelParams {
    double gamma = 1.0;
    double tau = 1.0;

    void validate() const; // γ > 0, τ > 0, γτ in (1e-6, 1e3)
};

/// Symmetrized cross-correlation spectrum S(ω) on a strictly increasing grid.
struct SpectrumTable {
    std::vector<double> omega;
    std::vector<double> value;
};

// Two numeric columns (ω, S); blank lines and lines starting with '#' are skipped.
SpectrumTable read_spectrum_table(std::istream& in);
SpectrumTable read_spectrum_table(const std::filesystem::path& path);

struct KernelResult {
    double alpha = 0.0;
    double error_estimate = 0.0;    // on α, grid vs half-grid
    double imaginary_residue = 0.0; // on α
    double tail = 0.0;              // contribution beyond the grid, on α
};

// α = ∫ dω/2π K(ω) S(ω) / (mean₀ mean₁) with the resonant-level kernel K.
// The table must be symmetric in ω, even in S, and reach |ω| ≥ 50γ. Beyond
// the grid S is continued as A + B/ω² fitted to the last two points.
KernelResult alpha_from_spectrum(const SpectrumTable& table, double mean0, double mean1, const KernelParams& k,
                                 double tolerance = 1e-7);

// ∫ dω/2π γ²/(ω²+γ²) by the same quadrature; equals γ/2.
double kernel_normalization(double gamma, int grid_points = 2001);

} // namespace entanglab::probes
