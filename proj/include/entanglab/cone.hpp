#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace entanglab::cone {

/// Expectation values (λ(A₀), λ(A₁), …) of a state on the observable set;
/// λ(A₀) = 1 by normalization.
struct StateFunctional {
    std::vector<double> values;
    std::string label;

    std::size_t dimension() const { return values.size(); }
    void validate() const;
};

struct ConeSpec {
    std::vector<StateFunctional> pure;
};

enum class Status { ok, target_pure, infeasible, negative_alpha };

std::string to_string(Status s);

struct EntanglementReport {
    double entanglement = 0.0; // nats
    std::vector<double> weights; // one per pure state
    std::vector<int> support;
    bool unique = true;
    std::optional<double> alpha;
    Status status = Status::ok;
};

// −Σ p ln p with 0 ln 0 = 0.
double shannon_entropy(std::span<const double> weights);

// Entropy of the weights (1/(1+α), α/(1+α)).
double e1_closed_form(double alpha);

struct UniqueDecomposition {
    double alpha = 0.0;
    std::optional<std::array<double, 2>> weights; // empty for negative α
    Status status = Status::ok;
};

// λ_g = (λ₀ + α λ₁)/(1 + α) read off from the A₁ component.
UniqueDecomposition decompose_unique(const StateFunctional& g, const StateFunctional& l0,
                                     const StateFunctional& l1);

// Infimum of the weight entropy over all decompositions of `target` into
// the cone's pure states. The feasible set is a polytope and the entropy is
// concave, so the minimum sits on a vertex; every vertex is enumerated.
EntanglementReport entanglement_general(const StateFunctional& target, const ConeSpec& cone, int threads = 1);

// Two-element shortcut: closed form plus the weights.
EntanglementReport entanglement_from_alpha(double alpha);

bool purity_check(const StateFunctional& lambda, const ConeSpec& cone);

inline constexpr double feasibility_tol = 1e-9;

} // namespace entanglab::cone
