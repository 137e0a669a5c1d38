#include "entanglab/cone.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <Eigen/Dense>

#include "entanglab/error.hpp"

namespace entanglab::cone {

namespace {

struct Vertex {
    double entropy;
    std::vector<int> support;
    std::vector<double> weights;
};

bool same(const StateFunctional& a, const StateFunctional& b, double tol) {
    if (a.values.size() != b.values.size()) return false;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        if (std::abs(a.values[i] - b.values[i]) > tol) return false;
    return true;
}

// Calls f on every subset of {0..m-1} of size k in lexicographic order.
template <class F>
void for_each_subset(int m, int k, F&& f) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        f(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

std::optional<Vertex> solve_support(const Eigen::MatrixXd& a, const Eigen::VectorXd& t, const std::vector<int>& s) {
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(s.size()));
    for (std::size_t c = 0; c < s.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(s[c]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    qr.setThreshold(1e-12);
    if (qr.rank() < sub.cols()) return std::nullopt; // not a vertex
    const Eigen::VectorXd p = qr.solve(t);
    if ((sub * p - t).cwiseAbs().maxCoeff() > feasibility_tol) return std::nullopt;
    if (p.minCoeff() < -feasibility_tol) return std::nullopt;

    Vertex v;
    std::vector<double> w(static_cast<std::size_t>(a.cols()), 0.0);
    double sum = 0.0;
    for (std::size_t c = 0; c < s.size(); ++c) {
        const double x = std::max(0.0, p[static_cast<Eigen::Index>(c)]);
        w[static_cast<std::size_t>(s[c])] = x;
        sum += x;
    }
    for (auto& x : w) x /= sum;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 1e-12) v.support.push_back(static_cast<int>(i));
        else w[i] = 0.0;
    v.entropy = shannon_entropy(w);
    v.weights = std::move(w);
    return v;
}

} // namespace

void StateFunctional::validate() const {
    if (values.empty()) throw ConfigError("state functional '" + label + "' is empty");
    for (double x : values)
        if (!std::isfinite(x)) throw ConfigError("state functional '" + label + "' has a non-finite entry");
    if (std::abs(values.front() - 1.0) > 1e-10)
        throw ConfigError("state functional '" + label + "' is not normalized: lambda(A0) != 1");
}

std::string to_string(Status s) {
    switch (s) {
    case Status::ok: return "ok";
    case Status::target_pure: return "target_pure";
    case Status::infeasible: return "infeasible";
    case Status::negative_alpha: return "negative_alpha";
    }
    return "?";
}

double shannon_entropy(std::span<const double> weights) {
    double sum = 0.0, s = 0.0;
    for (double p : weights) {
        if (p < 0.0) throw ConfigError("negative weight");
        sum += p;
        if (p > 0.0) s -= p * std::log(p);
    }
    if (std::abs(sum - 1.0) > 1e-10) throw ConfigError("weights do not sum to 1");
    return s;
}

double e1_closed_form(double alpha) {
    if (!(alpha >= 0.0)) throw ConfigError("alpha outside closed-form domain (alpha < 0)");
    if (alpha == 0.0 || std::isinf(alpha)) return 0.0;
    // −p ln p − q ln q with p = α/(1+α), q = 1/(1+α)
    return std::log1p(alpha) - alpha * std::log(alpha) / (1.0 + alpha);
}

UniqueDecomposition decompose_unique(const StateFunctional& g, const StateFunctional& l0, const StateFunctional& l1) {
    for (const auto* f : {&g, &l0, &l1}) {
        f->validate();
        if (f->dimension() < 2) throw ConfigError("decomposition needs the A1 component");
    }
    if (std::abs(l1.values[1]) > 1e-10)
        throw NumericalError("contract violation: lambda1(A1) = " + std::to_string(l1.values[1]) + " != 0");
    if (g.values[1] <= 0.0) throw NumericalError("unnormalizable decomposition: lambda_g(A1) <= 0");
    UniqueDecomposition d;
    d.alpha = l0.values[1] / g.values[1] - 1.0;
    if (d.alpha < 0.0) {
        d.status = Status::negative_alpha;
        return d;
    }
    d.weights = std::array<double, 2>{1.0 / (1.0 + d.alpha), d.alpha / (1.0 + d.alpha)};
    return d;
}

EntanglementReport entanglement_from_alpha(double alpha) {
    EntanglementReport r;
    r.alpha = alpha;
    if (alpha < 0.0) {
        r.status = Status::negative_alpha;
        return r;
    }
    r.entanglement = e1_closed_form(alpha);
    r.weights = {1.0 / (1.0 + alpha), alpha / (1.0 + alpha)};
    for (int i = 0; i < 2; ++i)
        if (r.weights[static_cast<std::size_t>(i)] > 0.0) r.support.push_back(i);
    if (alpha == 0.0) r.status = Status::target_pure;
    return r;
}

EntanglementReport entanglement_general(const StateFunctional& target, const ConeSpec& cone, int threads) {
    if (cone.pure.empty()) throw ConfigError("cone has no pure states");
    target.validate();
    const auto dim = static_cast<Eigen::Index>(target.dimension());
    const auto m = static_cast<int>(cone.pure.size());
    Eigen::MatrixXd a(dim, m);
    for (int j = 0; j < m; ++j) {
        const auto& p = cone.pure[static_cast<std::size_t>(j)];
        p.validate();
        if (static_cast<Eigen::Index>(p.dimension()) != dim) throw ConfigError("pure state dimension mismatch");
        for (Eigen::Index i = 0; i < dim; ++i) a(i, j) = p.values[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (same(cone.pure[static_cast<std::size_t>(i)], cone.pure[static_cast<std::size_t>(j)], 1e-12))
                throw ConfigError("pure states must be pairwise distinct");
    const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(target.values.data(), dim);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    const int rank = static_cast<int>(qr.rank());

    std::vector<std::vector<int>> subsets;
    for (int k = 1; k <= rank; ++k) for_each_subset(m, k, [&](const std::vector<int>& s) { subsets.push_back(s); });

    const int workers = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(1, subsets.size())));
    std::vector<std::vector<Vertex>> found(static_cast<std::size_t>(workers));
    auto work = [&](int w) {
        for (std::size_t i = static_cast<std::size_t>(w); i < subsets.size(); i += static_cast<std::size_t>(workers))
            if (auto v = solve_support(a, t, subsets[i])) found[static_cast<std::size_t>(w)].push_back(std::move(*v));
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }

    std::vector<Vertex> all;
    for (auto& f : found)
        for (auto& v : f) all.push_back(std::move(v));
    EntanglementReport r;
    if (all.empty()) {
        r.status = Status::infeasible;
        return r;
    }
    // Order-independent reduction: lowest entropy, ties by lexicographic support.
    std::sort(all.begin(), all.end(), [](const Vertex& x, const Vertex& y) {
        if (x.entropy != y.entropy) return x.entropy < y.entropy;
        return x.support < y.support;
    });
    const Vertex& best = all.front();
    for (std::size_t i = 1; i < all.size(); ++i)
        if (all[i].entropy - best.entropy <= 1e-12 && all[i].support != best.support) {
            // Tie with a genuinely different decomposition; pick the
            // lexicographically smallest support among the tied set.
            r.unique = false;
        }
    const Vertex* pick = &best;
    for (const auto& v : all)
        if (v.entropy - best.entropy <= 1e-12 && v.support < pick->support) pick = &v;
    r.entanglement = pick->entropy;
    r.weights = pick->weights;
    r.support = pick->support;
    r.status = pick->support.size() == 1 ? Status::target_pure : Status::ok;
    return r;
}

bool purity_check(const StateFunctional& lambda, const ConeSpec& cone) {
    std::vector<const StateFunctional*> distinct;
    for (const auto& p : cone.pure)
        if (std::none_of(distinct.begin(), distinct.end(), [&](const StateFunctional* q) { return same(p, *q, 1e-10); }))
            distinct.push_back(&p);
    return std::any_of(distinct.begin(), distinct.end(), [&](const StateFunctional* q) { return same(lambda, *q, 1e-10); });
}

} // namespace entanglab::cone
