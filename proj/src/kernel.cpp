#include "entanglab/kernel.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "entanglab/error.hpp"

namespace entanglab::probes {

namespace {

using boost::math::quadrature::gauss_kronrod;
constexpr double pi = std::numbers::pi;

double gk(const auto& f, double a, double b) {
    return gauss_kronrod<double, 15>::integrate(f, a, b, 6, 1e-11);
}

// Natural cubic spline through (x_i, y_i).
class Spline {
public:
    Spline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        m_.assign(n, 0.0);
        if (n < 3) return;
        // Thomas algorithm for the second derivatives; m_0 = m_{n-1} = 0.
        std::vector<double> c(n, 0.0), d(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
            const double r = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
            const double denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
    }

    // Value on cell i at x in [x_i, x_{i+1}].
    double operator()(std::size_t i, double x) const {
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
        return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    }

    std::size_t cells() const { return x_.size() - 1; }
    double left(std::size_t i) const { return x_[i]; }
    double right(std::size_t i) const { return x_[i + 1]; }

private:
    std::vector<double> x_, y_, m_;
};

struct Integrals {
    double re = 0.0;
    double im = 0.0;
};

Integrals integrate_grid(const std::vector<double>& x, const std::vector<double>& y, const KernelParams& k) {
    const Spline s(x, y);
    const double e = std::exp(-k.gamma * k.tau);
    const double g2 = k.gamma * k.gamma;
    Integrals out;
    for (std::size_t i = 0; i < s.cells(); ++i) {
        auto lor = [&](double w) { return g2 / (w * w + g2) / (1.0 - e); };
        out.re += gk([&](double w) { return (std::cos(w * k.tau) - e) * lor(w) * s(i, w); }, s.left(i), s.right(i));
        out.im += gk([&](double w) { return -std::sin(w * k.tau) * lor(w) * s(i, w); }, s.left(i), s.right(i));
    }
    return out;
}

// π/2 − Si(x) = f(x) cos x + g(x) sin x for x > 0, with the auxiliary
// functions as Laplace integrals.
double si_complement(double x) {
    boost::math::quadrature::exp_sinh<double> q;
    const double f = q.integrate([x](double t) { return std::exp(-x * t) / (1.0 + t * t); });
    const double g = q.integrate([x](double t) { return t * std::exp(-x * t) / (1.0 + t * t); });
    return f * std::cos(x) + g * std::sin(x);
}

// ∫_0^W cos(ωτ)/(ω²+γ²) dω, split at half periods.
double cos_lorentz_to(double w, const KernelParams& k) {
    const double step = pi / k.tau;
    double s = 0.0;
    for (double a = 0.0; a < w; a += step) {
        const double b = std::min(w, a + step);
        s += gk([&](double x) { return std::cos(x * k.tau) / (x * x + k.gamma * k.gamma); }, a, b);
    }
    return s;
}

// Both tails, |ω| > W, for S = A + B/ω².
double tail_integral(double a_coef, double b_coef, double w, const KernelParams& k) {
    const double g = k.gamma, t = k.tau;
    const double e = std::exp(-g * t);
    const double p1 = 1.0 / w;
    const double p2 = (pi / 2.0 - std::atan(w / g)) / g;
    const double c2 = pi / (2.0 * g) * e - cos_lorentz_to(w, k);
    const double c1 = std::cos(w * t) / w - t * si_complement(w * t);
    const double tail_a = g * g * (c2 - e * p2) / (1.0 - e);
    const double tail_b = ((c1 - c2) - e * (p1 - p2)) / (1.0 - e);
    return 2.0 * (a_coef * tail_a + b_coef * tail_b);
}

} // namespace

void KernelParams::validate() const {
    if (!(gamma > 0.0) || !(tau > 0.0)) throw ConfigError("kernel needs gamma > 0 and tau > 0");
    const double gt = gamma * tau;
    if (!(gt > 1e-6 && gt < 1e3)) throw ConfigError("gamma*tau outside (1e-6, 1e3)");
}

SpectrumTable read_spectrum_table(std::istream& in) {
    SpectrumTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        double w, s;
        std::string rest;
        if (!(ls >> w >> s) || ((ls >> rest) && rest.front() != '#'))
            throw ConfigError("spectrum table line " + std::to_string(lineno) + ": expected two numbers");
        if (!std::isfinite(w) || !std::isfinite(s))
            throw ConfigError("spectrum table line " + std::to_string(lineno) + ": non-finite value");
        if (!t.omega.empty() && w <= t.omega.back())
            throw ConfigError("spectrum table line " + std::to_string(lineno) + ": omega not strictly increasing");
        t.omega.push_back(w);
        t.value.push_back(s);
    }
    return t;
}

SpectrumTable read_spectrum_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spectrum file " + path.string());
    return read_spectrum_table(in);
}

KernelResult alpha_from_spectrum(const SpectrumTable& table, double mean0, double mean1, const KernelParams& k,
                                 double tolerance) {
    k.validate();
    const std::size_t n = table.omega.size();
    if (n < 5 || table.value.size() != n) throw ConfigError("spectrum table needs at least 5 points");
    if (mean0 == 0.0 || mean1 == 0.0) throw ConfigError("kernel needs nonzero means");
    const double wmax = table.omega.back();
    double smax = 0.0;
    for (double s : table.value) smax = std::max(smax, std::abs(s));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = n - 1 - i;
        if (std::abs(table.omega[i] + table.omega[j]) > 1e-12 * wmax)
            throw ConfigError("spectrum grid is not symmetric in omega");
        if (std::abs(table.value[i] - table.value[j]) > 1e-12 * smax)
            throw ConfigError("spectrum is not even in omega (asymmetric input rejected)");
    }
    if (wmax < 50.0 * k.gamma * (1.0 - 1e-12)) throw ConfigError("spectrum grid must cover |omega| <= 50 gamma");

    const double norm = 2.0 * pi * mean0 * mean1;
    const Integrals full = integrate_grid(table.omega, table.value, k);

    std::vector<double> hx, hy;
    for (std::size_t i = 0; i < n; i += 2) {
        hx.push_back(table.omega[i]);
        hy.push_back(table.value[i]);
    }
    if (hx.back() != table.omega.back()) {
        hx.push_back(table.omega.back());
        hy.push_back(table.value.back());
    }
    const Integrals half = integrate_grid(hx, hy, k);

    // S ≈ A + B/ω² beyond the grid
    const double w1 = table.omega[n - 2], w2 = table.omega[n - 1];
    const double s1 = table.value[n - 2], s2 = table.value[n - 1];
    const double b = (s1 - s2) / (1.0 / (w1 * w1) - 1.0 / (w2 * w2));
    const double a = s2 - b / (w2 * w2);
    const double tail = (a == 0.0 && b == 0.0) ? 0.0 : tail_integral(a, b, w2, k);

    KernelResult r;
    r.alpha = (full.re + tail) / norm;
    r.tail = tail / norm;
    r.error_estimate = std::abs(full.re - half.re) / 15.0 / std::abs(norm);
    r.imaginary_residue = std::abs(full.im / norm);
    if (r.error_estimate > tolerance * std::max(1.0, std::abs(r.alpha))) {
        double h = 0.0;
        for (std::size_t i = 1; i < n; ++i) h = std::max(h, table.omega[i] - table.omega[i - 1]);
        const double suggested = h * std::pow(tolerance / r.error_estimate, 0.25) * 0.8;
        std::ostringstream os;
        os << "grid too coarse: estimated quadrature error " << r.error_estimate << " exceeds " << tolerance
           << "; refine the omega spacing to about " << suggested;
        throw NumericalError(os.str());
    }
    if (r.imaginary_residue >= 1e-8 * std::abs(r.alpha) + 1e-12)
        throw NumericalError("imaginary residue " + std::to_string(r.imaginary_residue) + " too large");
    return r;
}

double kernel_normalization(double gamma, int grid_points) {
    if (!(gamma > 0.0) || grid_points < 3) throw ConfigError("kernel_normalization needs gamma > 0");
    const double w = 50.0 * gamma;
    const double g2 = gamma * gamma;
    double s = 0.0;
    for (int i = 0; i + 1 < grid_points; ++i) {
        const double a = -w + 2.0 * w * i / (grid_points - 1), b = -w + 2.0 * w * (i + 1) / (grid_points - 1);
        s += gk([&](double x) { return g2 / (x * x + g2); }, a, b);
    }
    s += 2.0 * g2 * (pi / 2.0 - std::atan(w / gamma)) / gamma;
    return s / (2.0 * pi);
}

} // namespace entanglab::probes
