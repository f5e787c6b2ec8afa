#include "driftsim/windfield.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <random>

#include "driftsim/log.hpp"

namespace driftsim::wind {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Normalization constant of D(theta) = C cos^(2s)(theta/2) over (-pi, pi]:
// integral cos^(2s)(theta/2) dtheta = 2 sqrt(pi) Gamma(s + 1/2) / Gamma(s + 1).
double spreading_norm(double s) {
    return 1.0 / (2.0 * std::sqrt(kPi) * std::tgamma(s + 0.5) / std::tgamma(s + 1.0));
}

// Even-symmetrized spreading (real fields require an even 2D spectrum).
double spreading(double theta, double s, double norm) {
    const double a = std::pow(std::abs(std::cos(theta / 2.0)), 2.0 * s);
    const double b = std::pow(std::abs(std::sin(theta / 2.0)), 2.0 * s);
    return norm * 0.5 * (a + b);
}

// 2D spectrum S2(k) such that the ring integral over angle recovers the
// 1D Von Karman curve: S2(Omega, theta) = Phi(Omega) D(theta) / Omega.
double spectrum2d(const TurbulenceParams& p, double kx, double ky, double norm) {
    const double omega = std::hypot(kx, ky);
    if (omega <= 0.0) return 0.0;
    const double theta = std::atan2(ky, kx);
    return von_karman_psd(p.sigma, p.L, omega) * spreading(theta, p.spreading_exponent, norm) /
           omega;
}

// Fills one component grid from a deterministic Gaussian draw stream.
std::vector<double> synthesize_component(const TurbulenceParams& p, std::mt19937_64& rng) {
    const int n = p.grid_size;
    const double d_omega = 2.0 * kPi / (n * p.cell);
    const double norm = spreading_norm(p.spreading_exponent);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<std::complex<double>> spec(static_cast<std::size_t>(n) * n,
                                           std::complex<double>(0.0, 0.0));
    auto wrap = [n](int i) { return i <= n / 2 ? i : i - n; };
    auto idx = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };

    // Hermitian-symmetric complex Gaussian amplitudes scaled by sqrt(S2);
    // draw order is row-major over canonical (lexicographically smaller) cells.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int ic = (n - i) % n;
            const int jc = (n - j) % n;
            const bool self_conjugate = (ic == i && jc == j);
            const bool canonical = self_conjugate || (i < ic) || (i == ic && j < jc);
            if (!canonical) continue;

            const double kx = d_omega * wrap(i);
            const double ky = d_omega * wrap(j);
            const double s2 = spectrum2d(p, kx, ky, norm);
            const double amp = n * static_cast<double>(n) * d_omega * std::sqrt(s2);

            if (self_conjugate) {
                spec[idx(i, j)] = amp * gauss(rng);  // DC cell has s2 = 0
            } else {
                const double re = gauss(rng) / std::sqrt(2.0);
                const double im = gauss(rng) / std::sqrt(2.0);
                spec[idx(i, j)] = amp * std::complex<double>(re, im);
                spec[idx(ic, jc)] = std::conj(spec[idx(i, j)]);
            }
        }
    }

    std::vector<std::complex<double>> out(spec.size());
    fftw_plan plan = fftw_plan_dft_2d(
        n, n, reinterpret_cast<fftw_complex*>(spec.data()),
        reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    std::vector<double> field(spec.size());
    const double scale = 1.0 / (static_cast<double>(n) * n);
    for (std::size_t k = 0; k < out.size(); ++k) field[k] = out[k].real() * scale;
    return field;
}

}  // namespace

double von_karman_psd(double sigma, double L, double omega) {
    const double x = 1.339 * L * omega;
    return sigma * sigma * (2.0 * L / kPi) / std::pow(1.0 + x * x, 5.0 / 6.0);
}

Vec2 TurbulenceGrid::sample_periodic(const Vec2& q) const {
    const double gx = q.x() / cell;
    const double gy = q.y() / cell;
    const double fx = gx - std::floor(gx);
    const double fy = gy - std::floor(gy);
    const auto mod = [this](double g) {
        const int i = static_cast<int>(std::floor(g));
        const int m = i % n;
        return m < 0 ? m + n : m;
    };
    const int i0 = mod(gx);
    const int j0 = mod(gy);
    const int i1 = (i0 + 1) % n;
    const int j1 = (j0 + 1) % n;
    const auto idx = [this](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
    const auto bilerp = [&](const std::vector<double>& f) {
        const double a = f[idx(i0, j0)] * (1.0 - fx) + f[idx(i1, j0)] * fx;
        const double b = f[idx(i0, j1)] * (1.0 - fx) + f[idx(i1, j1)] * fx;
        return a * (1.0 - fy) + b * fy;
    };
    return {bilerp(u), bilerp(v)};
}

TurbulenceGrid synthesize_turbulence(const TurbulenceParams& params) {
    if (!is_power_of_two(params.grid_size))
        throw InvalidGridError("turbulence grid_size must be a power of two, got " +
                               std::to_string(params.grid_size));
    TurbulenceGrid grid;
    grid.n = params.grid_size;
    grid.cell = params.cell;
    if (params.sigma == 0.0) {
        grid.u.assign(static_cast<std::size_t>(grid.n) * grid.n, 0.0);
        grid.v.assign(static_cast<std::size_t>(grid.n) * grid.n, 0.0);
        return grid;
    }
    std::mt19937_64 rng(params.seed);
    grid.u = synthesize_component(params, rng);
    grid.v = synthesize_component(params, rng);
    log::debug("synthesized %dx%d turbulence grid, sigma=%.3f L=%.1f seed=%llu", grid.n, grid.n,
               params.sigma, params.L, static_cast<unsigned long long>(params.seed));
    return grid;
}

Vec2 gust_profile(const GustEvent& event, const Vec2& p, double t) {
    double t_arrival = event.t_start;
    if (event.propagation_speed > 0.0)
        t_arrival += (p - event.origin).dot(event.direction) / event.propagation_speed;
    const double tau = t - t_arrival;
    if (tau < 0.0 || tau > event.duration) return Vec2::Zero();
    const double envelope = 0.5 * (1.0 - std::cos(2.0 * kPi * tau / event.duration));
    return event.amplitude * envelope * event.direction;
}

WindField WindField::create(const Vec2& mean, std::optional<TurbulenceParams> turbulence,
                            std::vector<GustEvent> gusts, std::vector<MaskRect> masks) {
    WindField field;
    field.mean = mean;
    field.turbulence = turbulence;
    field.gusts = std::move(gusts);
    field.mask_regions = std::move(masks);
    if (turbulence) field.grid = synthesize_turbulence(*turbulence);
    return field;
}

Vec2 WindField::sample(const Vec2& p, double t) const { return sample_wind(*this, p, t); }

Vec2 sample_wind(const WindField& field, const Vec2& p, double t) {
    for (const auto& mask : field.mask_regions)
        if (mask.contains(p)) return Vec2::Zero();

    Vec2 w = field.mean;
    if (!field.grid.empty()) {
        const Vec2 advected = p - field.mean * t;  // frozen field carried with the mean flow
        w += field.grid.sample_periodic(advected);
    }
    for (const auto& gust : field.gusts) w += gust_profile(gust, p, t);
    return w;
}

void dump_grid_csv(const WindField& field, std::ostream& out) {
    out << "x,y,u,v\n";
    const auto& g = field.grid;
    if (g.empty()) return;
    char line[128];
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * g.n + j;
            std::snprintf(line, sizeof(line), "%.6f,%.6f,%.9f,%.9f\n", i * g.cell, j * g.cell,
                          g.u[k], g.v[k]);
            out << line;
        }
    }
}

}  // namespace driftsim::wind
