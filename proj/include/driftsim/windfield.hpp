// Spatio-temporal planar wind field: mean wind + frozen Von Karman turbulence
// advected with the mean flow (Taylor hypothesis) + deterministic gust events.
// Sampling is read-only and safe for concurrent queries.
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "driftsim/core.hpp"

namespace driftsim::wind {

struct TurbulenceParams {
    double sigma = 1.0;              // turbulence intensity, m/s
    double L = 50.0;                 // length scale, m
    int grid_size = 256;             // cells per side, power of two
    double cell = 2.0;               // m
    std::uint64_t seed = 0;
    double spreading_exponent = 2.0; // s in D(theta) ~ cos^(2s)(theta/2)
};

/// One traveling gust front. The temporal envelope at a point is
/// amplitude * (1 - cos(2 pi (t - t_arrival)/duration)) / 2 for
/// t_arrival <= t <= t_arrival + duration, zero otherwise, with
/// t_arrival = t_start + (distance from origin along direction)/propagation_speed.
struct GustEvent {
    double amplitude = 0.0;        // m/s
    Vec2 direction{1.0, 0.0};      // unit vector
    double t_start = 0.0;          // s
    double duration = 1.0;         // s
    Vec2 origin{0.0, 0.0};         // m
    double propagation_speed = 0.0;  // m/s; <= 0 means the front arrives everywhere at t_start
    double front_width = 0.0;        // m; stored for scenario configs, not used in the envelope
};

/// Axis-aligned rectangle where the wind is forced to zero (protected area).
struct MaskRect {
    Vec2 min{0.0, 0.0};
    Vec2 max{0.0, 0.0};

    bool contains(const Vec2& p) const {
        return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
    }
};

/// Frozen turbulence realization, two velocity components per cell.
struct TurbulenceGrid {
    int n = 0;
    double cell = 0.0;
    std::vector<double> u;  // n*n, row-major (ix * n + iy)
    std::vector<double> v;

    bool empty() const { return n == 0; }
    Vec2 sample_periodic(const Vec2& q) const;
};

/// Von Karman one-sided power spectral density,
/// sigma^2 (2L/pi) / (1 + (1.339 L Omega)^2)^(5/6).
double von_karman_psd(double sigma, double L, double omega);

/// Spectral synthesis of a zero-mean planar turbulence field whose radially
/// integrated PSD matches the Von Karman form shaped by the angular spreading
/// function D(theta) ~ cos^(2s)(theta/2) (normalized to unit integral and
/// even-symmetrized so the field is real). Both components are generated
/// independently from the same seed stream.
/// Throws InvalidGridError unless grid_size is a power of two.
TurbulenceGrid synthesize_turbulence(const TurbulenceParams& params);

/// Gust contribution at (p, t); zero outside the envelope support.
Vec2 gust_profile(const GustEvent& event, const Vec2& p, double t);

struct WindField {
    Vec2 mean{0.0, 0.0};
    std::optional<TurbulenceParams> turbulence;
    TurbulenceGrid grid;  // empty unless turbulence is set
    std::vector<GustEvent> gusts;
    std::vector<MaskRect> mask_regions;

    /// Builds the field, synthesizing the turbulence grid when configured.
    static WindField create(const Vec2& mean, std::optional<TurbulenceParams> turbulence,
                            std::vector<GustEvent> gusts, std::vector<MaskRect> masks);

    Vec2 sample(const Vec2& p, double t) const;
};

/// Mean + advected turbulence + gusts; exactly (0,0) inside any mask region.
Vec2 sample_wind(const WindField& field, const Vec2& p, double t);

/// Writes the turbulence grid as "x,y,u,v" rows.
void dump_grid_csv(const WindField& field, std::ostream& out);

}  // namespace driftsim::wind
