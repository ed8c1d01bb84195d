#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isac_coop/estimator.hpp"
#include "isac_coop/params.hpp"
#include "isac_coop/scene.hpp"

namespace isac {

struct CoarseConfig {
    double c_fdopp = 0.25;
    double c_tau = 1.0;
    double c_phi = 0.25;
    std::optional<double> beamwidth_rad; // default 1.772 / N_R at broadside
    std::optional<double> f_d_min_hz;    // default -2 / (NT)
    std::optional<double> f_d_max_hz;    // default +2 / (NT)

    double beamwidth(const OtfsParams& params) const {
        return beamwidth_rad ? *beamwidth_rad : 1.772 / params.n_rx;
    }
    double f_d_min(const OtfsParams& params) const {
        return f_d_min_hz ? *f_d_min_hz : -2.0 * params.doppler_resolution();
    }
    double f_d_max(const OtfsParams& params) const {
        return f_d_max_hz ? *f_d_max_hz : 2.0 * params.doppler_resolution();
    }
};

struct Waypoint {
    double x = 0.0;
    double y = 0.0;
};

struct McConfig {
    int n_trials = 1;
    uint64_t seed = 0;
    std::vector<Waypoint> waypoints;
    std::vector<std::vector<int>> bs_subsets; // 0-based site indices
};

/// Parsed scenario: waveform, sites, target, RoI, search and experiment
/// configuration.
struct SceneConfig {
    OtfsParams params;
    double antenna_gain = 1.0;
    double bf_center = 0.0; // [rad]
    double bf_width = 0.0;  // [rad]
    std::vector<BsSite> sites;
    TargetState target;
    RoiGrid roi;
    CoarseConfig coarse;
    McConfig mc;
};

/// Parses and validates a scenario file. Errors carry file/line context.
SceneConfig load_scenario(const std::string& path);
SceneConfig load_scenario_text(const std::string& text, const std::string& name);

/// Derived-quantity report printed by the validate command: resolutions,
/// noise variance, per-subcarrier power and the per-BS link budget at the
/// target plus every waypoint.
std::string derived_report(const SceneConfig& config);

/// Coarse search grid for one site: delay/angle ranges covering the RoI box
/// as seen from the site (with one grid step of margin), Doppler range from
/// the configuration.
CoarseGrid coarse_grid_for(const SceneConfig& config, const BsSite& site, const RoiGrid& roi);

/// Uniform desk-scale reduction: divides M, N and the trial count by
/// `factor` and coarsens the RoI pixel pitch by the same factor.
SceneConfig scaled(const SceneConfig& config, double factor);

} // namespace isac
