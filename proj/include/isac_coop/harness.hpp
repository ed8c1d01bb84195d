#pragma once

#include <cstdint>
#include <vector>

#include "isac_coop/crlb.hpp"
#include "isac_coop/scenario.hpp"

namespace isac {

/// Unit-modulus QPSK payload frame, deterministic per seed.
DelayDopplerFrame symbol_source(uint64_t seed, int m, int n);

/// Monte Carlo experiment description: scenario plus execution overrides.
struct ExperimentPlan {
    SceneConfig scene;
    int support_halfwidth = kDefaultSupportHalfwidth;
    int threads = 1;
    bool keep_bound_variants = true;

    explicit ExperimentPlan(SceneConfig s) : scene(std::move(s)) {}
};

/// One (waypoint, BS subset) row of the experiment.
struct RmsePoint {
    Waypoint waypoint;
    std::vector<int> subset;      // 0-based site indices
    int anchor_bs = 0;            // site used for range/angle errors (lowest index)
    double rmse_range = 0.0;      // local range of the fused estimate [m]
    double crb_range = 0.0;       // sqrt CRB from the EFIM [m]
    double rmse_angle = 0.0;      // [rad]
    double crb_angle = 0.0;       // [rad]
    double rmse_pos = 0.0;        // [m]
    double peb = 0.0;             // [m]
    double rmse_range_coarse = 0.0; // range from the coarse stage tau [m]
    double rmse_angle_coarse = 0.0; // angle from the coarse stage [rad]
    double crb_range_full = 0.0;  // sqrt CRB from the full 5x5 inverse [m]
    double crb_angle_full = 0.0;  // [rad]
    double pos_stderr = 0.0;      // standard error of the position RMSE [m]
    int n_trials = 0;
    int n_failed = 0;
    double wall_seconds = 0.0;    // not serialized; reporting only
};

struct RmseResult {
    std::vector<RmsePoint> points;
};

/// Runs the full experiment: for every waypoint, subset and trial, fresh
/// symbols/noise/coefficient phase seeded by (master, waypoint, subset,
/// trial, bs), per-BS coarse search, position fusion on the RoI recentred at
/// the waypoint, error accumulation, and matching bounds. Trials run in
/// parallel; results are reduced in trial order so any thread count yields
/// identical output. Aborts when more than 1% of trials fail.
RmseResult run_experiment(const ExperimentPlan& plan);

} // namespace isac
