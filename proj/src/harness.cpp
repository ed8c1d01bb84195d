#include "isac_coop/harness.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>

#include "isac_coop/rng.hpp"
#include "isac_coop/threading.hpp"

namespace isac {

DelayDopplerFrame symbol_source(uint64_t seed, int m, int n) {
    DelayDopplerFrame frame(m, n);
    RandomStream stream(seed);
    static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    static const cplx alphabet[4] = {cplx(inv_sqrt2, inv_sqrt2), cplx(-inv_sqrt2, inv_sqrt2),
                                     cplx(-inv_sqrt2, -inv_sqrt2), cplx(inv_sqrt2, -inv_sqrt2)};
    for (cplx& v : frame.data()) v = alphabet[stream.next_u64() & 3];
    return frame;
}

namespace {

struct TrialErrors {
    bool ok = false;
    std::string error;
    double pos_sq = 0.0;          // |p_hat - p|^2
    double range_sq = 0.0;        // fused-estimate range error^2 at the anchor BS
    double angle_sq = 0.0;
    double range_coarse_sq = 0.0; // coarse-stage errors at the anchor BS
    double angle_coarse_sq = 0.0;
};

TrialErrors run_trial(const ExperimentPlan& plan, const Beamformer& beamformer,
                      size_t w_idx, size_t s_idx, int trial, const RoiGrid& roi) {
    const SceneConfig& scene = plan.scene;
    const OtfsParams& params = scene.params;
    const Waypoint wp = scene.mc.waypoints[w_idx];
    const std::vector<int>& subset = scene.mc.bs_subsets[s_idx];
    TrialErrors out;
    try {
        TargetState target = scene.target;
        target.x = wp.x;
        target.y = wp.y;

        std::vector<BsObservation> observations;
        observations.reserve(subset.size());
        int anchor = subset.front();
        for (int b : subset) anchor = std::min(anchor, b);
        std::optional<CoarseEstimate> anchor_coarse;
        RadialParams anchor_truth{};

        for (int b : subset) {
            const BsSite& site = scene.sites[static_cast<size_t>(b)];
            const uint64_t sym_seed =
                derive_seed({scene.mc.seed, static_cast<uint64_t>(w_idx),
                             static_cast<uint64_t>(s_idx), static_cast<uint64_t>(trial),
                             static_cast<uint64_t>(b), kStreamSymbols});
            const uint64_t ch_seed =
                derive_seed({scene.mc.seed, static_cast<uint64_t>(w_idx),
                             static_cast<uint64_t>(s_idx), static_cast<uint64_t>(trial),
                             static_cast<uint64_t>(b), kStreamChannel});
            DelayDopplerFrame x = symbol_source(sym_seed, params.m_subcarriers, params.n_slots);
            RxSynthesis rx = synthesize_rx(params, site, target, scene.antenna_gain,
                                           beamformer, x, ch_seed, plan.support_halfwidth);
            const CoarseGrid grid = coarse_grid_for(scene, site, roi);
            const CoarseEstimate coarse =
                coarse_estimate(params, rx.y, x, grid, plan.support_halfwidth);
            if (b == anchor) {
                anchor_coarse = coarse;
                anchor_truth = rx.radial;
            }
            observations.push_back(BsObservation{site, std::move(rx.y), std::move(x),
                                                 coarse.f_d});
        }

        const FusionResult fusion =
            fuse_position_ml(params, observations, roi, plan.support_halfwidth, 1);

        const double ex = fusion.x_hat - wp.x;
        const double ey = fusion.y_hat - wp.y;
        out.pos_sq = ex * ex + ey * ey;

        const BsSite& anchor_site = scene.sites[static_cast<size_t>(anchor)];
        const LocalPoint local_hat = to_local(fusion.x_hat, fusion.y_hat, anchor_site);
        const double r_hat = std::hypot(local_hat.x, local_hat.y);
        const double r_true = 0.5 * kSpeedOfLight * anchor_truth.tau;
        const double phi_hat = std::atan2(local_hat.y, local_hat.x);
        out.range_sq = (r_hat - r_true) * (r_hat - r_true);
        out.angle_sq = (phi_hat - anchor_truth.phi) * (phi_hat - anchor_truth.phi);

        const double r_coarse = 0.5 * kSpeedOfLight * anchor_coarse->tau;
        out.range_coarse_sq = (r_coarse - r_true) * (r_coarse - r_true);
        out.angle_coarse_sq =
            (anchor_coarse->phi - anchor_truth.phi) * (anchor_coarse->phi - anchor_truth.phi);
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

} // namespace

RmseResult run_experiment(const ExperimentPlan& plan) {
    const SceneConfig& scene = plan.scene;
    const OtfsParams& params = scene.params;
    const Beamformer beamformer =
        design_sector_beamformer(params, scene.bf_center, scene.bf_width);

    RmseResult result;
    for (size_t w_idx = 0; w_idx < scene.mc.waypoints.size(); ++w_idx) {
        const Waypoint wp = scene.mc.waypoints[w_idx];
        const RoiGrid roi = scene.roi.recentred(wp.x, wp.y);

        // Canonical frame for the bound at this waypoint.
        const uint64_t bound_seed =
            derive_seed({scene.mc.seed, static_cast<uint64_t>(w_idx), kStreamBound});
        const DelayDopplerFrame bound_frame =
            symbol_source(bound_seed, params.m_subcarriers, params.n_slots);
        TargetState bound_target = scene.target;
        bound_target.x = wp.x;
        bound_target.y = wp.y;
        const BoundScene bound_scene(params, scene.antenna_gain, beamformer, bound_target,
                                     bound_frame, plan.support_halfwidth);

        for (size_t s_idx = 0; s_idx < scene.mc.bs_subsets.size(); ++s_idx) {
            const std::vector<int>& subset = scene.mc.bs_subsets[s_idx];
            const auto t0 = std::chrono::steady_clock::now();

            const int n_trials = scene.mc.n_trials;
            std::vector<TrialErrors> trials(static_cast<size_t>(n_trials));
            parallel_for(n_trials, plan.threads, [&](int64_t begin, int64_t end, int) {
                for (int64_t t = begin; t < end; ++t)
                    trials[static_cast<size_t>(t)] = run_trial(plan, beamformer, w_idx, s_idx,
                                                               static_cast<int>(t), roi);
            });

            // Keyed reduction in trial order.
            RmsePoint point;
            point.waypoint = wp;
            point.subset = subset;
            int anchor = subset.front();
            for (int b : subset) anchor = std::min(anchor, b);
            point.anchor_bs = scene.sites[static_cast<size_t>(anchor)].index;
            double pos_acc = 0.0, range_acc = 0.0, angle_acc = 0.0;
            double range_coarse_acc = 0.0, angle_coarse_acc = 0.0;
            double pos_sq_acc2 = 0.0;
            int ok_count = 0;
            std::string first_error;
            for (const TrialErrors& tr : trials) {
                if (!tr.ok) {
                    if (first_error.empty()) first_error = tr.error;
                    continue;
                }
                ++ok_count;
                pos_acc += tr.pos_sq;
                pos_sq_acc2 += tr.pos_sq * tr.pos_sq;
                range_acc += tr.range_sq;
                angle_acc += tr.angle_sq;
                range_coarse_acc += tr.range_coarse_sq;
                angle_coarse_acc += tr.angle_coarse_sq;
            }
            const int failed = n_trials - ok_count;
            if (failed > 0 && static_cast<double>(failed) > 0.01 * n_trials) {
                std::ostringstream os;
                os << "run_experiment: " << failed << "/" << n_trials
                   << " trials failed at waypoint (" << wp.x << ", " << wp.y
                   << "), subset index " << s_idx << "; first error: " << first_error;
                throw NumericError(os.str());
            }
            if (ok_count == 0)
                throw NumericError("run_experiment: no successful trials");

            point.n_trials = ok_count;
            point.n_failed = failed;
            point.rmse_pos = std::sqrt(pos_acc / ok_count);
            point.rmse_range = std::sqrt(range_acc / ok_count);
            point.rmse_angle = std::sqrt(angle_acc / ok_count);
            point.rmse_range_coarse = std::sqrt(range_coarse_acc / ok_count);
            point.rmse_angle_coarse = std::sqrt(angle_coarse_acc / ok_count);
            // Delta-method standard error of sqrt(mean of squares).
            if (ok_count > 1 && point.rmse_pos > 0.0) {
                const double mean_sq = pos_acc / ok_count;
                const double var_sq =
                    (pos_sq_acc2 / ok_count - mean_sq * mean_sq) / (ok_count - 1);
                point.pos_stderr = 0.5 * std::sqrt(std::max(0.0, var_sq)) / point.rmse_pos;
            }

            // Bounds at the waypoint for this subset.
            std::vector<BsSite> subset_sites;
            std::vector<Efim2> subset_efims;
            subset_sites.reserve(subset.size());
            for (int b : subset) subset_sites.push_back(scene.sites[static_cast<size_t>(b)]);
            for (const BsSite& site : subset_sites)
                subset_efims.push_back(efim_at_position(bound_scene, site, wp.x, wp.y));
            point.peb = peb(coop_fim(subset_efims, subset_sites, wp.x, wp.y));

            // Range/angle bounds at the anchor BS.
            const BsSite& anchor_site = scene.sites[static_cast<size_t>(anchor)];
            size_t anchor_pos = 0;
            for (size_t i = 0; i < subset.size(); ++i)
                if (subset[i] == anchor) anchor_pos = i;
            const Efim2& anchor_efim = subset_efims[anchor_pos];
            {
                const double det = anchor_efim(0, 0) * anchor_efim(1, 1) -
                                   anchor_efim(0, 1) * anchor_efim(1, 0);
                if (!(det > 0.0))
                    throw NumericError("run_experiment: singular anchor EFIM");
                point.crb_range =
                    0.5 * kSpeedOfLight * std::sqrt(anchor_efim(1, 1) / det);
                point.crb_angle = std::sqrt(anchor_efim(0, 0) / det);
            }
            if (plan.keep_bound_variants) {
                TargetState t = scene.target;
                t.x = wp.x;
                t.y = wp.y;
                const RadialParams rp = radial_params(t, anchor_site, params);
                const cplx gamma = beamformer.gain_at(rp.phi);
                const LinkBudget lb = LinkBudget::make(params, scene.antenna_gain, t.rcs,
                                                       rp.range, gamma, rp.f_d, rp.tau, 0.0);
                const ChannelOperator op(params, rp.f_d, rp.tau, rp.phi,
                                         plan.support_halfwidth);
                const PerBsFim fim =
                    fim_per_bs(op, cplx(std::abs(lb.h), 0.0), bound_frame);
                const Eigen::Matrix<double, 5, 5> inv = fim.info.inverse();
                point.crb_range_full = 0.5 * kSpeedOfLight * std::sqrt(inv(3, 3));
                point.crb_angle_full = std::sqrt(inv(4, 4));
            }

            point.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.points.push_back(std::move(point));
        }
    }
    return result;
}

} // namespace isac
