#include "isac_coop/commands.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "isac_coop/errors.hpp"
#include "isac_coop/harness.hpp"
#include "isac_coop/raster_io.hpp"
#include "isac_coop/rng.hpp"

namespace isac {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr uint64_t kStreamSimulate = 0x53494d55ULL;

SceneConfig load_with_options(const std::string& path, const CliOptions& opts) {
    SceneConfig config = load_scenario(path);
    if (opts.scale != 1.0) config = scaled(config, opts.scale);
    if (opts.seed) config.mc.seed = *opts.seed;
    if (opts.noiseless) {
        const OtfsParams& p = config.params;
        config.params = OtfsParams(p.m_subcarriers, p.n_slots, p.delta_f, p.slot_time,
                                   p.carrier_freq, p.n_tx, p.n_rx, p.total_power, 0.0);
    }
    return config;
}

int resolve_halfwidth(const SceneConfig& config, const CliOptions& opts) {
    const int k = opts.support_halfwidth.value_or(kDefaultSupportHalfwidth);
    return std::min(k, config.params.m_subcarriers);
}

void ensure_out_dir(const CliOptions& opts) {
    if (opts.out_dir.empty()) return;
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + opts.out_dir + ": " + ec.message());
}

std::string out_path(const CliOptions& opts, const std::string& name) {
    return (fs::path(opts.out_dir) / name).string();
}

std::string subset_tag(const std::vector<int>& subset, const std::vector<BsSite>& sites) {
    std::ostringstream os;
    os << "bs";
    for (size_t i = 0; i < subset.size(); ++i) {
        if (i) os << '-';
        os << sites[static_cast<size_t>(subset[i])].index;
    }
    return os.str();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

std::string maps_plot_script(const std::vector<std::string>& rasters) {
    std::ostringstream os;
    os << "# gnuplot script: raster maps (header line skipped)\n"
          "set datafile separator ','\n"
          "set view map\n"
          "set size ratio -1\n";
    for (const std::string& r : rasters) {
        os << "set title '" << r << "'\n"
           << "splot '" << r << "' skip 1 matrix with image notitle\n"
           << "pause -1 'press enter for the next map'\n";
    }
    return os.str();
}

std::string rmse_plot_script() {
    return "# gnuplot script: RMSE and bound versus waypoint x, one curve per subset size\n"
           "set datafile separator ','\n"
           "set key top left\n"
           "set logscale y\n"
           "set xlabel 'waypoint x [m]'\n"
           "set ylabel 'position RMSE [m]'\n"
           "plot for [n=1:3] 'rmse.csv' skip 1 using 1:($3==n?$8:1/0) \\\n"
           "     with linespoints title sprintf('%d BS', n), \\\n"
           "     for [n=1:3] 'rmse.csv' skip 1 using 1:($3==n?$9:1/0) \\\n"
           "     with lines dashtype 2 title sprintf('bound, %d BS', n)\n"
           "pause -1\n";
}

} // namespace

int cmd_validate(const std::string& scenario_path, const CliOptions& opts, std::ostream& out) {
    const SceneConfig config = load_with_options(scenario_path, opts);
    out << derived_report(config);
    out << "scenario OK\n";
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const CliOptions& opts, std::ostream& out) {
    const SceneConfig config = load_with_options(scenario_path, opts);
    const OtfsParams& params = config.params;
    const int halfwidth = resolve_halfwidth(config, opts);
    ensure_out_dir(opts);
    const Beamformer beamformer =
        design_sector_beamformer(params, config.bf_center, config.bf_width);

    json manifest;
    manifest["m_subcarriers"] = params.m_subcarriers;
    manifest["n_slots"] = params.n_slots;
    manifest["n_rx"] = params.n_rx;
    manifest["n_tx"] = params.n_tx;
    manifest["seed"] = config.mc.seed;
    manifest["noiseless"] = opts.noiseless;
    manifest["support_halfwidth"] = halfwidth;
    manifest["noise_var"] = params.noise_var();
    manifest["avg_power"] = params.avg_power();
    manifest["delay_resolution_s"] = params.delay_resolution();
    manifest["doppler_resolution_hz"] = params.doppler_resolution();
    manifest["format"] = "complex128 little-endian; tx: delay-major k+M*l; "
                         "rx: antenna blocks j*M*N, each delay-major";
    json bs_list = json::array();

    for (const BsSite& site : config.sites) {
        const uint64_t sym_seed = derive_seed({config.mc.seed, kStreamSimulate,
                                               static_cast<uint64_t>(site.index),
                                               kStreamSymbols});
        const uint64_t ch_seed = derive_seed({config.mc.seed, kStreamSimulate,
                                              static_cast<uint64_t>(site.index),
                                              kStreamChannel});
        const DelayDopplerFrame x =
            symbol_source(sym_seed, params.m_subcarriers, params.n_slots);
        const RxSynthesis rx = synthesize_rx(params, site, config.target,
                                             config.antenna_gain, beamformer, x, ch_seed,
                                             halfwidth);
        std::ostringstream tx_name, rx_name;
        tx_name << "tx_bs" << site.index << ".cplx";
        rx_name << "rx_bs" << site.index << ".cplx";
        write_complex_dump(out_path(opts, tx_name.str()), x.data());
        write_complex_dump(out_path(opts, rx_name.str()), rx.y);

        json bs;
        bs["index"] = site.index;
        bs["tx_file"] = tx_name.str();
        bs["rx_file"] = rx_name.str();
        bs["range_m"] = rx.radial.range;
        bs["phi_rad"] = rx.radial.phi;
        bs["tau_s"] = rx.radial.tau;
        bs["f_d_hz"] = rx.radial.f_d;
        bs["h_re"] = rx.h.real();
        bs["h_im"] = rx.h.imag();
        const double h2 = std::norm(rx.h);
        bs["h_mag_sq"] = h2;
        if (params.noise_var() > 0.0)
            bs["snr_sample_db"] = 10.0 * std::log10(h2 / params.noise_var());
        bs_list.push_back(bs);
        out << "BS " << site.index << ": wrote " << rx_name.str() << " ("
            << rx.y.size() << " samples)\n";
    }
    manifest["bs"] = bs_list;
    write_text(out_path(opts, "manifest.json"), manifest.dump(2) + "\n");
    out << "wrote manifest.json\n";
    return 0;
}

int cmd_estimate(const std::string& scenario_path, const CliOptions& opts, std::ostream& out) {
    const SceneConfig config = load_with_options(scenario_path, opts);
    const OtfsParams& params = config.params;
    const int halfwidth = resolve_halfwidth(config, opts);

    const std::string manifest_path = out_path(opts, "manifest.json");
    std::ifstream mf(manifest_path);
    if (!mf)
        throw IoError("cmd_estimate requires simulate outputs; missing " + manifest_path);
    json manifest = json::parse(mf);
    if (manifest["m_subcarriers"] != params.m_subcarriers ||
        manifest["n_slots"] != params.n_slots || manifest["n_rx"] != params.n_rx)
        throw ConfigError("cmd_estimate: manifest dimensions do not match the scenario "
                          "(rerun simulate with the same options)");

    std::vector<BsObservation> observations;
    std::vector<CoarseEstimate> coarse_list;
    for (const BsSite& site : config.sites) {
        std::ostringstream tx_name, rx_name;
        tx_name << "tx_bs" << site.index << ".cplx";
        rx_name << "rx_bs" << site.index << ".cplx";
        const std::vector<cplx> x_raw = read_complex_dump(out_path(opts, tx_name.str()));
        std::vector<cplx> y = read_complex_dump(out_path(opts, rx_name.str()));
        if (static_cast<int>(x_raw.size()) != params.frame_size() ||
            static_cast<int>(y.size()) != params.frame_size() * params.n_rx)
            throw ConfigError("cmd_estimate: dump sizes do not match the scenario");
        DelayDopplerFrame x(params.m_subcarriers, params.n_slots);
        x.data() = x_raw;
        const CoarseGrid grid = coarse_grid_for(config, site, config.roi);
        const CoarseEstimate coarse = coarse_estimate(params, y, x, grid, halfwidth);
        coarse_list.push_back(coarse);
        observations.push_back(BsObservation{site, std::move(y), std::move(x), coarse.f_d});
    }

    const FusionResult fusion =
        fuse_position_ml(params, observations, config.roi, halfwidth, opts.threads);

    std::vector<std::string> raster_names;
    for (size_t b = 0; b < fusion.per_bs.size(); ++b) {
        std::ostringstream name;
        name << "radar_map_bs" << fusion.per_bs[b].bs_index << ".csv";
        write_raster_csv(out_path(opts, name.str()), fusion.per_bs[b].grid,
                         fusion.per_bs[b].values);
        raster_names.push_back(name.str());
    }
    write_raster_csv(out_path(opts, "radar_map_fused.csv"), fusion.fused.grid,
                     fusion.fused.values);
    raster_names.push_back("radar_map_fused.csv");

    {
        std::ostringstream csv;
        csv << "bs_index,f_d_hat_hz,tau_hat_s,phi_hat_rad,h_hat_re,h_hat_im,objective\n";
        for (size_t b = 0; b < observations.size(); ++b) {
            const CoarseEstimate& ce = coarse_list[b];
            const ChannelOperator op(params, ce.f_d, ce.tau, ce.phi, halfwidth);
            const cplx h_hat = channel_coeff_ml(observations[b].y, op, observations[b].x);
            csv << observations[b].site.index << ',' << format_g17(ce.f_d) << ','
                << format_g17(ce.tau) << ',' << format_g17(ce.phi) << ','
                << format_g17(h_hat.real()) << ',' << format_g17(h_hat.imag()) << ','
                << format_g17(ce.objective) << '\n';
        }
        write_text(out_path(opts, "estimates.csv"), csv.str());
    }
    {
        const double ex = fusion.x_hat - config.target.x;
        const double ey = fusion.y_hat - config.target.y;
        std::ostringstream csv;
        csv << "x_hat_m,y_hat_m,peak_value,true_x_m,true_y_m,pos_error_m,excluded_pixels\n";
        csv << format_g17(fusion.x_hat) << ',' << format_g17(fusion.y_hat) << ','
            << format_g17(fusion.peak_value) << ',' << format_g17(config.target.x) << ','
            << format_g17(config.target.y) << ',' << format_g17(std::hypot(ex, ey)) << ','
            << fusion.excluded_pixels << '\n';
        write_text(out_path(opts, "estimate_summary.csv"), csv.str());
    }
    write_text(out_path(opts, "plot_maps.gp"), maps_plot_script(raster_names));
    out << "position estimate: (" << fusion.x_hat << ", " << fusion.y_hat << "), peak "
        << fusion.peak_value << ", excluded pixels " << fusion.excluded_pixels << "\n";
    return 0;
}

int cmd_crlb(const std::string& scenario_path, const CliOptions& opts, std::ostream& out) {
    const SceneConfig config = load_with_options(scenario_path, opts);
    const OtfsParams& params = config.params;
    const int halfwidth = resolve_halfwidth(config, opts);
    ensure_out_dir(opts);
    const Beamformer beamformer =
        design_sector_beamformer(params, config.bf_center, config.bf_width);
    const uint64_t bound_seed = derive_seed({config.mc.seed, kStreamBound});
    const DelayDopplerFrame frame =
        symbol_source(bound_seed, params.m_subcarriers, params.n_slots);
    const BoundScene scene(params, config.antenna_gain, beamformer, config.target, frame,
                           halfwidth);

    // Per-site fields once; subset maps are sums of the fields.
    std::vector<BsPositionInfoField> fields;
    fields.reserve(config.sites.size());
    for (const BsSite& site : config.sites) {
        fields.push_back(bs_position_info_field(scene, site, config.roi, opts.threads));
        out << "BS " << site.index << ": position information field done\n";
    }

    std::vector<std::string> raster_names;
    std::ostringstream summary;
    summary << "n_bs,subset,peb_at_target_m,crb_range_anchor_m,crb_angle_anchor_rad,"
               "crb_range_full_m,crb_angle_full_rad,excluded_pixels,failed_pixels\n";
    for (const std::vector<int>& subset : config.mc.bs_subsets) {
        std::vector<const BsPositionInfoField*> subset_fields;
        std::vector<BsSite> subset_sites;
        for (int b : subset) {
            subset_fields.push_back(&fields[static_cast<size_t>(b)]);
            subset_sites.push_back(config.sites[static_cast<size_t>(b)]);
        }
        const PebMap map = combine_peb_map(config.roi, subset_fields);
        const std::string tag = subset_tag(subset, config.sites);
        const std::string name = "peb_map_" + tag + ".csv";
        write_raster_csv(out_path(opts, name), map.grid, map.values);
        raster_names.push_back(name);

        const double peb_target =
            peb(coop_fim_at_position(scene, subset_sites, config.target.x, config.target.y));
        int anchor = subset.front();
        for (int b : subset) anchor = std::min(anchor, b);
        const BsSite& anchor_site = config.sites[static_cast<size_t>(anchor)];
        const Efim2 efim =
            efim_at_position(scene, anchor_site, config.target.x, config.target.y);
        const double det = efim(0, 0) * efim(1, 1) - efim(0, 1) * efim(1, 0);
        if (!(det > 0.0)) throw NumericError("cmd_crlb: singular anchor EFIM at the target");
        const double crb_range = 0.5 * kSpeedOfLight * std::sqrt(efim(1, 1) / det);
        const double crb_angle = std::sqrt(efim(0, 0) / det);

        const RadialParams rp = radial_params(config.target, anchor_site, params);
        const LinkBudget lb =
            LinkBudget::make(params, config.antenna_gain, config.target.rcs, rp.range,
                             beamformer.gain_at(rp.phi), rp.f_d, rp.tau, 0.0);
        const ChannelOperator op(params, rp.f_d, rp.tau, rp.phi, halfwidth);
        const PerBsFim fim = fim_per_bs(op, cplx(std::abs(lb.h), 0.0), frame);
        const Eigen::Matrix<double, 5, 5> inv = fim.info.inverse();

        summary << subset.size() << ',' << tag << ',' << format_g17(peb_target) << ','
                << format_g17(crb_range) << ',' << format_g17(crb_angle) << ','
                << format_g17(0.5 * kSpeedOfLight * std::sqrt(inv(3, 3))) << ','
                << format_g17(std::sqrt(inv(4, 4))) << ',' << map.excluded_pixels << ','
                << map.failed_pixels << '\n';
        out << "subset " << tag << ": PEB at target " << peb_target << " m\n";
    }
    write_text(out_path(opts, "crlb_summary.csv"), summary.str());
    write_text(out_path(opts, "plot_crlb.gp"), maps_plot_script(raster_names));
    return 0;
}

int cmd_rmse(const std::string& scenario_path, const CliOptions& opts, std::ostream& out) {
    const SceneConfig config = load_with_options(scenario_path, opts);
    ensure_out_dir(opts);
    ExperimentPlan plan(config);
    plan.support_halfwidth = resolve_halfwidth(config, opts);
    plan.threads = opts.threads;
    const RmseResult result = run_experiment(plan);

    std::ostringstream csv, aux;
    csv << "waypoint_x,waypoint_y,n_bs,rmse_range_m,crb_range_m,rmse_angle_rad,"
           "crb_angle_rad,rmse_pos_m,peb_m,n_trials,n_failed\n";
    aux << "waypoint_x,waypoint_y,n_bs,anchor_bs,rmse_range_coarse_m,rmse_angle_coarse_rad,"
           "crb_range_full_m,crb_angle_full_rad,rmse_pos_stderr_m\n";
    for (const RmsePoint& pt : result.points) {
        csv << format_g17(pt.waypoint.x) << ',' << format_g17(pt.waypoint.y) << ','
            << pt.subset.size() << ',' << format_g17(pt.rmse_range) << ','
            << format_g17(pt.crb_range) << ',' << format_g17(pt.rmse_angle) << ','
            << format_g17(pt.crb_angle) << ',' << format_g17(pt.rmse_pos) << ','
            << format_g17(pt.peb) << ',' << pt.n_trials << ',' << pt.n_failed << '\n';
        aux << format_g17(pt.waypoint.x) << ',' << format_g17(pt.waypoint.y) << ','
            << pt.subset.size() << ',' << pt.anchor_bs << ','
            << format_g17(pt.rmse_range_coarse) << ',' << format_g17(pt.rmse_angle_coarse)
            << ',' << format_g17(pt.crb_range_full) << ',' << format_g17(pt.crb_angle_full)
            << ',' << format_g17(pt.pos_stderr) << '\n';
        out << "waypoint (" << pt.waypoint.x << ", " << pt.waypoint.y << ") n_bs "
            << pt.subset.size() << ": rmse_pos " << pt.rmse_pos << " m, peb " << pt.peb
            << " m [" << pt.wall_seconds << " s]\n";
    }
    write_text(out_path(opts, "rmse.csv"), csv.str());
    write_text(out_path(opts, "rmse_aux.csv"), aux.str());
    write_text(out_path(opts, "plot_rmse.gp"), rmse_plot_script());
    return 0;
}

} // namespace isac
