#include "isac_coop/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "isac_coop/errors.hpp"

namespace isac {

namespace {

struct KeyValue {
    std::string value;
    int line = 0;
    bool used = false;
};

struct Section {
    std::string name;
    int line = 0;
    std::map<std::string, KeyValue> entries;
};

[[noreturn]] void fail(const std::string& file, int line, const std::string& msg) {
    std::ostringstream os;
    os << file << ":" << line << ": " << msg;
    throw ConfigError(os.str());
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& file, int line, const std::string& key,
                    const std::string& text) {
    try {
        size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (trim(text.substr(pos)) != "")
            fail(file, line, "trailing characters after numeric value for '" + key + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(file, line, "expected a number for '" + key + "', got '" + text + "'");
    }
}

int64_t parse_int(const std::string& file, int line, const std::string& key,
                  const std::string& text) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (trim(text.substr(pos)) != "")
            fail(file, line, "trailing characters after integer value for '" + key + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(file, line, "expected an integer for '" + key + "', got '" + text + "'");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"otfs",
     {"M", "N", "delta_f_hz", "T_s", "f_c_hz", "n_tx", "n_rx", "p_t_dbm", "n0_w_per_hz",
      "antenna_gain"}},
    {"beamformer", {"center_deg", "width_deg"}},
    {"bs", {"x_m", "y_m", "rotation_rad"}},
    {"target", {"x_m", "y_m", "vx_mps", "vy_mps", "rcs_m2"}},
    {"roi", {"x_min", "x_max", "y_min", "y_max", "dx", "dy"}},
    {"coarse", {"c_fdopp", "c_tau", "c_phi", "beamwidth_rad", "f_d_min_hz", "f_d_max_hz"}},
    {"mc", {"n_trials", "seed", "waypoints", "bs_subsets"}},
};

class ParsedScenario {
public:
    ParsedScenario(const std::string& text, std::string name) : file_(std::move(name)) {
        std::istringstream is(text);
        std::string raw;
        int line_no = 0;
        Section* current = nullptr;
        while (std::getline(is, raw)) {
            ++line_no;
            std::string line = raw;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(file_, line_no, "unterminated section header");
                const std::string name = trim(line.substr(1, line.size() - 2));
                if (!kKnownKeys.count(name))
                    fail(file_, line_no, "unknown section [" + name + "]");
                sections_.push_back(Section{name, line_no, {}});
                current = &sections_.back();
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                fail(file_, line_no, "expected 'key = value' or a [section] header");
            if (!current) fail(file_, line_no, "key outside of any section");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (!kKnownKeys.at(current->name).count(key))
                fail(file_, line_no, "unknown key '" + key + "' in section [" + current->name + "]");
            if (current->entries.count(key))
                fail(file_, line_no, "duplicate key '" + key + "' in section [" + current->name + "]");
            current->entries[key] = KeyValue{value, line_no, false};
        }
    }

    const std::string& file() const { return file_; }

    Section* find_unique(const std::string& name) {
        Section* found = nullptr;
        for (Section& s : sections_) {
            if (s.name != name) continue;
            if (found)
                fail(file_, s.line, "section [" + name + "] may only appear once");
            found = &s;
        }
        if (!found)
            fail(file_, 0, "missing required section [" + name + "]");
        return found;
    }

    std::vector<Section*> find_all(const std::string& name) {
        std::vector<Section*> out;
        for (Section& s : sections_)
            if (s.name == name) out.push_back(&s);
        return out;
    }

    KeyValue& require(Section& s, const std::string& key) {
        auto it = s.entries.find(key);
        if (it == s.entries.end())
            fail(file_, s.line, "missing required key '" + key + "' in section [" + s.name + "]");
        it->second.used = true;
        return it->second;
    }

    KeyValue* optional(Section& s, const std::string& key) {
        auto it = s.entries.find(key);
        if (it == s.entries.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    double require_double(Section& s, const std::string& key) {
        KeyValue& kv = require(s, key);
        return parse_double(file_, kv.line, key, kv.value);
    }

    int64_t require_int(Section& s, const std::string& key) {
        KeyValue& kv = require(s, key);
        return parse_int(file_, kv.line, key, kv.value);
    }

private:
    std::string file_;
    std::vector<Section> sections_;
};

std::vector<Waypoint> parse_waypoints(const std::string& file, const KeyValue& kv) {
    std::vector<Waypoint> out;
    for (const std::string& part : split(kv.value, ';')) {
        if (part.empty()) fail(file, kv.line, "empty waypoint entry");
        std::istringstream is(part);
        double x = 0.0, y = 0.0;
        if (!(is >> x >> y))
            fail(file, kv.line, "waypoint entries must be 'x y' pairs separated by ';'");
        std::string rest;
        if (is >> rest) fail(file, kv.line, "waypoint entry has trailing content: '" + part + "'");
        out.push_back({x, y});
    }
    if (out.empty()) fail(file, kv.line, "waypoints must contain at least one 'x y' pair");
    return out;
}

std::vector<std::vector<int>> parse_subsets(const std::string& file, const KeyValue& kv,
                                            int n_bs) {
    std::vector<std::vector<int>> out;
    for (const std::string& part : split(kv.value, ';')) {
        if (part.empty()) fail(file, kv.line, "empty BS subset entry");
        std::istringstream is(part);
        std::vector<int> subset;
        int idx = 0;
        while (is >> idx) {
            if (idx < 1 || idx > n_bs)
                fail(file, kv.line, "BS subset index out of range (1-based)");
            subset.push_back(idx - 1);
        }
        if (!is.eof()) fail(file, kv.line, "BS subsets must be 1-based integer lists");
        if (subset.empty()) fail(file, kv.line, "empty BS subset entry");
        std::set<int> unique(subset.begin(), subset.end());
        if (unique.size() != subset.size())
            fail(file, kv.line, "BS subset contains duplicate indices");
        out.push_back(std::move(subset));
    }
    if (out.empty()) fail(file, kv.line, "bs_subsets must contain at least one subset");
    return out;
}

} // namespace

SceneConfig load_scenario_text(const std::string& text, const std::string& name) {
    ParsedScenario p(text, name);

    Section& otfs = *p.find_unique("otfs");
    const int m = static_cast<int>(p.require_int(otfs, "M"));
    const int n = static_cast<int>(p.require_int(otfs, "N"));
    const double delta_f = p.require_double(otfs, "delta_f_hz");
    const double t_slot = p.require_double(otfs, "T_s");
    const double f_c = p.require_double(otfs, "f_c_hz");
    const int n_tx = static_cast<int>(p.require_int(otfs, "n_tx"));
    const int n_rx = static_cast<int>(p.require_int(otfs, "n_rx"));
    const double p_t_dbm = p.require_double(otfs, "p_t_dbm");
    const double n0 = p.require_double(otfs, "n0_w_per_hz");
    const double antenna_gain = p.require_double(otfs, "antenna_gain");
    const double p_t_watts = std::pow(10.0, (p_t_dbm - 30.0) / 10.0);

    std::optional<OtfsParams> params;
    try {
        params.emplace(m, n, delta_f, t_slot, f_c, n_tx, n_rx, p_t_watts, n0);
    } catch (const ConfigError& e) {
        fail(p.file(), otfs.line, e.what());
    }
    if (!(antenna_gain > 0.0)) fail(p.file(), otfs.line, "antenna_gain must be > 0");

    Section& bf = *p.find_unique("beamformer");
    const double center = p.require_double(bf, "center_deg") * M_PI / 180.0;
    const double width = p.require_double(bf, "width_deg") * M_PI / 180.0;
    if (!(width > 0.0) || width > M_PI)
        fail(p.file(), bf.line, "beamformer width must lie in (0, 180] degrees");

    std::vector<BsSite> sites;
    const std::vector<Section*> bs_sections = p.find_all("bs");
    if (bs_sections.empty()) fail(p.file(), 0, "missing required section [bs]");
    for (size_t i = 0; i < bs_sections.size(); ++i) {
        Section& s = *bs_sections[i];
        sites.emplace_back(p.require_double(s, "x_m"), p.require_double(s, "y_m"),
                           p.require_double(s, "rotation_rad"), static_cast<int>(i) + 1);
    }

    Section& tgt = *p.find_unique("target");
    std::optional<TargetState> target;
    try {
        target.emplace(p.require_double(tgt, "x_m"), p.require_double(tgt, "y_m"),
                       p.require_double(tgt, "vx_mps"), p.require_double(tgt, "vy_mps"),
                       p.require_double(tgt, "rcs_m2"));
    } catch (const ConfigError& e) {
        fail(p.file(), tgt.line, e.what());
    }

    Section& roi_s = *p.find_unique("roi");
    RoiGrid roi;
    roi.x_min = p.require_double(roi_s, "x_min");
    roi.x_max = p.require_double(roi_s, "x_max");
    roi.y_min = p.require_double(roi_s, "y_min");
    roi.y_max = p.require_double(roi_s, "y_max");
    roi.dx = p.require_double(roi_s, "dx");
    roi.dy = p.require_double(roi_s, "dy");
    try {
        roi.validate();
    } catch (const ConfigError& e) {
        fail(p.file(), roi_s.line, e.what());
    }

    Section& coarse_s = *p.find_unique("coarse");
    CoarseConfig coarse;
    coarse.c_fdopp = p.require_double(coarse_s, "c_fdopp");
    coarse.c_tau = p.require_double(coarse_s, "c_tau");
    coarse.c_phi = p.require_double(coarse_s, "c_phi");
    for (double c : {coarse.c_fdopp, coarse.c_tau, coarse.c_phi})
        if (!(c > 0.0) || c > 1.0)
            fail(p.file(), coarse_s.line, "coarse accuracy factors must lie in (0, 1]");
    if (KeyValue* kv = p.optional(coarse_s, "beamwidth_rad"))
        coarse.beamwidth_rad = parse_double(p.file(), kv->line, "beamwidth_rad", kv->value);
    if (KeyValue* kv = p.optional(coarse_s, "f_d_min_hz"))
        coarse.f_d_min_hz = parse_double(p.file(), kv->line, "f_d_min_hz", kv->value);
    if (KeyValue* kv = p.optional(coarse_s, "f_d_max_hz"))
        coarse.f_d_max_hz = parse_double(p.file(), kv->line, "f_d_max_hz", kv->value);
    if (coarse.f_d_min(*params) > coarse.f_d_max(*params))
        fail(p.file(), coarse_s.line, "f_d_min_hz must not exceed f_d_max_hz");

    Section& mc_s = *p.find_unique("mc");
    McConfig mc;
    mc.n_trials = static_cast<int>(p.require_int(mc_s, "n_trials"));
    if (mc.n_trials < 1) fail(p.file(), mc_s.line, "n_trials must be >= 1");
    mc.seed = static_cast<uint64_t>(p.require_int(mc_s, "seed"));
    mc.waypoints = parse_waypoints(p.file(), p.require(mc_s, "waypoints"));
    mc.bs_subsets = parse_subsets(p.file(), p.require(mc_s, "bs_subsets"),
                                  static_cast<int>(sites.size()));

    SceneConfig config{*params, antenna_gain, center, width, std::move(sites), *target,
                       roi, coarse, std::move(mc)};

    // Geometry validation: the target and every waypoint must lie in front of
    // every array, with round-trip delay inside one slot.
    auto check_point = [&](double x, double y, const std::string& what) {
        for (const BsSite& site : config.sites) {
            try {
                const LocalPoint local = to_local(x, y, site);
                const PolarParams pol = to_polar(local);
                if (!(pol.tau < config.params.slot_time)) {
                    std::ostringstream os;
                    os << what << " is farther than one slot of round-trip delay from BS "
                       << site.index;
                    throw ConfigError(os.str());
                }
            } catch (const GeometryError& e) {
                std::ostringstream os;
                os << what << " invalid for BS " << site.index << ": " << e.what();
                fail(p.file(), 0, os.str());
            }
        }
    };
    check_point(config.target.x, config.target.y, "[target]");
    for (size_t w = 0; w < config.mc.waypoints.size(); ++w) {
        std::ostringstream os;
        os << "waypoint " << (w + 1);
        check_point(config.mc.waypoints[w].x, config.mc.waypoints[w].y, os.str());
    }
    if (config.target.x < roi.x_min || config.target.x > roi.x_max ||
        config.target.y < roi.y_min || config.target.y > roi.y_max)
        fail(p.file(), roi_s.line, "[target] position must lie inside the [roi] box");

    return config;
}

SceneConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_scenario_text(buffer.str(), path);
}

CoarseGrid coarse_grid_for(const SceneConfig& config, const BsSite& site, const RoiGrid& roi) {
    const OtfsParams& params = config.params;
    // Angular extremes of a convex box are attained at its corners; the
    // minimum range may sit on an edge (clamped projection of the site).
    const double cx[4] = {roi.x_min, roi.x_max, roi.x_min, roi.x_max};
    const double cy[4] = {roi.y_min, roi.y_min, roi.y_max, roi.y_max};
    double r_max = 0.0;
    double phi_lo = M_PI, phi_hi = -M_PI;
    for (int i = 0; i < 4; ++i) {
        const LocalPoint local = to_local(cx[i], cy[i], site);
        r_max = std::max(r_max, std::hypot(local.x, local.y));
        const double phi = std::atan2(local.y, local.x);
        phi_lo = std::min(phi_lo, phi);
        phi_hi = std::max(phi_hi, phi);
    }
    const double nearest_x = std::clamp(site.x, roi.x_min, roi.x_max);
    const double nearest_y = std::clamp(site.y, roi.y_min, roi.y_max);
    const double r_min = std::hypot(nearest_x - site.x, nearest_y - site.y);

    CoarseGrid grid;
    grid.c_fdopp = config.coarse.c_fdopp;
    grid.c_tau = config.coarse.c_tau;
    grid.c_phi = config.coarse.c_phi;
    grid.beamwidth = config.coarse.beamwidth(params);
    grid.f_d_min = config.coarse.f_d_min(params);
    grid.f_d_max = config.coarse.f_d_max(params);

    const double d_tau = grid.c_tau * params.delay_resolution();
    const double tau_cap = params.slot_time * (1.0 - 1e-9);
    grid.tau_min = std::max(0.0, 2.0 * r_min / kSpeedOfLight - d_tau);
    grid.tau_max = std::min(tau_cap, 2.0 * r_max / kSpeedOfLight + d_tau);
    if (grid.tau_max < grid.tau_min)
        throw GeometryError("coarse_grid_for: RoI delay window is empty for this site");

    const double d_phi = grid.c_phi * grid.beamwidth;
    const double phi_cap = M_PI / 2.0 - 1e-6;
    grid.phi_min = std::max(-phi_cap, phi_lo - d_phi);
    grid.phi_max = std::min(phi_cap, phi_hi + d_phi);
    if (grid.phi_max < grid.phi_min)
        throw GeometryError("coarse_grid_for: RoI angle window is empty for this site");
    return grid;
}

SceneConfig scaled(const SceneConfig& config, double factor) {
    if (!(factor >= 1.0)) throw ConfigError("scale factor must be >= 1");
    if (factor == 1.0) return config;
    SceneConfig out = config;
    const int m = std::max(4, static_cast<int>(std::llround(config.params.m_subcarriers / factor)));
    const int n = std::max(2, static_cast<int>(std::llround(config.params.n_slots / factor)));
    out.params = OtfsParams(m, n, config.params.delta_f, config.params.slot_time,
                            config.params.carrier_freq, config.params.n_tx,
                            config.params.n_rx, config.params.total_power,
                            config.params.noise_psd);
    out.mc.n_trials = std::max(1, static_cast<int>(std::llround(config.mc.n_trials / factor)));
    out.roi.dx = config.roi.dx * factor;
    out.roi.dy = config.roi.dy * factor;
    return out;
}

std::string derived_report(const SceneConfig& config) {
    const OtfsParams& p = config.params;
    std::ostringstream os;
    os << std::setprecision(10);
    os << "waveform: M=" << p.m_subcarriers << " N=" << p.n_slots
       << " delta_f=" << p.delta_f << " Hz T=" << p.slot_time << " s f_c=" << p.carrier_freq
       << " Hz B=" << p.bandwidth() << " Hz\n";
    os << "arrays: n_tx=" << p.n_tx << " n_rx=" << p.n_rx
       << " antenna_gain=" << config.antenna_gain << "\n";
    os << "power: P_T=" << p.total_power << " W P_avg=" << p.avg_power()
       << " W/subcarrier N0=" << p.noise_psd << " W/Hz sigma_nu^2=" << p.noise_var()
       << " W\n";
    os << "resolution: delta_f_D=" << p.doppler_resolution()
       << " Hz delta_tau=" << p.delay_resolution() << " s (range "
       << 0.5 * kSpeedOfLight * p.delay_resolution() << " m)\n";

    const Beamformer bf = design_sector_beamformer(p, config.bf_center, config.bf_width);
    os << "beamformer: sector " << config.bf_center * 180.0 / M_PI << " +/- "
       << 0.5 * config.bf_width * 180.0 / M_PI << " deg, in-sector gain mean "
       << 10.0 * std::log10(bf.mean_gain) << " dB (min "
       << 10.0 * std::log10(bf.min_gain) << " dB, max " << 10.0 * std::log10(bf.max_gain)
       << " dB)\n";

    auto report_point = [&](double x, double y, const std::string& label) {
        os << label << " (" << x << ", " << y << ")\n";
        TargetState t = config.target;
        t.x = x;
        t.y = y;
        for (const BsSite& site : config.sites) {
            const RadialParams rp = radial_params(t, site, p);
            const cplx gamma = bf.gain_at(rp.phi);
            const LinkBudget lb = LinkBudget::make(p, config.antenna_gain, t.rcs, rp.range,
                                                   gamma, rp.f_d, rp.tau, 0.0);
            const double h2 = std::norm(lb.h);
            os << "  BS " << site.index << ": r=" << rp.range << " m phi="
               << rp.phi * 180.0 / M_PI << " deg f_D=" << rp.f_d << " Hz |alpha|^2="
               << lb.alpha_mag * lb.alpha_mag << " |h|^2=" << h2;
            if (p.noise_var() > 0.0) {
                os << " snr_sample=" << 10.0 * std::log10(h2 / p.noise_var())
                   << " dB snr_integrated~="
                   << 10.0 * std::log10(h2 * p.frame_size() * p.n_rx / p.noise_var())
                   << " dB";
            } else {
                os << " snr=noiseless";
            }
            os << "\n";
        }
    };
    report_point(config.target.x, config.target.y, "target");
    for (size_t w = 0; w < config.mc.waypoints.size(); ++w) {
        std::ostringstream label;
        label << "waypoint " << (w + 1);
        report_point(config.mc.waypoints[w].x, config.mc.waypoints[w].y, label.str());
    }
    return os.str();
}

} // namespace isac
