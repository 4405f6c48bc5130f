#include "kinetic/cli_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kinetic/characteristics.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/homogeneous.hpp"
#include "kinetic/monokinetic.hpp"
#include "kinetic/particles.hpp"
#include "kinetic/scattering.hpp"

namespace kinetic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && end == s.data() + s.size() && !s.empty();
}

}  // namespace

// ---- Config ---------------------------------------------------------------

Config Config::parse(std::string_view text) {
    Config cfg;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
        if (const std::size_t hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == line.npos) throw ParseError("expected `key = value`", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (value.empty()) throw ParseError("empty value for `" + key + "`", line_no);
        if (!cfg.entries_.emplace(key, Entry{value, line_no}).second)
            throw ParseError("duplicate key `" + key + "`", line_no);
    }
    return cfg;
}

Config Config::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::restrict_to(const std::vector<std::string_view>& known) const {
    const Entry* first = nullptr;
    std::string name;
    for (const auto& [key, e] : entries_) {
        if (std::find(known.begin(), known.end(), key) != known.end()) continue;
        if (!first || e.line < first->line) {
            first = &e;
            name = key;
        }
    }
    if (first) throw ParseError("unknown key `" + name + "`", first->line);
}

template <class T, class Convert>
T Config::get(const std::string& key, const T& fallback, Convert convert) const {
    const auto it = entries_.find(key);
    T value = fallback;
    if (it != entries_.end()) {
        if (!convert(it->second.value, value))
            throw ParseError("bad value `" + it->second.value + "` for `" + key + "`",
                             it->second.line);
    }
    resolved_[key] = value;
    return value;
}

double Config::number(const std::string& key, double fallback) const {
    return get<double>(key, fallback, [](const std::string& s, double& v) { return parse_double(s, v); });
}

long long Config::integer(const std::string& key, long long fallback) const {
    return get<long long>(key, fallback, [](const std::string& s, long long& v) {
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        return ec == std::errc() && end == s.data() + s.size();
    });
}

bool Config::flag(const std::string& key, bool fallback) const {
    return get<bool>(key, fallback, [](const std::string& s, bool& v) {
        const std::string l = lower(s);
        if (l == "true" || l == "1" || l == "yes") v = true;
        else if (l == "false" || l == "0" || l == "no") v = false;
        else return false;
        return true;
    });
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
    return get<std::string>(key, fallback, [](const std::string& s, std::string& v) {
        v = s;
        return true;
    });
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) const {
    return get<std::vector<double>>(key, fallback, [](const std::string& s, std::vector<double>& v) {
        v.clear();
        std::string_view rest = s;
        while (true) {
            const std::size_t comma = rest.find(',');
            double x = 0.0;
            if (!parse_double(rest.substr(0, comma), x)) return false;
            v.push_back(x);
            if (comma == rest.npos) return true;
            rest.remove_prefix(comma + 1);
        }
    });
}

// ---- keys and solver config ------------------------------------------------

namespace {

const std::vector<std::string_view> kGridKeys{"d", "L_x", "L_v", "dx", "dv"};
const std::vector<std::string_view> kPatchKeys{"patch_center_x", "patch_center_v", "patch_side",
                                               "patch_height",   "patch_profile",  "mollify_passes",
                                               "initial_file"};
const std::vector<std::string_view> kStepKeys{"gamma",           "dt",            "T",
                                              "splitting",       "transport",     "snapshot_stride",
                                              "sample_stride",   "p_list"};

std::vector<std::string_view> join(std::initializer_list<const std::vector<std::string_view>*> parts,
                                   std::initializer_list<std::string_view> extra = {}) {
    std::vector<std::string_view> out;
    for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

Vec broadcast(const std::vector<double>& v, int d, const char* what) {
    if (v.size() != 1 && v.size() != std::size_t(d))
        throw ValidationError(std::string(what) + " needs 1 or d components");
    Vec out{};
    for (int a = 0; a < d; ++a) out[a] = v.size() == 1 ? v[0] : v[a];
    return out;
}

// Reads every solver key, with `base` supplying the defaults.
SolverConfig build_solver(const Config& cfg, const SolverConfig& base) {
    SolverConfig c = base;
    const long long d = cfg.integer("d", base.grid.d);
    if (d != 1 && d != 2) throw ValidationError("d must be 1 or 2");
    const double Lx = cfg.number("L_x", base.grid.Lx);
    const double Lv = cfg.number("L_v", base.grid.Lv);
    const double dx = cfg.number("dx", base.grid.dx);
    const double dv = cfg.number("dv", base.grid.dv);
    if (!(Lx > 0.0) || !(Lv > 0.0)) throw ValidationError("L_x and L_v must be positive");
    c.grid = PhaseGrid::from_spacing(int(d), Lx, Lv, dx, dv);

    c.gamma = cfg.number("gamma", base.gamma);
    c.dt = cfg.number("dt", base.dt);
    c.T = cfg.number("T", base.T);
    const std::string split =
        lower(cfg.text("splitting", base.splitting == Splitting::Strang ? "strang" : "lie"));
    if (split == "strang") c.splitting = Splitting::Strang;
    else if (split == "lie") c.splitting = Splitting::Lie;
    else throw ValidationError("splitting must be lie or strang");
    const std::string scheme = lower(cfg.text(
        "transport", base.transport == TransportScheme::Antidiffusive ? "antidiffusive" : "parabolic"));
    if (scheme == "antidiffusive") c.transport = TransportScheme::Antidiffusive;
    else if (scheme == "parabolic") c.transport = TransportScheme::Parabolic;
    else throw ValidationError("transport must be antidiffusive or parabolic");

    const long long snap = cfg.integer("snapshot_stride", (long long)base.snapshot_stride);
    const long long samp = cfg.integer("sample_stride", (long long)base.sample_stride);
    if (snap < 1 || samp < 1) throw ValidationError("strides must be positive");
    c.snapshot_stride = std::size_t(snap);
    c.sample_stride = std::size_t(samp);
    c.p_list = cfg.list("p_list", base.p_list);

    const Vec& bx = base.patch.center_x;
    const Vec& bv = base.patch.center_v;
    c.patch.center_x = broadcast(cfg.list("patch_center_x", {bx[0]}), int(d), "patch_center_x");
    c.patch.center_v = broadcast(cfg.list("patch_center_v", {bv[0]}), int(d), "patch_center_v");
    c.patch.side = cfg.number("patch_side", base.patch.side);
    c.patch.height = cfg.number("patch_height", base.patch.height);
    const std::string profile = lower(
        cfg.text("patch_profile", base.patch.profile == PatchProfile::Uniform ? "uniform" : "cosine"));
    if (profile == "uniform") c.patch.profile = PatchProfile::Uniform;
    else if (profile == "cosine") c.patch.profile = PatchProfile::Cosine;
    else throw ValidationError("patch_profile must be uniform or cosine");
    const long long passes = cfg.integer("mollify_passes", base.patch.smoothing_passes);
    if (passes < 0) throw ValidationError("mollify_passes must be nonnegative");
    c.patch.smoothing_passes = int(passes);
    const std::string file = cfg.text("initial_file", "");
    if (!file.empty()) c.initial = read_field(file);
    c.validate();
    return c;
}

SolverConfig picard_defaults() {
    SolverConfig c;
    c.grid = PhaseGrid::make(1, 4.0, 4.0, 32, 32);
    c.patch.center_x = {2.0, 2.0};
    c.patch.center_v = {0.0, 0.0};
    c.patch.side = 2.0;
    c.patch.height = 1.0;
    c.patch.profile = PatchProfile::Cosine;
    return c;
}

}  // namespace

const std::vector<std::string_view>& known_keys(std::string_view subcommand) {
    static const std::map<std::string_view, std::vector<std::string_view>> table{
        {"run", join({&kGridKeys, &kPatchKeys, &kStepKeys}, {"record_duhamel"})},
        {"picard", join({&kGridKeys, &kPatchKeys},
                        {"gamma", "T_loc", "tol", "max_iter", "n_intervals", "max_halvings"})},
        {"particles", join({&kGridKeys, &kPatchKeys, &kStepKeys},
                           {"N_list", "seed", "psi", "psi_radius", "bin_interval", "obs_interval"})},
        {"monokinetic",
         {"family", "n_markers", "dt", "T", "velocity", "deposit_width", "L_x", "L_v", "dx", "dv"}},
        {"homogeneous", {"gamma", "d", "half_width", "height", "times"}},
    };
    const auto it = table.find(subcommand);
    if (it == table.end()) throw ValidationError("unknown subcommand `" + std::string(subcommand) + "`");
    return it->second;
}

SolverConfig solver_config(const Config& cfg) { return build_solver(cfg, SolverConfig{}); }

// ---- field files -----------------------------------------------------------

namespace {

fs::path field_base(const fs::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".f64" || ext == ".json") {
        fs::path b = p;
        b.replace_extension();
        return b;
    }
    return p;
}

fs::path with_ext(const fs::path& base, const char* ext) {
    return fs::path(base.string() + ext);
}

std::uint64_t swap_bytes(std::uint64_t x) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((x >> (8 * i)) & 0xff);
    return r;
}

}  // namespace

void write_field(const fs::path& base, const DistributionField& f) {
    const PhaseGrid& g = f.grid;
    std::vector<double> data = f.values;
    if constexpr (std::endian::native == std::endian::big) {
        for (double& x : data) x = std::bit_cast<double>(swap_bytes(std::bit_cast<std::uint64_t>(x)));
    }
    {
        std::ofstream out(with_ext(base, ".f64"), std::ios::binary);
        if (!out) throw IoError("cannot write " + with_ext(base, ".f64").string());
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!out) throw IoError("short write to " + with_ext(base, ".f64").string());
    }
    json side{{"d", g.d},   {"nx", g.nx},     {"nv", g.nv},     {"dx", g.dx},   {"dv", g.dv},
              {"x0", g.x0()}, {"v0", g.v0()}, {"time", f.time}, {"L_x", g.Lx}, {"L_v", g.Lv}};
    write_text(with_ext(base, ".json"), side.dump(2) + "\n");
}

DistributionField read_field(const fs::path& path) {
    const fs::path base = field_base(path);
    const fs::path bin = with_ext(base, ".f64");
    const fs::path meta = with_ext(base, ".json");
    std::ifstream ms(meta);
    if (!ms) throw IoError("missing field sidecar " + meta.string());
    json side;
    try {
        side = json::parse(ms);
    } catch (const json::exception& e) {
        throw IoError("malformed sidecar " + meta.string() + ": " + e.what());
    }
    PhaseGrid g;
    double time = 0.0;
    try {
        const int d = side.at("d").get<int>();
        const int nx = side.at("nx").get<int>();
        const int nv = side.at("nv").get<int>();
        const double dx = side.at("dx").get<double>();
        const double dv = side.at("dv").get<double>();
        const double Lx = side.contains("L_x") ? side["L_x"].get<double>() : nx * dx;
        const double Lv = side.contains("L_v") ? side["L_v"].get<double>() : nv * dv;
        g = PhaseGrid::make(d, Lx, Lv, nx, nv);
        time = side.at("time").get<double>();
    } catch (const json::exception& e) {
        throw IoError("incomplete sidecar " + meta.string() + ": " + e.what());
    } catch (const ConfigError& e) {
        throw IoError("invalid grid in " + meta.string() + ": " + e.what());
    }
    std::ifstream in(bin, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("missing field data " + bin.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != g.size() * sizeof(double))
        throw IoError(bin.string() + " holds " + std::to_string(bytes) + " bytes, sidecar implies " +
                      std::to_string(g.size() * sizeof(double)));
    DistributionField f(g, time);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("short read from " + bin.string());
    if constexpr (std::endian::native == std::endian::big) {
        for (double& x : f.values) x = std::bit_cast<double>(swap_bytes(std::bit_cast<std::uint64_t>(x)));
    }
    return f;
}

// ---- CSV -------------------------------------------------------------------

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
    if (!out) throw IoError("short write to " + path.string());
}

std::string hprofile_csv(const PhaseGrid& g, const std::vector<double>& h) {
    std::string s = g.d == 1 ? "v,h\n" : "v_1,v_2,h\n";
    for (std::size_t k = 0; k < h.size(); ++k) {
        const Vec v = g.v_of(k);
        s += format_double(v[0]) + ",";
        if (g.d == 2) s += format_double(v[1]) + ",";
        s += format_double(h[k]) + "\n";
    }
    return s;
}

std::string diagnostics_csv(const std::vector<DiagnosticRow>& rows) {
    std::string s = "t,mass_outside_Q,outflow,duhamel_integrand,min_value\n";
    for (const DiagnosticRow& r : rows)
        s += format_double(r.t) + "," + format_double(r.mass_outside_Q) + "," +
             format_double(r.outflow) + "," + format_double(r.duhamel_integrand) + "," +
             format_double(r.min_value) + "\n";
    return s;
}

namespace {

// Minimal reader for the numeric CSVs written above.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name, const fs::path& src) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw IoError(src.string() + " has no column " + name);
        return std::size_t(it - header.begin());
    }
};

Table read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("missing " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) {
            double x = 0.0;
            if (!parse_double(cell, x)) {
                // inf/nan are written by the formatter but rejected by from_chars
                x = std::strtod(cell.c_str(), nullptr);
            }
            row.push_back(x);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace

// ---- manifest --------------------------------------------------------------

json RunManifest::to_json() const {
    json j;
    j["subcommand"] = subcommand;
    j["config"] = config;
    j["seed"] = seed;
    j["artifacts"] = artifacts;
    j["schemas"] = schemas;
    j["summary"] = summary;
    return j;
}

void write_manifest(const fs::path& out, const RunManifest& m) {
    for (const std::string& a : m.artifacts)
        if (!fs::exists(out / a)) throw IoError("artifact " + (out / a).string() + " was not written");
    write_text(out / "manifest.json", m.to_json().dump(2) + "\n");
}

// ---- orchestration -----------------------------------------------------------

namespace {

void prepare_dir(const fs::path& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out.string());
}

void emit(RunManifest& m, const fs::path& out, const std::string& name, const std::string& body,
          const std::string& schema) {
    write_text(out / name, body);
    m.artifacts.push_back(name);
    m.schemas[schema] = 1;
}

void emit_field(RunManifest& m, const fs::path& out, const std::string& base,
                const DistributionField& f) {
    write_field(out / base, f);
    m.artifacts.push_back(base + ".f64");
    m.artifacts.push_back(base + ".json");
    m.schemas["field"] = 1;
}

std::string series_csv(const ObservableSeries& s) {
    std::ostringstream os;
    s.write_csv(os);
    return os.str();
}

json box_json(const SupportBox& b) {
    return {{"center_x", std::vector<double>(b.center_x.begin(), b.center_x.begin() + b.d)},
            {"center_v", std::vector<double>(b.center_v.begin(), b.center_v.begin() + b.d)},
            {"radius", b.radius}};
}

RunManifest do_run(const Config& cfg, const fs::path& out) {
    const SolverConfig c = solver_config(cfg);
    RunManifest m;
    m.subcommand = "run";
    RunOptions opts;
    opts.keep_snapshots = false;
    opts.record_duhamel = cfg.flag("record_duhamel", false);
    json times = json::array();
    opts.on_snapshot = [&](const Snapshot& s) {
        const std::string k = std::to_string(s.index);
        emit_field(m, out, "snapshot_" + k, s.field);
        emit(m, out, "hprofile_" + k + ".csv", hprofile_csv(s.field.grid, s.h), "hprofile");
        times.push_back(s.field.time);
    };
    const RunResult r = run(c, opts);
    emit(m, out, "observables.csv", series_csv(r.series), "observables");
    emit(m, out, "diagnostics.csv", diagnostics_csv(r.diagnostics), "diagnostics");
    m.summary["steps"] = c.step_count();
    m.summary["snapshot_times"] = times;
    m.summary["support_box"] = box_json(r.box);
    m.summary["outflow"] = r.stats.outflow;
    m.summary["out_of_domain_warnings"] = r.stats.warnings;
    m.config = cfg.resolved();
    return m;
}

RunManifest do_picard(const Config& cfg, const fs::path& out) {
    SolverConfig base = picard_defaults();
    const SolverConfig c = build_solver(cfg, base);
    const double T_loc = cfg.number("T_loc", 0.05);
    const double tol = cfg.number("tol", 1e-10);
    const long long max_iter = cfg.integer("max_iter", 30);
    const long long n_intervals = cfg.integer("n_intervals", 16);
    const long long max_halvings = cfg.integer("max_halvings", 4);
    if (max_iter < 1 || n_intervals < 1 || max_halvings < 0)
        throw ValidationError("max_iter and n_intervals must be positive, max_halvings nonnegative");
    const DistributionField f0 = initial_field(c);

    RunManifest m;
    m.subcommand = "picard";
    auto increments_csv = [](const std::vector<double>& inc) {
        std::string s = "n,increment\n";
        for (std::size_t i = 0; i < inc.size(); ++i)
            s += std::to_string(i + 1) + "," + format_double(inc[i]) + "\n";
        return s;
    };
    PicardResult r;
    try {
        r = picard_adaptive(f0, c.gamma, T_loc, tol, int(max_iter), int(n_intervals), int(max_halvings));
    } catch (const NoConvergence& e) {
        write_text(out / "picard_increments.csv", increments_csv(e.increments()));
        throw;
    }
    emit(m, out, "picard_increments.csv", increments_csv(r.increments), "picard_increments");
    emit_field(m, out, "picard_final", r.stack.slices.back());
    m.summary["T_loc"] = r.T_loc;
    m.summary["halvings"] = r.halvings;
    m.summary["iterations"] = r.increments.size();
    m.config = cfg.resolved();
    return m;
}

// Index of t on a uniform grid of spacing h, or -1 if t is not a multiple.
long long grid_index(double t, double h) {
    const double q = t / h;
    const long long k = std::llround(q);
    return std::abs(q - double(k)) <= 1e-9 * std::max(1.0, std::abs(q)) ? k : -1;
}

RunManifest do_particles(const Config& cfg, const fs::path& out) {
    SolverConfig base;
    base.T = 1.0;
    const SolverConfig c = build_solver(cfg, base);
    if (c.initial) throw ValidationError("particles sample the patch; initial_file is not supported");
    if (c.patch.profile != PatchProfile::Uniform || c.patch.smoothing_passes != 0)
        throw ValidationError("particles sample the uniform patch only");
    const std::vector<double> n_list = cfg.list("N_list", {1000.0});
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
    const std::string psi_name = lower(cfg.text("psi", "indicator"));
    PsiSpec psi;
    if (psi_name == "indicator") psi.shape = PsiShape::Indicator;
    else if (psi_name == "triangle") psi.shape = PsiShape::Triangle;
    else throw ValidationError("psi must be indicator or triangle");
    psi.radius = cfg.number("psi_radius", 1.0);
    const double bin_interval = cfg.number("bin_interval", c.T);
    const double obs_interval = cfg.number("obs_interval", 0.01);
    for (double n : n_list)
        if (!(n >= 1.0) || n != std::floor(n)) throw ValidationError("N_list entries must be positive integers");
    if (!(bin_interval > 0.0) || !(obs_interval > 0.0))
        throw ValidationError("bin_interval and obs_interval must be positive");
    const long long n_obs = grid_index(c.T, obs_interval);
    const long long bin_every = grid_index(bin_interval, obs_interval);
    const long long bin_steps = grid_index(bin_interval, c.dt);
    if (n_obs < 1 || bin_every < 1 || bin_steps < 1 || n_obs % bin_every != 0)
        throw ValidationError("T, bin_interval and obs_interval must be nested multiples of dt");

    // kinetic reference at every bin time
    const std::size_t n_bins = std::size_t(n_obs / bin_every) + 1;
    std::vector<DistributionField> ref(n_bins);
    ref[0] = initial_field(c);
    RunOptions opts;
    opts.keep_snapshots = false;
    opts.on_step = [&](const DistributionField& f, std::size_t n) {
        if (n % std::size_t(bin_steps) == 0 && n / bin_steps < n_bins) ref[n / bin_steps] = f;
    };
    run(c, opts);
    const double mass0 = ref[0].mass();

    RunManifest m;
    m.subcommand = "particles";
    m.seed = seed;
    const int d = c.grid.d;
    std::string obs = d == 1 ? "t,mom_1,vel_diameter\n" : "t,mom_1,mom_2,vel_diameter\n";
    std::string conv = "N,t,l1_distance\n";
    std::size_t field_index = 0;
    json runs = json::array();
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        const auto N = static_cast<std::size_t>(n_list[ni]);
        const bool last = ni + 1 == n_list.size();
        ParticleEnsemble ens = ParticleEnsemble::make(d, N, c.gamma, psi);
        sample_patch(ens, c.patch, seed);
        double t = 0.0;
        std::size_t out_of_domain = 0;
        for (long long k = 0; k <= n_obs; ++k) {
            const double target = double(k) * obs_interval;
            while (target - t > 1e-12) {
                const double h = std::min(particle_dt(ens), target - t);
                step_rk4(ens, h);
                t += h;
            }
            t = target;
            if (last) {
                const Vec mv = mean_velocity(ens);
                obs += format_double(t) + "," + format_double(mv[0]) + ",";
                if (d == 2) obs += format_double(mv[1]) + ",";
                obs += format_double(velocity_diameter(ens)) + "\n";
            }
            if (k % bin_every != 0) continue;
            BinnedField b = bin_empirical(ens, c.grid);
            for (double& x : b.field.values) x *= mass0;  // empirical measure carries the kinetic mass
            b.field.time = t;
            out_of_domain = std::max(out_of_domain, b.out_of_domain);
            const double dist = l1_distance(b.field, ref[std::size_t(k / bin_every)]);
            conv += std::to_string(N) + "," + format_double(t) + "," + format_double(dist) + "\n";
            emit_field(m, out, "empirical_" + std::to_string(field_index++), b.field);
        }
        runs.push_back({{"N", N}, {"eps", ens.eps}, {"kappa", ens.kappa}, {"max_out_of_domain", out_of_domain}});
    }
    emit(m, out, "particles_obs.csv", obs, "particles_obs");
    emit(m, out, "convergence.csv", conv, "convergence");
    m.summary["ensembles"] = runs;
    m.summary["observed_N"] = static_cast<std::size_t>(n_list.back());
    m.config = cfg.resolved();
    return m;
}

RunManifest do_monokinetic(const Config& cfg, const fs::path& out) {
    const std::string family = lower(cfg.text("family", "golden"));
    const long long n = cfg.integer("n_markers", 1000);
    const double dt = cfg.number("dt", 1e-3);
    const double T = cfg.number("T", 1.2);
    const double velocity = cfg.number("velocity", 0.5);
    const double width = cfg.number("deposit_width", 0.0);
    if (n < 2) throw ValidationError("n_markers must be at least 2");
    if (!(dt > 0.0) || !(T > 0.0)) throw ValidationError("dt and T must be positive");
    MonokineticState s;
    auto one = [](double) { return 1.0; };
    if (family == "golden") s = golden_monokinetic(std::size_t(n));
    else if (family == "rarefaction") s = make_monokinetic([](double x) { return x; }, one, -0.5, 0.5, std::size_t(n));
    else if (family == "translation")
        s = make_monokinetic([velocity](double) { return velocity; }, one, -0.5, 0.5, std::size_t(n));
    else throw ValidationError("family must be golden, rarefaction or translation");

    PhaseGrid g;
    if (width > 0.0)
        g = PhaseGrid::from_spacing(1, cfg.number("L_x", 2.0), cfg.number("L_v", 4.0),
                                    cfg.number("dx", 0.01), cfg.number("dv", 0.01));

    std::vector<MonoSample> series{sample(s)};
    MonokineticState last_good = s;
    const long long steps = std::llround(std::ceil(T / dt - 1e-9));
    for (long long i = 0; i < steps; ++i) {
        last_good = s;
        try {
            evolve(s, std::min(dt, T - s.t));
            series.push_back(sample(s));
        } catch (const BlowUp&) {
            series.push_back(sample(s));
            break;
        }
    }
    RunManifest m;
    m.subcommand = "monokinetic";
    std::string csv = "t,min_gap,max_dxu,peak_rho\n";
    for (const MonoSample& r : series)
        csv += format_double(r.t) + "," + format_double(r.min_gap) + "," + format_double(r.max_dxu) +
               "," + format_double(r.peak_rho) + "\n";
    emit(m, out, "mono_series.csv", csv, "mono_series");
    m.summary["crossed"] = s.crossed;
    if (s.crossed) {
        m.summary["blowup_bracket"] = {s.cross_lo, s.cross_hi};
        m.summary["blowup_estimate"] = blowup_estimate(series).t_star;
    }
    if (width > 0.0) {
        const MonokineticState& src = s.crossed ? last_good : s;
        MonokineticState shifted = src;  // markers live around 0, the grid on [0, L_x]
        for (Marker& mk : shifted.markers) mk.x += 0.5 * g.Lx;
        emit_field(m, out, "mono_deposit", deposit_to_grid(shifted, g, width));
    }
    m.config = cfg.resolved();
    return m;
}

RunManifest do_homogeneous(const Config& cfg, const fs::path& out) {
    const double gamma = cfg.number("gamma", 1.0);
    const long long d = cfg.integer("d", 1);
    const double w = cfg.number("half_width", 1.0);
    const double height = cfg.number("height", 0.5);
    const std::vector<double> times = cfg.list("times", {0.0, 0.5, 1.0, 2.0});
    if (d != 1 && d != 2) throw ValidationError("d must be 1 or 2");
    if (!(w > 0.0) || !(height > 0.0) || gamma < 0.0)
        throw ValidationError("half_width and height must be positive, gamma nonnegative");
    const HomogeneousState st = HomogeneousState::uniform(gamma, int(d), w, height);
    std::string csv = "t,sup,R,energy,entropy\n";
    for (double t : times) {
        if (t < 0.0) throw ValidationError("times must be nonnegative");
        const HomogeneousObservables o = exact_observables(st, t);
        csv += format_double(t) + "," + format_double(o.sup) + "," + format_double(o.radius) + "," +
               format_double(o.energy) + "," + format_double(o.entropy) + "\n";
    }
    RunManifest m;
    m.subcommand = "homogeneous";
    emit(m, out, "homogeneous.csv", csv, "homogeneous");
    m.summary["mass"] = st.m;
    m.config = cfg.resolved();
    return m;
}

std::vector<fs::path> snapshot_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (std::size_t k = 0;; ++k) {
        const fs::path p = dir / ("snapshot_" + std::to_string(k) + ".f64");
        if (!fs::exists(p)) break;
        files.push_back(p);
    }
    return files;
}

}  // namespace

RunManifest orchestrate(std::string_view subcommand, const Config& cfg, const fs::path& out) {
    cfg.restrict_to(known_keys(subcommand));
    prepare_dir(out);
    RunManifest m;
    if (subcommand == "run") m = do_run(cfg, out);
    else if (subcommand == "picard") m = do_picard(cfg, out);
    else if (subcommand == "particles") m = do_particles(cfg, out);
    else if (subcommand == "monokinetic") m = do_monokinetic(cfg, out);
    else m = do_homogeneous(cfg, out);
    write_manifest(out, m);
    return m;
}

RunManifest scatter_run_dir(const fs::path& run_dir, const fs::path& out) {
    const std::vector<fs::path> files = snapshot_files(run_dir);
    if (files.empty()) throw IoError("missing " + (run_dir / "snapshot_0.f64").string());
    const fs::path manifest_path = run_dir / "manifest.json";
    std::ifstream ms(manifest_path);
    if (!ms) throw IoError("missing " + manifest_path.string());
    json run_manifest;
    try {
        run_manifest = json::parse(ms);
    } catch (const json::exception& e) {
        throw IoError("malformed " + manifest_path.string() + ": " + e.what());
    }
    const json& rc = run_manifest["config"];
    const double gamma = rc.contains("gamma") ? rc["gamma"].get<double>() : 1.0;
    const bool recorded = rc.contains("record_duhamel") && rc["record_duhamel"].get<bool>();

    std::vector<DistributionField> snaps;
    for (const fs::path& p : files) snaps.push_back(read_field(p));

    DuhamelSeries series;
    series.d = snaps.front().grid.d;
    series.radius = enclosing_box(snaps.front()).radius;
    if (recorded) {
        const fs::path diag_path = run_dir / "diagnostics.csv";
        const Table diag = read_csv(diag_path);
        const std::size_t ct = diag.column("t", diag_path);
        const std::size_t cn = diag.column("duhamel_integrand", diag_path);
        for (const auto& row : diag.rows) {
            series.t.push_back(row.at(ct));
            series.integrand.push_back(row.at(cn));
        }
    } else {
        for (const DistributionField& f : snaps) {
            series.t.push_back(f.time);
            series.integrand.push_back(alignment_divergence_l1(f, gamma));
        }
    }

    prepare_dir(out);
    RunManifest m;
    m.subcommand = "scatter";
    std::string csv = "t1,t2,residual,tail_t1\n";
    json pairs = json::array();
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        const double t1 = snaps[i].time;
        if (!(t1 > 0.0)) continue;
        for (std::size_t j = i + 1; j < snaps.size(); ++j) {
            const double t2 = snaps[j].time;
            if (std::abs(t2 - 2.0 * t1) > 1e-9 * t2) continue;
            const double res = cauchy_residual(pullback(snaps[i], t1), pullback(snaps[j], t2));
            const TailReport tail = duhamel_tail(series, t1);
            csv += format_double(t1) + "," + format_double(t2) + "," + format_double(res) + "," +
                   format_double(tail.value()) + "\n";
            pairs.push_back({{"t1", t1}, {"t2", t2}, {"tail_finite", tail.finite}});
        }
    }
    emit(m, out, "scattering.csv", csv, "scattering");
    m.summary["pairs"] = pairs;
    m.summary["integrand_source"] = recorded ? "diagnostics" : "snapshots";
    if (series.t.size() >= 3) m.summary["decay_exponent"] = decay_exponent(series, series.t.back() / 4.0);
    m.config = {{"run_dir", run_dir.string()}, {"gamma", gamma}};
    write_manifest(out, m);
    return m;
}

RunManifest compare_run_dirs(const fs::path& a, const fs::path& b, const fs::path& out) {
    const std::vector<fs::path> fa = snapshot_files(a);
    const std::vector<fs::path> fb = snapshot_files(b);
    if (fa.empty()) throw IoError("missing " + (a / "snapshot_0.f64").string());
    if (fb.empty()) throw IoError("missing " + (b / "snapshot_0.f64").string());
    prepare_dir(out);
    RunManifest m;
    m.subcommand = "compare";
    std::string csv = "k,t,l1_distance\n";
    const std::size_t n = std::min(fa.size(), fb.size());
    for (std::size_t k = 0; k < n; ++k) {
        const DistributionField x = read_field(fa[k]);
        const DistributionField y = read_field(fb[k]);
        if (std::abs(x.time - y.time) > 1e-12 * std::max(1.0, std::abs(x.time)))
            throw GridMismatch("snapshot " + std::to_string(k) + " has times " + format_double(x.time) +
                               " and " + format_double(y.time));
        csv += std::to_string(k) + "," + format_double(x.time) + "," +
               format_double(l1_distance(x, y)) + "\n";
    }
    emit(m, out, "compare.csv", csv, "compare");
    m.summary["matched"] = n;
    m.config = {{"run_dir_a", a.string()}, {"run_dir_b", b.string()}};
    write_manifest(out, m);
    return m;
}

}  // namespace kinetic
