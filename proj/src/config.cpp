#include "stiffen/config.hpp"

#include "stiffen/error.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace stiffen {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

/// Contents of `name(...)` inside text, if present.
std::optional<std::string_view> call_args(std::string_view text, std::string_view name)
{
    const auto pos = text.find(std::string(name) + "(");
    if (pos == std::string_view::npos) return std::nullopt;
    const auto open = pos + name.size() + 1;
    const auto close = text.find(')', open);
    if (close == std::string_view::npos) throw ValidationError("unclosed '" + std::string(name) + "('");
    return text.substr(open, close - open);
}

std::vector<double> numbers(std::string_view args, std::size_t expected, std::string_view what)
{
    std::vector<double> out;
    while (true) {
        const auto comma = args.find(',');
        const auto tok = trim(args.substr(0, comma));
        try {
            out.push_back(parse_double(tok));
        } catch (const IoError&) {
            throw ValidationError("bad number '" + std::string(tok) + "' in " + std::string(what));
        }
        if (comma == std::string_view::npos) break;
        args.remove_prefix(comma + 1);
    }
    if (out.size() != expected)
        throw ValidationError(std::string(what) + " expects " + std::to_string(expected) + " numbers");
    return out;
}

LevelSelector parse_level(std::string_view text)
{
    LevelSelector l;
    const auto args = call_args(text, "level");
    if (!args) return l;
    const auto a = trim(*args);
    if (a == "all") return l;
    if (a == "surface") {
        l.kind = LevelSelector::Kind::Surface;
        return l;
    }
    int v = 0;
    const auto [ptr, ec] = std::from_chars(a.data(), a.data() + a.size(), v);
    if (ec != std::errc{} || ptr != a.data() + a.size() || v < 0)
        throw ValidationError("level(...) takes 'all', 'surface' or a non-negative level index");
    l.kind = LevelSelector::Kind::Index;
    l.index = v;
    return l;
}

double to_double(const std::string& key, std::string_view v)
{
    try {
        return parse_double(v);
    } catch (const IoError&) {
        throw ValidationError(key + ": expected a number, got '" + std::string(v) + "'");
    }
}

int to_int(const std::string& key, std::string_view v)
{
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ValidationError(key + ": expected an integer, got '" + std::string(v) + "'");
    return out;
}

bool to_bool(const std::string& key, std::string_view v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ValidationError(key + ": expected true or false, got '" + std::string(v) + "'");
}

template <typename T>
T choose(const std::string& key, std::string_view v, std::initializer_list<std::pair<const char*, T>> options)
{
    std::string list;
    for (const auto& [name, value] : options) {
        if (v == name) return value;
        list += list.empty() ? name : std::string(", ") + name;
    }
    throw ValidationError(key + ": unknown value '" + std::string(v) + "' (expected one of " + list + ")");
}

void require(bool ok, const std::string& message)
{
    if (!ok) throw ValidationError(message);
}

}  // namespace

Box parse_box(std::string_view text)
{
    const auto args = call_args(text, "box");
    if (!args) throw ValidationError("selector needs box(x0,y0,z0,x1,y1,z1)");
    const auto v = numbers(*args, 6, "box(...)");
    const Eigen::Vector3d a(v[0], v[1], v[2]), b(v[3], v[4], v[5]);
    return {a.cwiseMin(b), a.cwiseMax(b)};
}

LoadSelector parse_load(std::string_view text)
{
    LoadSelector s;
    s.load.box = parse_box(text);
    const auto args = call_args(text, "force");
    if (!args) throw ValidationError("load needs force(Fx,Fy,Fz)");
    const auto f = numbers(*args, 3, "force(...)");
    s.load.force = Eigen::Vector3d(f[0], f[1], f[2]);
    s.level = parse_level(text);
    return s;
}

FixSelector parse_fix(std::string_view text)
{
    FixSelector s;
    s.box = parse_box(text);
    s.level = parse_level(text);
    return s;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir)
{
    RunConfig c;
    auto path_of = [&](std::string_view v) {
        std::filesystem::path p{std::string(v)};
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    std::map<std::string, std::string> scalars;
    std::vector<std::string> repeated;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::string key, value;
        const auto eq = line.find('=');
        if (eq != std::string_view::npos) {
            key = std::string(trim(line.substr(0, eq)));
            value = std::string(trim(line.substr(eq + 1)));
        } else if (line.starts_with("load ") || line.starts_with("fix ")) {
            const auto sp = line.find(' ');
            key = std::string(line.substr(0, sp));
            value = std::string(trim(line.substr(sp)));
        } else {
            throw ValidationError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        try {
            if (key == "load") {
                c.loads.push_back(parse_load(value));
                repeated.push_back("load = " + value);
                continue;
            }
            if (key == "fix") {
                c.fixes.push_back(parse_fix(value));
                repeated.push_back("fix = " + value);
                continue;
            }
            if (!scalars.emplace(key, value).second) throw ValidationError("key '" + key + "' given twice");
            const std::string_view v = value;
            if (key == "input") c.input = path_of(v);
            else if (key == "input.format") c.input_format = choose<MeshFormat>(key, v, {{"obj", MeshFormat::Obj}, {"stl", MeshFormat::Stl}});
            else if (key == "param.method")
                c.param.method = choose<ParamMethod>(key, v, {{"tutte", ParamMethod::Tutte}, {"harmonic", ParamMethod::Harmonic}, {"arap", ParamMethod::ARAP}});
            else if (key == "param.weights")
                c.param.weights = choose<WeightScheme>(key, v, {{"uniform", WeightScheme::Uniform}, {"mean_value", WeightScheme::MeanValue}});
            else if (key == "param.springs") c.param.cotan = choose<bool>(key, v, {{"cotan", true}, {"uniform", false}});
            else if (key == "param.arap_variant")
                c.param.arap.variant = choose<ArapVariant>(key, v, {{"similarity", ArapVariant::Similarity}, {"rigid", ArapVariant::Rigid}});
            else if (key == "param.tol") c.param.arap.tol = to_double(key, v);
            else if (key == "param.max_iters") c.param.arap.max_iters = to_int(key, v);
            else if (key == "param.auto") c.param.auto_advance = to_bool(key, v);
            else if (key == "param.seam") c.param.seam_file = path_of(v);
            else if (key == "param.charts") c.param.chart_file = path_of(v);
            else if (key == "gate.mode")
                c.param.gate = choose<GateOverride>(key, v, {{"auto", GateOverride::Auto}, {"planar", GateOverride::Planar}, {"after-seam-cut", GateOverride::AfterSeamCut}});
            else if (key == "bspline.p") c.p = to_int(key, v);
            else if (key == "bspline.q") c.q = to_int(key, v);
            else if (key == "bspline.n") c.n = to_int(key, v);
            else if (key == "bspline.m") c.m = to_int(key, v);
            else if (key == "bspline.hmax") c.h_max = to_double(key, v);
            else if (key == "material.E") c.E = to_double(key, v);
            else if (key == "material.nu") c.nu = to_double(key, v);
            else if (key == "model.skin") c.skin = to_double(key, v);
            else if (key == "model.layers") c.layers = to_int(key, v);
            else if (key == "model.direction")
                c.direction = choose<OffsetDirection>(key, v, {{"outward", OffsetDirection::AlongNormal}, {"inward", OffsetDirection::AgainstNormal}});
            else if (key == "opt.volume_fraction") c.opt.volume_fraction = to_double(key, v);
            else if (key == "opt.max_iters") c.opt.max_iters = to_int(key, v);
            else if (key == "opt.move") c.opt.move_fraction = to_double(key, v);
            else if (key == "opt.tol") c.opt.tol = to_double(key, v);
            else if (key == "opt.window") c.opt.window = to_int(key, v);
            else if (key == "opt.g_tol") c.opt.g_tol = to_double(key, v);
            else if (key == "opt.beta_start") c.opt.beta_start = to_double(key, v);
            else if (key == "opt.beta_cap") c.opt.beta_cap = to_double(key, v);
            else if (key == "opt.beta_every") c.opt.beta_every = to_int(key, v);
            else if (key == "opt.exact_volume") c.opt.exact_volume = to_bool(key, v);
            else if (key == "opt.adaptive_move") c.opt.adaptive_move = to_bool(key, v);
            else if (key == "opt.snapshot_every") c.snapshot_every = to_int(key, v);
            else if (key == "output.dir") c.output_dir = path_of(v);
            else throw ValidationError("unknown key '" + key + "'");
        } catch (const ValidationError& e) {
            throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    require(!c.input.empty(), "config: 'input' is required");
    require(c.p >= 0 && c.q >= 0, "bspline.p and bspline.q must be non-negative");
    require(c.n >= c.p + 1 && c.m >= c.q + 1, "bspline.n must exceed p and bspline.m must exceed q");
    require(c.h_max > 0.0, "bspline.hmax must be positive");
    require(c.E > 0.0, "material.E must be positive");
    require(c.nu > -1.0 && c.nu < 0.5, "material.nu must lie in (-1, 0.5)");
    require(c.skin >= 0.0, "model.skin must be non-negative");
    require(c.layers >= 1, "model.layers must be at least 1");
    require(c.opt.volume_fraction > 0.0 && c.opt.volume_fraction <= 1.0, "opt.volume_fraction must lie in (0, 1]");
    require(c.opt.max_iters >= 1, "opt.max_iters must be positive");
    require(c.opt.move_fraction > 0.0 && c.opt.move_fraction <= 1.0, "opt.move must lie in (0, 1]");
    require(c.opt.tol > 0.0 && c.opt.g_tol >= 0.0, "opt.tol must be positive and opt.g_tol non-negative");
    require(c.opt.window >= 1, "opt.window must be positive");
    require(c.opt.beta_start > 0.0 && c.opt.beta_cap >= c.opt.beta_start, "need 0 < opt.beta_start <= opt.beta_cap");
    require(c.opt.beta_every >= 0 && c.snapshot_every >= 0, "opt.beta_every and opt.snapshot_every must be non-negative");
    require(c.param.arap.tol > 0.0 && c.param.arap.max_iters >= 1, "param.tol and param.max_iters must be positive");

    for (const auto& [k, v] : scalars)
        if (k != "output.dir") c.echo.push_back(k + " = " + v);
    c.echo.insert(c.echo.end(), repeated.begin(), repeated.end());
    return c;
}

RunConfig load_config_file(const std::filesystem::path& path)
{
    return parse_config(read_file(path), path.parent_path());
}

void validate_for_optimize(const RunConfig& config)
{
    require(!config.fixes.empty(), "no constraint selector: add at least one 'fix = box(...)' line");
    require(!config.loads.empty(), "no load selector: add at least one 'load = box(...) force(...)' line");
}

}  // namespace stiffen
