#include "stiffen/pipeline.hpp"

#include "stiffen/error.hpp"
#include "stiffen/mesh_io.hpp"
#include "stiffen/vtk_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace stiffen {

namespace fs = std::filesystem;

const char* to_string(ParamStage stage)
{
    switch (stage) {
    case ParamStage::Planar: return "planar";
    case ParamStage::SeamCut: return "seam-cut";
    case ParamStage::MultiChart: return "multi-chart";
    }
    return "?";
}

namespace {

GateMode mode_for(const ParamSettings& s, GateMode stage_mode)
{
    switch (s.gate) {
    case GateOverride::Planar: return GateMode::Planar;
    case GateOverride::AfterSeamCut: return GateMode::AfterSeamCut;
    case GateOverride::Auto: break;
    }
    return stage_mode;
}

SubMesh identity_sub(const TriSurfaceMesh& mesh)
{
    SubMesh s;
    s.mesh = mesh;
    s.parent_vertex.resize(static_cast<std::size_t>(mesh.num_vertices()));
    std::iota(s.parent_vertex.begin(), s.parent_vertex.end(), 0);
    s.parent_face.resize(static_cast<std::size_t>(mesh.num_faces()));
    std::iota(s.parent_face.begin(), s.parent_face.end(), 0);
    return s;
}

/// Re-expresses `child` (ids into `mid`) in terms of mid's parent.
SubMesh compose(const SubMesh& mid, SubMesh child)
{
    for (auto& v : child.parent_vertex) v = mid.parent_vertex[static_cast<std::size_t>(v)];
    for (auto& f : child.parent_face) f = mid.parent_face[static_cast<std::size_t>(f)];
    return child;
}

std::string summary(const ChartPiece& c)
{
    std::ostringstream os;
    os << "chart " << c.chart.chart_id << ": " << c.sub.mesh.num_faces() << " triangles, D_t in ["
       << format_double(c.report.dt_min) << ", " << format_double(c.report.dt_max)
       << "], D2_global " << format_double(c.report.d2_global) << ", flipped " << c.report.flipped.size()
       << ", degenerate " << c.report.degenerate.size() << ", gate " << to_string(c.gate.mode) << ": "
       << to_string(c.gate.verdict);
    return os.str();
}

GateDecision combine(const std::vector<ChartPiece>& charts, GateMode mode)
{
    GateDecision d;
    d.mode = mode;
    for (const auto& c : charts) {
        if (c.gate.verdict != GateVerdict::Pass) d.verdict = c.gate.verdict;
        for (int f : c.gate.offending) d.offending.push_back(c.sub.parent_face[static_cast<std::size_t>(f)]);
    }
    std::sort(d.offending.begin(), d.offending.end());
    return d;
}

}  // namespace

ChartPiece parameterize_piece(SubMesh sub, const ParamSettings& settings, BoundaryShape shape, GateMode mode,
                              int chart_id)
{
    const TriSurfaceMesh& mesh = sub.mesh;
    const auto topo = classify_topology(mesh);
    if (topo.tag == TopologyTag::Closed) throw TopologyError("cannot flatten a closed piece without a seam");
    const auto& loops = mesh.boundary_loops();
    std::size_t main = 0;
    double best = -1.0;
    for (std::size_t l = 0; l < loops.size(); ++l) {
        double len = 0.0;
        for (std::size_t i = 0; i < loops[l].size(); ++i)
            len += (mesh.position(loops[l][(i + 1) % loops[l].size()]) - mesh.position(loops[l][i])).norm();
        if (len > best) {
            best = len;
            main = l;
        }
    }
    const auto& loop = loops[main];
    const BoundaryUV boundary = shape == BoundaryShape::Circle
                                    ? map_boundary_to_circle(mesh, positive_circle_order(loop))
                                    : map_boundary_to_square(mesh, loop, square_corners(mesh, loop));
    const bool single = topo.tag == TopologyTag::SingleBoundary;

    ChartPiece piece;
    ParamChart init = single ? tutte_embed(mesh, boundary, settings.weights)
                             : convex_combination(mesh, boundary, settings.weights);
    switch (settings.method) {
    case ParamMethod::Tutte: piece.chart = std::move(init); break;
    case ParamMethod::Harmonic:
        if (single) {
            const auto k = settings.cotan ? cotan_spring_weights(mesh) : uniform_spring_weights(mesh);
            piece.chart = harmonic_embed(mesh, boundary, k);
        } else {
            piece.chart = std::move(init);
        }
        break;
    case ParamMethod::ARAP: piece.chart = arap_flatten(mesh, init, settings.arap).chart; break;
    }
    piece.chart.chart_id = chart_id;
    piece.report = compute_distortion(mesh, piece.chart.uv);
    piece.gate = quality_gate(piece.report, mode);
    piece.sub = std::move(sub);
    return piece;
}

ParamOutcome run_param(const TriSurfaceMesh& mesh, const ParamSettings& settings)
{
    ParamOutcome out;
    const auto topo = classify_topology(mesh);
    {
        std::ostringstream os;
        os << "input: " << mesh.num_vertices() << " vertices, " << mesh.num_faces() << " triangles, "
           << to_string(topo.tag) << " (boundary loops " << topo.boundary_count << ", genus " << topo.genus << ")";
        out.log.push_back(os.str());
    }

    // Stage 1: planar attempt on the surface as given.
    if (topo.tag != TopologyTag::Closed) {
        out.stage = ParamStage::Planar;
        auto piece = parameterize_piece(identity_sub(mesh), settings, BoundaryShape::Circle,
                                        mode_for(settings, GateMode::Planar), 0);
        out.log.push_back("planar: " + summary(piece));
        out.charts = {std::move(piece)};
        out.gate = combine(out.charts, out.charts.front().gate.mode);
        if (out.passed()) return out;
        if (!settings.auto_advance && !settings.seam_file) {
            out.log.push_back("gate failed: rerun with --auto or give param.seam to cut the surface");
            return out;
        }
    } else {
        out.log.push_back("closed surface: a seam cut is required before flattening");
    }

    // Stage 2: seam cut.
    std::optional<SeamPath> seam;
    if (settings.seam_file) {
        seam = read_seam_file(*settings.seam_file);
        out.log.push_back("seam: " + std::to_string(seam->edges.size()) + " edges from " + settings.seam_file->string());
    } else if (settings.auto_advance || topo.tag == TopologyTag::Closed) {
        seam = auto_seam(mesh);
        if (seam) out.log.push_back("seam: " + std::to_string(seam->edges.size()) + " edges (automatic)");
        else out.log.push_back("seam: surface already has a single boundary; no cut possible");
    }
    if (seam) {
        SubMesh cut = cut_seam(mesh, *seam);
        const auto after = classify_topology(cut.mesh);
        out.seam = seam;
        if (after.tag == TopologyTag::SingleBoundary) {
            out.stage = ParamStage::SeamCut;
            auto piece = parameterize_piece(std::move(cut), settings, BoundaryShape::Square,
                                            mode_for(settings, GateMode::AfterSeamCut), 0);
            out.log.push_back("seam-cut: " + summary(piece));
            out.charts = {std::move(piece)};
            out.gate = combine(out.charts, out.charts.front().gate.mode);
            if (out.passed()) return out;
        } else {
            out.log.push_back(std::string("seam-cut: result is ") + to_string(after.tag) + ", not a disk");
        }
        if (!settings.auto_advance && !settings.chart_file) {
            out.log.push_back("gate failed: rerun with --auto or give param.charts to split the surface");
            if (out.charts.empty()) throw GateError("seam cut did not produce a disk and no fallback was requested");
            return out;
        }
    } else if (!settings.auto_advance && !settings.chart_file) {
        return out;
    }

    // Stage 3: multi-chart segmentation of the input surface.
    out.stage = ParamStage::MultiChart;
    const ChartAssignment assignment =
        settings.chart_file ? read_chart_file(*settings.chart_file) : split_two_way(mesh);
    auto pieces = segment_charts(mesh, assignment);
    out.charts.clear();
    const GateMode mode = mode_for(settings, GateMode::AfterSeamCut);
    for (std::size_t c = 0; c < pieces.size(); ++c) {
        SubMesh piece = std::move(pieces[c]);
        BoundaryShape shape = BoundaryShape::Circle;
        if (classify_topology(piece.mesh).tag != TopologyTag::SingleBoundary) {
            const auto s = auto_seam(piece.mesh);
            if (!s) throw GateError("chart " + std::to_string(c) + " cannot be opened into a disk");
            piece = compose(piece, cut_seam(piece.mesh, *s));
            shape = BoundaryShape::Square;
        }
        out.charts.push_back(parameterize_piece(std::move(piece), settings, shape, mode, static_cast<int>(c)));
        out.log.push_back("multi-chart: " + summary(out.charts.back()));
    }
    out.gate = combine(out.charts, mode);
    if (!out.passed()) {
        std::ostringstream os;
        os << "distortion gate still fails after multi-chart segmentation (" << out.gate.offending.size()
           << " offending triangles)";
        for (const auto& c : out.charts) os << "\n  " << summary(c);
        throw GateError(os.str());
    }
    return out;
}

ChartAtlas make_atlas(const TriSurfaceMesh& parent, std::span<const ChartPiece> charts)
{
    ChartAtlas a;
    a.face_chart.assign(static_cast<std::size_t>(parent.num_faces()), -1);
    a.corner_uv.resize(static_cast<std::size_t>(parent.num_faces()));
    for (std::size_t c = 0; c < charts.size(); ++c) {
        const auto& piece = charts[c];
        const auto& m = piece.sub.mesh;
        for (int lf = 0; lf < m.num_faces(); ++lf) {
            const int pf = piece.sub.parent_face[static_cast<std::size_t>(lf)];
            if (pf < 0 || pf >= parent.num_faces()) throw ValidationError("chart face maps outside the surface");
            if (a.face_chart[static_cast<std::size_t>(pf)] >= 0)
                throw ValidationError("surface triangle " + std::to_string(pf) + " belongs to two charts");
            a.face_chart[static_cast<std::size_t>(pf)] = static_cast<int>(c);
            for (int k = 0; k < 3; ++k) {
                const int pv = parent.corner(pf, k);
                int local = -1;
                for (int j = 0; j < 3; ++j)
                    if (piece.sub.parent_vertex[static_cast<std::size_t>(m.corner(lf, j))] == pv) local = m.corner(lf, j);
                if (local < 0) throw ValidationError("chart triangle does not match its surface triangle");
                a.corner_uv[static_cast<std::size_t>(pf)].col(k) = piece.chart.uv.row(local).transpose();
            }
        }
    }
    for (int f = 0; f < parent.num_faces(); ++f)
        if (a.face_chart[static_cast<std::size_t>(f)] < 0)
            throw ValidationError("surface triangle " + std::to_string(f) + " is not covered by any chart");
    return a;
}

Eigen::VectorXd face_stretch(const TriSurfaceMesh& parent, std::span<const ChartPiece> charts)
{
    Eigen::VectorXd dt = Eigen::VectorXd::Zero(parent.num_faces());
    for (const auto& c : charts)
        for (std::size_t lf = 0; lf < c.report.dt.size(); ++lf) dt[c.sub.parent_face[lf]] = c.report.dt[lf];
    return dt;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const fs::path& p)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

fs::path chart_path(const fs::path& dir, std::size_t k, const char* suffix)
{
    return dir / ("chart_" + std::to_string(k) + suffix);
}

}  // namespace

std::vector<fs::path> write_charts(const fs::path& dir, const ParamOutcome& outcome)
{
    fs::create_directories(dir);
    std::vector<fs::path> written;
    for (std::size_t k = 0; k < outcome.charts.size(); ++k) {
        const auto& c = outcome.charts[k];
        written.push_back(chart_path(dir, k, ".obj"));
        write_obj_file(written.back(), c.sub.mesh, &c.chart.uv);
        written.push_back(chart_path(dir, k, ".parent.txt"));
        {
            auto out = open_out(written.back());
            out << "vertices " << c.sub.parent_vertex.size() << '\n';
            for (int v : c.sub.parent_vertex) out << v << '\n';
            out << "faces " << c.sub.parent_face.size() << '\n';
            for (int f : c.sub.parent_face) out << f << '\n';
        }
        written.push_back(dir / ("distortion_" + std::to_string(k) + ".csv"));
        {
            auto out = open_out(written.back());
            write_distortion_csv(out, c.report);
        }
        written.push_back(dir / ("distortion_" + std::to_string(k) + ".vtk"));
        {
            auto out = open_out(written.back());
            const Eigen::VectorXd dt = Eigen::Map<const Eigen::VectorXd>(c.report.dt.data(), static_cast<Eigen::Index>(c.report.dt.size()));
            write_surface_vtk(out, c.sub.mesh, {{"D_t", dt}}, &c.chart.uv);
        }
    }
    written.push_back(dir / "gate.txt");
    auto out = open_out(written.back());
    out << "stage " << to_string(outcome.stage) << "\nmode " << to_string(outcome.gate.mode) << "\nverdict "
        << to_string(outcome.gate.verdict) << "\ncharts " << outcome.charts.size() << "\noffending "
        << outcome.gate.offending.size() << '\n';
    for (const auto& line : outcome.log) out << "# " << line << '\n';
    return written;
}

std::vector<ChartPiece> read_charts(const fs::path& dir, GateMode mode)
{
    std::vector<ChartPiece> charts;
    for (std::size_t k = 0; fs::exists(chart_path(dir, k, ".obj")); ++k) {
        auto loaded = load_surface_file(chart_path(dir, k, ".obj"), MeshFormat::Obj);
        if (!loaded.uv) throw IoError(chart_path(dir, k, ".obj").string() + " has no texture coordinates");
        if (loaded.report.dropped_degenerate || loaded.report.dropped_duplicate || loaded.report.dropped_unreferenced ||
            loaded.report.reoriented)
            throw IoError(chart_path(dir, k, ".obj").string() + " changed while loading; rewrite it with 'param'");
        ChartPiece c;
        c.sub.mesh = std::move(loaded.mesh);
        c.chart.uv = *loaded.uv;
        c.chart.chart_id = static_cast<int>(k);
        std::istringstream in(read_file(chart_path(dir, k, ".parent.txt")));
        std::string word;
        std::size_t count = 0;
        if (!(in >> word >> count) || word != "vertices" || count != static_cast<std::size_t>(c.sub.mesh.num_vertices()))
            throw IoError("chart parent map does not match chart " + std::to_string(k));
        c.sub.parent_vertex.resize(count);
        for (auto& v : c.sub.parent_vertex) in >> v;
        if (!(in >> word >> count) || word != "faces" || count != static_cast<std::size_t>(c.sub.mesh.num_faces()))
            throw IoError("chart parent map does not match chart " + std::to_string(k));
        c.sub.parent_face.resize(count);
        for (auto& f : c.sub.parent_face) in >> f;
        if (!in) throw IoError("chart parent map truncated for chart " + std::to_string(k));
        c.report = compute_distortion(c.sub.mesh, c.chart.uv);
        c.gate = quality_gate(c.report, mode);
        charts.push_back(std::move(c));
    }
    if (charts.empty()) throw IoError("no chart_0.obj in " + dir.string() + "; run 'param' first");
    return charts;
}

TriSurfaceMesh load_input_mesh(const RunConfig& config)
{
    return config.input_format ? load_surface_file(config.input, *config.input_format).mesh
                               : load_surface_file(config.input).mesh;
}

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

namespace {

int resolve_level(const PrismModel& model, const LevelSelector& l)
{
    switch (l.kind) {
    case LevelSelector::Kind::All: return -1;
    case LevelSelector::Kind::Surface: return model.surface_level;
    case LevelSelector::Kind::Index:
        if (l.index >= static_cast<int>(model.levels.size()))
            throw ValidationError("level(" + std::to_string(l.index) + ") exceeds the " +
                                  std::to_string(model.levels.size()) + " node levels");
        return l.index;
    }
    return -1;
}

}  // namespace

PrismModel build_model(const RunConfig& config, const TriSurfaceMesh& parent, const ChartAtlas& atlas)
{
    validate_for_optimize(config);
    PrismModel model = extrude_prisms(parent, atlas, config.layers, config.h_max, config.skin, config.direction,
                                      config.E, config.nu);
    for (const auto& fix : config.fixes) apply_constraints(model, std::span<const Box>(&fix.box, 1), resolve_level(model, fix.level));
    for (const auto& load : config.loads)
        apply_loads(model, std::span<const LoadSpec>(&load.load, 1), resolve_level(model, load.level));
    return model;
}

std::vector<BSplineHeightField<double>> make_fields(const RunConfig& config, int charts)
{
    std::vector<BSplineHeightField<double>> out;
    for (int c = 0; c < charts; ++c) out.emplace_back(config.p, config.q, config.n, config.m, config.h_max, 0.0, c);
    return out;
}

namespace {

void write_model_vtk(const fs::path& path, const PrismModel& model, const Eigen::VectorXd& rho,
                     const Eigen::VectorXd& face_dt, const Eigen::VectorXd* U, bool solid_only)
{
    Eigen::VectorXd chart(static_cast<Eigen::Index>(model.elements.size()));
    Eigen::VectorXd dt(chart.size());
    std::vector<int> cells;
    for (std::size_t k = 0; k < model.elements.size(); ++k) {
        const auto& e = model.elements[k];
        chart[static_cast<Eigen::Index>(k)] = e.chart;
        dt[static_cast<Eigen::Index>(k)] = face_dt.size() ? face_dt[e.face] : 0.0;
        if (solid_only && !e.is_skin && rho[static_cast<Eigen::Index>(k)] > 0.5) cells.push_back(static_cast<int>(k));
    }
    auto out = open_out(path);
    if (solid_only && cells.empty()) {
        out << "# vtk DataFile Version 3.0\nstiffeners (none)\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 0 double\n"
               "CELLS 0 0\nCELL_TYPES 0\n";
        return;
    }
    write_prism_vtk(out, model, {{"rho", rho}, {"chart", chart}, {"D_t", dt}}, U, cells);
}

}  // namespace

OptimizeOutcome run_optimize(const RunConfig& config, const TriSurfaceMesh& parent,
                             std::span<const ChartPiece> charts, const fs::path& snapshot_dir)
{
    OptimizeOutcome out;
    out.model = build_model(config, parent, make_atlas(parent, charts));
    out.fields = make_fields(config, static_cast<int>(charts.size()));
    OptProblem problem;
    problem.model = &out.model;
    problem.fields = out.fields;
    problem.settings = config.opt;
    const Eigen::VectorXd face_dt = face_stretch(parent, charts);
    std::function<void(const OptState&)> snapshot;
    if (config.snapshot_every > 0 && !snapshot_dir.empty()) {
        fs::create_directories(snapshot_dir);
        snapshot = [&](const OptState& st) {
            const int it = st.history.back().iteration;
            if (it % config.snapshot_every != 0) return;
            std::ostringstream name;
            name << "iter_" << std::setw(4) << std::setfill('0') << it << ".vtk";
            write_model_vtk(snapshot_dir / name.str(), out.model, st.rho, face_dt, &st.solution.U, false);
        };
    }
    out.state = optimize(problem, snapshot);
    DesignSpace space(out.model, out.fields);
    out.fields = space.unpack(out.state.x);
    out.baseline = uniform_baseline(out.model, space, out.state.beta, config.opt.volume_fraction);
    return out;
}

std::vector<fs::path> write_optimize_outputs(const fs::path& dir, const OptimizeOutcome& o, const Eigen::VectorXd& face_dt)
{
    fs::create_directories(dir);
    std::vector<fs::path> written;
    written.push_back(dir / "history.csv");
    {
        auto out = open_out(written.back());
        write_history_csv(out, o.state.history);
    }
    for (std::size_t c = 0; c < o.fields.size(); ++c) {
        written.push_back(dir / ("field_" + std::to_string(c) + ".txt"));
        auto out = open_out(written.back());
        write_field(out, o.fields[c]);
    }
    written.push_back(dir / "design.txt");
    {
        auto out = open_out(written.back());
        const auto& last = o.state.history.back();
        out << "beta " << format_double(o.state.beta) << "\ncharts " << o.fields.size() << "\niterations "
            << o.state.history.size() << "\nconverged " << (o.state.converged ? 1 : 0) << "\ncompliance "
            << format_double(last.compliance) << "\nvolume_fraction " << format_double(last.volume_fraction) << '\n';
    }
    written.push_back(dir / "baseline.txt");
    {
        auto out = open_out(written.back());
        out << "height " << format_double(o.baseline.height) << "\ncompliance " << format_double(o.baseline.compliance)
            << "\nvolume_fraction " << format_double(o.baseline.volume_fraction) << '\n';
    }
    written.push_back(dir / "model.vtk");
    write_model_vtk(written.back(), o.model, o.state.rho, face_dt, &o.state.solution.U, false);
    written.push_back(dir / "stiffeners.vtk");
    write_model_vtk(written.back(), o.model, o.state.rho, face_dt, nullptr, true);
    return written;
}

std::vector<fs::path> run_export(const RunConfig& config, const std::string& format)
{
    if (format != "vtk" && format != "obj" && format != "csv")
        throw ValidationError("unknown export format '" + format + "' (supported: vtk, obj, csv)");
    const fs::path dir = config.output_dir;
    const fs::path out_dir = dir / "export";
    fs::create_directories(out_dir);
    const auto charts = read_charts(dir, GateMode::AfterSeamCut);
    std::vector<fs::path> written;
    if (format == "obj") {
        for (std::size_t k = 0; k < charts.size(); ++k) {
            written.push_back(chart_path(out_dir, k, ".obj"));
            write_obj_file(written.back(), charts[k].sub.mesh, &charts[k].chart.uv);
        }
        return written;
    }
    if (format == "csv") {
        for (std::size_t k = 0; k < charts.size(); ++k) {
            written.push_back(out_dir / ("distortion_" + std::to_string(k) + ".csv"));
            auto out = open_out(written.back());
            write_distortion_csv(out, charts[k].report);
        }
    }

    const TriSurfaceMesh parent = load_input_mesh(config);
    const PrismModel model = build_model(config, parent, make_atlas(parent, charts));
    std::vector<BSplineHeightField<double>> fields;
    for (std::size_t c = 0; c < charts.size(); ++c)
        fields.push_back(read_field_file((dir / ("field_" + std::to_string(c) + ".txt")).string()));
    double beta = 0.0;
    {
        std::istringstream in(read_file(dir / "design.txt"));
        std::string key, value;
        while (in >> key >> value)
            if (key == "beta") beta = parse_double(value);
        if (!(beta > 0.0)) throw IoError("design.txt has no beta; run 'optimize' first");
    }
    const Eigen::VectorXd rho = element_densities(model, fields, beta);
    if (format == "csv") {
        written.push_back(out_dir / "elements.csv");
        auto out = open_out(written.back());
        out << "element,face,layer,chart,rho,volume\n";
        for (std::size_t k = 0; k < model.elements.size(); ++k) {
            const auto& e = model.elements[k];
            out << k << ',' << e.face << ',' << e.layer << ',' << e.chart << ','
                << format_double(rho[static_cast<Eigen::Index>(k)]) << ',' << format_double(e.volume) << '\n';
        }
        return written;
    }
    const SolveResult sol = assemble_and_solve(model, rho);
    const Eigen::VectorXd dt = face_stretch(parent, charts);
    written.push_back(out_dir / "model.vtk");
    write_model_vtk(written.back(), model, rho, dt, &sol.U, false);
    written.push_back(out_dir / "stiffeners.vtk");
    write_model_vtk(written.back(), model, rho, dt, nullptr, true);
    return written;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string git_blob_sha1(std::string_view bytes)
{
    const std::string head = "blob " + std::to_string(bytes.size()) + '\0';
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, head.data(), head.size()) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("SHA-1 computation failed");
    }
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

fs::path write_manifest(const fs::path& dir, const std::string& command, const RunConfig& config,
                        std::span<const fs::path> inputs, std::span<const fs::path> outputs)
{
    std::ostringstream body;
    body << "stiffen-manifest 1\ncommand " << command << '\n';
    for (const auto& line : config.echo) body << "config " << line << '\n';
    for (const auto& p : inputs) body << "input " << p.filename().string() << ' ' << git_blob_sha1(read_file(p)) << '\n';
    for (const auto& p : outputs) {
        std::error_code ec;
        const auto rel = fs::relative(p, dir, ec);
        body << "output " << (ec ? p.filename() : rel).generic_string() << ' ' << git_blob_sha1(read_file(p)) << '\n';
    }
    const std::string text = body.str();
    const fs::path path = dir / "manifest.txt";
    auto out = open_out(path);
    out << text << "run " << git_blob_sha1(text) << '\n';
    return path;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

std::vector<fs::path> config_inputs(const RunConfig& c)
{
    std::vector<fs::path> in{c.input};
    if (c.param.seam_file) in.push_back(*c.param.seam_file);
    if (c.param.chart_file) in.push_back(*c.param.chart_file);
    return in;
}

void print_log(std::ostream& log, const ParamOutcome& o)
{
    for (const auto& line : o.log) log << line << '\n';
    log << "verdict: " << to_string(o.gate.verdict) << " (" << to_string(o.stage) << ", " << o.charts.size()
        << " chart" << (o.charts.size() == 1 ? "" : "s") << ")\n";
}

}  // namespace

int cmd_param(const RunConfig& config, std::ostream& log)
{
    const TriSurfaceMesh mesh = load_input_mesh(config);
    const auto outcome = run_param(mesh, config.param);
    print_log(log, outcome);
    const auto written = write_charts(config.output_dir, outcome);
    write_manifest(config.output_dir, "param", config, config_inputs(config), written);
    return outcome.passed() ? 0 : 2;
}

int cmd_cut(const RunConfig& config, std::ostream& log)
{
    const TriSurfaceMesh mesh = load_input_mesh(config);
    const auto before = classify_topology(mesh);
    const auto seam = config.param.seam_file ? std::optional<SeamPath>(read_seam_file(*config.param.seam_file))
                                             : auto_seam(mesh);
    if (!seam) throw TopologyError("surface has a single boundary already; nothing to cut");
    const SubMesh cut = cut_seam(mesh, *seam);
    const auto after = classify_topology(cut.mesh);
    log << "before: " << to_string(before.tag) << " (loops " << before.boundary_count << ")\nafter: "
        << to_string(after.tag) << " (loops " << after.boundary_count << "), " << cut.mesh.num_vertices()
        << " vertices\n";
    fs::create_directories(config.output_dir);
    std::vector<fs::path> written{config.output_dir / "cut.obj", config.output_dir / "cut.parent.txt",
                                  config.output_dir / "seam.txt"};
    write_obj_file(written[0], cut.mesh);
    {
        auto out = open_out(written[1]);
        for (int v : cut.parent_vertex) out << v << '\n';
    }
    write_seam_file(written[2], *seam);
    write_manifest(config.output_dir, "cut", config, config_inputs(config), written);
    return 0;
}

int cmd_gate(const RunConfig& config, std::ostream& log)
{
    auto loaded = config.input_format ? load_surface_file(config.input, *config.input_format)
                                      : load_surface_file(config.input);
    if (!loaded.uv) throw ValidationError("gate needs a mesh with texture coordinates (OBJ vt)");
    const GateMode mode = config.param.gate == GateOverride::AfterSeamCut ? GateMode::AfterSeamCut : GateMode::Planar;
    const auto report = compute_distortion(loaded.mesh, *loaded.uv);
    const auto gate = quality_gate(report, mode);
    log << "D_t in [" << format_double(report.dt_min) << ", " << format_double(report.dt_max) << "], D_area "
        << format_double(report.d_area) << ", D_angle " << format_double(report.d_angle) << ", D2_global "
        << format_double(report.d2_global) << ", Dinf_global " << format_double(report.dinf_global) << '\n'
        << "gate " << to_string(mode) << ": " << to_string(gate.verdict) << " (" << gate.offending.size()
        << " offending)\n";
    fs::create_directories(config.output_dir);
    auto out = open_out(config.output_dir / "distortion.csv");
    write_distortion_csv(out, report);
    return gate.verdict == GateVerdict::Pass ? 0 : 2;
}

int cmd_optimize(const RunConfig& config, std::ostream& log)
{
    validate_for_optimize(config);
    const TriSurfaceMesh parent = load_input_mesh(config);
    const auto charts = read_charts(config.output_dir, GateMode::AfterSeamCut);
    const auto result = run_optimize(config, parent, charts, config.output_dir / "snapshots");
    const auto& last = result.state.history.back();
    log << "elements " << result.model.elements.size() << ", design variables " << result.state.x.size() << '\n'
        << "iterations " << result.state.history.size() << (result.state.converged ? " (converged)" : "")
        << ", compliance " << format_double(last.compliance) << ", volume fraction "
        << format_double(last.volume_fraction) << ", uniform baseline " << format_double(result.baseline.compliance)
        << '\n';
    const auto written = write_optimize_outputs(config.output_dir, result, face_stretch(parent, charts));
    auto inputs = config_inputs(config);
    for (std::size_t k = 0; k < charts.size(); ++k) inputs.push_back(chart_path(config.output_dir, k, ".obj"));
    write_manifest(config.output_dir, "optimize", config, inputs, written);
    return 0;
}

int cmd_export(const RunConfig& config, const std::string& format, std::ostream& log)
{
    for (const auto& p : run_export(config, format)) log << "wrote " << p.generic_string() << '\n';
    return 0;
}

int cmd_all(const RunConfig& config_in, std::ostream& log)
{
    RunConfig config = config_in;
    config.param.auto_advance = true;
    validate_for_optimize(config);
    const TriSurfaceMesh mesh = load_input_mesh(config);
    const auto outcome = run_param(mesh, config.param);
    print_log(log, outcome);
    auto written = write_charts(config.output_dir, outcome);
    if (!outcome.passed()) return 2;
    const auto result = run_optimize(config, mesh, outcome.charts, config.output_dir / "snapshots");
    const auto& last = result.state.history.back();
    log << "iterations " << result.state.history.size() << (result.state.converged ? " (converged)" : "")
        << ", compliance " << format_double(last.compliance) << ", volume fraction "
        << format_double(last.volume_fraction) << ", uniform baseline " << format_double(result.baseline.compliance)
        << '\n';
    const auto opt = write_optimize_outputs(config.output_dir, result, face_stretch(mesh, outcome.charts));
    written.insert(written.end(), opt.begin(), opt.end());
    write_manifest(config.output_dir, "all", config, config_inputs(config), written);
    return 0;
}

}  // namespace stiffen
