#pragma once

#include "stiffen/config.hpp"
#include "stiffen/cutting.hpp"
#include "stiffen/distortion.hpp"
#include "stiffen/optimizer.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stiffen {

/// One parameterized chart; sub.parent_* refer to the input mesh.
struct ChartPiece {
    SubMesh sub;
    ParamChart chart;
    DistortionReport report;
    GateDecision gate;
};

enum class ParamStage { Planar, SeamCut, MultiChart };
const char* to_string(ParamStage stage);

struct ParamOutcome {
    std::vector<ChartPiece> charts;
    ParamStage stage = ParamStage::Planar;
    GateDecision gate;                ///< decision of the last stage that ran
    std::optional<SeamPath> seam;
    std::vector<std::string> log;
    bool passed() const { return gate.verdict == GateVerdict::Pass; }
};

enum class BoundaryShape { Circle, Square };

/// Flattens one piece: boundary placement on the longest loop, convex-combination start,
/// then the configured method; distortion report and gate in `mode`.
ChartPiece parameterize_piece(SubMesh sub, const ParamSettings& settings, BoundaryShape shape, GateMode mode,
                              int chart_id);

/// Planar attempt, then (with auto_advance or an explicit seam) a seam cut, then
/// multi-chart segmentation. Closed inputs skip the planar attempt. Stops at the first
/// passing stage; without auto_advance it stops at the first failing one. Throws
/// GateError when the multi-chart stage still fails.
ParamOutcome run_param(const TriSurfaceMesh& mesh, const ParamSettings& settings);

/// Per input-mesh face: owning chart and its corner uv. Throws ValidationError unless
/// every face is covered exactly once.
ChartAtlas make_atlas(const TriSurfaceMesh& parent, std::span<const ChartPiece> charts);

/// Normalized stretch per input-mesh face.
Eigen::VectorXd face_stretch(const TriSurfaceMesh& parent, std::span<const ChartPiece> charts);

/// chart_k.obj (with vt), chart_k.parent.txt, distortion_k.csv, distortion_k.vtk, gate.txt.
std::vector<std::filesystem::path> write_charts(const std::filesystem::path& dir, const ParamOutcome& outcome);
/// Reads the chart files back and recomputes the distortion reports.
std::vector<ChartPiece> read_charts(const std::filesystem::path& dir, GateMode mode);

PrismModel build_model(const RunConfig& config, const TriSurfaceMesh& parent, const ChartAtlas& atlas);
std::vector<BSplineHeightField<double>> make_fields(const RunConfig& config, int charts);

struct OptimizeOutcome {
    PrismModel model;
    std::vector<BSplineHeightField<double>> fields;
    OptState state;
    Baseline baseline;
};

/// Builds the model, runs the optimizer and evaluates the uniform baseline at the final
/// beta. Writes VTK snapshots to `snapshot_dir` every config.snapshot_every iterations.
OptimizeOutcome run_optimize(const RunConfig& config, const TriSurfaceMesh& parent,
                             std::span<const ChartPiece> charts, const std::filesystem::path& snapshot_dir = {});

/// history.csv, field_k.txt, design.txt, baseline.txt, model.vtk, stiffeners.vtk.
std::vector<std::filesystem::path> write_optimize_outputs(const std::filesystem::path& dir,
                                                          const OptimizeOutcome& outcome,
                                                          const Eigen::VectorXd& face_dt);

/// Formats: vtk, obj, csv.
std::vector<std::filesystem::path> run_export(const RunConfig& config, const std::string& format);

/// SHA-1 of "blob <size>\0" + bytes, hex encoded (the hash git gives a file).
std::string git_blob_sha1(std::string_view bytes);

/// manifest.txt: command, echoed config, hashed inputs and outputs, and a hash of all of it.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const std::string& command,
                                     const RunConfig& config, std::span<const std::filesystem::path> inputs,
                                     std::span<const std::filesystem::path> outputs);

TriSurfaceMesh load_input_mesh(const RunConfig& config);

/// Subcommands. `log` receives progress lines. They return 0 or throw; cmd_param and
/// cmd_gate return 2 when the gate fails.
int cmd_param(const RunConfig& config, std::ostream& log);
int cmd_cut(const RunConfig& config, std::ostream& log);
int cmd_gate(const RunConfig& config, std::ostream& log);
int cmd_optimize(const RunConfig& config, std::ostream& log);
int cmd_export(const RunConfig& config, const std::string& format, std::ostream& log);
int cmd_all(const RunConfig& config, std::ostream& log);

}  // namespace stiffen
