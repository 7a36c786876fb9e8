#pragma once

#include "stiffen/mesh_io.hpp"
#include "stiffen/optimizer.hpp"
#include "stiffen/param.hpp"
#include "stiffen/prism_fea.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stiffen {

enum class GateOverride { Auto, Planar, AfterSeamCut };

struct ParamSettings {
    ParamMethod method = ParamMethod::ARAP;
    WeightScheme weights = WeightScheme::Uniform;  ///< convex-combination weights
    bool cotan = true;                              ///< harmonic springs: cotan or uniform
    ArapOptions arap;
    bool auto_advance = false;                      ///< run seam cut / multi-chart on gate failure
    GateOverride gate = GateOverride::Auto;
    std::optional<std::filesystem::path> seam_file;
    std::optional<std::filesystem::path> chart_file;
};

/// Selector levels: all node levels, the surface level, or an explicit level index.
struct LevelSelector {
    enum class Kind { All, Surface, Index } kind = Kind::All;
    int index = 0;
};

struct LoadSelector {
    LoadSpec load;
    LevelSelector level;
};

struct FixSelector {
    Box box;
    LevelSelector level;
};

struct RunConfig {
    std::filesystem::path input;
    std::optional<MeshFormat> input_format;
    ParamSettings param;
    int p = 3;
    int q = 3;
    int n = 20;
    int m = 20;
    double h_max = 0.5;
    double E = 2.1e5;
    double nu = 0.3;
    double skin = 0.1;
    int layers = 3;
    OffsetDirection direction = OffsetDirection::AlongNormal;
    std::vector<LoadSelector> loads;
    std::vector<FixSelector> fixes;
    OptSettings opt;
    int snapshot_every = 0;
    std::filesystem::path output_dir = "out";

    /// Canonical `key = value` lines (sorted keys, repeatable entries in file order),
    /// paths as written; output.dir is left out.
    std::vector<std::string> echo;
};

/// Parses `section.key = value` lines. `#` starts a comment. Relative paths are
/// resolved against base_dir. Throws ValidationError naming the line on any problem.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config_file(const std::filesystem::path& path);

/// `box(x0,y0,z0,x1,y1,z1)`; corners may be given in any order.
Box parse_box(std::string_view text);
LoadSelector parse_load(std::string_view text);
FixSelector parse_fix(std::string_view text);

/// Checks that everything the FE stage needs is present (constraints, loads).
void validate_for_optimize(const RunConfig& config);

}  // namespace stiffen
