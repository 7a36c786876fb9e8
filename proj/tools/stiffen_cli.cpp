#include "stiffen/error.hpp"
#include "stiffen/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct Options {
    std::string config;
    std::string input;
    std::string out;
    std::string seam;
    std::string charts;
    std::string mode;
    std::string format = "vtk";
    bool automatic = false;
};

stiffen::RunConfig resolve(const Options& o)
{
    using namespace stiffen;
    RunConfig c;
    if (!o.config.empty()) c = load_config_file(o.config);
    else if (!o.input.empty()) c = parse_config("input = " + o.input);
    else throw ValidationError("give --config FILE or --input MESH");
    if (!o.input.empty()) {
        c.input = o.input;
        c.echo.push_back("cli.input = " + o.input);
    }
    if (!o.out.empty()) c.output_dir = o.out;
    if (!o.seam.empty()) {
        c.param.seam_file = o.seam;
        c.echo.push_back("cli.seam = " + o.seam);
    }
    if (!o.charts.empty()) {
        c.param.chart_file = o.charts;
        c.echo.push_back("cli.charts = " + o.charts);
    }
    if (o.automatic) c.param.auto_advance = true;
    if (o.mode == "planar") c.param.gate = GateOverride::Planar;
    else if (o.mode == "after-seam-cut") c.param.gate = GateOverride::AfterSeamCut;
    else if (!o.mode.empty() && o.mode != "auto") throw ValidationError("--mode takes planar, after-seam-cut or auto");
    return c;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stiffener layout optimization on parameterized surfaces"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config, "run configuration file");
        sub->add_option("-i,--input", o.input, "surface mesh (overrides the config)");
        sub->add_option("-o,--out", o.out, "output directory (overrides output.dir)");
    };
    auto* param = app.add_subcommand("param", "flatten the surface and run the distortion gate");
    auto* cut = app.add_subcommand("cut", "cut the surface open along a seam");
    auto* gate = app.add_subcommand("gate", "evaluate distortion of a mesh with uv");
    auto* optimize = app.add_subcommand("optimize", "optimize stiffener heights on existing charts");
    auto* exp = app.add_subcommand("export", "write VTK, OBJ or CSV from a finished run");
    auto* all = app.add_subcommand("all", "param with automatic fallbacks, then optimize");
    for (auto* s : {param, cut, gate, optimize, exp, all}) common(s);
    for (auto* s : {param, cut, all}) s->add_option("--seam", o.seam, "seam file (one 'v_a v_b' edge per line)");
    for (auto* s : {param, all}) s->add_option("--charts", o.charts, "chart file (one chart index per triangle)");
    param->add_flag("--auto", o.automatic, "apply seam cutting and multi-chart fallbacks on gate failure");
    for (auto* s : {param, gate, all}) s->add_option("--mode", o.mode, "gate mode: auto, planar, after-seam-cut");
    exp->add_option("-f,--format", o.format, "vtk, obj or csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 3;
    }

    try {
        const auto config = resolve(o);
        if (*param) return stiffen::cmd_param(config, std::cout);
        if (*cut) return stiffen::cmd_cut(config, std::cout);
        if (*gate) return stiffen::cmd_gate(config, std::cout);
        if (*optimize) return stiffen::cmd_optimize(config, std::cout);
        if (*exp) return stiffen::cmd_export(config, o.format, std::cout);
        if (*all) return stiffen::cmd_all(config, std::cout);
    } catch (const stiffen::GateError& e) {
        std::cerr << "gate failure: " << e.what() << '\n';
        return 2;
    } catch (const stiffen::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 4;
    } catch (const stiffen::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
