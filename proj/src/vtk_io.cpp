#include "stiffen/vtk_io.hpp"

#include "stiffen/error.hpp"
#include "stiffen/mesh_io.hpp"

#include <numeric>
#include <ostream>

namespace stiffen {

namespace {

void header(std::ostream& out, const char* title)
{
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
}

void scalar_block(std::ostream& out, const std::vector<CellField>& fields, const std::vector<int>& ids)
{
    for (const auto& [name, values] : fields) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int i : ids) out << format_double(values[i]) << '\n';
    }
}

}  // namespace

void write_surface_vtk(std::ostream& out, const TriSurfaceMesh& mesh, const std::vector<CellField>& cell_fields,
                       const Eigen::MatrixX2d* uv)
{
    for (const auto& f : cell_fields)
        if (f.second.size() != mesh.num_faces()) throw ValidationError("cell field '" + f.first + "' has wrong size");
    header(out, "surface");
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out << format_double(mesh.vertices()(v, 0)) << ' ' << format_double(mesh.vertices()(v, 1)) << ' '
            << format_double(mesh.vertices()(v, 2)) << '\n';
    out << "CELLS " << mesh.num_faces() << ' ' << 4 * mesh.num_faces() << '\n';
    for (int f = 0; f < mesh.num_faces(); ++f)
        out << "3 " << mesh.corner(f, 0) << ' ' << mesh.corner(f, 1) << ' ' << mesh.corner(f, 2) << '\n';
    out << "CELL_TYPES " << mesh.num_faces() << '\n';
    for (int f = 0; f < mesh.num_faces(); ++f) out << "5\n";
    if (!cell_fields.empty()) {
        std::vector<int> ids(static_cast<std::size_t>(mesh.num_faces()));
        std::iota(ids.begin(), ids.end(), 0);
        out << "CELL_DATA " << mesh.num_faces() << '\n';
        scalar_block(out, cell_fields, ids);
    }
    if (uv) {
        out << "POINT_DATA " << mesh.num_vertices() << "\nFIELD uv 1\nuv 2 " << mesh.num_vertices() << " double\n";
        for (int v = 0; v < mesh.num_vertices(); ++v)
            out << format_double((*uv)(v, 0)) << ' ' << format_double((*uv)(v, 1)) << '\n';
    }
}

void write_prism_vtk(std::ostream& out, const PrismModel& model, const std::vector<CellField>& cell_fields,
                     const Eigen::VectorXd* displacement, const std::vector<int>& cells)
{
    const auto ne = static_cast<int>(model.elements.size());
    for (const auto& f : cell_fields)
        if (f.second.size() != ne) throw ValidationError("cell field '" + f.first + "' has wrong size");
    std::vector<int> ids = cells;
    if (ids.empty()) {
        ids.resize(static_cast<std::size_t>(ne));
        std::iota(ids.begin(), ids.end(), 0);
    }
    std::vector<int> point_id(static_cast<std::size_t>(model.nodes.rows()), -1);
    std::vector<int> points;
    for (int e : ids)
        for (int n : model.elements[static_cast<std::size_t>(e)].nodes)
            if (point_id[static_cast<std::size_t>(n)] < 0) {
                point_id[static_cast<std::size_t>(n)] = static_cast<int>(points.size());
                points.push_back(n);
            }

    header(out, "prism model");
    out << "POINTS " << points.size() << " double\n";
    for (int n : points)
        out << format_double(model.nodes(n, 0)) << ' ' << format_double(model.nodes(n, 1)) << ' '
            << format_double(model.nodes(n, 2)) << '\n';
    out << "CELLS " << ids.size() << ' ' << 7 * ids.size() << '\n';
    // VTK wants the base triangle normal pointing away from the top face.
    static constexpr int order[6] = {0, 2, 1, 3, 5, 4};
    for (int e : ids) {
        out << '6';
        for (int k : order) out << ' ' << point_id[static_cast<std::size_t>(model.elements[static_cast<std::size_t>(e)].nodes[static_cast<std::size_t>(k)])];
        out << '\n';
    }
    out << "CELL_TYPES " << ids.size() << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) out << "13\n";
    out << "CELL_DATA " << ids.size() << '\n';
    out << "SCALARS layer int 1\nLOOKUP_TABLE default\n";
    for (int e : ids) out << model.elements[static_cast<std::size_t>(e)].layer << '\n';
    scalar_block(out, cell_fields, ids);
    if (displacement) {
        if (displacement->size() != model.num_dofs()) throw ValidationError("displacement vector has wrong size");
        out << "POINT_DATA " << points.size() << "\nVECTORS displacement double\n";
        for (int n : points)
            out << format_double((*displacement)[3 * n]) << ' ' << format_double((*displacement)[3 * n + 1]) << ' '
                << format_double((*displacement)[3 * n + 2]) << '\n';
    }
}

}  // namespace stiffen
