#pragma once

#include "stiffen/mesh.hpp"
#include "stiffen/prism_fea.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace stiffen {

using CellField = std::pair<std::string, Eigen::VectorXd>;

/// Legacy ASCII unstructured grid of triangles (cell type 5) with per-face scalars.
/// When uv is given it is written as a 2-component point field.
void write_surface_vtk(std::ostream& out, const TriSurfaceMesh& mesh, const std::vector<CellField>& cell_fields,
                       const Eigen::MatrixX2d* uv = nullptr);

/// Wedge cells (type 13) with per-cell scalars and optional per-point displacements.
/// `cells` restricts the output to a subset (unused points are dropped); empty means all.
void write_prism_vtk(std::ostream& out, const PrismModel& model, const std::vector<CellField>& cell_fields,
                     const Eigen::VectorXd* displacement = nullptr, const std::vector<int>& cells = {});

}  // namespace stiffen
