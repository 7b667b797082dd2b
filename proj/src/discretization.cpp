#include "vem/discretization.hpp"

namespace vem {

GridField zero_field(const OcpProblem& problem, const Grid& grid) {
  return {grid, NodeMatrix::Zero(grid.N, problem.state_dim),
          NodeMatrix::Zero(grid.N, problem.control_dim)};
}

void check_field(const OcpProblem& problem, const GridField& field) {
  if (field.grid.N < 3) throw std::invalid_argument("field grid has N < 3");
  if (field.x.rows() != field.grid.N || field.u.rows() != field.grid.N) {
    throw std::invalid_argument("field row count does not match grid");
  }
  if (field.x.cols() != problem.state_dim ||
      field.u.cols() != problem.control_dim) {
    throw std::invalid_argument("field dimensions do not match problem");
  }
  if (!field.x.allFinite() || !field.u.allFinite() ||
      !std::isfinite(field.grid.tf)) {
    throw std::invalid_argument("field has non-finite entries");
  }
}

GridField scale_field(const GridField& field, const ScalingSpec& spec) {
  GridField out = field;
  out.grid.t0 = field.grid.t0 / spec.time_scale;
  out.grid.tf = field.grid.tf / spec.time_scale;
  out.x = field.x.array().rowwise() / spec.state_scales.transpose().array();
  out.u =
      field.u.array().rowwise() / spec.control_scales.transpose().array();
  return out;
}

GridField unscale_field(const GridField& field, const ScalingSpec& spec) {
  GridField out = field;
  out.grid.t0 = field.grid.t0 * spec.time_scale;
  out.grid.tf = field.grid.tf * spec.time_scale;
  out.x = field.x * spec.state_scales.asDiagonal();
  out.u = field.u * spec.control_scales.asDiagonal();
  return out;
}

}  // namespace vem
