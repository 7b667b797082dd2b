#pragma once

#include <stdexcept>
#include <vector>

#include "vem/discretization.hpp"
#include "vem/ocp_model.hpp"

namespace vem {

struct TransitionOptions {
  int substeps = 4;               // RK4 steps per grid interval
  double condition_limit = 1e8;   // above this the table is flagged
  bool force_pairwise = false;    // build the pairwise fallback regardless
};

/// State transition matrices Phi(t_i, t_j) of dPhi/dt = f_x Phi for one field.
///
/// The fast path stores Phi(t_i, t_0) and its inverse, composing
/// Phi(t_i, t_j) = Phi(t_i, t_0) Phi(t_j, t_0)^-1. When that composition is
/// ill-conditioned the table is flagged and every Phi(t_i, t_j), i >= j, is
/// integrated directly instead.
struct TransitionTable {
  std::vector<Matrix> fundamental;
  std::vector<Matrix> fundamental_inverse;
  double condition_estimate = 1.0;
  bool flagged = false;
  std::vector<Matrix> pairwise;  // packed lower triangle; flagged or forced

  int nodes() const { return static_cast<int>(fundamental.size()); }
  bool uses_pairwise() const { return !pairwise.empty(); }
  const Matrix& pairwise_at(int i, int j) const {
    return pairwise[static_cast<std::size_t>(i) * (i + 1) / 2 + j];
  }
};

class FlaggedTransitionTable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

TransitionTable build_transition_table(const OcpProblem& problem,
                                       const GridField& field,
                                       const TransitionOptions& options = {});

/// Phi(t_i, t_j) from the fundamental factorization. Throws
/// FlaggedTransitionTable on a flagged table.
Matrix phi(const TransitionTable& table, int i, int j);

/// Phi(t_i, t_j) for i >= j by direct RK4 integration of the variational
/// equation from t_j to t_i with `substeps` steps per grid interval.
Matrix integrate_transition(const OcpProblem& problem, const GridField& field,
                            int i, int j, int substeps);

/// Row i: integral_{t_0}^{t_i} Phi(t_i, s) h(s) ds for node values h
/// (N x n), by the trapezoid with endpoint slope correction. Uses whichever
/// path the table supports.
NodeMatrix forward_transport(const TransitionTable& table, const Grid& grid,
                             const NodeMatrix& sources);

/// Row i: integral_{t_i}^{t_f} Phi(s, t_i)' g(s) ds, same rule.
NodeMatrix backward_transport(const TransitionTable& table, const Grid& grid,
                              const NodeMatrix& sources);

}  // namespace vem
