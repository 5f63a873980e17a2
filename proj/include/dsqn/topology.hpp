#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dsqn/scalar.hpp"

namespace dsqn {

// Undirected connected communication graph. Nodes are 0-based internally;
// self-loops are implicit and never stored.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // (i, j) with i < j, sorted, unique
  bool connected = false;

  std::vector<int> degrees() const;                 // neighbor counts, self excluded
  std::vector<std::vector<int>> adjacency() const;  // sorted neighbor lists, self excluded
  bool has_edge(int i, int j) const;
};

enum class GraphKind { ring, complete, star, erdos_renyi, grid };

GraphKind parse_graph_kind(const std::string& name);
std::string graph_kind_name(GraphKind kind);

struct GraphSpec {
  GraphKind kind = GraphKind::ring;
  int n = 0;
  double p = 0.5;            // erdos_renyi edge probability
  std::uint64_t seed = 1;    // erdos_renyi seed
  int rows = 0, cols = 0;    // grid shape; rows*cols must equal n
};

// Builds a connected graph; erdos_renyi redraws up to a retry budget and
// fails with "disconnected topology" if connectivity is never reached.
Graph make_graph(const GraphSpec& spec);
Graph make_graph(GraphKind kind, int n);

bool is_connected(const Graph& g);

// Per-clause validation report for the doubly-stochastic mixing contract:
// nonnegativity, symmetry, double stochasticity, support pattern (weights
// positive exactly on neighbor pairs and the diagonal), and the requirement
// that the null space of I - W is spanned by the all-ones vector.
struct MixingValidationReport {
  bool nonnegative = false;
  bool symmetric = false;
  bool doubly_stochastic = false;
  bool support_pattern = false;
  bool single_nullspace = false;
  std::string detail;  // first violation, empty when all clauses pass

  bool pass() const {
    return nonnegative && symmetric && doubly_stochastic && support_pattern && single_nullspace;
  }
};

// If g is null the support clause is checked against W's own symmetric
// zero pattern (positive diagonal still required).
MixingValidationReport validate_mixing(const Mat& W, const Graph* g = nullptr, double tol = 1e-12);

struct MixingMatrix {
  Mat W;
  double sigma = 0.0;  // ||W - (1/n)11^T||_2, in [0,1) for connected graphs
  MixingValidationReport report;
  int n() const { return static_cast<int>(W.rows()); }
};

// Metropolis weights w_ij = 1/(1+max(deg_i,deg_j)) on edges, diagonal
// absorbs the remainder; valid on any connected graph.
MixingMatrix metropolis_weights(const Graph& g);

// Lazy averaging variant W <- (I+W)/2; keeps validity, shifts spectrum to [0,1].
MixingMatrix lazy_variant(const MixingMatrix& m, const Graph* g = nullptr);

// Largest singular value of W - (1/n)11^T. Throws std::invalid_argument
// naming the violated clause if W fails validation.
double spectral_gap(const Mat& W, const Graph* g = nullptr);

void export_matrix_csv(const Mat& W, std::ostream& os);

}  // namespace dsqn
