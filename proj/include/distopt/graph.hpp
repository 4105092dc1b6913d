#pragma once

// Communication topology: weighted directed graphs, balance / strong
// connectivity diagnostics, the signed incidence map B with B^T B equal to
// the Laplacian of the symmetrized graph, and doubly stochastic mixing
// matrices for linear consensus and the gradient-descent baseline.
//
// Agents are indexed 0..n-1 in code; the text file format is 1-based.
// Ordered edges are kept in lexicographic (from, to) order, so the error
// block of agent i (its edges to out-neighbors) is contiguous.

#include "distopt/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace distopt {

struct Edge {
  int from = 0;
  int to = 0;
  double weight = 1.0;
};

struct GraphDiagnostics {
  bool balanced = false;
  bool strongly_connected = false;
  std::string witness;  // names the violation when a flag is false
  bool ok() const { return balanced && strongly_connected; }
};

class DirectedGraph {
 public:
  // Requires n >= 2, indices in range, no self-loops, strictly positive
  // weights, no duplicate ordered edge. Edges are sorted on construction.
  DirectedGraph(int n, std::vector<Edge> edges);

  static DirectedGraph from_file(const std::string& path);
  static DirectedGraph from_string(const std::string& text);

  int n() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<int> out_neighbors(int i) const;
  bool adjacent(int i, int j) const;  // edge in either direction

  MatrixXd adjacency() const;  // a_ij on ordered edges
  GraphDiagnostics validate() const;

  // Longest shortest directed path (hops); used to size consensus rounds.
  int diameter() const;

  std::string to_string() const;  // the `n`/`edge` text format, 1-based

 private:
  int n_;
  std::vector<Edge> edges_;
};

class IncidenceMap {
 public:
  IncidenceMap(MatrixXd b, std::vector<std::pair<int, int>> edge_order, int n);

  const MatrixXd& matrix() const { return b_; }  // |E| x n, entries 0, +1, -1
  MatrixXd expanded(int p) const { return kron_identity(b_, p); }
  int edge_count() const { return static_cast<int>(edge_order_.size()); }
  int n() const { return n_; }
  const std::vector<std::pair<int, int>>& edge_order() const {
    return edge_order_;
  }
  // Row range [first, first+count) of the edges sourced at agent i.
  std::pair<int, int> agent_rows(int i) const;

 private:
  MatrixXd b_;
  std::vector<std::pair<int, int>> edge_order_;
  int n_;
};

enum class Connectivity { any, required };

// B^T B of the unit-entry incidence map: the Laplacian of the symmetrized
// graph. With Connectivity::required, a graph that is not strongly connected
// is rejected (callers that need rank n-1).
MatrixXd laplacian(const DirectedGraph& g,
                   Connectivity c = Connectivity::any);

IncidenceMap incidence(const DirectedGraph& g);

// Doubly stochastic W = I - eps (D_out - A) with eps = 1/(1 + max degree).
// Requires a balanced, strongly connected graph; then rows and columns sum
// to one and the second singular value is below one.
MatrixXd mixing_matrix(const DirectedGraph& g);

// ||W - (1/n)11^T||_2, the consensus contraction factor of W.
double mixing_contraction(const MatrixXd& w);

// Balanced strongly connected test graphs built by superimposing directed
// cycles: one cycle through all nodes plus `extra_cycles` random ones.
DirectedGraph random_balanced_graph(int n, int extra_cycles,
                                    std::uint64_t seed);

}  // namespace distopt
