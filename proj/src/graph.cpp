#include "distopt/graph.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

namespace distopt {

namespace {

std::vector<int> reachable(int n, const std::vector<Edge>& edges,
                           bool reverse) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges)
    reverse ? adj[e.to].push_back(e.from) : adj[e.from].push_back(e.to);
  std::vector<int> seen(n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        q.push(v);
      }
  }
  return seen;
}

}  // namespace

DirectedGraph::DirectedGraph(int n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)) {
  if (n_ < 2) fail(ErrorCode::invalid, "graph requires at least 2 agents");
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    if (e.from < 0 || e.from >= n_ || e.to < 0 || e.to >= n_)
      fail(ErrorCode::invalid, "edge endpoint out of range");
    if (e.from == e.to) fail(ErrorCode::invalid, "self-loops are not allowed");
    if (!(e.weight > 0.0))
      fail(ErrorCode::invalid, "edge weights must be strictly positive");
    if (k > 0 && edges_[k - 1].from == e.from && edges_[k - 1].to == e.to)
      fail(ErrorCode::invalid, "duplicate ordered edge");
  }
}

DirectedGraph DirectedGraph::from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int n = -1;
  std::vector<Edge> edges;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "n") {
      if (!(ls >> n))
        fail(ErrorCode::config, "graph line " + std::to_string(lineno) +
                                    ": expected `n <count>`");
    } else if (kw == "edge") {
      int i = 0, j = 0;
      double w = 0.0;
      if (!(ls >> i >> j >> w))
        fail(ErrorCode::config, "graph line " + std::to_string(lineno) +
                                    ": expected `edge <i> <j> <weight>`");
      edges.push_back({i - 1, j - 1, w});
    } else {
      fail(ErrorCode::config,
           "graph line " + std::to_string(lineno) + ": unknown keyword `" +
               kw + "`");
    }
  }
  if (n < 0) fail(ErrorCode::config, "graph file is missing the `n` line");
  return DirectedGraph(n, std::move(edges));
}

DirectedGraph DirectedGraph::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open graph file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

std::vector<int> DirectedGraph::out_neighbors(int i) const {
  std::vector<int> out;
  for (const auto& e : edges_)
    if (e.from == i) out.push_back(e.to);
  return out;
}

bool DirectedGraph::adjacent(int i, int j) const {
  for (const auto& e : edges_)
    if ((e.from == i && e.to == j) || (e.from == j && e.to == i)) return true;
  return false;
}

MatrixXd DirectedGraph::adjacency() const {
  MatrixXd a = MatrixXd::Zero(n_, n_);
  for (const auto& e : edges_) a(e.from, e.to) = e.weight;
  return a;
}

GraphDiagnostics DirectedGraph::validate() const {
  GraphDiagnostics d;
  const MatrixXd a = adjacency();
  const VectorXd out_deg = a.rowwise().sum();
  const VectorXd in_deg = a.colwise().sum();
  const double scale = std::max(1.0, max_abs(a) * n_);
  d.balanced = true;
  for (int i = 0; i < n_; ++i) {
    if (std::abs(out_deg[i] - in_deg[i]) > 1e-12 * scale) {
      d.balanced = false;
      d.witness = "node " + std::to_string(i + 1) + " has out-weight " +
                  format_double(out_deg[i]) + " but in-weight " +
                  format_double(in_deg[i]);
      break;
    }
  }
  const auto fwd = reachable(n_, edges_, false);
  const auto bwd = reachable(n_, edges_, true);
  d.strongly_connected = true;
  for (int i = 0; i < n_ && d.strongly_connected; ++i) {
    if (!fwd[i] || !bwd[i]) {
      d.strongly_connected = false;
      if (!d.witness.empty()) d.witness += "; ";
      d.witness += !fwd[i] ? "node 1 cannot reach node " + std::to_string(i + 1)
                           : "node " + std::to_string(i + 1) +
                                 " cannot reach node 1";
    }
  }
  return d;
}

int DirectedGraph::diameter() const {
  std::vector<std::vector<int>> adj(n_);
  for (const auto& e : edges_) adj[e.from].push_back(e.to);
  int diam = 0;
  for (int s = 0; s < n_; ++s) {
    std::vector<int> dist(n_, -1);
    std::queue<int> q;
    q.push(s);
    dist[s] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
    }
    for (int i = 0; i < n_; ++i) diam = std::max(diam, dist[i]);
  }
  return diam;
}

std::string DirectedGraph::to_string() const {
  std::ostringstream out;
  out << "n " << n_ << "\n";
  for (const auto& e : edges_)
    out << "edge " << e.from + 1 << " " << e.to + 1 << " "
        << format_double(e.weight) << "\n";
  return out.str();
}

IncidenceMap::IncidenceMap(MatrixXd b,
                           std::vector<std::pair<int, int>> edge_order, int n)
    : b_(std::move(b)), edge_order_(std::move(edge_order)), n_(n) {}

std::pair<int, int> IncidenceMap::agent_rows(int i) const {
  int first = 0;
  while (first < edge_count() && edge_order_[first].first < i) ++first;
  int count = 0;
  while (first + count < edge_count() &&
         edge_order_[first + count].first == i)
    ++count;
  return {first, count};
}

IncidenceMap incidence(const DirectedGraph& g) {
  const auto& edges = g.edges();
  MatrixXd b = MatrixXd::Zero(static_cast<int>(edges.size()), g.n());
  std::vector<std::pair<int, int>> order;
  order.reserve(edges.size());
  for (std::size_t r = 0; r < edges.size(); ++r) {
    b(static_cast<int>(r), edges[r].from) = 1.0;
    b(static_cast<int>(r), edges[r].to) = -1.0;
    order.emplace_back(edges[r].from, edges[r].to);
  }
  return IncidenceMap(std::move(b), std::move(order), g.n());
}

MatrixXd laplacian(const DirectedGraph& g, Connectivity c) {
  if (c == Connectivity::required && !g.validate().strongly_connected)
    fail(ErrorCode::invalid,
         "laplacian of rank n-1 requires a strongly connected graph");
  const MatrixXd b = incidence(g).matrix();
  return b.transpose() * b;
}

MatrixXd mixing_matrix(const DirectedGraph& g) {
  const auto diag = g.validate();
  if (!diag.ok())
    fail(ErrorCode::invalid,
         "mixing matrix requires a balanced strongly connected graph: " +
             diag.witness);
  const MatrixXd a = g.adjacency();
  const VectorXd deg = a.rowwise().sum();
  const double eps = 1.0 / (1.0 + deg.maxCoeff());
  MatrixXd lw = MatrixXd(deg.asDiagonal()) - a;
  return MatrixXd::Identity(g.n(), g.n()) - eps * lw;
}

double mixing_contraction(const MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  const MatrixXd dev = w - MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::JacobiSVD<MatrixXd> svd(dev);
  return svd.singularValues()[0];
}

DirectedGraph random_balanced_graph(int n, int extra_cycles,
                                    std::uint64_t seed) {
  Rng rng(seed);
  std::map<std::pair<int, int>, double> acc;
  auto add_cycle = [&](const std::vector<int>& nodes, double w) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      int i = nodes[k];
      int j = nodes[(k + 1) % nodes.size()];
      acc[{i, j}] += w;
    }
  };
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  rng.shuffle(all);
  add_cycle(all, 1.0);
  for (int c = 0; c < extra_cycles; ++c) {
    const int len = rng.uniform_int(2, n);
    std::vector<int> pick(all);
    rng.shuffle(pick);
    pick.resize(len);
    add_cycle(pick, rng.uniform(0.5, 1.5));
  }
  std::vector<Edge> edges;
  for (const auto& [key, w] : acc) edges.push_back({key.first, key.second, w});
  return DirectedGraph(n, std::move(edges));
}

}  // namespace distopt
