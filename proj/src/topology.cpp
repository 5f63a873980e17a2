#include "dsqn/topology.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <stdexcept>

#include "dsqn/rng.hpp"

namespace dsqn {

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(n, 0);
  for (const auto& [i, j] : edges) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& lst : adj) std::sort(lst.begin(), lst.end());
  return adj;
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

bool is_connected(const Graph& g) {
  if (g.n <= 0) return false;
  if (g.n == 1) return true;
  auto adj = g.adjacency();
  std::vector<char> seen(g.n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int w : adj[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == g.n;
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "ring") return GraphKind::ring;
  if (name == "complete") return GraphKind::complete;
  if (name == "star") return GraphKind::star;
  if (name == "erdos_renyi") return GraphKind::erdos_renyi;
  if (name == "grid") return GraphKind::grid;
  throw std::invalid_argument("unknown graph kind: " + name);
}

std::string graph_kind_name(GraphKind kind) {
  switch (kind) {
    case GraphKind::ring: return "ring";
    case GraphKind::complete: return "complete";
    case GraphKind::star: return "star";
    case GraphKind::erdos_renyi: return "erdos_renyi";
    case GraphKind::grid: return "grid";
  }
  return "?";
}

namespace {

Graph finish(int n, std::vector<std::pair<int, int>> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  Graph g{n, std::move(edges), false};
  g.connected = is_connected(g);
  return g;
}

}  // namespace

Graph make_graph(const GraphSpec& spec) {
  const int n = spec.n;
  if (n < 2) throw std::invalid_argument("make_graph requires n >= 2");
  std::vector<std::pair<int, int>> edges;
  switch (spec.kind) {
    case GraphKind::ring: {
      if (n == 2) {
        edges = {{0, 1}};
      } else {
        for (int i = 0; i < n; ++i) edges.emplace_back(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
      }
      break;
    }
    case GraphKind::complete: {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      break;
    }
    case GraphKind::star: {
      for (int j = 1; j < n; ++j) edges.emplace_back(0, j);
      break;
    }
    case GraphKind::erdos_renyi: {
      Rng rng(mix_seed(spec.seed, 0x6772617068ULL));
      const int budget = 200;
      for (int attempt = 0; attempt < budget; ++attempt) {
        edges.clear();
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < spec.p) edges.emplace_back(i, j);
        Graph g = finish(n, edges);
        if (g.connected) return g;
        if (spec.p <= 0.0) break;  // can never connect
      }
      throw std::runtime_error("disconnected topology: erdos_renyi(p=" + std::to_string(spec.p) +
                               ") produced no connected graph within the retry budget");
    }
    case GraphKind::grid: {
      if (spec.rows <= 0 || spec.cols <= 0 || spec.rows * spec.cols != n)
        throw std::invalid_argument("grid graph requires rows*cols == n");
      auto id = [&](int r, int c) { return r * spec.cols + c; };
      for (int r = 0; r < spec.rows; ++r)
        for (int c = 0; c < spec.cols; ++c) {
          if (c + 1 < spec.cols) edges.emplace_back(id(r, c), id(r, c + 1));
          if (r + 1 < spec.rows) edges.emplace_back(id(r, c), id(r + 1, c));
        }
      break;
    }
  }
  Graph g = finish(n, std::move(edges));
  if (!g.connected) throw std::runtime_error("disconnected topology");
  return g;
}

Graph make_graph(GraphKind kind, int n) {
  GraphSpec spec;
  spec.kind = kind;
  spec.n = n;
  if (kind == GraphKind::grid) throw std::invalid_argument("grid graph needs rows/cols via GraphSpec");
  return make_graph(spec);
}

MixingValidationReport validate_mixing(const Mat& W, const Graph* g, double tol) {
  MixingValidationReport rep;
  const auto n = W.rows();
  if (n == 0 || W.cols() != n) {
    rep.detail = "matrix is empty or not square";
    return rep;
  }

  rep.nonnegative = true;
  for (Eigen::Index i = 0; i < n && rep.nonnegative; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (W(i, j) < -tol) {
        rep.nonnegative = false;
        rep.detail = "nonnegativity: W(" + std::to_string(i) + "," + std::to_string(j) + ") < 0";
        break;
      }

  rep.symmetric = true;
  for (Eigen::Index i = 0; i < n && rep.symmetric; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(W(i, j) - W(j, i)) > tol) {
        rep.symmetric = false;
        if (rep.detail.empty())
          rep.detail = "symmetry: W(" + std::to_string(i) + "," + std::to_string(j) + ") != transpose";
        break;
      }

  rep.doubly_stochastic = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(W.row(i).sum() - 1.0) > tol || std::abs(W.col(i).sum() - 1.0) > tol) {
      rep.doubly_stochastic = false;
      if (rep.detail.empty()) rep.detail = "double stochasticity: row/col " + std::to_string(i) + " does not sum to 1";
      break;
    }
  }

  // Support pattern: weights strictly positive exactly on neighbor pairs and
  // on the diagonal (every node is its own neighbor). Without a graph the
  // off-diagonal pattern is free; only the positive diagonal is enforceable.
  rep.support_pattern = true;
  for (Eigen::Index i = 0; i < n; ++i)
    if (W(i, i) <= tol) {
      rep.support_pattern = false;
      if (rep.detail.empty()) rep.detail = "support pattern: diagonal entry " + std::to_string(i) + " is zero";
      break;
    }
  if (g != nullptr && rep.support_pattern) {
    if (g->n != n) {
      rep.support_pattern = false;
      if (rep.detail.empty()) rep.detail = "support pattern: graph size mismatch";
    } else {
      for (Eigen::Index i = 0; i < n && rep.support_pattern; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const bool edge = g->has_edge(static_cast<int>(i), static_cast<int>(j));
          const bool weight = W(i, j) > tol;
          if (edge != weight) {
            rep.support_pattern = false;
            if (rep.detail.empty())
              rep.detail = "support pattern: entry (" + std::to_string(i) + "," + std::to_string(j) +
                           ") inconsistent with edge set";
            break;
          }
        }
    }
  }

  // Null space of I - W must be span(1): eigenvalue 1 simple (within a loose
  // tolerance; connected desk-scale graphs have visible spectral gaps).
  rep.single_nullspace = false;
  if (rep.symmetric) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (W + W.transpose()));
    const Vec& ev = es.eigenvalues();
    int mult = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (ev[i] > 1.0 - 1e-9) ++mult;
    rep.single_nullspace = (mult == 1);
    if (!rep.single_nullspace && rep.detail.empty())
      rep.detail = "null-space: eigenvalue 1 of W has multiplicity " + std::to_string(mult) +
                   " (null space of I-W is not span(1))";
  } else if (rep.detail.empty()) {
    rep.detail = "null-space: check skipped, matrix not symmetric";
  }

  return rep;
}

double spectral_gap(const Mat& W, const Graph* g) {
  MixingValidationReport rep = validate_mixing(W, g);
  if (!rep.pass()) throw std::invalid_argument("mixing matrix validation failed: " + rep.detail);
  const auto n = W.rows();
  Mat D = W - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (D + D.transpose()));
  double sigma = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sigma = std::max(sigma, std::abs(es.eigenvalues()[i]));
  return sigma;
}

MixingMatrix metropolis_weights(const Graph& g) {
  // Recheck rather than trusting the cached flag: hand-built graphs may not set it.
  if (!is_connected(g)) throw std::invalid_argument("metropolis_weights requires a connected graph");
  const int n = g.n;
  Mat W = Mat::Zero(n, n);
  const auto deg = g.degrees();
  for (const auto& [i, j] : g.edges) {
    const double w = 1.0 / (1.0 + std::max(deg[i], deg[j]));
    W(i, j) = w;
    W(j, i) = w;
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += W(i, j);
    W(i, i) = 1.0 - off;
  }
  MixingMatrix m;
  m.W = std::move(W);
  m.report = validate_mixing(m.W, &g);
  m.sigma = spectral_gap(m.W, &g);
  return m;
}

MixingMatrix lazy_variant(const MixingMatrix& m, const Graph* g) {
  MixingMatrix out;
  const auto n = m.W.rows();
  out.W = 0.5 * (Mat::Identity(n, n) + m.W);
  out.report = validate_mixing(out.W, g);
  out.sigma = spectral_gap(out.W, g);
  return out;
}

void export_matrix_csv(const Mat& W, std::ostream& os) {
  os.precision(17);
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      if (j) os << ',';
      os << W(i, j);
    }
    os << '\n';
  }
}

}  // namespace dsqn
