#include "dsqn/problems.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "dsqn/rng.hpp"

namespace dsqn {

Family parse_family(const std::string& name) {
  if (name == "quadratic") return Family::quadratic;
  if (name == "ridge_least_squares") return Family::ridge_least_squares;
  if (name == "l2_logistic") return Family::l2_logistic;
  throw std::invalid_argument("unknown problem family: " + name);
}

std::string family_name(Family f) {
  switch (f) {
    case Family::quadratic: return "quadratic";
    case Family::ridge_least_squares: return "ridge_least_squares";
    case Family::l2_logistic: return "l2_logistic";
  }
  return "?";
}

void FiniteSumProblem::check_index(int i, int l) const {
  if (i < 0 || i >= n_) throw std::out_of_range("node index out of range");
  if (l < 0 || l >= m_[i]) throw std::out_of_range("sample index out of range");
}

const Mat& FiniteSumProblem::mean_hessian() const {
  if (!has_quadratic_structure()) throw std::logic_error("mean_hessian: objective is not quadratic");
  return mean_hessian_;
}

const Vec& FiniteSumProblem::mean_linear() const {
  if (!has_quadratic_structure()) throw std::logic_error("mean_linear: objective is not quadratic");
  return mean_linear_;
}

double FiniteSumProblem::sample_cost(int i, int l, const Vec& x) const {
  check_index(i, l);
  switch (family_) {
    case Family::quadratic:
      return 0.5 * x.dot(qA[i][l] * x) - qb[i][l].dot(x) + qc[i][l];
    case Family::ridge_least_squares: {
      const double r = features[i].row(l).dot(x) - targets[i][l];
      return 0.5 * r * r + 0.5 * regularizer * x.squaredNorm();
    }
    case Family::l2_logistic: {
      const double z = targets[i][l] * features[i].row(l).dot(x);
      const double loss = (z >= 0) ? std::log1p(std::exp(-z)) : (-z + std::log1p(std::exp(z)));
      return loss + 0.5 * regularizer * x.squaredNorm();
    }
  }
  return 0.0;
}

Vec FiniteSumProblem::sample_gradient(int i, int l, const Vec& x) const {
  Vec out;
  sample_gradient_into<double>(i, l, x, out);
  return out;
}

Vec FiniteSumProblem::local_full_gradient(int i, const Vec& x) const {
  Vec out;
  local_full_gradient_into<double>(i, x, out);
  return out;
}

double FiniteSumProblem::local_cost(int i, const Vec& x) const {
  check_index(i, 0);
  double acc = 0.0;
  for (int l = 0; l < m_[i]; ++l) acc += sample_cost(i, l, x);
  return acc / m_[i];
}

double FiniteSumProblem::global_objective(const Vec& x) const {
  double acc = 0.0;
  for (int i = 0; i < n_; ++i) acc += local_cost(i, x);
  return acc / n_;
}

Vec FiniteSumProblem::global_gradient(const Vec& x) const {
  Vec out;
  global_gradient_s<double>(x, out);
  return out;
}

void FiniteSumProblem::finalize() {
  if (n_ <= 0 || d_ <= 0) throw std::invalid_argument("problem needs positive node count and dimension");
  if (static_cast<int>(m_.size()) != n_) throw std::invalid_argument("per-node sample counts do not match n");
  for (int mi : m_)
    if (mi <= 0) throw std::invalid_argument("every node needs at least one sample");

  const double psd_tol = 1e-10;
  switch (family_) {
    case Family::quadratic: {
      double Lmax = 0.0;
      Mat acc = Mat::Zero(d_, d_);
      Vec bacc = Vec::Zero(d_);
      for (int i = 0; i < n_; ++i) {
        Mat node_acc = Mat::Zero(d_, d_);
        Vec node_b = Vec::Zero(d_);
        for (int l = 0; l < m_[i]; ++l) {
          const Mat& A = qA[i][l];
          if (A.rows() != d_ || A.cols() != d_ || (A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("quadratic sample matrix must be symmetric d x d");
          Eigen::SelfAdjointEigenSolver<Mat> es(A);
          const double lo = es.eigenvalues().minCoeff();
          const double hi = es.eigenvalues().maxCoeff();
          if (lo < -psd_tol) throw std::invalid_argument("quadratic sample matrix is not PSD (sample cost not convex)");
          Lmax = std::max(Lmax, hi);
          node_acc += A;
          node_b += qb[i][l];
        }
        acc += node_acc / m_[i];
        bacc += node_b / m_[i];
      }
      mean_hessian_ = acc / n_;
      mean_linear_ = bacc / n_;
      Eigen::SelfAdjointEigenSolver<Mat> es(mean_hessian_);
      mu_ = es.eigenvalues().minCoeff();
      L_ = Lmax;
      break;
    }
    case Family::ridge_least_squares: {
      double Lmax = 0.0;
      Mat acc = Mat::Zero(d_, d_);
      Vec bacc = Vec::Zero(d_);
      for (int i = 0; i < n_; ++i) {
        if (features[i].rows() != m_[i] || features[i].cols() != d_ || targets[i].size() != m_[i])
          throw std::invalid_argument("feature/target shapes do not match (m_i, d)");
        Mat node_acc = Mat::Zero(d_, d_);
        Vec node_b = Vec::Zero(d_);
        for (int l = 0; l < m_[i]; ++l) {
          const Vec a = features[i].row(l).transpose();
          Lmax = std::max(Lmax, a.squaredNorm() + regularizer);
          node_acc += a * a.transpose();
          node_b += targets[i][l] * a;
        }
        acc += node_acc / m_[i];
        bacc += node_b / m_[i];
      }
      mean_hessian_ = acc / n_ + regularizer * Mat::Identity(d_, d_);
      mean_linear_ = bacc / n_;
      Eigen::SelfAdjointEigenSolver<Mat> es(mean_hessian_);
      mu_ = es.eigenvalues().minCoeff();
      L_ = Lmax;
      break;
    }
    case Family::l2_logistic: {
      if (regularizer <= 0.0) throw std::invalid_argument("l2_logistic needs a positive regularizer for strong convexity");
      double Lmax = 0.0;
      for (int i = 0; i < n_; ++i) {
        if (features[i].rows() != m_[i] || features[i].cols() != d_ || targets[i].size() != m_[i])
          throw std::invalid_argument("feature/target shapes do not match (m_i, d)");
        for (int l = 0; l < m_[i]; ++l) {
          const double y = targets[i][l];
          if (y != 1.0 && y != -1.0) throw std::invalid_argument("logistic labels must be +1 or -1");
          Lmax = std::max(Lmax, features[i].row(l).squaredNorm() / 4.0 + regularizer);
        }
      }
      L_ = Lmax;
      mu_ = regularizer;
      break;
    }
  }
  if (!(mu_ > 0.0)) throw std::invalid_argument("objective is not strongly convex (mu <= 0)");
  if (L_ < mu_) L_ = mu_;  // guard against degenerate single-sample roundoff
}

FiniteSumProblem FiniteSumProblem::from_quadratic(std::vector<std::vector<Mat>> A, std::vector<std::vector<Vec>> b,
                                                  std::vector<std::vector<double>> c) {
  FiniteSumProblem p;
  p.family_ = Family::quadratic;
  p.n_ = static_cast<int>(A.size());
  if (p.n_ == 0 || A[0].empty()) throw std::invalid_argument("empty quadratic data");
  p.d_ = static_cast<int>(A[0][0].rows());
  p.qA = std::move(A);
  p.qb = std::move(b);
  p.qc = std::move(c);
  if (p.qc.empty()) {
    p.qc.resize(p.n_);
    for (int i = 0; i < p.n_; ++i) p.qc[i].assign(p.qA[i].size(), 0.0);
  }
  if (p.qb.size() != p.qA.size() || p.qc.size() != p.qA.size())
    throw std::invalid_argument("quadratic data arrays disagree on node count");
  p.m_.resize(p.n_);
  for (int i = 0; i < p.n_; ++i) {
    p.m_[i] = static_cast<int>(p.qA[i].size());
    if (p.qb[i].size() != p.qA[i].size() || p.qc[i].size() != p.qA[i].size())
      throw std::invalid_argument("quadratic data arrays disagree on sample count");
  }
  p.finalize();
  return p;
}

FiniteSumProblem FiniteSumProblem::from_regression(Family family, std::vector<Mat> features, std::vector<Vec> targets,
                                                   double regularizer) {
  if (family == Family::quadratic) throw std::invalid_argument("from_regression: family must be a regression family");
  FiniteSumProblem p;
  p.family_ = family;
  p.n_ = static_cast<int>(features.size());
  if (p.n_ == 0 || features[0].rows() == 0) throw std::invalid_argument("empty regression data");
  p.d_ = static_cast<int>(features[0].cols());
  p.features = std::move(features);
  p.targets = std::move(targets);
  p.regularizer = regularizer;
  if (p.targets.size() != p.features.size()) throw std::invalid_argument("feature/target node counts disagree");
  p.m_.resize(p.n_);
  for (int i = 0; i < p.n_; ++i) p.m_[i] = static_cast<int>(p.features[i].rows());
  p.finalize();
  return p;
}

FiniteSumProblem FiniteSumProblem::synthesize(const ProblemSpec& spec) {
  if (spec.n <= 0 || spec.d <= 0) throw std::invalid_argument("problem spec needs positive n and d");
  std::vector<int> m = spec.m;
  if (m.empty()) throw std::invalid_argument("problem spec needs per-node sample counts");
  if (static_cast<int>(m.size()) == 1) m.assign(spec.n, m[0]);
  if (static_cast<int>(m.size()) != spec.n) throw std::invalid_argument("sample-count list length must be 1 or n");

  const int n = spec.n, d = spec.d;
  Rng rng(mix_seed(spec.seed, 0x70726f62ULL));

  auto node_shift = [&](Vec& shift) {
    for (int t = 0; t < d; ++t) shift[t] = spec.hetero * rng.normal();
  };

  switch (spec.family) {
    case Family::quadratic: {
      if (spec.eig_min < 0 || spec.eig_max < spec.eig_min)
        throw std::invalid_argument("quadratic curvature range must satisfy 0 <= eig_min <= eig_max");
      std::vector<std::vector<Mat>> A(n);
      std::vector<std::vector<Vec>> b(n);
      std::vector<std::vector<double>> c(n);
      Vec shift(d);
      for (int i = 0; i < n; ++i) {
        node_shift(shift);
        A[i].reserve(m[i]);
        b[i].reserve(m[i]);
        c[i].assign(m[i], 0.0);
        for (int l = 0; l < m[i]; ++l) {
          if (spec.eig_min == spec.eig_max) {
            A[i].push_back(spec.eig_min * Mat::Identity(d, d));
          } else {
            Mat G(d, d);
            for (int r = 0; r < d; ++r)
              for (int cc = 0; cc < d; ++cc) G(r, cc) = rng.normal();
            Eigen::HouseholderQR<Mat> qr(G);
            Mat Q = qr.householderQ();
            Vec eig(d);
            for (int t = 0; t < d; ++t) eig[t] = spec.eig_min + (spec.eig_max - spec.eig_min) * rng.uniform();
            Mat Al = Q * eig.asDiagonal() * Q.transpose();
            A[i].push_back(0.5 * (Al + Al.transpose()));
          }
          Vec bl(d);
          for (int t = 0; t < d; ++t) bl[t] = rng.normal() + shift[t];
          b[i].push_back(std::move(bl));
        }
      }
      return from_quadratic(std::move(A), std::move(b), std::move(c));
    }
    case Family::ridge_least_squares:
    case Family::l2_logistic: {
      Vec w0(d);
      for (int t = 0; t < d; ++t) w0[t] = rng.normal();
      std::vector<Mat> feats(n);
      std::vector<Vec> targs(n);
      Vec shift(d);
      for (int i = 0; i < n; ++i) {
        node_shift(shift);
        const Vec wi = w0 + shift;
        feats[i].resize(m[i], d);
        targs[i].resize(m[i]);
        for (int l = 0; l < m[i]; ++l) {
          for (int t = 0; t < d; ++t) feats[i](l, t) = rng.normal();
          const double score = feats[i].row(l).dot(wi);
          if (spec.family == Family::ridge_least_squares) {
            targs[i][l] = score + 0.1 * rng.normal();
          } else {
            targs[i][l] = (score + 0.5 * rng.normal() >= 0.0) ? 1.0 : -1.0;
          }
        }
      }
      return from_regression(spec.family, std::move(feats), std::move(targs), spec.regularizer);
    }
  }
  throw std::logic_error("unreachable family");
}

// --- dataset CSV round trip -------------------------------------------------

void export_dataset_csv(const FiniteSumProblem& p, std::ostream& os) {
  os.precision(17);
  os << "# dsqn-dataset family=" << family_name(p.family()) << " n=" << p.n() << " d=" << p.d()
     << " regularizer=" << p.regularizer << "\n";
  if (p.family() == Family::quadratic) {
    os << "node";
    for (int r = 0; r < p.d(); ++r)
      for (int c = 0; c < p.d(); ++c) os << ",A" << r << "_" << c;
    for (int r = 0; r < p.d(); ++r) os << ",b" << r;
    os << ",c\n";
    for (int i = 0; i < p.n(); ++i)
      for (int l = 0; l < p.m(i); ++l) {
        os << (i + 1);
        for (int r = 0; r < p.d(); ++r)
          for (int c = 0; c < p.d(); ++c) os << ',' << p.qA[i][l](r, c);
        for (int r = 0; r < p.d(); ++r) os << ',' << p.qb[i][l][r];
        os << ',' << p.qc[i][l] << "\n";
      }
  } else {
    os << "node";
    for (int c = 0; c < p.d(); ++c) os << ",f" << c;
    os << ",target\n";
    for (int i = 0; i < p.n(); ++i)
      for (int l = 0; l < p.m(i); ++l) {
        os << (i + 1);
        for (int c = 0; c < p.d(); ++c) os << ',' << p.features[i](l, c);
        os << ',' << p.targets[i][l] << "\n";
      }
  }
}

FiniteSumProblem import_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# dsqn-dataset", 0) != 0)
    throw std::invalid_argument("dataset CSV must start with a '# dsqn-dataset' header");
  Family family = Family::quadratic;
  int n = 0, d = 0;
  double reg = 0.0;
  {
    std::istringstream hs(line.substr(14));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "family") family = parse_family(val);
      else if (key == "n") n = std::stoi(val);
      else if (key == "d") d = std::stoi(val);
      else if (key == "regularizer") reg = std::stod(val);
    }
  }
  if (n <= 0 || d <= 0) throw std::invalid_argument("dataset header missing n or d");
  if (!std::getline(is, line)) throw std::invalid_argument("dataset missing column header");

  std::vector<std::vector<std::vector<double>>> rows(n);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    if (!std::getline(ls, cell, ',')) continue;
    const int node = std::stoi(cell);
    if (node < 1 || node > n) throw std::invalid_argument("dataset row has node id out of range");
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    rows[node - 1].push_back(std::move(vals));
  }

  if (family == Family::quadratic) {
    const size_t want = static_cast<size_t>(d) * d + d + 1;
    std::vector<std::vector<Mat>> A(n);
    std::vector<std::vector<Vec>> b(n);
    std::vector<std::vector<double>> c(n);
    for (int i = 0; i < n; ++i) {
      for (const auto& row : rows[i]) {
        if (row.size() != want) throw std::invalid_argument("quadratic dataset row has wrong width");
        Mat Al(d, d);
        size_t k = 0;
        for (int r = 0; r < d; ++r)
          for (int cc = 0; cc < d; ++cc) Al(r, cc) = row[k++];
        Vec bl(d);
        for (int r = 0; r < d; ++r) bl[r] = row[k++];
        A[i].push_back(std::move(Al));
        b[i].push_back(std::move(bl));
        c[i].push_back(row[k]);
      }
      if (A[i].empty()) throw std::invalid_argument("dataset has a node with no samples");
    }
    return FiniteSumProblem::from_quadratic(std::move(A), std::move(b), std::move(c));
  }

  std::vector<Mat> feats(n);
  std::vector<Vec> targs(n);
  for (int i = 0; i < n; ++i) {
    const int mi = static_cast<int>(rows[i].size());
    if (mi == 0) throw std::invalid_argument("dataset has a node with no samples");
    feats[i].resize(mi, d);
    targs[i].resize(mi);
    for (int l = 0; l < mi; ++l) {
      if (rows[i][l].size() != static_cast<size_t>(d) + 1)
        throw std::invalid_argument("regression dataset row has wrong width");
      for (int c = 0; c < d; ++c) feats[i](l, c) = rows[i][l][c];
      targs[i][l] = rows[i][l][d];
    }
  }
  return FiniteSumProblem::from_regression(family, std::move(feats), std::move(targs), reg);
}

}  // namespace dsqn
