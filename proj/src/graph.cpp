#include "gnngp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <string>

namespace gnngp {

SparseAdjacency::SparseAdjacency(Index n_nodes, std::vector<Index> row_offsets,
                                 std::vector<Index> col_indices, std::vector<double> values)
    : n_nodes_(n_nodes),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (n_nodes_ <= 0) throw InputError("SparseAdjacency: n_nodes must be positive");
  if (static_cast<Index>(row_offsets_.size()) != n_nodes_ + 1)
    throw InputError("SparseAdjacency: row_offsets must have n_nodes + 1 entries");
  if (col_indices_.size() != values_.size())
    throw InputError("SparseAdjacency: col_indices and values differ in length");
  if (row_offsets_.front() != 0 || row_offsets_.back() != static_cast<Index>(col_indices_.size()))
    throw InputError("SparseAdjacency: row_offsets must start at 0 and end at nnz");
  for (Index i = 0; i < n_nodes_; ++i) {
    if (row_offsets_[i] > row_offsets_[i + 1])
      throw InputError("SparseAdjacency: row_offsets must be nondecreasing");
    for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      const Index c = col_indices_[p];
      if (c < 0 || c >= n_nodes_) throw InputError("SparseAdjacency: column index out of range");
      if (p > row_offsets_[i] && col_indices_[p - 1] >= c)
        throw InputError("SparseAdjacency: column indices must be sorted and unique per row");
    }
  }
}

std::span<const Index> SparseAdjacency::row_columns(Index row) const {
  return std::span<const Index>(col_indices_).subspan(row_offsets_[row],
                                                       row_offsets_[row + 1] - row_offsets_[row]);
}

std::span<const double> SparseAdjacency::row_values(Index row) const {
  return std::span<const double>(values_).subspan(row_offsets_[row],
                                                   row_offsets_[row + 1] - row_offsets_[row]);
}

double SparseAdjacency::coeff(Index row, Index col) const {
  const auto cols = row_columns(row);
  const auto it = std::lower_bound(cols.begin(), cols.end(), col);
  if (it == cols.end() || *it != col) return 0.0;
  return row_values(row)[static_cast<std::size_t>(it - cols.begin())];
}

Matrix SparseAdjacency::to_dense() const {
  Matrix dense = Matrix::Zero(n_nodes_, n_nodes_);
  for (Index i = 0; i < n_nodes_; ++i)
    for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p)
      dense(i, col_indices_[p]) = values_[p];
  return dense;
}

Matrix SparseAdjacency::multiply(const Eigen::Ref<const Matrix>& x) const {
  if (x.rows() != n_nodes_) throw InputError("SparseAdjacency::multiply: dimension mismatch");
  Matrix out(n_nodes_, x.cols());
  // Column by column keeps both operands contiguous in column-major storage.
  for (Index j = 0; j < x.cols(); ++j) {
    const double* src = x.col(j).data();
    double* dst = out.col(j).data();
    for (Index i = 0; i < n_nodes_; ++i) {
      double acc = 0.0;
      for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p)
        acc += values_[p] * src[col_indices_[p]];
      dst[i] = acc;
    }
  }
  return out;
}

Vector SparseAdjacency::multiply_vector(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != n_nodes_) throw InputError("SparseAdjacency::multiply_vector: dimension mismatch");
  Vector out(n_nodes_);
  for (Index i = 0; i < n_nodes_; ++i) {
    double acc = 0.0;
    for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p)
      acc += values_[p] * x[col_indices_[p]];
    out[i] = acc;
  }
  return out;
}

Matrix SparseAdjacency::sandwich(const Eigen::Ref<const Matrix>& k) const {
  if (k.rows() != n_nodes_ || k.cols() != n_nodes_)
    throw InputError("SparseAdjacency::sandwich: dimension mismatch");
  // K symmetric: (A K)^T = K A^T, so A (A K)^T = A K A^T.
  const Matrix ak = multiply(k);
  const Matrix akt = ak.transpose();
  Matrix out = multiply(akt);
  return 0.5 * (out + out.transpose());
}

Vector SparseAdjacency::row_sums() const {
  Vector sums(n_nodes_);
  for (Index i = 0; i < n_nodes_; ++i) {
    double acc = 0.0;
    for (double v : row_values(i)) acc += v;
    sums[i] = acc;
  }
  return sums;
}

bool SparseAdjacency::is_symmetric(double tol) const {
  for (Index i = 0; i < n_nodes_; ++i) {
    const auto cols = row_columns(i);
    const auto vals = row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (std::abs(coeff(cols[p], i) - vals[p]) > tol) return false;
    }
  }
  return true;
}

bool SparseAdjacency::is_nonnegative() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
}

bool SparseAdjacency::has_self_loops() const {
  for (Index i = 0; i < n_nodes_; ++i)
    if (coeff(i, i) != 0.0) return true;
  return false;
}

bool SparseAdjacency::has_positive_diagonal() const {
  for (Index i = 0; i < n_nodes_; ++i)
    if (!(coeff(i, i) > 0.0)) return false;
  return true;
}

bool SparseAdjacency::is_connected() const {
  std::vector<char> seen(static_cast<std::size_t>(n_nodes_), 0);
  std::queue<Index> frontier;
  frontier.push(0);
  seen[0] = 1;
  Index visited = 1;
  while (!frontier.empty()) {
    const Index u = frontier.front();
    frontier.pop();
    const auto cols = row_columns(u);
    const auto vals = row_values(u);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (vals[p] == 0.0 || seen[cols[p]]) continue;
      seen[cols[p]] = 1;
      ++visited;
      frontier.push(cols[p]);
    }
  }
  return visited == n_nodes_;
}

SparseAdjacency build_adjacency(std::span<const Edge> edges, Index n_nodes, bool add_self_loops) {
  if (n_nodes <= 0) throw InputError("build_adjacency: n_nodes must be positive");
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(n_nodes));
  for (const Edge& e : edges) {
    if (e.source < 0 || e.source >= n_nodes || e.target < 0 || e.target >= n_nodes) {
      throw InputError("build_adjacency: edge (" + std::to_string(e.source) + ", " +
                       std::to_string(e.target) + ") out of range for " +
                       std::to_string(n_nodes) + " nodes");
    }
    if (e.source == e.target) continue;
    rows[e.source].push_back(e.target);
    rows[e.target].push_back(e.source);
  }
  std::vector<Index> offsets{0};
  offsets.reserve(static_cast<std::size_t>(n_nodes) + 1);
  std::vector<Index> cols;
  for (Index i = 0; i < n_nodes; ++i) {
    auto& r = rows[i];
    if (add_self_loops) r.push_back(i);
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    cols.insert(cols.end(), r.begin(), r.end());
    offsets.push_back(static_cast<Index>(cols.size()));
  }
  std::vector<double> vals(cols.size(), 1.0);
  return SparseAdjacency(n_nodes, std::move(offsets), std::move(cols), std::move(vals));
}

namespace {

// I + raw, with the degree vector D of raw (excluding the added identity).
struct WithIdentity {
  std::vector<Index> offsets;
  std::vector<Index> cols;
  std::vector<double> vals;
  Vector degree;
};

WithIdentity add_identity(const SparseAdjacency& raw) {
  if (raw.has_self_loops())
    throw InputError("normalize: raw adjacency must not contain self-loops (I is added internally)");
  if (!raw.is_nonnegative()) throw InputError("normalize: adjacency must be nonnegative");
  const Index n = raw.n_nodes();
  WithIdentity out;
  out.degree = raw.row_sums();
  out.offsets.reserve(static_cast<std::size_t>(n) + 1);
  out.offsets.push_back(0);
  for (Index i = 0; i < n; ++i) {
    const auto cols = raw.row_columns(i);
    const auto vals = raw.row_values(i);
    bool placed = false;
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (!placed && cols[p] > i) {
        out.cols.push_back(i);
        out.vals.push_back(1.0);
        placed = true;
      }
      out.cols.push_back(cols[p]);
      out.vals.push_back(vals[p]);
    }
    if (!placed) {
      out.cols.push_back(i);
      out.vals.push_back(1.0);
    }
    out.offsets.push_back(static_cast<Index>(out.cols.size()));
  }
  return out;
}

}  // namespace

SparseAdjacency normalize_sym(const SparseAdjacency& raw) {
  WithIdentity m = add_identity(raw);
  const Index n = raw.n_nodes();
  Vector inv_sqrt(n);
  for (Index i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(1.0 + m.degree[i]);
  for (Index i = 0; i < n; ++i)
    for (Index p = m.offsets[i]; p < m.offsets[i + 1]; ++p)
      m.vals[p] *= inv_sqrt[i] * inv_sqrt[m.cols[p]];
  return SparseAdjacency(n, std::move(m.offsets), std::move(m.cols), std::move(m.vals));
}

SparseAdjacency normalize_row(const SparseAdjacency& raw) {
  WithIdentity m = add_identity(raw);
  const Index n = raw.n_nodes();
  for (Index i = 0; i < n; ++i) {
    const double inv = 1.0 / (1.0 + m.degree[i]);
    for (Index p = m.offsets[i]; p < m.offsets[i + 1]; ++p) m.vals[p] *= inv;
  }
  return SparseAdjacency(n, std::move(m.offsets), std::move(m.cols), std::move(m.vals));
}

SpectralInfo spectral_radius(const SparseAdjacency& a, double tol, Index max_iter) {
  if (!(tol > 0.0)) throw InputError("spectral_radius: tol must be positive");
  if (max_iter < 1) throw InputError("spectral_radius: max_iter must be at least 1");
  const Index n = a.n_nodes();
  Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  double residual = 0.0;
  double lambda = 0.0;
  for (Index it = 1; it <= max_iter; ++it) {
    Vector w = a.multiply_vector(v);
    lambda = v.dot(w);
    residual = (w - lambda * v).norm();
    if (residual <= tol * std::abs(lambda)) return SpectralInfo{lambda, v, it, residual};
    const double norm = w.norm();
    if (!(norm > 0.0)) throw NumericalError("spectral_radius: iterate collapsed to zero", 0.0);
    v = w / norm;
  }
  throw ConvergenceError("spectral_radius: no convergence after " + std::to_string(max_iter) +
                             " iterations (last residual " + std::to_string(residual) + ")",
                         residual);
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list " + path.string());
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long u = 0;
    long long v = 0;
    std::string extra;
    if (!(fields >> u >> v) || (fields >> extra) || u < 0 || v < 0) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected two nonnegative integer node ids");
    }
    edges.push_back(Edge{static_cast<Index>(u), static_cast<Index>(v)});
  }
  return edges;
}

}  // namespace gnngp
