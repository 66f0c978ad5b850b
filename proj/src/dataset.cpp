#include "gnngp/dataset.hpp"

#include "gnngp/random.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace gnngp {

namespace fs = std::filesystem;

namespace {

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(std::string_view s, long long& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw InputError("truncated header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::vector<Index> index_array(const nlohmann::json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) throw InputError(path.string() + ": missing \"" + key + "\" array");
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw InputError(path.string() + ": \"" + key + "\" must be an array");
  std::vector<Index> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_integer())
      throw InputError(path.string() + ": \"" + key + "\" must hold integers");
    out.push_back(v.get<Index>());
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  const Index n = features.rows();
  if (graph.n_nodes() != n)
    throw InputError("dataset '" + name + "': graph has " + std::to_string(graph.n_nodes()) +
                     " nodes but features have " + std::to_string(n) + " rows");
  if (targets.size() != n)
    throw InputError("dataset '" + name + "': targets have " + std::to_string(targets.size()) +
                     " entries but there are " + std::to_string(n) + " nodes");
  splits.validate(n);
}

Matrix read_features_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open features " + path.string());
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    Index count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      double v = 0.0;
      if (!parse_double(rest.substr(0, comma), v))
        throw InputError(where(path, line_no) + ": malformed number");
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols < 0) cols = count;
    if (count != cols)
      throw InputError(where(path, line_no) + ": expected " + std::to_string(cols) +
                       " columns, found " + std::to_string(count));
    ++rows;
  }
  if (rows == 0) throw InputError(path.string() + ": no feature rows");
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return out;
}

Matrix read_features_bin(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open features " + path.string());
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  try {
    rows = read_u64_le(in);
    cols = read_u64_le(in);
  } catch (const InputError&) {
    throw InputError(path.string() + ": truncated header");
  }
  if (rows == 0 || cols == 0) throw InputError(path.string() + ": empty feature matrix");
  Matrix out(static_cast<Index>(rows), static_cast<Index>(cols));
  std::vector<unsigned char> buf(cols * 8);
  for (std::uint64_t i = 0; i < rows; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
      throw InputError(path.string() + ": truncated at row " + std::to_string(i));
    for (std::uint64_t j = 0; j < cols; ++j) {
      std::uint64_t bits = 0;
      for (int b = 7; b >= 0; --b) bits = (bits << 8) | buf[j * 8 + static_cast<std::uint64_t>(b)];
      out(static_cast<Index>(i), static_cast<Index>(j)) = std::bit_cast<double>(bits);
    }
  }
  return out;
}

void write_features_bin(const fs::path& path, const Matrix& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_u64_le(out, static_cast<std::uint64_t>(features.rows()));
  write_u64_le(out, static_cast<std::uint64_t>(features.cols()));
  for (Index i = 0; i < features.rows(); ++i)
    for (Index j = 0; j < features.cols(); ++j)
      write_u64_le(out, std::bit_cast<std::uint64_t>(features(i, j)));
}

Targets read_targets(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open targets " + path.string());
  std::optional<Task> declared;
  std::vector<std::string> tokens;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (t.find("classification") != std::string_view::npos) declared = Task::classification;
      else if (t.find("regression") != std::string_view::npos) declared = Task::regression;
      continue;
    }
    tokens.emplace_back(t);
    lines.push_back(line_no);
  }
  if (tokens.empty()) throw InputError(path.string() + ": no targets");
  Task task = Task::classification;
  if (declared) {
    task = *declared;
  } else {
    long long iv = 0;
    for (const auto& tok : tokens)
      if (!parse_int(tok, iv)) {
        task = Task::regression;
        break;
      }
  }
  if (task == Task::classification) {
    std::vector<int> labels;
    labels.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      long long iv = 0;
      if (!parse_int(tokens[i], iv) || iv < 0)
        throw InputError(where(path, lines[i]) + ": expected a nonnegative integer label");
      labels.push_back(static_cast<int>(iv));
    }
    return Targets::classification(std::move(labels));
  }
  Vector values(static_cast<Index>(tokens.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!parse_double(tokens[i], values(static_cast<Index>(i))))
      throw InputError(where(path, lines[i]) + ": expected a real value");
  }
  return Targets::regression(std::move(values));
}

SplitIndices read_splits(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open splits " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  SplitIndices s;
  s.train = index_array(j, "train", path);
  s.val = index_array(j, "val", path);
  s.test = index_array(j, "test", path);
  return s;
}

void write_splits(const fs::path& path, const SplitIndices& splits) {
  nlohmann::json j;
  j["train"] = splits.train;
  j["val"] = splits.val;
  j["test"] = splits.test;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump() << '\n';
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("dataset directory " + dir.string() + " not found");
  Dataset d;
  d.name = dir.filename().string();
  if (d.name.empty()) d.name = dir.parent_path().filename().string();
  if (fs::exists(dir / "features.bin")) {
    d.features = read_features_bin(dir / "features.bin");
  } else if (fs::exists(dir / "features.csv")) {
    d.features = read_features_csv(dir / "features.csv");
  } else {
    throw InputError(dir.string() + ": missing features.csv or features.bin");
  }
  const Index n = d.features.rows();
  if (!fs::exists(dir / "edges.txt")) throw InputError(dir.string() + ": missing edges.txt");
  const auto edges = read_edge_list(dir / "edges.txt");
  for (const Edge& e : edges)
    if (e.source >= n || e.target >= n)
      throw InputError((dir / "edges.txt").string() + ": node id " +
                       std::to_string(std::max(e.source, e.target)) + " exceeds feature rows " +
                       std::to_string(n));
  d.graph = build_adjacency(edges, n, false);
  if (!fs::exists(dir / "targets.txt")) throw InputError(dir.string() + ": missing targets.txt");
  d.targets = read_targets(dir / "targets.txt");
  if (d.targets.size() != n)
    throw InputError((dir / "targets.txt").string() + ": " + std::to_string(d.targets.size()) +
                     " targets for " + std::to_string(n) + " nodes");
  if (fs::exists(dir / "splits.json")) d.splits = read_splits(dir / "splits.json");
  d.validate();
  return d;
}

SplitIndices make_splits_per_class(const Targets& targets, Index per_class, Index n_val,
                                   Index n_test, std::uint64_t seed) {
  if (targets.task != Task::classification)
    throw InputError("make_splits_per_class: needs classification targets");
  if (per_class < 1 || n_val < 0 || n_test < 0) throw InputError("make_splits_per_class: bad sizes");
  const Index n = targets.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  auto rng = make_stream({seed, 0x73706c6974});
  shuffle_in_place(order, rng);
  SplitIndices s;
  std::vector<Index> taken(static_cast<std::size_t>(targets.n_classes), 0);
  std::vector<Index> rest;
  for (Index i : order) {
    auto& t = taken[static_cast<std::size_t>(targets.labels[static_cast<std::size_t>(i)])];
    if (t < per_class) {
      s.train.push_back(i);
      ++t;
    } else {
      rest.push_back(i);
    }
  }
  if (static_cast<Index>(rest.size()) < n_val + n_test)
    throw InputError("make_splits_per_class: not enough nodes for the requested sizes");
  s.val.assign(rest.begin(), rest.begin() + n_val);
  s.test.assign(rest.begin() + n_val, rest.begin() + n_val + n_test);
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

SplitIndices make_splits_ratio(Index n_nodes, double train, double val, double test,
                               std::uint64_t seed) {
  if (n_nodes < 1) throw InputError("make_splits_ratio: no nodes");
  if (train <= 0.0 || val < 0.0 || test < 0.0 || train + val + test > 1.0 + 1e-12)
    throw InputError("make_splits_ratio: fractions must be nonnegative and sum to at most 1");
  std::vector<Index> order(static_cast<std::size_t>(n_nodes));
  for (Index i = 0; i < n_nodes; ++i) order[static_cast<std::size_t>(i)] = i;
  auto rng = make_stream({seed, 0x726174696f});
  shuffle_in_place(order, rng);
  const auto n = static_cast<double>(n_nodes);
  const auto n_train = static_cast<std::size_t>(std::llround(train * n));
  const auto n_val = static_cast<std::size_t>(std::llround(val * n));
  const auto n_test = std::min(static_cast<std::size_t>(std::llround(test * n)),
                               order.size() - std::min(order.size(), n_train + n_val));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val + n_test));
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Matrix center_columns(const Matrix& features) {
  return features.rowwise() - features.colwise().mean();
}

Matrix pca_reduce(const Matrix& features, Index target_dim, bool center) {
  const Index n = features.rows();
  const Index d = features.cols();
  if (target_dim < 1 || target_dim > std::min(n, d))
    throw InputError("pca_reduce: target_dim must lie in [1, min(N, d0)] = [1, " +
                     std::to_string(std::min(n, d)) + "]");
  const Matrix x = center ? center_columns(features) : features;
  Matrix directions(d, target_dim);
  if (d <= n) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(x.transpose() * x);
    for (Index k = 0; k < target_dim; ++k) directions.col(k) = es.eigenvectors().col(d - 1 - k);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(x * x.transpose());
    for (Index k = 0; k < target_dim; ++k) {
      Vector dir = x.transpose() * es.eigenvectors().col(n - 1 - k);
      const double norm = dir.norm();
      if (norm > 0.0) dir /= norm;
      directions.col(k) = dir;
    }
  }
  for (Index k = 0; k < target_dim; ++k) {
    Index arg = 0;
    directions.col(k).cwiseAbs().maxCoeff(&arg);
    if (directions(arg, k) < 0.0) directions.col(k) *= -1.0;
  }
  return x * directions;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.n_nodes < 2 || spec.n_classes < 1 || spec.n_features < 1 || spec.avg_degree <= 0.0)
    throw InputError("make_synthetic: invalid spec");
  const Index n = spec.n_nodes;
  const int c = spec.n_classes;
  auto rng = make_stream({spec.seed, 0x73796e7468});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(c));
  for (Index i = 0; i < n; ++i) {
    const int l = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c)));
    labels[static_cast<std::size_t>(i)] = l;
    members[static_cast<std::size_t>(l)].push_back(i);
  }

  const auto target_edges = static_cast<std::size_t>(std::llround(spec.avg_degree * n / 2.0));
  std::vector<Edge> edges;
  edges.reserve(target_edges);
  while (edges.size() < target_edges) {
    const auto u = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    const int lu = labels[static_cast<std::size_t>(u)];
    Index v = u;
    if (c == 1 || unit(rng) < spec.homophily) {
      const auto& pool = members[static_cast<std::size_t>(lu)];
      v = pool[uniform_index(rng, pool.size())];
    } else {
      v = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
      if (labels[static_cast<std::size_t>(v)] == lu) continue;
    }
    if (u != v) edges.push_back(Edge{u, v});
  }

  Matrix means(c, spec.n_features);
  for (Index k = 0; k < means.size(); ++k) means.data()[k] = spec.signal * normal(rng);
  Matrix x(n, spec.n_features);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < spec.n_features; ++j)
      x(i, j) = means(labels[static_cast<std::size_t>(i)], j) + normal(rng);

  Dataset d;
  d.name = "synthetic";
  d.graph = build_adjacency(edges, n, false);
  d.features = std::move(x);
  d.targets = Targets::classification(std::move(labels));
  d.targets.n_classes = c;
  const Index per_class = std::max<Index>(1, std::min<Index>(20, n / (10 * c)));
  Index smallest = n;
  for (const auto& m : members) smallest = std::min(smallest, static_cast<Index>(m.size()));
  const Index pc = std::max<Index>(1, std::min(per_class, smallest));
  const Index remaining = n - pc * c;
  d.splits = make_splits_per_class(d.targets, pc, std::min<Index>(500, remaining / 3),
                                   std::min<Index>(1000, remaining / 3), spec.seed);
  d.validate();
  return d;
}

}  // namespace gnngp
