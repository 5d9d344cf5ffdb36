#include "hotmv/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hotmv/error.hpp"

namespace hotmv {

namespace fs = std::filesystem;

void MultiViewDataset::validate() const {
  if (views.empty()) throw DataError(name + ": dataset has no views");
  if (view_names.size() != views.size()) throw DataError(name + ": view names do not match views");
  const Index n = views.front().rows();
  for (size_t s = 1; s < views.size(); ++s) {
    if (views[s].rows() != n) {
      throw DataError(name + ": view '" + view_names[s] + "' has " + std::to_string(views[s].rows()) +
                      " samples but view '" + view_names[0] + "' has " + std::to_string(n));
    }
  }
  if (labels) {
    if (static_cast<Index>(labels->size()) != n) throw DataError(name + ": labels length differs from N");
    for (int y : *labels) {
      if (y < 0 || y >= num_classes) {
        throw DataError(name + ": label " + std::to_string(y) + " outside [0, " +
                        std::to_string(num_classes) + ")");
      }
    }
  }
  if (planted_partition && planted_partition->size() != views.size()) {
    throw DataError(name + ": planted partition length differs from view count");
  }
}

void standardize(MultiViewDataset& dataset) {
  for (auto& v : dataset.views) {
    if (v.rows() == 0) continue;
    const Eigen::RowVectorXd mean = v.colwise().mean();
    v.rowwise() -= mean;
    const Eigen::RowVectorXd sd = (v.colwise().squaredNorm() / static_cast<double>(v.rows())).cwiseSqrt();
    for (Index j = 0; j < v.cols(); ++j)
      if (sd(j) > 1e-12) v.col(j) /= sd(j);
  }
}

Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Index count = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
      while (p < end && *p == ' ') ++p;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(p, end, value);
      const char* q = ptr;
      while (q < end && *q == ' ') ++q;
      if (ec != std::errc() || (q < end && *q != ',')) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": non-numeric cell " +
                        std::to_string(count + 1));
      }
      values.push_back(value);
      ++count;
      if (q == end) break;
      p = q + 1;
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(cols) + " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw DataError(path.string() + ": empty file");
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = values[static_cast<size_t>(i * cols + j)];
  return out;
}

void write_csv_matrix(const fs::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

MultiViewDataset load_manifest(const fs::path& path, bool standardize_views) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  MultiViewDataset ds;
  try {
    ds.name = j.value("name", path.stem().string());
    for (const auto& v : j.at("views")) {
      const auto file = base / v.at("file").get<std::string>();
      Matrix m = read_csv_matrix(file);
      if (v.contains("dim") && v.at("dim").get<Index>() != m.cols()) {
        throw DataError(file.string() + ": manifest says dim " + std::to_string(v.at("dim").get<Index>()) +
                        " but file has " + std::to_string(m.cols()) + " columns");
      }
      ds.view_names.push_back(v.value("name", file.stem().string()));
      if (!ds.views.empty() && m.rows() != ds.views.front().rows()) {
        throw DataError("view files disagree on sample count: " + file.string() + " has " +
                        std::to_string(m.rows()) + " rows, " +
                        (base / j.at("views")[0].at("file").get<std::string>()).string() + " has " +
                        std::to_string(ds.views.front().rows()));
      }
      ds.views.push_back(std::move(m));
    }
    if (j.contains("labels_file")) {
      const auto file = base / j.at("labels_file").get<std::string>();
      const Matrix lab = read_csv_matrix(file);
      if (lab.cols() != 1) throw DataError(file.string() + ": labels must have one column");
      std::vector<int> labels;
      for (Index i = 0; i < lab.rows(); ++i) {
        const double y = lab(i, 0);
        if (y != std::floor(y) || y < 0) {
          throw DataError(file.string() + ":" + std::to_string(i + 1) + ": label is not a class id");
        }
        labels.push_back(static_cast<int>(y));
      }
      ds.num_classes = j.contains("num_classes") ? j.at("num_classes").get<int>()
                                                 : *std::max_element(labels.begin(), labels.end()) + 1;
      ds.labels = std::move(labels);
    }
    if (j.contains("planted_partition")) ds.planted_partition = j.at("planted_partition").get<std::vector<int>>();
    if (j.contains("provenance")) ds.provenance = j.at("provenance").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  ds.aligned = true;
  if (ds.provenance.empty()) ds.provenance = fs::absolute(path).string();
  ds.validate();
  if (standardize_views) standardize(ds);
  return ds;
}

void write_dataset(const MultiViewDataset& dataset, const fs::path& dir) {
  dataset.validate();
  fs::create_directories(dir);
  nlohmann::json j;
  j["name"] = dataset.name;
  j["views"] = nlohmann::json::array();
  for (size_t s = 0; s < dataset.num_views(); ++s) {
    const std::string file = "view" + std::to_string(s) + ".csv";
    write_csv_matrix(dir / file, dataset.views[s]);
    j["views"].push_back({{"name", dataset.view_names[s]}, {"file", file}, {"dim", dataset.view_dim(s)}});
  }
  if (dataset.labels) {
    Matrix lab(static_cast<Index>(dataset.labels->size()), 1);
    for (Index i = 0; i < lab.rows(); ++i) lab(i, 0) = (*dataset.labels)[static_cast<size_t>(i)];
    write_csv_matrix(dir / "labels.csv", lab);
    j["labels_file"] = "labels.csv";
    j["num_classes"] = dataset.num_classes;
  }
  if (dataset.planted_partition) j["planted_partition"] = *dataset.planted_partition;
  if (!dataset.provenance.empty()) j["provenance"] = dataset.provenance;
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

MultiViewDataset select_rows(const MultiViewDataset& dataset, const std::vector<Index>& rows) {
  MultiViewDataset out = dataset;
  for (size_t s = 0; s < dataset.num_views(); ++s) {
    out.views[s].resize(static_cast<Index>(rows.size()), dataset.view_dim(s));
    for (size_t i = 0; i < rows.size(); ++i) out.views[s].row(static_cast<Index>(i)) = dataset.views[s].row(rows[i]);
  }
  if (dataset.labels) {
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (Index r : rows) labels.push_back((*dataset.labels)[static_cast<size_t>(r)]);
    out.labels = std::move(labels);
  }
  return out;
}

MultiViewDataset drop_view(const MultiViewDataset& dataset, size_t view) {
  if (view >= dataset.num_views()) throw UsageError("drop_view: no view " + std::to_string(view));
  MultiViewDataset out = dataset;
  out.views.erase(out.views.begin() + static_cast<std::ptrdiff_t>(view));
  out.view_names.erase(out.view_names.begin() + static_cast<std::ptrdiff_t>(view));
  if (out.planted_partition) {
    out.planted_partition->erase(out.planted_partition->begin() + static_cast<std::ptrdiff_t>(view));
  }
  return out;
}

DataSplit split_and_unalign(const MultiViewDataset& dataset, const SplitSpec& spec) {
  dataset.validate();
  if (!dataset.labels) throw DataError(dataset.name + ": split needs labels");
  if (!dataset.aligned) throw DataError(dataset.name + ": split needs an aligned dataset");
  if (spec.train <= 0 || spec.valid < 0 || spec.test < 0 ||
      std::abs(spec.train + spec.valid + spec.test - 1.0) > 1e-9) {
    throw UsageError("split fractions must be nonnegative and sum to 1");
  }
  if (!(spec.labeled_fraction > 0.0 && spec.labeled_fraction <= 1.0)) {
    throw UsageError("labeled fraction must be in (0, 1]");
  }
  const auto& labels = *dataset.labels;
  const Index n = dataset.num_samples();
  std::mt19937_64 rng(spec.seed);

  std::vector<std::vector<Index>> by_class(static_cast<size_t>(dataset.num_classes));
  for (Index i = 0; i < n; ++i) by_class[static_cast<size_t>(labels[static_cast<size_t>(i)])].push_back(i);
  for (size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < 3) {
      throw DataError(dataset.name + ": class " + std::to_string(c) + " has " +
                      std::to_string(by_class[c].size()) + " samples; stratified split needs 3");
    }
  }

  // Interleave classes proportionally: sample r of class c gets key
  // (r + u) / n_c, so every prefix of the ordering is stratified to within
  // one sample per class.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<double, Index>> keyed;
  keyed.reserve(static_cast<size_t>(n));
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const double nc = static_cast<double>(members.size());
    for (size_t r = 0; r < members.size(); ++r) {
      keyed.emplace_back((static_cast<double>(r) + unif(rng)) / nc, members[r]);
    }
  }
  std::sort(keyed.begin(), keyed.end());

  const auto n_train = static_cast<Index>(std::llround(spec.train * static_cast<double>(n)));
  const auto n_valid = std::min(n - n_train, static_cast<Index>(std::llround(spec.valid * static_cast<double>(n))));
  const auto n_labeled = std::clamp<Index>(
      static_cast<Index>(std::llround(spec.labeled_fraction * static_cast<double>(n_train))), 1, n_train);

  DataSplit out;
  std::vector<Index> unlabeled;
  for (Index i = 0; i < n; ++i) {
    const Index row = keyed[static_cast<size_t>(i)].second;
    if (i < n_labeled) {
      out.labeled_rows.push_back(row);
    } else if (i < n_train) {
      unlabeled.push_back(row);
    } else if (i < n_train + n_valid) {
      out.valid_rows.push_back(row);
    } else {
      out.test_rows.push_back(row);
    }
  }

  out.labeled = select_rows(dataset, out.labeled_rows);
  out.labeled.name = dataset.name + "/labeled";
  out.valid = select_rows(dataset, out.valid_rows);
  out.valid.name = dataset.name + "/valid";
  out.test = select_rows(dataset, out.test_rows);
  out.test.name = dataset.name + "/test";

  out.unlabeled = select_rows(dataset, unlabeled);
  out.unlabeled.name = dataset.name + "/unlabeled";
  out.unlabeled.labels.reset();
  if (!spec.unalign) {
    // Baselines that need correspondence keep the pool aligned.
    out.unlabeled_rows.assign(dataset.num_views(), unlabeled);
    return out;
  }
  out.unlabeled.aligned = false;
  for (size_t s = 0; s < dataset.num_views(); ++s) {
    std::vector<Index> order(unlabeled.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    Matrix permuted(static_cast<Index>(order.size()), dataset.view_dim(s));
    std::vector<Index> source;
    source.reserve(order.size());
    for (size_t i = 0; i < order.size(); ++i) {
      permuted.row(static_cast<Index>(i)) = out.unlabeled.views[s].row(order[i]);
      source.push_back(unlabeled[static_cast<size_t>(order[i])]);
    }
    out.unlabeled.views[s] = std::move(permuted);
    out.unlabeled_rows.push_back(std::move(source));
  }
  return out;
}

int SynthSpec::num_clusters() const {
  if (assignment.empty()) return 0;
  return *std::max_element(assignment.begin(), assignment.end()) + 1;
}

int SynthSpec::modulus(int cluster) const {
  return moduli.empty() ? cluster + 2 : moduli[static_cast<size_t>(cluster)];
}

MultiViewDataset generate_synthetic(const SynthSpec& spec) {
  const size_t num_views = spec.assignment.size();
  if (num_views == 0) throw UsageError("synthetic spec: no views");
  const int k_true = spec.num_clusters();
  std::set<int> used(spec.assignment.begin(), spec.assignment.end());
  if (*used.begin() < 0 || static_cast<int>(used.size()) != k_true) {
    throw UsageError("synthetic spec: cluster ids must be contiguous from 0");
  }
  if (!spec.view_dims.empty() && spec.view_dims.size() != num_views) {
    throw UsageError("synthetic spec: view_dims length differs from the number of views");
  }
  if (spec.latent_dim < 1 || spec.samples < 1 || spec.classes < 1 || spec.default_view_dim < 1) {
    throw UsageError("synthetic spec: dimensions and counts must be positive");
  }
  if (spec.noise < 0.0 || spec.latent_noise < 0.0) throw UsageError("synthetic spec: noise must be >= 0");
  if (!spec.moduli.empty() && static_cast<int>(spec.moduli.size()) != k_true) {
    throw UsageError("synthetic spec: moduli needs one entry per planted cluster");
  }
  for (int k = 0; k < k_true; ++k) {
    if (spec.modulus(k) < 1) throw UsageError("synthetic spec: moduli must be >= 1");
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index n = spec.samples;
  const Index l = spec.latent_dim;

  // Balanced labels in random order.
  std::vector<int> labels(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = static_cast<int>(i % spec.classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  // codes[k] is N x L: the mean of the sample's group (label mod m_k) plus
  // isotropic latent noise.
  std::vector<Matrix> codes;
  for (int k = 0; k < k_true; ++k) {
    const int m = spec.modulus(k);
    Matrix means(m, l);
    for (Index g = 0; g < means.rows(); ++g)
      for (Index j = 0; j < l; ++j) means(g, j) = m > 1 ? spec.class_separation * normal(rng) : 0.0;
    Matrix h(n, l);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < l; ++j)
        h(i, j) = means(labels[static_cast<size_t>(i)] % m, j) + spec.latent_noise * normal(rng);
    codes.push_back(std::move(h));
  }

  MultiViewDataset ds;
  ds.name = "synthetic";
  ds.num_classes = spec.classes;
  for (size_t s = 0; s < num_views; ++s) {
    const Index dim = spec.view_dims.empty() ? spec.default_view_dim : spec.view_dims[s];
    Matrix a(dim, l);
    const double scale = 1.0 / std::sqrt(static_cast<double>(l));
    for (Index j = 0; j < l; ++j)
      for (Index i = 0; i < dim; ++i) a(i, j) = scale * normal(rng);
    Matrix x = codes[static_cast<size_t>(spec.assignment[s])] * a.transpose();
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < dim; ++j) x(i, j) += spec.noise * normal(rng);
    ds.views.push_back(std::move(x));
    ds.view_names.push_back("view" + std::to_string(s));
  }
  ds.labels = std::move(labels);
  ds.aligned = true;
  ds.planted_partition = spec.assignment;
  std::ostringstream prov;
  prov << "synthetic(seed=" << spec.seed << ", samples=" << spec.samples << ", classes=" << spec.classes
       << ", assignment=";
  for (size_t s = 0; s < num_views; ++s) prov << (s ? "," : "") << spec.assignment[s];
  prov << ", moduli=";
  for (int k = 0; k < k_true; ++k) prov << (k ? "," : "") << spec.modulus(k);
  prov << ", latent_dim=" << spec.latent_dim << ", separation=" << spec.class_separation
       << ", latent_noise=" << spec.latent_noise << ", noise=" << spec.noise << ")";
  ds.provenance = prov.str();
  return ds;
}

}  // namespace hotmv
