#include "hotmv/eval.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hotmv/error.hpp"
#include "hotmv/train.hpp"

namespace hotmv {

double accuracy(std::span<const int> preds, std::span<const int> truth) {
  if (preds.empty()) throw UsageError("accuracy: empty input");
  if (preds.size() != truth.size()) {
    throw UsageError("accuracy: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  }
  size_t hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw UsageError("adjusted_rand_index: partitions differ in size");
  if (a.empty()) throw UsageError("adjusted_rand_index: empty partitions");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, n] : table) index += choose2(n);
  double sum_a = 0.0;
  for (const auto& [key, n] : rows) sum_a += choose2(n);
  double sum_b = 0.0;
  for (const auto& [key, n] : cols) sum_b += choose2(n);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) {
    // Both partitions trivial (all singletons or one block): identical ones score 1.
    return index == max_index ? 1.0 : 0.0;
  }
  return (index - expected) / (max_index - expected);
}

std::vector<int> assign_views(const TransportPlan& plan) {
  std::vector<int> out;
  for (Index s = 0; s < plan.weights.rows(); ++s) {
    Index best = 0;
    for (Index k = 1; k < plan.weights.cols(); ++k) {
      if (plan.weights(s, k) > plan.weights(s, best)) best = k;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

double cluster_recovery(const TransportPlan& plan, std::span<const int> planted) {
  if (static_cast<size_t>(plan.weights.rows()) != planted.size()) {
    throw UsageError("cluster_recovery: plan has " + std::to_string(plan.weights.rows()) + " rows but " +
                     std::to_string(planted.size()) + " views are planted");
  }
  const auto assigned = assign_views(plan);
  return adjusted_rand_index(assigned, planted);
}

std::string_view ablation_mode_name(AblationMode mode) {
  return mode == AblationMode::kSemisupervised ? "semisupervised" : "unsupervised";
}

AblationMode parse_ablation_mode(std::string_view name) {
  if (name == "semisupervised") return AblationMode::kSemisupervised;
  if (name == "unsupervised") return AblationMode::kUnsupervised;
  throw UsageError("unknown mode '" + std::string(name) + "' (expected semisupervised or unsupervised)");
}

int AblationReport::most_damaging() const {
  int worst = -1;
  double worst_mean = 0.0;
  for (const auto& row : rows) {
    if (row.view < 0) continue;
    if (worst < 0 || row.mean < worst_mean) {
      worst = row.view;
      worst_mean = row.mean;
    }
  }
  return worst;
}

double train_and_score(const MultiViewDataset& dataset, const TrainConfig& config, AblationMode mode,
                       SplitSpec split) {
  split.seed = config.seed;
  split.unalign = !requires_alignment(config.regularizer);
  const auto parts = split_and_unalign(dataset, split);
  const auto& test = parts.test;
  if (!test.labels || test.num_samples() == 0) throw DataError("ablation: empty test split");
  if (mode == AblationMode::kSemisupervised) {
    auto result = train_semisupervised(parts, config);
    return accuracy(predict(result.model, test), *test.labels);
  }
  const auto pool = unsupervised_pool(parts);
  auto result = train_unsupervised(pool, config, &parts.valid);
  fit_classifier(result.model, parts.labeled, config);
  return accuracy(predict(result.model, test), *test.labels);
}

AblationReport run_ablation(const MultiViewDataset& dataset, const TrainConfig& config,
                            const AblationOptions& options) {
  if (dataset.num_views() < 2) throw UsageError("ablation needs at least two views");
  if (options.trials < 1) throw UsageError("ablation needs at least one trial");
  AblationReport report;
  report.trials = options.trials;
  report.mode = options.mode;

  auto run_row = [&](const MultiViewDataset& data, std::string removed, int view) {
    AblationRow row;
    row.removed = std::move(removed);
    row.view = view;
    for (int t = 0; t < options.trials; ++t) {
      TrainConfig c = config;
      c.seed = config.seed + static_cast<std::uint64_t>(t);
      row.accuracies.push_back(train_and_score(data, c, options.mode, options.split));
    }
    const double n = static_cast<double>(row.accuracies.size());
    row.mean = std::accumulate(row.accuracies.begin(), row.accuracies.end(), 0.0) / n;
    if (row.accuracies.size() > 1) {
      double ss = 0.0;
      for (double a : row.accuracies) ss += (a - row.mean) * (a - row.mean);
      row.stddev = std::sqrt(ss / (n - 1.0));
    }
    report.rows.push_back(std::move(row));
  };

  run_row(dataset, "All", -1);
  for (size_t s = 0; s < dataset.num_views(); ++s) {
    const std::string name = s < dataset.view_names.size() ? dataset.view_names[s] : "view" + std::to_string(s);
    run_row(drop_view(dataset, s), name, static_cast<int>(s));
  }
  return report;
}

std::string ablation_to_json(const AblationReport& report) {
  nlohmann::json j;
  j["trials"] = report.trials;
  j["mode"] = std::string(ablation_mode_name(report.mode));
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    j["rows"].push_back({{"removed", row.removed},
                         {"view", row.view},
                         {"mean", row.mean},
                         {"std", row.stddev},
                         {"accuracies", row.accuracies}});
  }
  j["most_damaging"] = report.most_damaging();
  return j.dump(2) + "\n";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError(where + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string format17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void export_plan_heatmap(const TransportPlan& plan, const std::vector<std::string>& row_names,
                         const std::filesystem::path& path, std::vector<std::string> col_names) {
  const Matrix& w = plan.weights;
  if (static_cast<Index>(row_names.size()) != w.rows()) {
    throw UsageError("export_plan_heatmap: " + std::to_string(row_names.size()) + " names for " +
                     std::to_string(w.rows()) + " rows");
  }
  if (col_names.empty()) {
    if (w.rows() == w.cols()) {
      col_names = row_names;
    } else {
      for (Index k = 0; k < w.cols(); ++k) col_names.push_back("ref" + std::to_string(k));
    }
  }
  if (static_cast<Index>(col_names.size()) != w.cols()) {
    throw UsageError("export_plan_heatmap: " + std::to_string(col_names.size()) + " column names for " +
                     std::to_string(w.cols()) + " columns");
  }

  std::ofstream csv(path, std::ios::binary);
  if (!csv) throw DataError("cannot write " + path.string());
  csv << "view";
  for (const auto& c : col_names) csv << ',' << csv_field(c);
  csv << '\n';
  for (Index s = 0; s < w.rows(); ++s) {
    csv << csv_field(row_names[static_cast<size_t>(s)]);
    for (Index k = 0; k < w.cols(); ++k) csv << ',' << format17(w(s, k));
    csv << '\n';
  }
  if (!csv) throw DataError("failed writing " + path.string());

  auto sidecar = path;
  sidecar.replace_extension(".json");
  auto j = nlohmann::json::parse(plan_to_json(plan));
  j["row_names"] = row_names;
  j["col_names"] = col_names;
  std::ofstream js(sidecar, std::ios::binary);
  if (!js) throw DataError("cannot write " + sidecar.string());
  js << j.dump(2) << '\n';
  if (!js) throw DataError("failed writing " + sidecar.string());
}

PlanTable read_plan_heatmap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  auto header = split_csv_line(line, path.string() + ":1");
  PlanTable table;
  table.col_names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    auto cells = split_csv_line(line, where);
    if (cells.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    }
    table.row_names.push_back(cells[0]);
    std::vector<double> values;
    for (size_t k = 1; k < cells.size(); ++k) {
      double v = 0.0;
      const auto& cell = cells[k];
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw DataError(where + ": not a number: '" + cell + "'");
      }
      values.push_back(v);
    }
    rows.push_back(std::move(values));
  }
  table.weights.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.col_names.size()));
  for (size_t s = 0; s < rows.size(); ++s) {
    for (size_t k = 0; k < rows[s].size(); ++k) table.weights(static_cast<Index>(s), static_cast<Index>(k)) = rows[s][k];
  }
  return table;
}

}  // namespace hotmv
