#include "hotmv/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "hotmv/error.hpp"
#include "hotmv/version.hpp"

namespace hotmv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError("config: cannot parse '" + value + "' for key '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config: expected true/false for key '" + key + "', got '" + value + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  const char* key;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define HOTMV_NUMBER_FIELD(name, type)                                                         \
  Field {                                                                                      \
#name, [](TrainConfig& c, const std::string& v) { c.name = parse_number<type>(#name, v); }, \
        [](const TrainConfig& c) { return std::to_string(c.name); }                            \
  }
#define HOTMV_REAL_FIELD(name)                                                                 \
  Field {                                                                                      \
#name, [](TrainConfig& c, const std::string& v) { c.name = parse_number<double>(#name, v); }, \
        [](const TrainConfig& c) { return format_double(c.name); }                             \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      HOTMV_NUMBER_FIELD(epochs, int),
      HOTMV_REAL_FIELD(lr),
      HOTMV_NUMBER_FIELD(batch_size, Index),
      HOTMV_NUMBER_FIELD(hidden_width, Index),
      HOTMV_NUMBER_FIELD(encoder_out, Index),
      HOTMV_NUMBER_FIELD(shared_dim, Index),
      HOTMV_REAL_FIELD(tau),
      HOTMV_REAL_FIELD(gamma),
      HOTMV_REAL_FIELD(alpha),
      HOTMV_NUMBER_FIELD(sinkhorn_iters, int),
      HOTMV_REAL_FIELD(beta),
      HOTMV_NUMBER_FIELD(num_projections, Index),
      HOTMV_NUMBER_FIELD(num_clusters, int),
      Field{"regularizer",
            [](TrainConfig& c, const std::string& v) { c.regularizer = parse_regularizer(v); },
            [](const TrainConfig& c) { return std::string(regularizer_name(c.regularizer)); }},
      Field{"use_autoencoder",
            [](TrainConfig& c, const std::string& v) { c.use_autoencoder = parse_bool("use_autoencoder", v); },
            [](const TrainConfig& c) { return std::string(c.use_autoencoder ? "true" : "false"); }},
      HOTMV_NUMBER_FIELD(head_epochs, int),
      HOTMV_NUMBER_FIELD(seed, std::uint64_t),
  };
  return kFields;
}

#undef HOTMV_NUMBER_FIELD
#undef HOTMV_REAL_FIELD

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("config: ") + what);
  };
  require(epochs >= 0, "epochs must be >= 0");
  require(lr >= 0.0, "lr must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(hidden_width >= 1 && encoder_out >= 1 && shared_dim >= 1, "layer widths must be >= 1");
  require(tau >= 0.0 && gamma >= 0.0 && alpha >= 0.0, "tau, gamma and alpha must be >= 0");
  require(sinkhorn_iters >= 1, "sinkhorn_iters must be >= 1");
  require(beta > 0.0, "beta must be > 0");
  require(num_projections >= 1, "num_projections must be >= 1");
  require(num_clusters >= 1, "num_clusters must be >= 1");
  require(head_epochs >= 0, "head_epochs must be >= 0");
}

void set_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, value);
      return;
    }
  }
  throw UsageError("config: unknown key '" + key + "'");
}

TrainConfig parse_config_text(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str(), std::move(base));
  } catch (const UsageError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::string config_to_text(const TrainConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

std::map<std::string, std::string> config_to_map(const TrainConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& f : fields()) out[f.key] = f.get(config);
  return out;
}

const char* library_version() { return HOTMV_VERSION; }

}  // namespace hotmv
