#include "osslc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "osslc/error.hpp"
#include "osslc/features.hpp"
#include "osslc/ingest.hpp"

namespace osslc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

struct Parser {
  std::string source;
  std::size_t line = 0;

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::ConfigError, source + ":" + std::to_string(line) + ": " + msg);
  }

  double number(const std::string& v) const {
    double out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) error("expected a number, got '" + v + "'");
    return out;
  }

  long long integer(const std::string& v) const {
    long long out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) error("expected an integer, got '" + v + "'");
    return out;
  }

  int int32(const std::string& v) const { return static_cast<int>(integer(v)); }

  bool boolean(const std::string& v) const {
    if (v == "true") return true;
    if (v == "false") return false;
    error("expected true or false, got '" + v + "'");
  }

  std::vector<std::string> list(const std::string& v) const {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') error("expected a [list], got '" + v + "'");
    std::vector<std::string> out;
    const std::string inner = v.substr(1, v.size() - 2);
    if (trim(inner).empty()) return out;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(unquote(trim(item)));
    return out;
  }

  std::vector<int> int_list(const std::string& v) const {
    std::vector<int> out;
    for (const auto& s : list(v)) out.push_back(int32(s));
    return out;
  }

  std::vector<double> double_list(const std::string& v) const {
    std::vector<double> out;
    for (const auto& s : list(v)) out.push_back(number(s));
    return out;
  }

  std::vector<std::optional<int>> optional_int_list(const std::string& v) const {
    std::vector<std::optional<int>> out;
    for (const auto& s : list(v)) out.push_back(s == "none" ? std::nullopt : std::optional<int>(int32(s)));
    return out;
  }
};

template <typename T>
std::string join(const std::vector<T>& values, auto&& fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fmt(values[i]);
  }
  return out + "]";
}

std::string fmt_int(int v) { return std::to_string(v); }
std::string fmt_opt(const std::optional<int>& v) { return v ? std::to_string(*v) : "none"; }

void set_grid_axis(RunConfig& cfg, Family family, const std::string& param, const std::string& value,
                   const Parser& p) {
  Grid& grid = cfg.grids.at(family);
  bool known = true;
  std::visit(
      [&](auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, TreeGrid>) {
          if (param == "max_depth") g.max_depth = p.int_list(value);
          else if (param == "min_samples_split") g.min_samples_split = p.int_list(value);
          else if (param == "min_samples_leaf") g.min_samples_leaf = p.int_list(value);
          else if (param == "max_leaf_nodes") g.max_leaf_nodes = p.optional_int_list(value);
          else if (param == "ccp_alpha") g.ccp_alpha = p.double_list(value);
          else known = false;
        } else if constexpr (std::is_same_v<G, ForestGrid>) {
          if (param == "n_trees") g.n_trees = p.int_list(value);
          else if (param == "max_depth") g.max_depth = p.int_list(value);
          else if (param == "min_samples_leaf") g.min_samples_leaf = p.int_list(value);
          else known = false;
        } else if constexpr (std::is_same_v<G, BoostingGrid>) {
          if (param == "learning_rate") g.learning_rate = p.double_list(value);
          else if (param == "max_depth") g.max_depth = p.int_list(value);
          else if (param == "n_stages") g.n_stages = p.int_list(value);
          else known = false;
        } else {
          if (param == "C") g.C = p.double_list(value);
          else if (param == "gamma") g.gamma = p.double_list(value);
          else known = false;
        }
      },
      grid);
  if (!known) p.error("unknown grid parameter '" + param + "' for " + std::string(family_name(family)));
}

}  // namespace

RunConfig::RunConfig() : window_end(*parse_rfc3339(kDefaultWindowEnd)) {
  for (auto f : {Family::DecisionTree, Family::RandomForest, Family::GradientBoosting, Family::SvmRbf}) {
    grids.emplace(f, default_grid(f));
  }
}

void RunConfig::check() const {
  cv.check();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail(ErrorKind::ConfigError, "test_fraction must lie in (0, 1)");
  if (smote_k < 0) fail(ErrorKind::ConfigError, "smote_k must be non-negative");
  if (recency_days < 0) fail(ErrorKind::ConfigError, "recency_days must be non-negative");
  if (isolation_trees < 1) fail(ErrorKind::ConfigError, "isolation.n_trees must be positive");
  if (families.empty()) fail(ErrorKind::ConfigError, "families must not be empty");
  if (family_tie_epsilon < 0) fail(ErrorKind::ConfigError, "family_tie_epsilon must be non-negative");
  for (const auto& [stage, f] : contamination.fraction) {
    if (!(f >= 0.0 && f < 0.5)) {
      fail(ErrorKind::ConfigError, "contamination." + std::string(stage_name(stage)) + " must lie in [0, 0.5)");
    }
  }
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  Parser p{source};
  std::stringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++p.line;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos && line.find('"') > hash) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) p.error("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (value.empty()) p.error("missing value for '" + key + "'");

    if (key == "seed") cfg.seed = static_cast<std::uint64_t>(p.integer(value));
    else if (key == "window_end") {
      const auto t = parse_rfc3339(value);
      if (!t) p.error("window_end must be an RFC 3339 timestamp");
      cfg.window_end = *t;
    } else if (key.starts_with("contamination.")) {
      const auto stage = parse_stage(key.substr(14));
      if (!stage) p.error("unknown stage in '" + key + "'");
      cfg.contamination.fraction[*stage] = p.number(value);
    } else if (key == "test_fraction") cfg.test_fraction = p.number(value);
    else if (key == "cv.k") cfg.cv.k = p.int32(value);
    else if (key == "cv.repeats") cfg.cv.repeats = p.int32(value);
    else if (key == "cv.scoring") {
      if (value == "accuracy") cfg.cv.scoring = Scoring::Accuracy;
      else if (value == "macro_f1") cfg.cv.scoring = Scoring::MacroF1;
      else p.error("cv.scoring must be accuracy or macro_f1");
    } else if (key == "smote_k") cfg.smote_k = p.int32(value);
    else if (key == "recency_days") cfg.recency_days = p.int32(value);
    else if (key == "isolation.n_trees") cfg.isolation_trees = p.int32(value);
    else if (key == "families") {
      cfg.families.clear();
      for (const auto& name : p.list(value)) {
        const auto f = parse_family(name);
        if (!f) p.error("unknown family '" + name + "'");
        cfg.families.push_back(*f);
      }
    } else if (key == "sfs") cfg.sfs = p.boolean(value);
    else if (key == "family_tie_epsilon") cfg.family_tie_epsilon = p.number(value);
    else if (key == "jobs") cfg.jobs = static_cast<unsigned>(std::max(1, p.int32(value)));
    else if (key == "paths.corpus") cfg.corpus_dir = value;
    else if (key == "paths.features") cfg.features_path = value;
    else if (key == "paths.labels") cfg.labels_path = value;
    else if (key == "paths.output") cfg.output_dir = value;
    else if (key.starts_with("grid.")) {
      const auto dot = key.find('.', 5);
      if (dot == std::string::npos) p.error("expected grid.<family>.<parameter>");
      const auto family = parse_family(key.substr(5, dot - 5));
      if (!family) p.error("unknown family in '" + key + "'");
      set_grid_axis(cfg, *family, key.substr(dot + 1), value, p);
    } else {
      p.error("unknown key '" + key + "'");
    }
  }
  cfg.cv.smote_k = cfg.smote_k;
  cfg.cv.seed = cfg.seed;
  cfg.cv.jobs = cfg.jobs;
  cfg.check();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingFile, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string config_to_string(const RunConfig& c) {
  std::ostringstream out;
  out << "seed = " << c.seed << "\n";
  out << "window_end = " << format_rfc3339(c.window_end) << "\n";
  for (const auto& [stage, f] : c.contamination.fraction) {
    out << "contamination." << stage_name(stage) << " = " << format_double(f) << "\n";
  }
  out << "test_fraction = " << format_double(c.test_fraction) << "\n";
  out << "cv.k = " << c.cv.k << "\n";
  out << "cv.repeats = " << c.cv.repeats << "\n";
  out << "cv.scoring = " << (c.cv.scoring == Scoring::Accuracy ? "accuracy" : "macro_f1") << "\n";
  out << "smote_k = " << c.smote_k << "\n";
  out << "recency_days = " << c.recency_days << "\n";
  out << "isolation.n_trees = " << c.isolation_trees << "\n";
  out << "families = " << join(c.families, [](Family f) { return std::string(family_name(f)); }) << "\n";
  out << "sfs = " << (c.sfs ? "true" : "false") << "\n";
  out << "family_tie_epsilon = " << format_double(c.family_tie_epsilon) << "\n";
  out << "jobs = " << c.jobs << "\n";
  if (!c.corpus_dir.empty()) out << "paths.corpus = \"" << c.corpus_dir.string() << "\"\n";
  if (!c.features_path.empty()) out << "paths.features = \"" << c.features_path.string() << "\"\n";
  if (!c.labels_path.empty()) out << "paths.labels = \"" << c.labels_path.string() << "\"\n";
  if (!c.output_dir.empty()) out << "paths.output = \"" << c.output_dir.string() << "\"\n";
  auto dbl = [](double v) { return format_double(v); };
  for (const auto& [family, grid] : c.grids) {
    const std::string prefix = "grid." + std::string(family_name(family)) + ".";
    std::visit(
        [&](const auto& g) {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, TreeGrid>) {
            out << prefix << "max_depth = " << join(g.max_depth, fmt_int) << "\n";
            out << prefix << "min_samples_split = " << join(g.min_samples_split, fmt_int) << "\n";
            out << prefix << "min_samples_leaf = " << join(g.min_samples_leaf, fmt_int) << "\n";
            out << prefix << "max_leaf_nodes = " << join(g.max_leaf_nodes, fmt_opt) << "\n";
            out << prefix << "ccp_alpha = " << join(g.ccp_alpha, dbl) << "\n";
          } else if constexpr (std::is_same_v<G, ForestGrid>) {
            out << prefix << "n_trees = " << join(g.n_trees, fmt_int) << "\n";
            out << prefix << "max_depth = " << join(g.max_depth, fmt_int) << "\n";
            out << prefix << "min_samples_leaf = " << join(g.min_samples_leaf, fmt_int) << "\n";
          } else if constexpr (std::is_same_v<G, BoostingGrid>) {
            out << prefix << "learning_rate = " << join(g.learning_rate, dbl) << "\n";
            out << prefix << "max_depth = " << join(g.max_depth, fmt_int) << "\n";
            out << prefix << "n_stages = " << join(g.n_stages, fmt_int) << "\n";
          } else {
            out << prefix << "C = " << join(g.C, dbl) << "\n";
            out << prefix << "gamma = " << join(g.gamma, dbl) << "\n";
          }
        },
        grid);
  }
  return out.str();
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  std::stringstream in(config_to_string(c));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) j[line.substr(0, eq)] = unquote(line.substr(eq + 3));
  }
  return j;
}

}  // namespace osslc
