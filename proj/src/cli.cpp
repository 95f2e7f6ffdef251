#include "osslc/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "osslc/diagnostics.hpp"
#include "osslc/error.hpp"
#include "osslc/evaluate.hpp"
#include "osslc/features.hpp"
#include "osslc/fetch.hpp"
#include "osslc/ingest.hpp"
#include "osslc/pipeline.hpp"

namespace osslc {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::AuthError:
    case ErrorKind::RateLimited:
    case ErrorKind::PartialData:
    case ErrorKind::NonConvergence:
    case ErrorKind::IoError:
      return kExitRuntime;
    default:
      return kExitData;
  }
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoError, "cannot write " + path);
  f << text;
}

Timestamp parse_time_flag(const std::string& text) {
  const auto t = parse_rfc3339(text);
  if (!t) fail(ErrorKind::ConfigError, "not an RFC 3339 timestamp: " + text);
  return *t;
}

FeatureTable load_table(const std::string& features, const std::string& labels) {
  FeatureTable table = read_feature_csv(features);
  if (!labels.empty()) join_labels(table, labels);
  return table;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lifecycle-stage classification for open-source projects", "osslc"};
  app.require_subcommand(1);

  // fetch
  auto* fetch = app.add_subcommand("fetch", "Download one repository's activity archive");
  std::string base_url, repo, token_env = "OSSLC_TOKEN", fetch_out, fetch_window_end = kDefaultWindowEnd;
  fetch->add_option("--base-url", base_url, "API base URL")->required();
  fetch->add_option("--repo", repo, "Repository id, org/name")->required();
  fetch->add_option("--token-env", token_env, "Environment variable holding the API token")->capture_default_str();
  fetch->add_option("--out", fetch_out, "Archive directory to create")->required();
  fetch->add_option("--window-end", fetch_window_end, "Observation cutoff (RFC 3339)")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate an archive and write it in canonical form");
  std::string archive, ingest_out;
  ingest->add_option("--archive", archive, "Archive directory")->required();
  ingest->add_option("--out", ingest_out, "Canonical archive output directory")->required();

  // features
  auto* features = app.add_subcommand("features", "Extract the metric table from a corpus of archives");
  std::string corpus, features_out, window_end = kDefaultWindowEnd, features_labels;
  int recency_days = 365;
  unsigned feature_jobs = 1;
  features->add_option("--corpus", corpus, "Directory of archives, one per repository")->required();
  features->add_option("--window-end", window_end, "Observation cutoff (RFC 3339)")->capture_default_str();
  features->add_option("--recency-days", recency_days, "Window for new contributors")->capture_default_str();
  features->add_option("--labels", features_labels, "Optional repo_id,label CSV");
  features->add_option("--jobs", feature_jobs, "Worker threads")->capture_default_str();
  features->add_option("--out", features_out, "Output CSV (- for stdout)")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Run the full training pipeline");
  std::string config_path, train_features, train_labels, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  train_cmd->add_option("--config", config_path, "Run configuration file (defaults apply when omitted)");
  train_cmd->add_option("--features", train_features, "Feature CSV (overrides paths.features)");
  train_cmd->add_option("--labels", train_labels, "repo_id,label CSV (overrides paths.labels)");
  train_cmd->add_option("--out-dir", out_dir, "Output directory (overrides paths.output)");
  train_cmd->add_option("--seed", seed, "Random seed (default 0)");
  train_cmd->add_option("--jobs", jobs, "Worker threads (default 1)");

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Predict lifecycle stages with a trained model");
  std::string model_path, classify_features, classify_out;
  classify_cmd->add_option("--model", model_path, "model.json from train")->required();
  classify_cmd->add_option("--features", classify_features, "Feature CSV")->required();
  classify_cmd->add_option("--out", classify_out, "Output CSV (- for stdout)")->capture_default_str();

  // report
  auto* report = app.add_subcommand("report", "Print the classification report of a run");
  std::string manifest_path;
  report->add_option("--manifest", manifest_path, "manifest.json from train")->required();

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Exploratory statistics and ridgeline data");
  std::string diag_features, diag_labels, diag_out, diag_model;
  std::size_t pd_points = 20;
  diagnose->add_option("--features", diag_features, "Feature CSV")->required();
  diagnose->add_option("--labels", diag_labels, "repo_id,label CSV");
  diagnose->add_option("--out-dir", diag_out, "Output directory")->required();
  diagnose->add_option("--model", diag_model, "Optional model.json for partial dependence");
  diagnose->add_option("--pd-points", pd_points, "Partial dependence grid size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fetch) {
      const char* token = std::getenv(token_env.c_str());
      if (!token || !*token) fail(ErrorKind::AuthError, "environment variable " + token_env + " is not set");
      const auto log = fetch_project(base_url, repo, token, parse_time_flag(fetch_window_end), fetch_out);
      err << "fetched " << log.repo_id << ": " << log.commits.size() << " commits, " << log.pull_requests.size()
          << " pull requests, " << log.issues.size() << " issues\n";
    } else if (*ingest) {
      const auto log = load_archive(archive);
      write_archive(log, ingest_out);
      err << "ingested " << log.repo_id << "\n";
    } else if (*features) {
      FeatureOptions options;
      options.recency_days = recency_days;
      FeatureTable table = extract_corpus_features(corpus, parse_time_flag(window_end), options, feature_jobs);
      if (!features_labels.empty()) join_labels(table, features_labels);
      write_output(features_out, feature_csv_string(table), out);
      err << "wrote " << table.size() << " rows\n";
    } else if (*train_cmd) {
      RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
      if (!train_features.empty()) config.features_path = train_features;
      if (!train_labels.empty()) config.labels_path = train_labels;
      if (!out_dir.empty()) config.output_dir = out_dir;
      if (seed) config.seed = *seed;
      if (jobs) config.jobs = std::max(1u, *jobs);
      if (config.output_dir.empty()) fail(ErrorKind::ConfigError, "no output directory: pass --out-dir or set paths.output");
      FeatureTable table;
      if (!config.features_path.empty()) {
        table = read_feature_csv(config.features_path);
      } else if (!config.corpus_dir.empty()) {
        FeatureOptions options;
        options.recency_days = config.recency_days;
        table = extract_corpus_features(config.corpus_dir, config.window_end, options, config.jobs);
      } else {
        fail(ErrorKind::ConfigError, "no input: pass --features or set paths.features / paths.corpus");
      }
      if (!config.labels_path.empty()) join_labels(table, config.labels_path);
      const auto manifest = run_training(config, table);
      out << render_report(manifest.report);
      err << "chosen family: " << family_name(manifest.chosen_outcome().family) << " with "
          << manifest.chosen_features.size() << " features; artifacts in " << config.output_dir.string() << "\n";
    } else if (*classify_cmd) {
      const auto result = classify(fs::path(model_path), read_feature_csv(classify_features));
      if (!result.ignored_columns.empty()) {
        err << "notice: ignoring " << result.ignored_columns.size() << " column(s) not used by the model\n";
      }
      write_output(classify_out, classification_csv(result), out);
    } else if (*report) {
      std::ifstream in(manifest_path, std::ios::binary);
      if (!in) fail(ErrorKind::MissingFile, "cannot open manifest " + manifest_path);
      nlohmann::json m;
      try {
        m = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaError, manifest_path + ": " + e.what());
      }
      ConfusionMatrix cm;
      try {
        const auto& jcm = m.at("report").at("confusion_matrix");
        cm.labels = jcm.at("labels").get<std::vector<int>>();
        cm.counts = jcm.at("counts").get<std::vector<std::vector<std::int64_t>>>();
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaError, manifest_path + ": " + e.what());
      }
      out << render_report(classification_report(cm));
    } else if (*diagnose) {
      const FeatureTable table = impute_zeros(load_table(diag_features, diag_labels));
      const Dataset ds = table_to_dataset(table);
      fs::create_directories(diag_out);
      const fs::path dir(diag_out);
      write_output((dir / kDiagnosticsFile).string(), diagnostics_to_json(run_diagnostics(ds)).dump(2) + "\n", out);
      std::vector<RidgelineSeries> series;
      for (std::size_t c = 0; c < ds.num_features(); ++c) {
        std::map<int, std::vector<double>> by_class;
        for (std::size_t r = 0; r < ds.size(); ++r) by_class[ds.y[r]].push_back(ds.X(r, c));
        series.push_back(ridgeline_series(ds.column_names[c], by_class));
        write_output((dir / ("ridgeline_" + ds.column_names[c] + ".svg")).string(), ridgeline_svg(series.back()), out);
      }
      write_output((dir / kRidgelineFile).string(), ridgeline_csv(series), out);
      if (!diag_model.empty()) {
        const auto doc = load_model(diag_model);
        std::vector<std::size_t> cols;
        for (const auto& f : doc.selected_features) {
          const auto it = std::find(ds.column_names.begin(), ds.column_names.end(), f);
          if (it == ds.column_names.end()) fail(ErrorKind::MissingFeatureColumn, "feature table lacks column " + f);
          cols.push_back(static_cast<std::size_t>(it - ds.column_names.begin()));
        }
        const Matrix X = ds.X.select_cols(cols);
        std::ostringstream pd_csv;
        pd_csv << "feature,class,x,mean_probability\n";
        for (std::size_t f = 0; f < cols.size(); ++f) {
          const auto pd = partial_dependence(doc.model, X, f, pd_points);
          for (std::size_t c = 0; c < pd.classes.size(); ++c)
            for (std::size_t g = 0; g < pd.grid.size(); ++g)
              pd_csv << doc.selected_features[f] << ',' << stage_name(stage_from_code(pd.classes[c])) << ','
                     << format_double(pd.grid[g]) << ',' << format_double(pd.curves[c][g]) << '\n';
        }
        write_output((dir / "partial_dependence.csv").string(), pd_csv.str(), out);
      }
      err << "diagnostics written to " << diag_out << "\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace osslc
