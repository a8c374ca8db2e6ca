#include "demandcast/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "demandcast/data.hpp"
#include "demandcast/eval.hpp"
#include "demandcast/io.hpp"
#include "demandcast/model.hpp"
#include "demandcast/plot.hpp"
#include "demandcast/synthetic.hpp"

namespace demandcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

json to_json(const RunConfig& c) {
  const auto& t = c.pipeline.train;
  json features = json::array();
  for (auto f : c.features) features.push_back(to_string(f));
  return {{"seed", c.seed},
          {"learning_rate", t.learning_rate},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"grad_clip_norm", t.grad_clip_norm},
          {"batch", t.batch},
          {"loss", to_string(t.loss)},
          {"input_noise", t.input_noise},
          {"hidden", c.pipeline.hidden},
          {"window", c.pipeline.window},
          {"stride", c.pipeline.stride},
          {"time_encoding", to_string(c.pipeline.encoding)},
          {"split", {c.pipeline.split.train_frac, c.pipeline.split.val_frac, c.pipeline.split.test_frac}},
          {"cluster", c.cluster},
          {"features", features},
          {"horizon", c.horizon},
          {"months", c.months},
          {"consumers", c.consumers},
          {"days", c.days},
          {"start", c.start}};
}

std::vector<FeatureSet> parse_features(const std::vector<std::string>& names) {
  std::vector<FeatureSet> out;
  for (const auto& n : names) out.push_back(parse_feature_set(n));
  if (out.empty()) throw UsageError("at least one feature set is required");
  return out;
}

}  // namespace

void apply_config_file(RunConfig& c, const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config " + path.string() + ": expected a JSON object");
  auto& t = c.pipeline.train;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") c.seed = t.seed = v.get<std::uint64_t>();
      else if (key == "learning_rate") t.learning_rate = v.get<double>();
      else if (key == "max_epochs") t.max_epochs = v.get<std::size_t>();
      else if (key == "patience") t.patience = v.get<std::size_t>();
      else if (key == "grad_clip_norm") t.grad_clip_norm = v.get<double>();
      else if (key == "batch") t.batch = v.get<std::size_t>();
      else if (key == "loss") t.loss = parse_loss_mode(v.get<std::string>());
      else if (key == "input_noise") t.input_noise = v.get<double>();
      else if (key == "hidden") c.pipeline.hidden = v.get<std::size_t>();
      else if (key == "window") c.pipeline.window = v.get<std::size_t>();
      else if (key == "stride") c.pipeline.stride = v.get<std::size_t>();
      else if (key == "time_encoding") c.pipeline.encoding = parse_time_encoding(v.get<std::string>());
      else if (key == "split") {
        const auto s = v.get<std::vector<double>>();
        if (s.size() != 3) throw UsageError("config: split needs three fractions");
        c.pipeline.split = {s[0], s[1], s[2]};
      } else if (key == "cluster") c.cluster = v.get<int>();
      else if (key == "features") c.features = parse_features(v.get<std::vector<std::string>>());
      else if (key == "horizon") c.horizon = v.get<std::size_t>();
      else if (key == "months") c.months = v.get<std::vector<std::string>>();
      else if (key == "consumers") c.consumers = v.get<std::size_t>();
      else if (key == "days") c.days = v.get<std::size_t>();
      else if (key == "start") c.start = v.get<std::string>();
      else if (key.starts_with("_")) continue;  // comments
      else throw UsageError("config " + path.string() + ": unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
}

SyntheticSpec synthetic_spec(const RunConfig& c) {
  SyntheticSpec spec;
  spec.seed = c.seed;
  spec.consumers = c.consumers;
  spec.days = c.days;
  const auto ymd = TimeStamp::parse(c.start + "T00:00").date();
  spec.start_year = static_cast<int>(ymd.year());
  spec.start_month = static_cast<unsigned>(ymd.month());
  spec.start_day = static_cast<unsigned>(ymd.day());
  return spec;
}

namespace {

/// Flag values; unset optionals fall through to the config file and defaults.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<double> learning_rate, grad_clip_norm, input_noise;
  std::optional<std::size_t> max_epochs, patience, batch, hidden, window, stride, horizon, consumers, days;
  std::optional<std::string> loss, encoding, start, split;
  std::optional<int> cluster;
  std::optional<std::vector<std::string>> features, months;
};

void add_common(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON config file (flags override it)");
  cmd.add_option("--seed", f.seed, "Random seed (default: $DEMANDCAST_SEED, else 42)");
}

void add_training(CLI::App& cmd, Flags& f) {
  cmd.add_option("--hidden", f.hidden, "LSTM hidden size (default 32)");
  cmd.add_option("--window", f.window, "Window length in 30-minute steps (default 48)");
  cmd.add_option("--stride", f.stride, "Spacing between training windows (default 1)");
  cmd.add_option("--lr", f.learning_rate, "Adam learning rate (default 1e-3)");
  cmd.add_option("--epochs", f.max_epochs, "Maximum epochs (default 500)");
  cmd.add_option("--patience", f.patience, "Early-stopping patience in epochs (default 20)");
  cmd.add_option("--clip", f.grad_clip_norm, "Global gradient-norm clip (default 1.0)");
  cmd.add_option("--batch", f.batch, "Windows per update (default 32)");
  cmd.add_option("--loss", f.loss, "all_steps or last_step (default all_steps)");
  cmd.add_option("--input-noise", f.input_noise, "Noise sd on the consumption input while training (default 0)");
  cmd.add_option("--encoding", f.encoding, "Time feature: concatenated or linear (default concatenated)");
  cmd.add_option("--split", f.split, "train,val,test fractions (default 0.7,0.1,0.2)");
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (const char* env = std::getenv("DEMANDCAST_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      c.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError(std::string("DEMANDCAST_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  if (f.config) apply_config_file(c, *f.config);
  auto& t = c.pipeline.train;
  if (f.seed) c.seed = *f.seed;
  if (f.learning_rate) t.learning_rate = *f.learning_rate;
  if (f.grad_clip_norm) t.grad_clip_norm = *f.grad_clip_norm;
  if (f.max_epochs) t.max_epochs = *f.max_epochs;
  if (f.patience) t.patience = *f.patience;
  if (f.batch) t.batch = *f.batch;
  if (f.loss) t.loss = parse_loss_mode(*f.loss);
  if (f.input_noise) t.input_noise = *f.input_noise;
  if (f.hidden) c.pipeline.hidden = *f.hidden;
  if (f.window) c.pipeline.window = *f.window;
  if (f.stride) c.pipeline.stride = *f.stride;
  if (f.encoding) c.pipeline.encoding = parse_time_encoding(*f.encoding);
  if (f.split) {
    std::vector<double> s;
    std::stringstream ss(*f.split);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        s.push_back(std::stod(part));
      } catch (const std::exception&) {
        throw UsageError("--split: malformed fraction '" + part + "'");
      }
    }
    if (s.size() != 3) throw UsageError("--split needs three comma-separated fractions");
    c.pipeline.split = {s[0], s[1], s[2]};
  }
  if (f.cluster) c.cluster = *f.cluster;
  if (f.features) c.features = parse_features(*f.features);
  if (f.horizon) c.horizon = *f.horizon;
  if (f.months) c.months = *f.months;
  if (f.consumers) c.consumers = *f.consumers;
  if (f.days) c.days = *f.days;
  if (f.start) c.start = *f.start;

  t.seed = c.seed;
  t.validate();
  c.pipeline.split.validate();
  if (c.pipeline.hidden < 1 || c.pipeline.window < 1 || c.pipeline.stride < 1) {
    throw UsageError("hidden, window and stride must be >= 1");
  }
  return c;
}

std::vector<YearMonth> parse_months(const std::vector<std::string>& months) {
  std::vector<YearMonth> out;
  for (const auto& m : months) {
    try {
      out.push_back(YearMonth::parse(m));
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

void check_distinct(const fs::path& output, const fs::path& input, const char* what) {
  std::error_code ec;
  if (fs::weakly_canonical(output, ec) == fs::weakly_canonical(input, ec)) {
    throw UsageError(std::string("output path would overwrite the ") + what + " " + input.string());
  }
}

/// Writes run-manifest.json into `dir` with the resolved config and output hashes.
void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& c,
                    const std::vector<fs::path>& outputs) {
  json hashes = json::object();
  for (const auto& p : outputs) hashes[p.filename().string()] = sha256_file(p);
  const json manifest{{"command", command},
                      {"seed", c.seed},
                      {"config", to_json(c)},
                      {"generator_version", kGeneratorVersion},
                      {"model_schema_version", kModelSchemaVersion},
                      {"artifacts", hashes}};
  write_atomic(dir / "run-manifest.json", manifest.dump(2) + "\n");
}

fs::path dir_of(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

ProfileSeries select_series(const Dataset& data, int cluster, const std::vector<std::string>& months) {
  ProfileSeries series = data.series(cluster);
  if (months.empty()) return series;
  if (months.size() != 1) throw UsageError("train accepts at most one --month");
  const YearMonth want = parse_months(months).front();
  for (const auto& seg : month_segments(series.time)) {
    if (seg.month == want) return series.slice(seg.begin, seg.end);
  }
  throw DataError("month " + want.str() + " is not in the dataset");
}

int cmd_synth(const RunConfig& c, const fs::path& out_dir, std::ostream& out) {
  SyntheticSpec spec;
  try {
    spec = synthetic_spec(c);
  } catch (const DataError& e) {
    throw UsageError(std::string("--start: ") + e.what());
  }
  if (spec.consumers < 1 || spec.days < 1) throw UsageError("--consumers and --days must be >= 1");

  const auto data = generate_synthetic(spec);
  const std::vector<fs::path> files{out_dir / "meter.csv", out_dir / "temperature.csv", out_dir / "clusters.csv",
                                    out_dir / "manifest.json"};
  write_atomic(files[0], [&](std::ostream& os) { write_meter_csv(os, data.readings); });
  write_atomic(files[1], [&](std::ostream& os) { write_temperature_csv(os, data.time, data.temperature); });
  write_atomic(files[2], [&](std::ostream& os) { write_cluster_csv(os, data.assignment); });
  const json manifest{{"seed", spec.seed},
                      {"consumers", spec.consumers},
                      {"days", spec.days},
                      {"start", c.start},
                      {"generator_version", kGeneratorVersion}};
  write_atomic(files[3], manifest.dump(2) + "\n");
  write_manifest(out_dir, "synth", c, files);
  out << "wrote " << data.readings.size() << " readings for " << spec.consumers << " consumers over " << spec.days
      << " days to " << out_dir.string() << "\n";
  return kOk;
}

int cmd_train(const RunConfig& c, const fs::path& data_dir, const fs::path& model_path, const fs::path& report_path,
              std::ostream& out) {
  if (c.features.size() != 1) throw UsageError("train takes exactly one --features value");
  const Dataset data = load_dataset(data_dir);
  const ProfileSeries series = select_series(data, c.cluster, c.months);
  const SplitBounds bounds = split_bounds(series.size(), c.pipeline.split, c.pipeline.window);
  const FitResult fit = fit_model(series, bounds, c.features.front(), c.pipeline);

  write_atomic(model_path, model_to_json(fit.model));
  write_atomic(report_path, [&](std::ostream& os) { write_report_csv(os, fit.report); });
  write_manifest(dir_of(model_path), "train", c, {model_path, report_path});
  out << "trained " << fit.report.epochs_run() << " epochs (" << to_string(fit.report.stop) << "), best epoch "
      << fit.report.best_epoch << ", validation RMSE " << fit.report.val_rmse[fit.report.best_epoch - 1] << "\n";
  return kOk;
}

int cmd_forecast(const RunConfig& c, const Flags& f, const fs::path& model_path, const fs::path& data_dir,
                 const fs::path& out_path, std::ostream& out) {
  check_distinct(out_path, model_path, "model");
  const TrainedModel model = model_from_json(read_file(model_path));
  const Dataset data = load_dataset(data_dir);
  const int cluster = f.cluster ? *f.cluster : model.cluster_id;
  const ForecastResult r = forecast_tail(model, data.series(cluster), c.horizon);
  write_atomic(out_path, [&](std::ostream& os) { write_forecast_csv(os, r); });
  write_manifest(dir_of(out_path), "forecast", c, {out_path});
  out << "MAPE " << r.mape_percent << "%, RMSE " << r.rmse_kwh << " kWh, nRMSE " << r.nrmse_percent << "%\n";
  return kOk;
}

void print_report(std::ostream& out, const ExperimentReport& report) {
  for (const auto& r : report.averages) {
    out << "average (" << to_string(r.features) << "): MAPE " << r.mape_percent << "%, nRMSE " << r.nrmse_percent
        << "%\n";
  }
}

std::unique_ptr<Forecaster> make_forecaster(const RunConfig& c, bool baseline) {
  if (baseline) return std::make_unique<SeasonalNaiveForecaster>();
  return std::make_unique<LstmForecaster>(c.pipeline);
}

int cmd_eval_monthly(const RunConfig& c, bool baseline, const fs::path& data_dir, const fs::path& out_path,
                     std::ostream& out) {
  const Dataset data = load_dataset(data_dir);
  const auto months = parse_months(c.months);
  auto forecaster = make_forecaster(c, baseline);
  const auto report = run_monthly_3day(data, c.cluster, c.features, *forecaster, c.pipeline, months);
  write_atomic(out_path, [&](std::ostream& os) { write_report_csv(os, report); });
  write_manifest(dir_of(out_path), "eval-monthly", c, {out_path});
  print_report(out, report);
  return kOk;
}

int cmd_eval_clusters(const RunConfig& c, bool baseline, const fs::path& data_dir, const fs::path& out_path,
                      int exclude, std::ostream& out) {
  const Dataset data = load_dataset(data_dir);
  const auto months = parse_months(c.months.empty() ? std::vector<std::string>{"2016-02", "2015-09"} : c.months);
  auto forecaster = make_forecaster(c, baseline);
  const auto report = run_clusters_3day(data, months, *forecaster, c.pipeline, exclude);
  write_atomic(out_path, [&](std::ostream& os) { write_report_csv(os, report); });
  write_manifest(dir_of(out_path), "eval-clusters", c, {out_path});
  print_report(out, report);
  return kOk;
}

int cmd_eval_annual(const RunConfig& c, bool baseline, const fs::path& data_dir, const fs::path& out_path,
                    const std::optional<std::string>& report_path, std::ostream& out) {
  if (c.features.size() != 1) throw UsageError("eval-annual takes exactly one --features value");
  const Dataset data = load_dataset(data_dir);
  auto forecaster = make_forecaster(c, baseline);
  const auto r = run_annual_15day(data, c.cluster, *forecaster, c.pipeline, c.features.front());
  write_atomic(out_path, [&](std::ostream& os) { write_forecast_csv(os, r); });
  std::vector<fs::path> outputs{out_path};
  if (report_path) {
    ExperimentReport report;
    report.rows.push_back({"annual", "", c.cluster, c.features.front(), r.mape_percent, r.rmse_kwh, r.nrmse_percent});
    write_atomic(*report_path, [&](std::ostream& os) { write_report_csv(os, report); });
    outputs.emplace_back(*report_path);
  }
  RunConfig recorded = c;
  recorded.horizon = kFifteenDayHorizon;
  write_manifest(dir_of(out_path), "eval-annual", recorded, outputs);
  out << "15-day MAPE " << r.mape_percent << "%, RMSE " << r.rmse_kwh << " kWh, nRMSE " << r.nrmse_percent << "%\n";
  return kOk;
}

int cmd_gradcheck(const RunConfig& c, std::size_t instances, double eps, std::ostream& out) {
  const auto r = gradient_check(c.seed, instances, eps);
  out << "instances " << r.instances << ", parameters checked " << r.parameters_checked
      << ", max relative error " << r.max_relative_error << "\n";
  return r.max_relative_error < 1e-5 ? kOk : kNumericalError;
}

int cmd_plot(const fs::path& in_path, const fs::path& out_path, const std::string& title, std::ostream& out) {
  check_distinct(out_path, in_path, "input");
  std::ifstream in(in_path);
  if (!in) throw DataError("cannot open " + in_path.string());
  const auto forecast = read_forecast_csv(in, in_path.string());
  const std::string svg = render_forecast_svg(forecast, title);
  write_atomic(out_path, svg);
  out << "wrote " << out_path.string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Smart-meter energy demand forecasting with an LSTM", "demandcast"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Flags f;
  std::string data_dir, out_path, model_path, report_path, in_path, title;
  std::optional<std::string> annual_report;
  bool baseline = false;
  std::size_t instances = 20;
  double eps = 1e-5;
  int exclude = 1;

  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic smart-meter dataset");
  add_common(*synth, f);
  synth->add_option("--consumers", f.consumers, "Number of households (default 16)");
  synth->add_option("--days", f.days, "Number of days (default 365)");
  synth->add_option("--start", f.start, "First day, YYYY-MM-DD (default 2015-03-09)");
  synth->add_option("--out", out_path, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model on one cluster profile");
  add_common(*train_cmd, f);
  add_training(*train_cmd, f);
  train_cmd->add_option("--data", data_dir, "Dataset directory (meter.csv, temperature.csv, clusters.csv)")->required();
  train_cmd->add_option("--cluster", f.cluster, "Cluster id (default 1)");
  train_cmd->add_option("--features", f.features, "Feature set: all, temp or time (default all)");
  train_cmd->add_option("--month", f.months, "Restrict training to one month, YYYY-MM");
  train_cmd->add_option("--out", model_path, "Model JSON output")->required();
  train_cmd->add_option("--report", report_path, "Training report CSV output")->required();

  auto* forecast_cmd = app.add_subcommand("forecast", "Closed-loop forecast of the final steps of a dataset");
  add_common(*forecast_cmd, f);
  forecast_cmd->add_option("--model", model_path, "Model JSON")->required();
  forecast_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  forecast_cmd->add_option("--horizon", f.horizon, "Steps to forecast (default 144)");
  forecast_cmd->add_option("--cluster", f.cluster, "Cluster id (default: the model's)");
  forecast_cmd->add_option("--out", out_path, "Forecast CSV output")->required();

  auto* monthly = app.add_subcommand("eval-monthly", "3-day-ahead forecasts for each month of one cluster");
  add_common(*monthly, f);
  add_training(*monthly, f);
  monthly->add_option("--data", data_dir, "Dataset directory")->required();
  monthly->add_option("--cluster", f.cluster, "Cluster id (default 1)");
  monthly->add_option("--features", f.features, "Feature sets to compare (default all temp)");
  monthly->add_option("--months", f.months, "Months YYYY-MM (default: every complete month)");
  monthly->add_flag("--baseline", baseline, "Use the seasonal-naive baseline instead of the LSTM");
  monthly->add_option("--out", out_path, "Report CSV output")->required();

  auto* clusters = app.add_subcommand("eval-clusters", "3-day-ahead forecasts for the remaining clusters");
  add_common(*clusters, f);
  add_training(*clusters, f);
  clusters->add_option("--data", data_dir, "Dataset directory")->required();
  clusters->add_option("--months", f.months, "Months YYYY-MM (default 2016-02 2015-09)");
  clusters->add_option("--exclude-cluster", exclude, "Cluster left out (default 1)");
  clusters->add_flag("--baseline", baseline, "Use the seasonal-naive baseline instead of the LSTM");
  clusters->add_option("--out", out_path, "Report CSV output")->required();

  auto* annual = app.add_subcommand("eval-annual", "15-day-ahead forecast trained on the whole year");
  add_common(*annual, f);
  add_training(*annual, f);
  annual->add_option("--data", data_dir, "Dataset directory")->required();
  annual->add_option("--cluster", f.cluster, "Cluster id (default 1)");
  annual->add_option("--features", f.features, "Feature set (default all)");
  annual->add_flag("--baseline", baseline, "Use the seasonal-naive baseline instead of the LSTM");
  annual->add_option("--out", out_path, "Forecast CSV output")->required();
  annual->add_option("--report", annual_report, "Report CSV output");

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare BPTT gradients with finite differences");
  add_common(*gradcheck, f);
  gradcheck->add_option("--instances", instances, "Random instances (default 20)");
  gradcheck->add_option("--eps", eps, "Finite-difference step (default 1e-5)");

  auto* plot = app.add_subcommand("plot", "Render a forecast CSV as SVG");
  plot->add_option("--in", in_path, "Forecast CSV")->required();
  plot->add_option("--out", out_path, "SVG output")->required();
  plot->add_option("--title", title, "Chart title");

  try {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kUsageError;
  }

  try {
    // train and annual forecast one feature set; the monthly comparison defaults to two.
    if ((train_cmd->parsed() || annual->parsed()) && !f.features) f.features = std::vector<std::string>{"all"};
    if (plot->parsed()) return cmd_plot(in_path, out_path, title, out);
    const RunConfig c = resolve(f);
    if (synth->parsed()) return cmd_synth(c, out_path, out);
    if (train_cmd->parsed()) return cmd_train(c, data_dir, model_path, report_path, out);
    if (forecast_cmd->parsed()) return cmd_forecast(c, f, model_path, data_dir, out_path, out);
    if (monthly->parsed()) return cmd_eval_monthly(c, baseline, data_dir, out_path, out);
    if (clusters->parsed()) return cmd_eval_clusters(c, baseline, data_dir, out_path, exclude, out);
    if (annual->parsed()) return cmd_eval_annual(c, baseline, data_dir, out_path, annual_report, out);
    if (gradcheck->parsed()) return cmd_gradcheck(c, instances, eps, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

}  // namespace demandcast::cli
