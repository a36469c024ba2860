// Command-line entry point: `generate` samples synthetic traces, `train`
// fits a model with CD, `evaluate` scores a checkpoint against a trace, and
// `verify` runs the property self-checks. Every artifact-producing run drops
// a resolved-config snapshot into its output directory.
// Exit codes: 0 success, 1 validation error, 2 runtime/divergence error.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcrbm/dataset.hpp"
#include "dcrbm/generator.hpp"
#include "dcrbm/metrics.hpp"
#include "dcrbm/model_io.hpp"
#include "dcrbm/selfcheck.hpp"
#include "dcrbm/trace.hpp"
#include "dcrbm/training.hpp"

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << text;
}

void write_snapshot(const CLI::App& cmd, const fs::path& out_dir) {
  write_text(out_dir / (cmd.get_name() + ".config"),
             cmd.config_to_str(true, false));
}

struct GenerateArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int run_generate(const CLI::App& cmd, const GenerateArgs& args) {
  dcrbm::GeneratorConfig config =
      dcrbm::load_generator_config(args.config_path);
  if (args.seed_given) config.seed = args.seed;
  config.validate();

  const dcrbm::Trace trace = dcrbm::generate_synthetic(config);
  fs::create_directories(args.out_dir);
  const fs::path trace_path = fs::path(args.out_dir) / "trace.csv";
  dcrbm::save_trace(trace, trace_path.string());
  {
    std::ofstream out(fs::path(args.out_dir) / "generator.config");
    dcrbm::save_generator_config(config, out);
  }
  write_snapshot(cmd, args.out_dir);

  std::cout << "trace: " << trace_path.string() << '\n'
            << "cycles: " << trace.length() << '\n'
            << "categories: " << trace.num_categories() << '\n';
  for (const dcrbm::MissStream& stream : trace.miss_streams) {
    const double rate =
        std::accumulate(stream.events.begin(), stream.events.end(), 0.0) /
        static_cast<double>(stream.events.size());
    std::cout << "miss rate (" << stream.name << "): " << rate << '\n';
  }
  return 0;
}

struct TrainArgs {
  std::string trace_path;
  std::string cache = "synthetic";
  std::string out_dir;
  std::string units = "count";
  int history = 5;
  int window = 128;
  int bin = 1;
  int hidden = 15;
  int epochs = 200;
  int batch_size = 32;
  int cd_steps = 1;
  int eval_every = 10;
  double learning_rate = 1e-5;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  bool shuffle = false;
};

int run_train(const CLI::App& cmd, const TrainArgs& args) {
  const dcrbm::Trace trace = dcrbm::load_trace(args.trace_path);
  const std::vector<dcrbm::Sample> samples = dcrbm::window_dataset(
      trace, args.history, args.cache, args.window, args.bin);
  const auto [train_set, test_set] =
      dcrbm::split_chronological(samples, args.train_fraction);

  dcrbm::ModelConfig config;
  config.visible = trace.num_categories();
  config.hidden = args.hidden;
  config.labels = 2;
  config.history = args.history;
  config.units = dcrbm::unit_kind_from_string(args.units);

  dcrbm::TrainConfig train_config;
  train_config.learning_rate = args.learning_rate;
  train_config.epochs = args.epochs;
  train_config.cd_steps = args.cd_steps;
  train_config.batch_size = args.batch_size;
  train_config.seed = args.seed;
  train_config.shuffle = args.shuffle;
  train_config.eval_every = args.eval_every;

  std::cout << "samples: " << samples.size() << " (train " << train_set.size()
            << ", test " << test_set.size() << ")\n";

  const dcrbm::ModelParams initial =
      dcrbm::initialize_for_dataset(config, args.seed, train_set);
  const dcrbm::TrainResult result =
      dcrbm::train(config, initial, train_set, test_set, train_config);

  fs::create_directories(args.out_dir);
  write_snapshot(cmd, args.out_dir);
  const fs::path report_path = fs::path(args.out_dir) / "train_report.csv";
  dcrbm::save_train_report(result.report, report_path.string());

  dcrbm::ModelFile model;
  model.config = config;
  model.params = result.params;
  model.metadata = {{"trace", args.trace_path},
                    {"cache", args.cache},
                    {"window", args.window},
                    {"bin", args.bin},
                    {"train_fraction", args.train_fraction},
                    {"seed", args.seed}};
  const fs::path model_path = fs::path(args.out_dir) / "model.json";
  dcrbm::save_model(model, model_path.string());

  const dcrbm::TrainReportRow& final_row = result.report.last();
  std::cout << "model: " << model_path.string() << '\n'
            << "curves: " << report_path.string() << '\n'
            << "final epoch " << final_row.epoch
            << ": recon_error " << final_row.recon_error
            << ", bce " << final_row.bce
            << ", accuracy " << final_row.scores.accuracy
            << ", precision " << final_row.scores.precision
            << ", recall " << final_row.scores.recall
            << ", f1 " << final_row.scores.f1
            << ", mcc " << final_row.scores.mcc << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string model_path;
  std::string trace_path;
  std::string out_dir;
  std::string cache;
  int window = 0;          // 0 = take from model metadata
  int bin = 0;
  double train_fraction = 0.0;
};

int run_evaluate(const CLI::App& cmd, const EvaluateArgs& args) {
  const dcrbm::ModelFile model = dcrbm::load_model(args.model_path);
  const dcrbm::Trace trace = dcrbm::load_trace(args.trace_path);
  if (trace.num_categories() != model.config.visible) {
    throw std::invalid_argument(
        "visible dimension mismatch: model expects " +
        std::to_string(model.config.visible) + " categories, trace has " +
        std::to_string(trace.num_categories()));
  }

  std::string cache = args.cache;
  int window = args.window;
  int bin = args.bin;
  double fraction = args.train_fraction;
  if (model.metadata.is_object()) {
    if (cache.empty()) cache = model.metadata.value("cache", std::string());
    if (window == 0) window = model.metadata.value("window", 0);
    if (bin == 0) bin = model.metadata.value("bin", 0);
    if (fraction == 0.0) fraction = model.metadata.value("train_fraction", 0.0);
  }
  if (cache.empty()) {
    throw std::invalid_argument(
        "no cache name: pass --cache (model metadata has none)");
  }
  if (window == 0) window = 128;
  if (bin == 0) bin = 1;
  if (fraction == 0.0) fraction = 0.8;

  const std::vector<dcrbm::Sample> samples = dcrbm::window_dataset(
      trace, model.config.history, cache, window, bin);
  const auto [train_set, test_set] =
      dcrbm::split_chronological(samples, fraction);

  const std::vector<int> truth = dcrbm::true_labels(test_set);
  std::vector<int> predictions;
  std::vector<double> posterior_miss;
  predictions.reserve(test_set.size());
  posterior_miss.reserve(test_set.size());
  for (const dcrbm::Sample& sample : test_set) {
    const dcrbm::LabelScores scores =
        dcrbm::classify(model.config, model.params, sample.frame, sample.history);
    predictions.push_back(static_cast<int>(scores.predicted));
    posterior_miss.push_back(scores.posterior[1]);
  }

  const dcrbm::ScoreSet model_scores =
      dcrbm::score(dcrbm::confusion(predictions, truth));
  const dcrbm::BaselineResult baseline =
      dcrbm::majority_baseline(dcrbm::true_labels(train_set), truth);

  const std::string model_name =
      "dcrbm(" + std::to_string(model.config.history) + ")";
  const std::vector<dcrbm::ReportRow> rows = {
      {cache, model_name, model_scores},
      {cache, "majority", baseline.scores}};

  fs::create_directories(args.out_dir);
  write_snapshot(cmd, args.out_dir);
  const std::string table = dcrbm::report_table(rows);
  write_text(fs::path(args.out_dir) / "report.txt", table);
  write_text(fs::path(args.out_dir) / "report.csv", dcrbm::report_csv(rows));

  std::ostringstream timeline;
  timeline << "t,truth,predicted,posterior_miss\n" << std::setprecision(17);
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    timeline << test_set[i].origin_t << ',' << truth[i] << ','
             << predictions[i] << ',' << posterior_miss[i] << '\n';
  }
  write_text(fs::path(args.out_dir) / "predictions.csv", timeline.str());

  std::cout << table;
  std::cout << "predictions: "
            << (fs::path(args.out_dir) / "predictions.csv").string() << '\n';
  return 0;
}

struct VerifyArgs {
  std::uint64_t seed = 20260815;
  double corrupt_scores = 0.0;
  std::string out_dir;
};

int run_verify(const CLI::App& cmd, const VerifyArgs& args) {
  dcrbm::SelfCheckOptions options;
  options.seed = args.seed;
  options.score_perturbation = args.corrupt_scores;

  const std::vector<dcrbm::CheckResult> results = dcrbm::run_selfcheck(options);
  std::ostringstream report;
  int passed = 0;
  for (const dcrbm::CheckResult& result : results) {
    report << (result.passed ? "PASS" : "FAIL") << "  " << result.name << ": "
           << result.detail << '\n';
    if (result.passed) ++passed;
  }
  report << passed << " of " << results.size() << " checks passed\n";
  std::cout << report.str();

  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    write_snapshot(cmd, args.out_dir);
    write_text(fs::path(args.out_dir) / "verify.txt", report.str());
  }
  return passed == static_cast<int>(results.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Count-DCRBM toolkit: synthetic traces, CD training, "
               "free-energy classification, score reports"};
  app.require_subcommand(1);

  GenerateArgs generate_args;
  CLI::App* generate = app.add_subcommand(
      "generate", "Sample a synthetic instruction trace from a config");
  generate->add_option("--config", generate_args.config_path,
                       "generator config (key=value file)")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("--out", generate_args.out_dir, "output directory")
      ->required();
  CLI::Option* generate_seed =
      generate->add_option("--seed", generate_args.seed,
                           "override the seed from the config file");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a model on a trace");
  train->set_config("--config", "", "read options from a key=value file");
  train->add_option("--trace", train_args.trace_path, "input trace CSV")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_args.out_dir, "output directory")->required();
  train->add_option("--cache", train_args.cache, "miss stream to predict");
  train->add_option("-N,--history", train_args.history, "history length N");
  train->add_option("-W,--window", train_args.window,
                    "label aggregation window in cycles");
  train->add_option("--bin", train_args.bin, "sum counts over bins of cycles");
  train->add_option("--hidden", train_args.hidden, "hidden units");
  train->add_option("--epochs", train_args.epochs, "training epochs");
  train->add_option("--lr", train_args.learning_rate, "learning rate");
  train->add_option("--batch-size", train_args.batch_size, "batch size");
  train->add_option("--cd-steps", train_args.cd_steps, "Gibbs steps per update");
  train->add_option("--eval-every", train_args.eval_every,
                    "epochs between diagnostics");
  train->add_option("--train-fraction", train_args.train_fraction,
                    "chronological train split fraction");
  train->add_option("--units", train_args.units, "visible unit kind")
      ->check(CLI::IsMember({"count", "binary", "real"}));
  train->add_option("--seed", train_args.seed, "training seed");
  train->add_flag("--shuffle", train_args.shuffle,
                  "reshuffle sample order every epoch");

  EvaluateArgs evaluate_args;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score a saved model on a trace's test segment");
  evaluate->set_config("--config", "", "read options from a key=value file");
  evaluate->add_option("--model", evaluate_args.model_path, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--trace", evaluate_args.trace_path, "input trace CSV")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", evaluate_args.out_dir, "output directory")
      ->required();
  evaluate->add_option("--cache", evaluate_args.cache,
                       "miss stream (default: model metadata)");
  evaluate->add_option("-W,--window", evaluate_args.window,
                       "label window (default: model metadata)");
  evaluate->add_option("--bin", evaluate_args.bin,
                       "cycle binning (default: model metadata)");
  evaluate->add_option("--train-fraction", evaluate_args.train_fraction,
                       "split fraction (default: model metadata)");

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand(
      "verify", "Run the oracle and statistical property checks");
  verify->add_option("--seed", verify_args.seed, "seed for the random suites");
  verify->add_option("--out", verify_args.out_dir,
                     "optional directory for the check report");
  verify
      ->add_option("--corrupt-scores", verify_args.corrupt_scores,
                   "test hook: offset classify scores to force a failure")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  generate_args.seed_given = generate_seed->count() > 0;

  try {
    if (generate->parsed()) return run_generate(*generate, generate_args);
    if (train->parsed()) return run_train(*train, train_args);
    if (evaluate->parsed()) return run_evaluate(*evaluate, evaluate_args);
    if (verify->parsed()) return run_verify(*verify, verify_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
