#include "coreset/io.hpp"
#include "coreset/pipelines.hpp"
#include "coreset/projection.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace coreset;

namespace {

struct Options {
  std::string data, labels, test_data, test_labels;
  std::string format = "synth:blobs";
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  Index k = 1;
  int outer_iters = 500;
  double outer_lr = 2.5;
  Index outer_batch = 128;
  int inner_epochs = 100;
  double inner_lr = 0.1;
  double momentum = 0.9;
  int batch = 0;
  std::string learner = "logistic";
  int hidden = 100;
  int layers = 2;
  double weight_decay = 0.0;
  double ridge_lambda = 1e-2;
  std::string extract = "topk";
  bool adaptive = false;
  bool cosine = false;
  bool control_variate = false;
  double baseline_decay = 0.0;

  std::string noise;
  std::optional<double> imbalance_sigma;
  Index validation_size = 100;
  std::vector<std::string> baselines;
  Index pretrain = 1000;

  std::string out;
  bool trace = false;

  // subcommand specific
  std::string method = "uniform";
  std::string model, subset, input;
  int tasks = 3;
  std::string task_kind = "label";
  Index memory = 100;
  std::string policy = "selection";
  Index stream_batch = 125;
  Index kf = 10;
  double pixel_noise = 0.0;
};

void add_data(CLI::App* app, Options& o) {
  app->add_option("--data", o.data, "Training file (idx images or csv)");
  app->add_option("--labels", o.labels, "idx label file");
  app->add_option("--test-data", o.test_data, "Test file; without it a random split is held out");
  app->add_option("--test-labels", o.test_labels, "idx test label file");
  app->add_option("--format", o.format, "idx | csv | synth:<blobs|features>:<k=v,...>")->capture_default_str();
  app->add_option("--test-fraction", o.test_fraction)->capture_default_str();
  app->add_option("--seed", o.seed)->capture_default_str();
}

void add_learner(CLI::App* app, Options& o) {
  app->add_option("--inner-epochs", o.inner_epochs)->capture_default_str();
  app->add_option("--inner-lr", o.inner_lr)->capture_default_str();
  app->add_option("--momentum", o.momentum)->capture_default_str();
  app->add_option("--batch", o.batch, "Inner mini-batch size, 0 for full batch")->capture_default_str();
  app->add_option("--learner", o.learner, "logistic | mlp | ridge")->capture_default_str();
  app->add_option("--hidden", o.hidden, "MLP hidden width")->capture_default_str();
  app->add_option("--layers", o.layers, "MLP hidden layers")->capture_default_str();
  app->add_option("--weight-decay", o.weight_decay)->capture_default_str();
  app->add_option("--ridge-lambda", o.ridge_lambda)->capture_default_str();
}

void add_selection(CLI::App* app, Options& o) {
  app->add_option("--k", o.k, "Budget")->capture_default_str();
  app->add_option("--outer-iters", o.outer_iters)->capture_default_str();
  app->add_option("--outer-lr", o.outer_lr)->capture_default_str();
  app->add_option("--outer-batch", o.outer_batch)->capture_default_str();
  app->add_option("--extract", o.extract, "sample | topk")->capture_default_str();
  app->add_flag("--adaptive", o.adaptive, "Adam-style outer step");
  app->add_flag("--cosine", o.cosine, "Cosine outer step schedule");
  app->add_flag("--control-variate", o.control_variate, "Subtract a running loss baseline");
  app->add_option("--baseline-decay", o.baseline_decay, "EMA decay of the loss baseline, 0 for the running mean");
  add_learner(app, o);
}

void add_scenario(CLI::App* app, Options& o) {
  app->add_option("--noise", o.noise, "symmetric:<rate> | pairwise:<rate>");
  app->add_option("--imbalance-sigma", o.imbalance_sigma);
  app->add_option("--validation-size", o.validation_size)->capture_default_str();
}

void add_output(CLI::App* app, Options& o, bool trace = true) {
  app->add_option("--out", o.out, "Output directory");
  if (trace) app->add_flag("--trace", o.trace, "Also write trace.jsonl");
}

ExperimentSpec make_spec(const Options& o) {
  ExperimentSpec spec;
  spec.source = DataSource::parse_format(o.format);
  spec.source.path = o.data;
  spec.source.labels_path = o.labels;
  spec.source.test_path = o.test_data;
  spec.source.test_labels_path = o.test_labels;
  spec.test_fraction = o.test_fraction;

  auto& sel = spec.selection;
  sel.budget = o.k;
  sel.outer_iters = o.outer_iters;
  sel.outer_step = o.outer_lr;
  sel.outer_batch = o.outer_batch;
  sel.seed = o.seed;
  sel.extract = parse_extract_mode(o.extract);
  sel.adaptive_step = o.adaptive;
  sel.cosine_schedule = o.cosine;
  sel.control_variate = o.control_variate;
  sel.baseline_decay = o.baseline_decay;
  auto& in = sel.inner;
  in.kind = parse_learner_kind(o.learner);
  in.epochs = o.inner_epochs;
  in.step_size = o.inner_lr;
  in.momentum = o.momentum;
  in.minibatch = o.batch;
  in.hidden_width = o.hidden;
  in.hidden_layers = o.layers;
  in.weight_decay = o.weight_decay;
  in.ridge_lambda = o.ridge_lambda;
  in.validate();

  if (!o.noise.empty()) spec.noise = NoiseSpec::parse(o.noise);
  spec.imbalance_sigma = o.imbalance_sigma;
  spec.validation_size = o.validation_size;
  for (const auto& b : o.baselines) spec.baselines.push_back(parse_baseline_method(b));
  spec.pretrain_size = o.pretrain;

  spec.num_tasks = o.tasks;
  if (o.task_kind == "label") spec.task_kind = TaskKind::label_split;
  else if (o.task_kind == "permuted") spec.task_kind = TaskKind::permuted;
  else throw ConfigError("unknown task kind '" + o.task_kind + "' (label | permuted)");
  spec.memory = o.memory;
  spec.stream_batch = o.stream_batch;
  spec.feature_budget = o.kf;
  spec.pixel_noise_std = o.pixel_noise;
  return spec;
}

void print(const std::vector<nlohmann::json>& metrics) {
  for (const auto& m : metrics) std::cout << m.dump() << '\n';
}

void finish(ReportFiles files, const Options& o) {
  print(files.metrics);
  if (!o.trace) files.trace.reset();
  if (!o.out.empty()) emit_report(files, o.out);
}

void run_select(const Options& o) {
  const auto report = run_summarization(make_spec(o));
  finish(report.files(), o);
}

void run_eval(const Options& o) {
  if (o.model.empty() == o.subset.empty()) throw ConfigError("eval needs exactly one of --model or --subset");
  const auto spec = make_spec(o);
  const auto data = load_data(spec);
  ReportFiles files;
  if (!o.model.empty()) {
    const auto model = load_model(o.model);
    if (model.architecture().input_dim != data.test.feature_dim())
      throw DataError("model expects " + std::to_string(model.architecture().input_dim) + " features, data has " +
                      std::to_string(data.test.feature_dim()));
    nlohmann::ordered_json m;
    m["method"] = "model";
    m["test_accuracy"] = accuracy(model, data.test);
    files.metrics.push_back(m);
  } else {
    const auto indices = parse_indices(read_file(o.subset));
    files.metrics.push_back(evaluate_subset(spec, data, indices).to_json());
  }
  finish(files, o);
}

void run_baseline_cmd(const Options& o) {
  const auto spec = make_spec(o);
  const auto metrics = run_baseline_experiment(spec, load_data(spec), parse_baseline_method(o.method));
  ReportFiles files;
  files.metrics.push_back(metrics.to_json());
  files.coreset = metrics.indices;
  finish(files, o);
}

void run_project(const Options& o) {
  if (o.input.empty()) throw ConfigError("project needs --input");
  const VectorXd z = parse_values(read_file(o.input));
  if (z.size() == 0) throw DataError("empty input vector in " + o.input);
  if (!z.allFinite()) throw DataError("non-finite value in " + o.input);
  const VectorXd s = project(z, o.k);
  std::cout << format_values(s);
  if (!o.out.empty()) {
    ReportFiles files;
    files.probabilities = s;
    emit_report(files, o.out);
  }
}

void run_cl(const Options& o) {
  MemoryPolicy policy;
  if (o.policy == "selection") policy = MemoryPolicy::selection;
  else if (o.policy == "uniform") policy = MemoryPolicy::uniform;
  else throw ConfigError("unknown memory policy '" + o.policy + "' (selection | uniform)");
  const auto report = run_continual(make_spec(o), policy);
  ReportFiles files;
  files.metrics.push_back(report.to_json());
  IndexSet all;
  for (const auto& m : report.memory) all.insert(all.end(), m.begin(), m.end());
  files.coreset = all;
  finish(files, o);
}

void run_stream_cmd(const Options& o) {
  const auto report = run_stream(make_spec(o));
  ReportFiles files;
  files.metrics.push_back(report.to_json());
  files.coreset = report.memory;
  finish(files, o);
}

void run_features_cmd(const Options& o) {
  const auto report = run_features(make_spec(o));
  finish(report.files(), o);
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  return 3;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic bilevel coreset selection"};
  app.set_config("--config", "", "INI file; [section] names match subcommands, flags given on the command line win");
  app.require_subcommand(1);
  Options o;

  auto* select = app.add_subcommand("select", "Select a coreset and retrain on it");
  add_data(select, o);
  add_selection(select, o);
  add_scenario(select, o);
  select->add_option("--baselines", o.baselines, "Baselines to score alongside")->delimiter(',');
  select->add_option("--pretrain", o.pretrain, "Reference-model sample size for embedding baselines")->capture_default_str();
  add_output(select, o);

  auto* eval = app.add_subcommand("eval", "Score a saved model or retrain on a subset file");
  add_data(eval, o);
  add_learner(eval, o);
  add_scenario(eval, o);
  eval->add_option("--model", o.model, "model.bin written by select");
  eval->add_option("--subset", o.subset, "Index file, one training index per line");
  add_output(eval, o, false);

  auto* baseline = app.add_subcommand("baseline", "Run one baseline selection");
  add_data(baseline, o);
  add_learner(baseline, o);
  add_scenario(baseline, o);
  baseline->add_option("--k", o.k, "Budget")->capture_default_str();
  baseline->add_option("--method", o.method, "uniform | kcenter | hardest | herding | reservoir")->capture_default_str();
  baseline->add_option("--pretrain", o.pretrain)->capture_default_str();
  add_output(baseline, o, false);

  auto* proj = app.add_subcommand("project", "Project a vector (one value per line) onto the capped simplex");
  proj->add_option("--input", o.input, "Vector file");
  proj->add_option("--k", o.k, "Budget")->capture_default_str();
  add_output(proj, o, false);

  auto* cl = app.add_subcommand("cl", "Continual learning with a replay memory");
  add_data(cl, o);
  add_selection(cl, o);
  cl->add_option("--tasks", o.tasks)->capture_default_str();
  cl->add_option("--task-kind", o.task_kind, "label | permuted")->capture_default_str();
  cl->add_option("--memory", o.memory)->capture_default_str();
  cl->add_option("--policy", o.policy, "selection | uniform")->capture_default_str();
  add_output(cl, o);

  auto* stream = app.add_subcommand("stream", "Streaming replay memory");
  add_data(stream, o);
  add_selection(stream, o);
  add_scenario(stream, o);
  stream->add_option("--memory", o.memory)->capture_default_str();
  stream->add_option("--stream-batch", o.stream_batch)->capture_default_str();
  add_output(stream, o);

  auto* features = app.add_subcommand("features", "Select input features");
  add_data(features, o);
  add_selection(features, o);
  features->add_option("--kf", o.kf, "Feature budget")->capture_default_str();
  features->add_option("--pixel-noise", o.pixel_noise)->capture_default_str();
  features->add_option("--validation-size", o.validation_size)->capture_default_str();
  add_output(features, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*select) run_select(o);
    else if (*eval) run_eval(o);
    else if (*baseline) run_baseline_cmd(o);
    else if (*proj) run_project(o);
    else if (*cl) run_cl(o);
    else if (*stream) run_stream_cmd(o);
    else if (*features) run_features_cmd(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return 0;
}
