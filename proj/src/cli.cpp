#include "leafnet/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include <omp.h>

#include <CLI11.hpp>

#include "leafnet/dataset.hpp"
#include "leafnet/errors.hpp"
#include "leafnet/metrics.hpp"
#include "leafnet/synthetic.hpp"
#include "leafnet/trainer.hpp"
#include "leafnet/tsne.hpp"

namespace leafnet::cli {
namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ModelLoadError*>(&e) || dynamic_cast<const NumericError*>(&e)) return kModel;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const Error*>(&e)) return kUsage;
  return 1;
}

// A missing or unreadable model file is a model-load failure, not generic I/O.
LoadedModel open_model(const std::string& path) {
  try {
    return load_model(path);
  } catch (const IoError& e) {
    throw ModelLoadError(e.what());
  }
}

void require_same_classes(const LoadedModel& loaded, const ScanResult& scan) {
  if (loaded.class_names != scan.class_names) {
    throw DatasetError("class directories do not match the model's classes");
  }
}

struct TrainArgs {
  std::string data;
  int epochs = 10;
  int batch = 32;
  std::int64_t img_size = 180;
  double val_split = 0.2;
  std::uint64_t seed = 42;
  bool augment = true;
  std::string out = "model.leaf";
  std::string metrics = "metrics.csv";
  bool timing = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainingConfig config;
  config.epochs = a.epochs;
  config.batch_size = a.batch;
  config.image_size = a.img_size;
  config.val_split = a.val_split;
  config.seed = a.seed;
  config.augment = a.augment;
  config.validate();

  const ScanResult scan = scan_directory(a.data);
  const DatasetSplit split = split_train_val(scan.class_names, scan.files, a.val_split, a.seed);
  err << "found " << scan.files.size() << " images in " << scan.class_names.size() << " classes ("
      << split.train.size() << " train, " << split.val.size() << " val, " << scan.skipped << " skipped)\n";
  const ImageSet train = load_images(split.train, a.img_size);
  const ImageSet val = load_images(split.val, a.img_size);

  Model model(canonical_layers(static_cast<std::int64_t>(scan.class_names.size())), image_input_shape(a.img_size),
              Init::GlorotUniform, a.seed);
  auto records = fit(model, train, val, config, [&](const EpochRecord& r) {
    out << "epoch " << r.epoch << '/' << a.epochs << " train_loss=" << fixed4(r.train_loss)
        << " train_acc=" << fixed4(r.train_acc) << " val_loss=" << fixed4(r.val_loss)
        << " val_acc=" << fixed4(r.val_acc) << '\n';
    err << "epoch " << r.epoch << " took " << fixed4(r.duration_seconds) << " s\n";
    out.flush();
  });
  // Wall-clock time would make the CSV differ between identical runs.
  if (!a.timing) {
    for (auto& r : records) r.duration_seconds = 0;
  }
  save_model(model, scan.class_names, a.out);
  write_metrics_csv(records, a.metrics);
  return kOk;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string out = "confusion.csv";
  std::uint64_t seed = 42;
  double val_split = 0.2;
  int batch = 32;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const LoadedModel loaded = open_model(a.model);
  const ScanResult scan = scan_directory(a.data);
  require_same_classes(loaded, scan);
  const DatasetSplit split = split_train_val(scan.class_names, scan.files, a.val_split, a.seed);
  const ImageSet val = load_images(split.val, loaded.model.input_shape()[0]);
  const EvalResult result = evaluate(loaded.model, val, static_cast<std::size_t>(a.batch));
  const ConfusionMatrix cm =
      confusion_matrix(result.predictions, val.labels(), scan.class_names.size(), scan.class_names);
  write_confusion_csv(cm, a.out);
  out << "accuracy=" << fixed4(result.accuracy) << " loss=" << fixed4(result.loss) << '\n';
  return kOk;
}

struct PredictArgs {
  std::string model;
  std::string image;
  std::string treatments;
  int top_k = 3;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const LoadedModel loaded = open_model(a.model);
  std::vector<TreatmentRule> rules;
  if (!a.treatments.empty()) rules = load_treatments(a.treatments);
  const ImageBuffer image = decode_image_file(a.image);
  out << to_json(predict(loaded, image, rules, a.top_k)).dump() << '\n';
  return kOk;
}

struct EmbedArgs {
  std::string model;
  std::string data;
  std::string out = "embeddings.csv";
  double perplexity = 30;
  int iters = 1000;
  std::uint64_t seed = 42;
  int batch = 32;
};

int cmd_embed(const EmbedArgs& a, std::ostream& out) {
  const LoadedModel loaded = open_model(a.model);
  const ScanResult scan = scan_directory(a.data);
  const std::size_t n = scan.files.size();
  if (static_cast<double>(n) < 3.0 * a.perplexity) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu samples are too few for perplexity %g; use --perplexity %g or lower", n,
                  a.perplexity, std::floor((static_cast<double>(n) - 1.0) / 3.0));
    throw ArgumentError(buf);
  }
  TsneConfig config;
  config.perplexity = a.perplexity;
  config.iterations = a.iters;
  config.seed = a.seed;
  config.validate();

  const ImageSet data = load_images(scan.files, loaded.model.input_shape()[0]);
  const FeatureMatrix fm = extract_features(loaded.model, data, static_cast<std::size_t>(a.batch));
  const Tensor64 p = perplexity_affinities(fm.features, capped_perplexity(a.perplexity, n));
  const EmbeddingProjection proj = tsne_embed(p, config);
  write_text_file(a.out, embeddings_csv(proj.points, fm.labels, scan.class_names));
  if (!proj.kl_trace.empty()) out << "kl=" << fixed4(proj.kl_trace.back().kl) << " points=" << n << '\n';
  return kOk;
}

struct SynthArgs {
  std::string out;
  std::int64_t per_class = 100;
  std::int64_t size = 64;
  std::uint64_t seed = 42;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  gen_synthetic(a.out, a.per_class, a.size, a.seed);
  out << "wrote " << a.per_class * static_cast<std::int64_t>(kDiseaseClasses.size()) << " images to " << a.out
      << '\n';
  return kOk;
}

}  // namespace

PredictionReport predict(const LoadedModel& loaded, const ImageBuffer& image, const std::vector<TreatmentRule>& rules,
                         int top_k) {
  if (top_k < 1) throw ArgumentError("top_k must be at least 1");
  const Shape& in = loaded.model.input_shape();
  if (image.channels != in[2]) throw ShapeError("image channel count does not match the model input");
  const ImageBuffer sized = resize_bilinear(image, in[0], in[1]);
  Tensor batch(Shape{1, in[0], in[1], in[2]}, sized.pixels);
  const auto trace = model_forward(loaded.model, batch, Mode::Eval);
  const auto probs = trace.probabilities.values();
  const std::size_t k = probs.size();
  if (loaded.class_names.size() != k) throw MalformedModelError("class table does not match the output width");

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return probs[x] > probs[y]; });

  PredictionReport r;
  r.model_id = loaded.model_id;
  r.class_name = loaded.class_names[order[0]];
  r.confidence = probs[order[0]];
  const std::size_t shown = std::min(k, static_cast<std::size_t>(top_k));
  for (std::size_t i = 0; i < shown; ++i) r.top_k.emplace_back(loaded.class_names[order[i]], probs[order[i]]);
  r.treatment = recommend(r.class_name, rules);
  return r;
}

nlohmann::ordered_json to_json(const PredictionReport& report) {
  nlohmann::ordered_json j;
  j["class"] = report.class_name;
  j["confidence"] = report.confidence;
  auto top = nlohmann::ordered_json::array();
  for (const auto& [name, p] : report.top_k) {
    nlohmann::ordered_json e;
    e["class"] = name;
    e["p"] = p;
    top.push_back(std::move(e));
  }
  j["top_k"] = std::move(top);
  j["treatment"] = report.treatment ? treatment_json(*report.treatment) : nlohmann::ordered_json(nullptr);
  j["model_id"] = report.model_id;
  return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crop disease classifier: training, evaluation, prediction and embedding"};
  app.name("leafnet");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (default: runtime choice)")->check(CLI::PositiveNumber);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the classifier on a class-per-directory image tree");
  train->add_option("--data", ta.data, "Dataset root")->required();
  train->add_option("--epochs", ta.epochs, "Epochs")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--batch", ta.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--img-size", ta.img_size, "Square input size")->capture_default_str()->check(CLI::Range(8, 4096));
  train->add_option("--val-split", ta.val_split, "Validation fraction")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  train->add_option("--seed", ta.seed, "Seed")->capture_default_str();
  train->add_flag("--augment,!--no-augment", ta.augment, "Random flip/rotation/zoom on training batches");
  train->add_option("--out", ta.out, "Model file")->capture_default_str();
  train->add_option("--metrics", ta.metrics, "Per-epoch metrics CSV")->capture_default_str();
  train->add_flag("--timing", ta.timing, "Record epoch wall-clock time in the metrics CSV");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Confusion matrix on the validation split");
  eval->add_option("--model", ea.model, "Model file")->required();
  eval->add_option("--data", ea.data, "Dataset root")->required();
  eval->add_option("--out", ea.out, "Confusion CSV")->capture_default_str();
  eval->add_option("--seed", ea.seed, "Split seed")->capture_default_str();
  eval->add_option("--val-split", ea.val_split, "Validation fraction")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  eval->add_option("--batch", ea.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);

  PredictArgs pa;
  auto* pred = app.add_subcommand("predict", "Classify one image and print a JSON report");
  pred->add_option("--model", pa.model, "Model file")->required();
  pred->add_option("--image", pa.image, "PNG or JPEG image")->required();
  pred->add_option("--treatments", pa.treatments, "Treatment rules JSON");
  pred->add_option("--top-k", pa.top_k, "Ranked classes to report")->capture_default_str()->check(CLI::PositiveNumber);

  EmbedArgs ma;
  auto* embed = app.add_subcommand("embed", "t-SNE of penultimate-layer features");
  embed->add_option("--model", ma.model, "Model file")->required();
  embed->add_option("--data", ma.data, "Dataset root")->required();
  embed->add_option("--out", ma.out, "Embeddings CSV")->capture_default_str();
  embed->add_option("--perplexity", ma.perplexity, "Target perplexity")->capture_default_str();
  embed->add_option("--iters", ma.iters, "Gradient-descent iterations")->capture_default_str();
  embed->add_option("--seed", ma.seed, "Seed")->capture_default_str();
  embed->add_option("--batch", ma.batch, "Feature batch size")->capture_default_str()->check(CLI::PositiveNumber);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a synthetic eight-class leaf image tree");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--per-class", sa.per_class, "Images per class")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--size", sa.size, "Image side in pixels")->capture_default_str()->check(CLI::Range(16, 4096));
  synth->add_option("--seed", sa.seed, "Seed")->capture_default_str();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("leafnet");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (!app.get_subcommands().empty()) err << app.get_subcommands().front()->help();
    return kUsage;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*train) return cmd_train(ta, out, err);
    if (*eval) return cmd_eval(ea, out);
    if (*pred) return cmd_predict(pa, out);
    if (*embed) return cmd_embed(ma, out);
    if (*synth) return cmd_synth(sa, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace leafnet::cli
