// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include <omp.h>

#include "leafnet/augment.hpp"
#include "leafnet/cli.hpp"
#include "leafnet/dataset.hpp"
#include "leafnet/errors.hpp"
#include "leafnet/gradcheck.hpp"
#include "leafnet/loss.hpp"
#include "leafnet/metrics.hpp"
#include "leafnet/model_io.hpp"
#include "leafnet/synthetic.hpp"
#include "leafnet/trainer.hpp"
#include "leafnet/tsne.hpp"
#include "test_util.hpp"

using namespace leafnet;
using testutil::TempDir;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome architecture() {
  Outcome o;
  const auto layers = canonical_layers();
  const auto shapes = shape_infer(layers, image_input_shape(180));
  const std::vector<Shape> expect = {Shape{180, 180, 3}, Shape{180, 180, 16}, Shape{90, 90, 16}, Shape{90, 90, 32},
                                     Shape{45, 45, 32},  Shape{45, 45, 64},   Shape{22, 22, 64}, Shape{30976},
                                     Shape{128},         Shape{8}};
  o.require(shapes == expect, "per-layer output shapes");
  std::vector<std::int64_t> counts;
  for (auto c : layer_param_counts(layers, image_input_shape(180))) {
    if (c > 0) counts.push_back(c);
  }
  o.require(counts == std::vector<std::int64_t>{448, 4640, 18496, 3965056, 1032}, "per-layer parameter counts");
  const Model m(layers, image_input_shape(180), Init::Zeros);
  o.require(m.param_count() == 3989672, "total parameters 3,989,672");
  o.note("total " + std::to_string(m.param_count()) + ", flatten " + std::to_string(shapes[7][0]) + ", output " +
         std::to_string(shapes.back()[0]));
  return o;
}

Outcome gradients() {
  Outcome o;
  double worst = 0;
  for (const auto& nr : layer_gradient_checks(1e-5, 1)) {
    o.require(nr.report.passed && nr.report.checked > 0, nr.name);
    worst = std::max(worst, nr.report.max_rel_error);
  }
  const std::vector<LayerSpec> tiny = {RescaleSpec{}, Conv2DSpec{4}, MaxPoolSpec{}, FlattenSpec{},
                                       SoftmaxOutputSpec{8}};
  const Model64 m(tiny, image_input_shape(8), Init::GlorotUniform, 7);
  Rng rng(8);
  const Tensor64 batch = testutil::random_tensor<double>(Shape{4, 8, 8, 3}, rng, 0, 255);
  const std::vector<int> labels = {0, 3, 5, 7};
  GradCheckOptions opt;
  opt.max_coords_per_tensor = 1 << 20;
  const auto rep = gradient_check(m, batch, labels, 1e-5, opt);
  o.require(rep.passed, "tiny model (" + rep.worst + ")");
  o.note("layers max rel err " + fmt("%.2e", worst) + ", tiny model " + fmt("%.2e", rep.max_rel_error) + " over " +
         std::to_string(rep.checked) + " coords (" + std::to_string(rep.skipped) + " kink-skipped)");
  return o;
}

Outcome loss_anchors() {
  Outcome o;
  const std::vector<int> label = {5};
  const double l = sparse_ce_loss(Tensor(Shape{1, 8}), label);
  o.require(std::abs(l - std::log(8.0)) <= 1e-6, "uniform loss = ln 8");
  Rng rng(3);
  const Tensor logits = testutil::random_tensor<float>(Shape{16, 8}, rng, -10, 10);
  std::vector<int> labels(16);
  for (auto& v : labels) v = static_cast<int>(rng.bounded(8));
  const Tensor g = sparse_ce_grad(logits, labels);
  double worst = 0;
  for (std::int64_t n = 0; n < 16; ++n) {
    double s = 0;
    for (std::int64_t k = 0; k < 8; ++k) s += g[static_cast<std::size_t>(n * 8 + k)];
    worst = std::max(worst, std::abs(s));
  }
  o.require(worst <= 1e-6, "gradient rows sum to 0");
  o.note("loss " + fmt("%.7f", l) + ", max |row sum| " + fmt("%.1e", worst));
  return o;
}

ImageSet synthetic_set(int per_class, std::int64_t size, std::uint64_t seed) {
  ImageSet set(size, size);
  for (int label = 0; label < 8; ++label) {
    for (int i = 0; i < per_class; ++i) {
      Rng rng(synth_image_seed(seed, label, i), streams::kSynthetic);
      set.add(synth_leaf(label, size, rng), label);
    }
  }
  return set;
}

Outcome overfit() {
  Outcome o;
  const ImageSet set = synthetic_set(4, 32, 11);
  std::vector<std::size_t> idx(set.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const Batch b = gather_batch(set, idx);
  Model m(canonical_layers(), image_input_shape(32), Init::GlorotUniform, 42);
  AdamState<float> adam(m.params());
  for (int step = 0; step < 300; ++step) train_step(m, adam, b.images, b.labels);
  // Loss of the final parameters, not of the last pre-update forward pass.
  const std::vector<int> labels = b.labels;
  const double final_loss = sparse_ce_loss(model_forward(m, b.images).logits(), labels);
  o.require(final_loss < 0.05, "loss < 0.05");
  o.note("32 images, 300 steps, final loss " + fmt("%.5f", final_loss));
  return o;
}

Outcome desk_training() {
  Outcome o;
  TempDir d("accept5");
  gen_synthetic(d.path(), 100, 64, 7);
  const ScanResult scan = scan_directory(d.path());
  const DatasetSplit split = split_train_val(scan.class_names, scan.files, 0.2, 42);
  const ImageSet train = load_images(split.train, 64);
  const ImageSet val = load_images(split.val, 64);
  TrainingConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 32;
  cfg.image_size = 64;
  Model m(canonical_layers(8), image_input_shape(64), Init::GlorotUniform, cfg.seed);
  const auto recs = fit(m, train, val, cfg);
  const auto& last = recs.back();
  o.require(recs.size() == 10, "10 epochs");
  o.require(last.train_acc >= 0.95, "train accuracy >= 0.95");
  o.require(last.val_acc >= 0.80, "val accuracy >= 0.80");
  o.note(std::to_string(train.size()) + " train / " + std::to_string(val.size()) + " val, final train_acc " +
         fmt("%.4f", last.train_acc) + ", val_acc " + fmt("%.4f", last.val_acc));
  return o;
}

Outcome epoch_accounting() {
  Outcome o;
  const Model base({FlattenSpec{}, SoftmaxOutputSpec{2}}, Shape{2, 2, 3}, Init::GlorotUniform, 1);
  ImageSet val(2, 2);
  val.add(ImageBuffer(2, 2, 3, 1), 0);
  TrainingConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 32;
  cfg.image_size = 8;
  cfg.augment = false;
  std::string seen;
  for (std::size_t n : {std::size_t{4512}, std::size_t{1}, std::size_t{31}, std::size_t{32}, std::size_t{33},
                        std::size_t{100}}) {
    ImageSet train(2, 2);
    for (std::size_t i = 0; i < n; ++i) train.add(ImageBuffer(2, 2, 3, static_cast<float>(i % 7)), static_cast<int>(i % 2));
    Model m = base;
    const auto recs = fit(m, train, val, cfg);
    const auto expect = static_cast<std::int64_t>((n + 31) / 32);
    o.require(recs[0].steps == expect, "n=" + std::to_string(n));
    o.require(static_cast<std::int64_t>(plan_training_batches(n, 32, 0, 42).size()) == expect,
              "plan n=" + std::to_string(n));
    seen += (seen.empty() ? "" : ", ") + std::to_string(n) + "->" + std::to_string(recs[0].steps);
  }
  o.note("steps per epoch " + seen);
  return o;
}

Outcome confusion_identity() {
  Outcome o;
  const std::int64_t k = 5;
  // Logits are a random linear map of the three pixel channels.
  ParamSet<float> q(2);
  q[1].weights = Tensor(Shape{3, k});
  q[1].bias = Tensor(Shape{k});
  Rng rng(17);
  for (auto& v : q[1].weights.values()) v = static_cast<float>(rng_uniform(rng, -1, 1));
  const Model mm({FlattenSpec{}, SoftmaxOutputSpec{k}}, Shape{1, 1, 3}, std::move(q));
  for (int t = 0; t < 5; ++t) {
    ImageSet set(1, 1);
    const std::size_t n = 20 + rng.bounded(200);
    for (std::size_t i = 0; i < n; ++i) {
      ImageBuffer img(1, 1);
      for (auto& v : img.pixels) v = static_cast<float>(rng.bounded(256));
      set.add(img, static_cast<int>(rng.bounded(static_cast<std::uint32_t>(k))));
    }
    const EvalResult r = evaluate(mm, set, 7);
    const auto cm = confusion_matrix(r.predictions, set.labels(), static_cast<std::size_t>(k));
    o.require(static_cast<double>(cm.trace()) / static_cast<double>(cm.total()) == r.accuracy,
              "trace/total == accuracy (set " + std::to_string(t) + ")");
    o.require(cm.total() == static_cast<std::int64_t>(n), "total == n (set " + std::to_string(t) + ")");
  }
  o.note("5 randomized sets");
  return o;
}

Outcome tsne() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(23);
  const std::int64_t n = 60, dim = 10;
  Tensor64 x(Shape{n, dim});
  std::vector<int> labels;
  for (std::int64_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i / 20);
    for (std::int64_t d = 0; d < dim; ++d) {
      x[static_cast<std::size_t>(i * dim + d)] = rng.next_gaussian() + (d == c ? 10.0 / std::sqrt(2.0) : 0.0);
    }
    labels.push_back(c);
  }
  TsneConfig cfg;
  cfg.seed = 5;
  const double perp = capped_perplexity(cfg.perplexity, static_cast<std::size_t>(n));
  const auto cond = conditional_affinities(x, perp);
  double worst = 0;
  for (double pp : row_perplexities(cond.p)) worst = std::max(worst, std::abs(pp - perp));
  o.require(worst <= 1e-3, "row perplexities within 1e-3");
  const Tensor64 p = perplexity_affinities(x, perp);
  const auto a = tsne_embed(p, cfg);
  const auto b = tsne_embed(p, cfg);
  o.require(testutil::bitwise_equal(a.points, b.points), "bitwise determinism");
  double kl250 = -1;
  for (const auto& s : a.kl_trace) {
    if (s.iteration == 250) kl250 = s.kl;
  }
  const double kl_final = a.kl_trace.back().kl;
  o.require(kl250 > 0 && kl_final < kl250, "final KL < KL at iteration 250");
  const double sil = silhouette_score(a.points, labels);
  o.require(sil >= 0.5, "silhouette >= 0.5");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < 30, "runtime < 30 s");
  o.note("silhouette " + fmt("%.3f", sil) + ", KL@250 " + fmt("%.4f", kl250) + " -> " + fmt("%.4f", kl_final) +
         ", max perplexity error " + fmt("%.1e", worst) + ", " + fmt("%.1f", secs) + " s");
  return o;
}

Outcome determinism() {
  Outcome o;
  TempDir d("accept9");
  const std::string data = (d / "data").string();
  std::ostringstream sink, err;
  o.require(cli::run({"synth", "--out", data, "--per-class", "12", "--size", "32", "--seed", "9"}, sink, err) == 0,
            "synth");
  const int saved = omp_get_max_threads();
  std::vector<std::vector<std::uint8_t>> models, metrics;
  for (int run = 0; run < 2; ++run) {
    const std::string tag = std::to_string(run);
    const auto model = d / ("m" + tag + ".leaf");
    const auto csv = d / ("metrics" + tag + ".csv");
    const int code = cli::run({"--threads", "1", "train", "--data", data, "--epochs", "3", "--batch", "16",
                               "--img-size", "32", "--seed", "123", "--out", model.string(), "--metrics",
                               csv.string()},
                              sink, err);
    o.require(code == 0, "train run " + tag + " exit 0");
    models.push_back(read_file_bytes(model));
    metrics.push_back(read_file_bytes(csv));
  }
  omp_set_num_threads(saved);
  o.require(!models[0].empty() && models[0] == models[1], "model files byte-identical");
  o.require(!metrics[0].empty() && metrics[0] == metrics[1], "metrics CSVs byte-identical");
  o.note("model " + std::to_string(models[0].size()) + " bytes, metrics " + std::to_string(metrics[0].size()) +
         " bytes");
  return o;
}

template <typename E>
bool throws_exactly(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

Outcome serialization() {
  Outcome o;
  Rng rng(31);
  int archs = 0;
  for (int t = 0; t < 20; ++t) {
    const std::int64_t size = 4 + rng.bounded(6);
    const auto layers = testutil::random_architecture(rng, size);
    const Model m(layers, image_input_shape(size), Init::GlorotUniform, rng.next_u32());
    std::vector<std::string> names;
    for (std::int64_t k = 0; k < m.num_classes(); ++k) names.push_back("c" + std::to_string(k));
    TempDir d("accept10");
    save_model(m, names, d / "m.leaf");
    const LoadedModel back = load_model(d / "m.leaf");
    bool same = back.class_names == names;
    for (int i = 0; i < 10; ++i) {
      const Tensor x = testutil::random_tensor<float>(Shape{1, size, size, 3}, rng, 0, 255);
      same = same && testutil::bitwise_equal(model_forward(m, x).probabilities, model_forward(back.model, x).probabilities);
    }
    o.require(same, "architecture " + std::to_string(t));
    ++archs;

    const auto good = serialize_model(m, names);
    auto flipped = good;
    flipped[good.size() - 5 - rng.bounded(static_cast<std::uint32_t>(m.param_count()))] ^= 0x01;
    o.require(throws_exactly<ChecksumError>([&] { deserialize_model(flipped); }), "payload flip -> checksum error");
    auto magic = good;
    magic[3] ^= 0xFF;
    o.require(throws_exactly<BadMagicError>([&] { deserialize_model(magic); }), "bad magic");
    auto version = good;
    version[9] = 7;
    o.require(throws_exactly<UnsupportedVersionError>([&] { deserialize_model(version); }), "bad version");
    const std::size_t cut = 1 + rng.bounded(static_cast<std::uint32_t>(good.size() - 12));
    const std::vector<std::uint8_t> part(good.begin(), good.end() - static_cast<std::ptrdiff_t>(cut));
    o.require(throws_exactly<TruncatedFileError>([&] { deserialize_model(part); }), "truncation");
  }
  o.note(std::to_string(archs) + " architectures x 10 inputs, 4 corruption kinds each");
  return o;
}

Outcome augmentation_laws() {
  Outcome o;
  Rng rng(41);
  const Tensor batch = testutil::random_tensor<float>(Shape{4, 12, 9, 3}, rng, 0, 255);
  Tensor same = batch;
  AugmentConfig id;
  id.horizontal_flip = false;
  id.rotation_factor = 0;
  id.zoom_factor = 0;
  augment(same, id, rng);
  o.require(testutil::bitwise_equal(same, batch), "identity config is bitwise identity");

  ImageBuffer img(12, 9);
  std::copy(batch.values().begin(), batch.values().begin() + 12 * 9 * 3, img.pixels.begin());
  o.require(flip_horizontal(flip_horizontal(img)) == img, "double flip is identity");

  bool ok = true;
  for (int t = 0; t < 100; ++t) {
    AugmentConfig cfg;
    cfg.horizontal_flip = rng.bounded(2) == 1;
    cfg.rotation_factor = rng_uniform(rng, 0, 0.99);
    cfg.zoom_factor = rng_uniform(rng, 0, 0.99);
    Tensor b = batch;
    augment(b, cfg, rng);
    ok = ok && b.shape() == batch.shape();
    for (float v : b.values()) ok = ok && v >= 0.0f && v <= 255.0f;
  }
  o.require(ok, "100 random configs keep shape and [0,255]");
  o.note("100 random configs");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"architecture fidelity", architecture},   {"gradient correctness", gradients},
      {"loss anchors", loss_anchors},            {"single-batch overfit", overfit},
      {"desk-scale training", desk_training},    {"epoch accounting", epoch_accounting},
      {"confusion-matrix identity", confusion_identity}, {"t-SNE", tsne},
      {"end-to-end determinism", determinism},   {"serialization", serialization},
      {"augmentation laws", augmentation_laws},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
