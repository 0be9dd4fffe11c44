#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "leafnet/cli.hpp"
#include "leafnet/dataset.hpp"
#include "leafnet/errors.hpp"
#include "leafnet/metrics.hpp"
#include "leafnet/model_io.hpp"
#include "leafnet/synthetic.hpp"
#include "leafnet/treatments.hpp"
#include "test_util.hpp"

using namespace leafnet;
using testutil::TempDir;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> names(std::int64_t k) {
  std::vector<std::string> out;
  for (std::int64_t i = 0; i < k; ++i) out.push_back("class_" + std::to_string(i));
  return out;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kRulesJson = R"([
  {"class_name": "Wheat_Brown_Rust", "agent_type": "fungicide", "treatment": "rust fungicide", "notes": "n1"},
  {"class_name": "Rice_Bacterial_Blight", "agent_type": "bactericide", "treatment": "copper spray"}
])";

}  // namespace

TEST_SUITE("model_io") {
  TEST_CASE("round trip of the canonical model") {
    const Model m(canonical_layers(), image_input_shape(180), Init::GlorotUniform, 21);
    const auto bytes = serialize_model(m, std::vector<std::string>(kDiseaseClasses.begin(), kDiseaseClasses.end()));
    std::size_t header = 8 + 2 + 2 + 3 * 4 + 2 + 4;  // magic, version, counts, input, layers, crc
    for (auto n : kDiseaseClasses) header += 2 + n.size();
    header += 10 * 1 + 4 /* rescale */ + 3 * 4 /* conv */ + 8 /* dense */ + 4 /* output */;
    CHECK(bytes.size() == header + 3989672u * 4u);

    const LoadedModel back = deserialize_model(bytes);
    CHECK(back.class_names[0] == "Corn_Grey_Leaf_Spot");
    CHECK(back.class_names.size() == 8);
    CHECK(back.model_id.size() == 8);
    Rng rng(1);
    const Tensor x = testutil::random_tensor<float>(Shape{2, 180, 180, 3}, rng, 0, 255);
    CHECK(testutil::bitwise_equal(model_forward(m, x).probabilities, model_forward(back.model, x).probabilities));
  }

  TEST_CASE("round trip of random architectures") {
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
      const auto layers = testutil::random_architecture(rng, 6);
      const Model m(layers, image_input_shape(6), Init::GlorotUniform, static_cast<std::uint64_t>(t));
      const auto k = m.num_classes();
      TempDir d("io");
      save_model(m, names(k), d / "m.leaf");
      const LoadedModel back = load_model(d / "m.leaf");
      CHECK(back.class_names == names(k));
      CHECK(back.model.layers().size() == layers.size());
      const Tensor x = testutil::random_tensor<float>(Shape{3, 6, 6, 3}, rng, 0, 255);
      CHECK(testutil::bitwise_equal(model_forward(m, x).logits(), model_forward(back.model, x).logits()));
      CHECK(serialize_model(back.model, back.class_names) == serialize_model(m, names(k)));
    }
  }

  TEST_CASE("corruption is rejected with distinct errors") {
    const Model m(canonical_layers(3), image_input_shape(8), Init::GlorotUniform, 1);
    const auto good = serialize_model(m, names(3));

    auto flipped = good;
    flipped[flipped.size() - 100] ^= 0x10;
    CHECK_THROWS_AS(deserialize_model(flipped), ChecksumError);

    auto magic = good;
    magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_model(magic), BadMagicError);

    auto version = good;
    version[8] = 2;
    CHECK_THROWS_AS(deserialize_model(version), UnsupportedVersionError);

    for (std::size_t cut : {std::size_t{1}, std::size_t{4}, std::size_t{50}, good.size() / 2, good.size() - 12}) {
      const std::vector<std::uint8_t> part(good.begin(), good.end() - static_cast<std::ptrdiff_t>(cut));
      CHECK_THROWS_AS(deserialize_model(part), TruncatedFileError);
    }

    auto trailing = good;
    trailing.insert(trailing.end() - 4, {0, 0, 0, 0});
    CHECK_THROWS_AS(deserialize_model(trailing), ModelLoadError);

    CHECK_THROWS_AS(deserialize_model(std::vector<std::uint8_t>{}), ModelLoadError);
    CHECK_THROWS_AS(save_model(m, names(2), "/tmp/never.leaf"), ArgumentError);
  }
}

TEST_SUITE("treatments") {
  TEST_CASE("parse and recommend") {
    const auto rules = parse_treatments(kRulesJson);
    REQUIRE(rules.size() == 2);
    const auto hit = recommend("Wheat_Brown_Rust", rules);
    REQUIRE(hit.has_value());
    CHECK(*hit == rules[0]);
    CHECK(hit->agent_type == AgentType::Fungicide);
    CHECK(hit->notes == std::optional<std::string>("n1"));
    CHECK_FALSE(recommend("wheat_brown_rust", rules).has_value());
    CHECK_FALSE(recommend("Unknown", rules).has_value());
    CHECK(recommend("Rice_Bacterial_Blight", rules) == recommend("Rice_Bacterial_Blight", rules));

    const auto j = treatment_json(rules[1]);
    CHECK(j.dump() == R"({"agent_type":"bactericide","treatment":"copper spray","notes":null})");
  }

  TEST_CASE("bad files are config errors") {
    CHECK_THROWS_AS(parse_treatments(R"([{"class_name":"A","agent_type":"fungicide","treatment":"x"},
                                         {"class_name":"A","agent_type":"fungicide","treatment":"y"}])"),
                    ConfigError);
    CHECK_THROWS_AS(parse_treatments("{"), ConfigError);
    CHECK_THROWS_AS(parse_treatments(R"({"class_name":"A"})"), ConfigError);
    CHECK_THROWS_AS(parse_treatments(R"([{"class_name":"A","agent_type":"magic","treatment":"x"}])"), ConfigError);
    CHECK_THROWS_AS(parse_treatments(R"([{"class_name":"A","agent_type":"fungicide"}])"), ConfigError);
  }

  TEST_CASE("shipped placeholder file covers every class") {
    const auto rules = load_treatments(fs::path(LEAFNET_SOURCE_DIR) / "data/treatments.json");
    CHECK(rules.size() == 8);
    for (auto n : kDiseaseClasses) CHECK(recommend(std::string(n), rules).has_value());
    CHECK(recommend("Rice_Bacterial_Blight", rules)->agent_type == AgentType::Bactericide);
    CHECK(recommend("Wheat_Yellow_Rust", rules)->agent_type == AgentType::Fungicide);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("usage errors") {
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"train"}).code == 2);
    CHECK(run_cli({"synth", "--out", "x", "--per-class", "0"}).code == 2);
    CHECK(run_cli({"bogus"}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
  }

  TEST_CASE("synth, train, eval, predict, embed") {
    TempDir d("cli");
    const std::string data = (d / "data").string();
    auto r = run_cli({"synth", "--out", data, "--per-class", "6", "--size", "16", "--seed", "3"});
    REQUIRE(r.code == 0);
    CHECK(scan_directory(data).files.size() == 48);

    const std::string model = (d / "m.leaf").string(), metrics = (d / "metrics.csv").string();
    r = run_cli({"train", "--data", data, "--epochs", "2", "--batch", "8", "--img-size", "16", "--seed", "5", "--out",
             model, "--metrics", metrics});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("epoch 1/2 train_loss=") == 0);
    const auto last = r.out.rfind("epoch 2/2 ");
    REQUIRE(last != std::string::npos);
    CHECK(r.out.find("val_acc=", last) != std::string::npos);
    const auto recs = parse_metrics_csv(read_text_file(metrics));
    CHECK(recs.size() == 2);
    CHECK(recs[0].duration_seconds == 0.0);

    const std::string cm_path = (d / "cm.csv").string();
    r = run_cli({"eval", "--model", model, "--data", data, "--out", cm_path, "--seed", "5"});
    REQUIRE(r.code == 0);
    const auto cm = parse_confusion_csv(read_text_file(cm_path));
    CHECK(cm.total() == 10);  // round(0.2 * 48)
    char expect[64];
    std::snprintf(expect, sizeof expect, "accuracy=%.4f ", cm.accuracy());
    CHECK(r.out.rfind(expect, 0) == 0);

    const std::string image = (fs::path(data) / "Wheat_Brown_Rust/img_0000.png").string();
    r = run_cli({"predict", "--model", model, "--image", image});
    REQUIRE(r.code == 0);
    auto j = nlohmann::ordered_json::parse(r.out);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"class", "confidence", "top_k", "treatment", "model_id"});
    CHECK(j["treatment"].is_null());
    CHECK(j["top_k"].size() == 3);
    const double conf = j["confidence"];
    CHECK(conf >= 0.0);
    CHECK(conf <= 1.0);
    CHECK(j["top_k"][0]["p"].get<double>() == conf);
    CHECK(j["top_k"][0]["class"] == j["class"]);
    double psum = 0, prev = 2;
    for (const auto& e : j["top_k"]) {
      const double p = e["p"];
      CHECK(p <= prev);
      prev = p;
      psum += p;
    }
    CHECK(psum <= 1.0 + 1e-6);
    CHECK(j["model_id"] == load_model(model).model_id);

    const std::string rules = (d / "rules.json").string();
    write_text_file(rules, kRulesJson);
    r = run_cli({"predict", "--model", model, "--image", image, "--treatments", rules, "--top-k", "8"});
    REQUIRE(r.code == 0);
    j = nlohmann::ordered_json::parse(r.out);
    CHECK(j["top_k"].size() == 8);
    if (j["class"] == "Wheat_Brown_Rust") CHECK(j["treatment"]["agent_type"] == "fungicide");

    CHECK(run_cli({"predict", "--model", model, "--image", rules}).code == 2);
    CHECK(run_cli({"predict", "--model", rules, "--image", image}).code == 3);
    CHECK(run_cli({"predict", "--model", (d / "absent.leaf").string(), "--image", image}).code == 3);
    CHECK(run_cli({"predict", "--model", model, "--image", image, "--treatments", model}).code == 2);
    CHECK(run_cli({"eval", "--model", model, "--data", (d / "absent").string()}).code == 2);

    const std::string emb = (d / "emb.csv").string();
    r = run_cli({"embed", "--model", model, "--data", data, "--out", emb});
    CHECK(r.code == 2);
    CHECK(r.err.find("--perplexity") != std::string::npos);
    r = run_cli({"embed", "--model", model, "--data", data, "--out", emb, "--perplexity", "10", "--iters", "300"});
    REQUIRE(r.code == 0);
    const std::string first = read_text_file(emb);
    CHECK(std::count(first.begin(), first.end(), '\n') == 49);
    r = run_cli({"embed", "--model", model, "--data", data, "--out", emb, "--perplexity", "10", "--iters", "300"});
    CHECK(read_text_file(emb) == first);
  }

  TEST_CASE("io failures exit 4") {
    CHECK(run_cli({"synth", "--out", "/proc/leafnet_nope", "--per-class", "1", "--size", "16"}).code == 4);
  }

  TEST_CASE("predict report") {
    ParamSet<float> p(2);
    p[1].weights = Tensor(Shape{3, 3}, std::vector<float>{1, 0, 0, 0, 1, 0, 0, 0, 1});
    p[1].bias = Tensor(Shape{3});
    LoadedModel lm{Model({FlattenSpec{}, SoftmaxOutputSpec{3}}, Shape{1, 1, 3}, std::move(p)), {"a", "b", "c"}, "00000000"};
    ImageBuffer img(2, 2, 3, 0);
    for (std::int64_t y = 0; y < 2; ++y)
      for (std::int64_t x = 0; x < 2; ++x) img.at(y, x, 2) = 3;
    const auto rep = cli::predict(lm, img, {}, 2);
    CHECK(rep.class_name == "c");
    CHECK(rep.top_k.size() == 2);
    CHECK(rep.confidence == rep.top_k[0].second);
    CHECK_FALSE(rep.treatment.has_value());
    CHECK_THROWS_AS(cli::predict(lm, img, {}, 0), ArgumentError);
  }
}
