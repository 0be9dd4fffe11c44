#include "leafnet/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>

#include "leafnet/errors.hpp"
#include "leafnet/image.hpp"

namespace leafnet {
namespace {

constexpr char kMagic[8] = {'L', 'E', 'A', 'F', 'N', 'E', 'T', '1'};

enum class Tag : std::uint8_t { Rescale = 1, Conv2D = 2, MaxPool = 3, Flatten = 4, Dense = 5, SoftmaxOutput = 6 };

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    const auto b = take(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    const auto b = take(4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw TruncatedFileError("model file is truncated");
    const auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

void write_layer(Writer& w, const LayerSpec& layer) {
  std::visit(Overloaded{
                 [&](const RescaleSpec& r) {
                   w.u8(static_cast<std::uint8_t>(Tag::Rescale));
                   w.f32(r.factor);
                 },
                 [&](const Conv2DSpec& c) {
                   w.u8(static_cast<std::uint8_t>(Tag::Conv2D));
                   w.u32(static_cast<std::uint32_t>(c.filters));
                 },
                 [&](const MaxPoolSpec&) { w.u8(static_cast<std::uint8_t>(Tag::MaxPool)); },
                 [&](const FlattenSpec&) { w.u8(static_cast<std::uint8_t>(Tag::Flatten)); },
                 [&](const DenseSpec& d) {
                   w.u8(static_cast<std::uint8_t>(Tag::Dense));
                   w.u32(static_cast<std::uint32_t>(d.units));
                   w.u32(static_cast<std::uint32_t>(d.activation));
                 },
                 [&](const SoftmaxOutputSpec& s) {
                   w.u8(static_cast<std::uint8_t>(Tag::SoftmaxOutput));
                   w.u32(static_cast<std::uint32_t>(s.classes));
                 },
             },
             layer);
}

LayerSpec read_layer(Reader& r) {
  const std::uint8_t tag = r.u8();
  switch (static_cast<Tag>(tag)) {
    case Tag::Rescale: return RescaleSpec{r.f32()};
    case Tag::Conv2D: return Conv2DSpec{r.u32()};
    case Tag::MaxPool: return MaxPoolSpec{};
    case Tag::Flatten: return FlattenSpec{};
    case Tag::Dense: {
      const std::uint32_t units = r.u32();
      const std::uint32_t act = r.u32();
      if (act > 1) throw MalformedModelError("unknown activation code " + std::to_string(act));
      return DenseSpec{units, static_cast<Activation>(act)};
    }
    case Tag::SoftmaxOutput: return SoftmaxOutputSpec{r.u32()};
  }
  throw MalformedModelError("unknown layer tag " + std::to_string(tag));
}

LoadedModel parse_body(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.take(sizeof kMagic);
  r.u16();  // version, checked by the caller

  LoadedModel out;
  const std::uint16_t classes = r.u16();
  for (std::uint16_t i = 0; i < classes; ++i) {
    const std::uint16_t len = r.u16();
    const auto s = r.take(len);
    out.class_names.emplace_back(reinterpret_cast<const char*>(s.data()), s.size());
  }
  const std::int64_t h = r.u32(), w = r.u32(), c = r.u32();
  std::vector<LayerSpec> layers;
  const std::uint16_t count = r.u16();
  for (std::uint16_t i = 0; i < count; ++i) layers.push_back(read_layer(r));

  Shape input;
  try {
    input = Shape{h, w, c};
    // Validate the declared shapes against the bytes present before
    // allocating anything sized by them.
    const std::int64_t declared = param_count(layers, input);
    if (declared > static_cast<std::int64_t>((bytes.size() - r.position()) / 4)) {
      throw TruncatedFileError("model file is truncated: " + std::to_string(declared) + " parameters declared");
    }
    const BasicModel<float> probe(layers, input, Init::Zeros);
    ParamSet<float> params(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& lp = probe.params()[i];
      if (!lp.present()) continue;
      params[i].weights = Tensor(lp.weights.shape());
      params[i].bias = Tensor(lp.bias.shape());
    }
    for (auto& lp : params) {
      for (Tensor* t : {&lp.weights, &lp.bias}) {
        if (t->empty()) continue;
        const auto raw = r.take(t->size() * 4);
        for (std::size_t k = 0; k < t->size(); ++k) {
          const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * k]) |
                                     (static_cast<std::uint32_t>(raw[4 * k + 1]) << 8) |
                                     (static_cast<std::uint32_t>(raw[4 * k + 2]) << 16) |
                                     (static_cast<std::uint32_t>(raw[4 * k + 3]) << 24);
          (*t)[k] = std::bit_cast<float>(bits);
        }
      }
    }
    if (r.position() != bytes.size()) throw MalformedModelError("model file has trailing bytes");
    out.model = Model(std::move(layers), input, std::move(params));
  } catch (const ShapeError& e) {
    throw MalformedModelError(std::string("invalid architecture: ") + e.what());
  }
  if (static_cast<std::int64_t>(out.class_names.size()) != out.model.num_classes()) {
    throw MalformedModelError("class table has " + std::to_string(out.class_names.size()) + " names for " +
                              std::to_string(out.model.num_classes()) + " outputs");
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model, const std::vector<std::string>& class_names) {
  if (static_cast<std::int64_t>(class_names.size()) != model.num_classes()) {
    throw ArgumentError("save_model: " + std::to_string(class_names.size()) + " class names for " +
                        std::to_string(model.num_classes()) + " outputs");
  }
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u16(kModelFormatVersion);
  w.u16(static_cast<std::uint16_t>(class_names.size()));
  for (const auto& name : class_names) {
    if (name.size() > 0xFFFF) throw ArgumentError("class name too long");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name.data(), name.size());
  }
  for (const auto d : model.input_shape().dims()) w.u32(static_cast<std::uint32_t>(d));
  w.u16(static_cast<std::uint16_t>(model.layers().size()));
  for (const auto& layer : model.layers()) write_layer(w, layer);
  for (const auto& lp : model.params()) {
    for (const float v : lp.weights.values()) w.f32(v);
    for (const float v : lp.bias.values()) w.f32(v);
  }
  const std::uint32_t crc = crc32_of(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = std::min(bytes.size(), sizeof kMagic);
  if (std::memcmp(bytes.data(), kMagic, magic_len) != 0) throw BadMagicError("not a model file (bad magic)");
  if (bytes.size() < sizeof kMagic + 2) throw TruncatedFileError("model file is truncated");
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[8] | (bytes[9] << 8));
  if (version != kModelFormatVersion) {
    throw UnsupportedVersionError("unsupported model format version " + std::to_string(version));
  }
  if (bytes.size() < sizeof kMagic + 2 + 4) throw TruncatedFileError("model file is truncated");

  const auto body = bytes.first(bytes.size() - 4);
  const auto tail = bytes.last(4);
  const std::uint32_t stored = static_cast<std::uint32_t>(tail[0]) | (static_cast<std::uint32_t>(tail[1]) << 8) |
                               (static_cast<std::uint32_t>(tail[2]) << 16) |
                               (static_cast<std::uint32_t>(tail[3]) << 24);
  const bool crc_ok = crc32_of(body) == stored;
  LoadedModel out;
  try {
    out = parse_body(body);
  } catch (const MalformedModelError&) {
    if (!crc_ok) throw ChecksumError("model file checksum mismatch");
    throw;
  }
  if (!crc_ok) throw ChecksumError("model file checksum mismatch");
  char id[9];
  std::snprintf(id, sizeof id, "%08x", stored);
  out.model_id = id;
  return out;
}

void save_model(const Model& model, const std::vector<std::string>& class_names, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_model(model, class_names));
}

LoadedModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file_bytes(path)); }

}  // namespace leafnet
