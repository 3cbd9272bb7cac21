#include "graphleaf/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "bytes.hpp"
#include "graphleaf/error.hpp"

namespace graphleaf {

std::vector<std::uint8_t> encode_checkpoint(const ParamSet<float>& params, const std::string& metadata_json) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(metadata_json.size()));
  w.raw(metadata_json.data(), metadata_json.size());
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.entries()) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.raw(p.name.data(), p.name.size());
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : p.value.values()) w.f32(v);
    for (float v : p.first_moment.values()) w.f32(v);
    for (float v : p.second_moment.values()) w.f32(v);
    w.u64(params.step);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw FormatError("not a checkpoint (bad magic)");
  detail::ByteReader r(bytes);
  r.str(4, "magic");
  const auto version = r.u16("version");
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  ck.metadata_json = r.str(r.u32("metadata length"), "metadata");
  const auto count = r.u32("parameter count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto start = r.offset();
    std::string name = r.str(r.u32("parameter name length"), "parameter name");
    const auto rank = r.u32("rank");
    r.need(static_cast<std::size_t>(rank) * 4, "shape");
    Shape shape(rank);
    for (auto& d : shape) d = r.u32("dimension");
    const std::size_t n = shape_size(shape);
    r.need(n * 12 + 8, "parameter payload");
    auto read_tensor = [&] {
      Tensor<float> t(shape);
      for (auto& v : t.values()) v = r.f32("parameter payload");
      return t;
    };
    auto& p = ck.params.add(std::move(name), read_tensor());
    p.first_moment = read_tensor();
    p.second_moment = read_tensor();
    const auto step = r.u64("adam step");
    if (i == 0) {
      ck.params.step = step;
    } else if (step != ck.params.step) {
      throw CorruptionError("inconsistent Adam step across parameters", start);
    }
  }
  if (r.remaining() != 0) throw CorruptionError("trailing bytes after checkpoint", r.offset());
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const ParamSet<float>& params,
                      const std::string& metadata_json) {
  const auto bytes = encode_checkpoint(params, metadata_json);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace graphleaf
