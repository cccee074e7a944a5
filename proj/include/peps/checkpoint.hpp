#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "peps/config.hpp"
#include "peps/model.hpp"

namespace peps {

/// On-disk model format:
///   bytes 0..3   magic "PEPS"
///   bytes 4..7   u32 version (currently 1), little-endian
///   bytes 8..15  u64 length of the canonical config echo
///   ...          config text (rebuilds the exact architecture)
///   next 8       u64 parameter count
///   ...          parameters as 32-bit little-endian floats, in
///                encoder-grids-then-MLP order
struct ModelCheckpoint {
  ExperimentConfig config;
  std::vector<float> params;
};

inline ModelCheckpoint make_checkpoint(const ExperimentConfig& cfg,
                                       Model& model) {
  ModelCheckpoint ck;
  ck.config = cfg;
  // Pin derived quantities so the echo rebuilds this exact architecture
  // no matter which signal a later evaluation loads.
  ck.config.output_dim = model.mlp.cfg.output_dim;
  const EncoderStack* e = &model.encoder;
  while (e->kind == EncoderKind::peps) e = e->inner.get();
  if (e->kind == EncoderKind::ntc) ck.config.image_size = e->image_size;
  for (ParamTensor* p : model.all_params())
    for (double v : p->value) ck.params.push_back(static_cast<float>(v));
  return ck;
}

/// Restores parameters into a freshly built model; count mismatch means
/// the config echo and payload disagree.
inline void restore_params(Model& model, const ModelCheckpoint& ck) {
  std::size_t i = 0;
  for (ParamTensor* p : model.all_params())
    for (double& v : p->value) {
      if (i >= ck.params.size())
        throw io_error("checkpoint payload shorter than the model");
      v = static_cast<double>(ck.params[i++]);
    }
  if (i != ck.params.size())
    throw io_error("checkpoint payload longer than the model");
}

inline void save_checkpoint(const std::string& path,
                            const ModelCheckpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write checkpoint: " + path);
  const std::string echo = serialize_config(ck.config);
  const std::uint32_t version = 1;
  const std::uint64_t echo_len = echo.size();
  const std::uint64_t count = ck.params.size();
  out.write("PEPS", 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&echo_len), 8);
  out.write(echo.data(), static_cast<std::streamsize>(echo.size()));
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(ck.params.data()),
            static_cast<std::streamsize>(ck.params.size() * 4));
  if (!out) throw io_error(path + ": short write");
}

inline ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open checkpoint: " + path);
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t echo_len = 0;
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PEPS", 4) != 0)
    throw io_error(path + ": bad magic at offset 0");
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in || version != 1)
    throw io_error(path + ": unsupported checkpoint version " +
                   std::to_string(version) + " at offset 4");
  in.read(reinterpret_cast<char*>(&echo_len), 8);
  if (!in) throw io_error(path + ": truncated header at offset 8");
  std::string echo(echo_len, '\0');
  in.read(echo.data(), static_cast<std::streamsize>(echo_len));
  if (static_cast<std::uint64_t>(in.gcount()) != echo_len)
    throw io_error(path + ": truncated config echo at offset 16");
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  if (!in)
    throw io_error(path + ": truncated parameter header at offset " +
                   std::to_string(16 + echo_len));
  ModelCheckpoint ck;
  ck.config = parse_experiment_config_text(echo, path + "(echo)");
  ck.params.resize(count);
  in.read(reinterpret_cast<char*>(ck.params.data()),
          static_cast<std::streamsize>(count * 4));
  if (static_cast<std::uint64_t>(in.gcount()) != count * 4)
    throw io_error(path + ": parameter payload truncated at offset " +
                   std::to_string(24 + echo_len));
  return ck;
}

}  // namespace peps
