#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tribogen/errors.hpp"
#include "tribogen/neural.hpp"

using nlohmann::json;

namespace tribogen::neural {

namespace {

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_floats(std::ofstream& out, const std::vector<float>& v) {
  write_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::vector<float> read_floats(std::ifstream& in) {
  std::vector<float> v(read_u64(in));
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(float)));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  ckpt.spec.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::string digest = ckpt.spec.digest();  // 16 hex chars
  out.write(digest.data(), 16);
  write_floats(out, ckpt.params);
  write_floats(out, ckpt.stats);
  write_floats(out, ckpt.m);
  write_floats(out, ckpt.v);

  json meta;
  meta["spec"] = json::parse(ckpt.spec.to_json_string());
  meta["step"] = ckpt.step;
  meta["rng_state"] = ckpt.rng_state;
  meta["best_val_loss"] = ckpt.best_val_loss;
  meta["note"] = ckpt.note;
  const std::string trailer = meta.dump();
  write_u64(out, trailer.size());
  out.write(trailer.data(), static_cast<std::streamsize>(trailer.size()));
  if (!out) throw IoError("short write on checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path);
  char magic[16];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw IoError("bad checkpoint magic: " + path);
  char digest[17] = {};
  in.read(digest, 16);

  Checkpoint ckpt;
  ckpt.params = read_floats(in);
  ckpt.stats = read_floats(in);
  ckpt.m = read_floats(in);
  ckpt.v = read_floats(in);
  const std::uint64_t trailer_len = read_u64(in);
  std::string trailer(trailer_len, '\0');
  in.read(trailer.data(), static_cast<std::streamsize>(trailer_len));
  if (!in) throw IoError("truncated checkpoint: " + path);

  const json meta = json::parse(trailer);
  ckpt.spec = NetworkSpec::from_json_string(meta.at("spec").dump());
  ckpt.step = meta.at("step");
  ckpt.rng_state = meta.at("rng_state");
  ckpt.best_val_loss = meta.at("best_val_loss");
  ckpt.note = meta.value("note", "");

  if (ckpt.spec.digest() != digest)
    throw IoError("checkpoint digest mismatch: " + path);
  const Layout layout = Layout::build(ckpt.spec);
  if (ckpt.params.size() != layout.param_count ||
      ckpt.stats.size() != layout.stats_count)
    throw IoError("checkpoint payload shape mismatch: " + path);
  return ckpt;
}

}  // namespace tribogen::neural
