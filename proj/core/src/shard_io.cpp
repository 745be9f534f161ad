#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tribogen/errors.hpp"
#include "tribogen/dataset.hpp"

namespace tribogen::dataset {

// Shard layout: 16-byte magic, little-endian uint64 record count, then
// kRecordFloats consecutive 32-bit floats per record.

void write_shard(const std::string& path, const std::vector<float>& records) {
  if (records.size() % kRecordFloats != 0)
    throw std::invalid_argument("record buffer not a multiple of the record size");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open shard for writing: " + path);
  out.write(kShardMagic, sizeof(kShardMagic));
  const std::uint64_t count = records.size() / kRecordFloats;
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(records.data()),
            static_cast<std::streamsize>(records.size() * sizeof(float)));
  if (!out) throw IoError("short write on shard: " + path);
}

std::vector<float> read_shard(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open shard: " + path);
  char magic[16];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kShardMagic, sizeof(magic)) != 0)
    throw IoError("bad shard magic: " + path);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  std::vector<float> records(count * kRecordFloats);
  in.read(reinterpret_cast<char*>(records.data()),
          static_cast<std::streamsize>(records.size() * sizeof(float)));
  if (!in) throw IoError("truncated shard: " + path);
  return records;
}

}  // namespace tribogen::dataset
