#include "dcrnn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace dcrnn {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'R', 'N', 'N', 'C', 'K', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw Error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) write_f64(out, m.data()[i]);
}

DenseMatrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols) {
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = read_f64(in);
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<const ParamTensor*>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const ParamTensor* p : params) {
    write_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_u64(out, p->value.rows());
    write_u64(out, p->value.cols());
    write_u64(out, p->step_count);
    write_matrix(out, p->value);
    write_matrix(out, p->m);
    write_matrix(out, p->v);
  }
  if (!out) throw Error("checkpoint: write failed: " + path.string());
}

std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error("checkpoint: bad magic in " + path.string());
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw Error("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = read_u32(in);
  std::vector<CheckpointEntry> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const std::uint32_t name_len = read_u32(in);
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    if (!in) throw Error("checkpoint: truncated file");
    const std::uint64_t rows = read_u64(in);
    const std::uint64_t cols = read_u64(in);
    e.step_count = read_u64(in);
    e.value = read_matrix(in, rows, cols);
    e.m = read_matrix(in, rows, cols);
    e.v = read_matrix(in, rows, cols);
    entries.push_back(std::move(e));
  }
  return entries;
}

void restore_checkpoint(const std::vector<CheckpointEntry>& entries,
                        const std::vector<ParamTensor*>& params) {
  if (entries.size() != params.size()) {
    throw Error("checkpoint: has " + std::to_string(entries.size()) + " tensors, model expects " +
                std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const CheckpointEntry& e = entries[i];
    ParamTensor* p = params[i];
    if (e.name != p->name || !e.value.same_shape(p->value)) {
      throw Error("checkpoint: tensor " + std::to_string(i) + " is '" + e.name + "' " +
                  shape_string(e.value) + ", model expects '" + p->name + "' " +
                  shape_string(p->value));
    }
    p->value = e.value;
    p->m = e.m;
    p->v = e.v;
    p->step_count = e.step_count;
    p->zero_grad();
  }
}

}  // namespace dcrnn
