#include "vamuon/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vamuon {

namespace {

constexpr char kMagic[8] = {'V', 'M', 'C', 'K', '0', '0', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  }
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits = 0;
      const double v = m(i, j);
      std::memcpy(&bits, &v, 8);
      write_u64(out, bits);
    }
  }
}

Matrix read_matrix(std::istream& in) {
  const auto rows = static_cast<Eigen::Index>(read_u64(in));
  const auto cols = static_cast<Eigen::Index>(read_u64(in));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const std::uint64_t bits = read_u64(in);
      double v = 0.0;
      std::memcpy(&v, &bits, 8);
      m(i, j) = v;
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const RunState& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, static_cast<std::uint64_t>(state.step));
  write_u64(out, state.slots.size());
  for (const ParamSlot& slot : state.slots) {
    write_string(out, slot.id);
    out.put(slot.family == Family::muon_family ? 1 : 0);
    out.put(slot.is_vector ? 1 : 0);
    write_u64(out, static_cast<std::uint64_t>(slot.moments.t));
    write_u64(out, static_cast<std::uint64_t>(slot.adam_t));
    write_matrix(out, slot.weights);
    write_matrix(out, slot.moments.m);
    write_matrix(out, slot.moments.gamma);
    write_matrix(out, slot.adam_m);
    write_matrix(out, slot.adam_v);
    write_matrix(out, slot.sign_m);
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

RunState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  RunState state;
  state.step = static_cast<std::int64_t>(read_u64(in));
  const std::uint64_t count = read_u64(in);
  state.slots.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    ParamSlot& slot = state.slots[i];
    slot.id = read_string(in);
    slot.family = in.get() == 1 ? Family::muon_family : Family::adamw_family;
    slot.is_vector = in.get() == 1;
    slot.moments.t = static_cast<std::int64_t>(read_u64(in));
    slot.adam_t = static_cast<std::int64_t>(read_u64(in));
    slot.weights = read_matrix(in);
    slot.moments.m = read_matrix(in);
    slot.moments.gamma = read_matrix(in);
    slot.adam_m = read_matrix(in);
    slot.adam_v = read_matrix(in);
    slot.sign_m = read_matrix(in);
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return state;
}

}  // namespace vamuon
