#pragma once

#include "greid/matching.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace greid {

namespace detail {

constexpr char kCheckpointMagic[8] = {'G', 'R', 'E', 'I', 'D', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

inline double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

inline void write_tensor(std::ostream& out, const std::string& name, const Mat& m) {
  write_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
  }
}

}  // namespace detail

/// Versioned binary container for all MatchParams tensors (named keys with
/// dimensions) plus the head config. Doubles are stored as raw IEEE-754
/// bytes, so a save/load round trip is bit-exact.
inline void save_checkpoint(const MatchParams& p, std::ostream& out) {
  p.validate();
  out.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  detail::write_u32(out, detail::kCheckpointVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(p.node_dim()));      // feature dim D
  detail::write_u32(out, static_cast<std::uint32_t>(p.part_count()));    // P
  detail::write_u32(out, static_cast<std::uint32_t>(p.rounds));          // T
  detail::write_u32(out, static_cast<std::uint32_t>(p.embed_dim()));
  detail::write_f64(out, p.gamma);
  detail::write_f64(out, p.weight_pos);
  detail::write_f64(out, p.weight_neg);

  detail::write_u32(out, static_cast<std::uint32_t>(p.projections.size()) + 5);
  for (std::size_t t = 0; t < p.projections.size(); ++t) {
    detail::write_tensor(out, "proj." + std::to_string(t), p.projections[t]);
  }
  detail::write_tensor(out, "mlp.w1", p.mlp_w1);
  detail::write_tensor(out, "mlp.b1", p.mlp_b1);
  detail::write_tensor(out, "mlp.w2", p.mlp_w2);
  detail::write_tensor(out, "mlp.b2", p.mlp_b2);
  detail::write_tensor(out, "readout.wu", p.readout_proj);
}

inline void save_checkpoint(const MatchParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint file for writing: " + path);
  save_checkpoint(p, out);
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

inline MatchParams load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = detail::read_u32(in);
  if (version != detail::kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const int feature_dim = static_cast<int>(detail::read_u32(in));
  const int part_count = static_cast<int>(detail::read_u32(in));
  const int rounds = static_cast<int>(detail::read_u32(in));
  const int embed_dim = static_cast<int>(detail::read_u32(in));
  const double gamma = detail::read_f64(in);
  const double weight_pos = detail::read_f64(in);
  const double weight_neg = detail::read_f64(in);
  const std::uint32_t tensor_count = detail::read_u32(in);
  if (!in) throw DataError("truncated checkpoint header");

  std::map<std::string, Mat> tensors;
  for (std::uint32_t k = 0; k < tensor_count; ++k) {
    const std::uint32_t name_len = detail::read_u32(in);
    if (!in || name_len > 4096) throw DataError("corrupt checkpoint tensor name");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = detail::read_u32(in);
    const std::uint32_t cols = detail::read_u32(in);
    if (!in || rows == 0 || cols == 0 || static_cast<std::uint64_t>(rows) * cols > (1u << 26)) {
      throw DataError("corrupt checkpoint tensor shape for '" + name + "'");
    }
    Mat m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = detail::read_f64(in);
    }
    if (!in) throw DataError("truncated checkpoint tensor '" + name + "'");
    tensors[name] = std::move(m);
  }

  const auto get = [&](const std::string& name) -> Mat& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint missing tensor '" + name + "'");
    return it->second;
  };

  MatchParams p;
  p.rounds = rounds;
  for (int t = 0; t < rounds; ++t) {
    p.projections.push_back(get("proj." + std::to_string(t)));
  }
  p.mlp_w1 = get("mlp.w1");
  p.mlp_b1 = get("mlp.b1").col(0);
  p.mlp_w2 = get("mlp.w2");
  p.mlp_b2 = get("mlp.b2").col(0);
  p.readout_proj = get("readout.wu");
  p.gamma = gamma;
  p.weight_pos = weight_pos;
  p.weight_neg = weight_neg;
  p.validate();
  if (p.node_dim() != feature_dim || p.part_count() != part_count ||
      p.embed_dim() != embed_dim) {
    throw DataError("checkpoint config does not match stored tensor shapes");
  }
  return p;
}

inline MatchParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint file not found: " + path);
  return load_checkpoint(in);
}

/// Whitespace-separated text matrix (one row per line), %.17g formatted.
inline void save_matrix_tsv(const Mat& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open matrix file for writing: " + path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << '\t';
      out << fmt_double(m(r, c));
    }
    out << '\n';
  }
}

inline Mat load_matrix_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("matrix file not found: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start < line.size()) {
      std::size_t end = line.find_first_of(" \t", start);
      if (end == std::string::npos) end = line.size();
      if (end > start) {
        double v = 0.0;
        if (!parse_double(std::string_view(line).substr(start, end - start), v)) {
          throw DataError("matrix file line " + std::to_string(line_no) + ": bad value");
        }
        row.push_back(v);
      }
      start = end + 1;
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("matrix file is empty: " + path);
  const std::size_t cols = rows[0].size();
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw DataError("matrix file has ragged rows: " + path);
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

}  // namespace greid
