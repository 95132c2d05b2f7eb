#pragma once

// File formats: the "OIFS" binary matrix blob (magic, version u16, rows u32,
// cols u32, little-endian IEEE-754 doubles in column-major order), a CSV
// alternative, and the JSON manifests for models, reduced models and
// snapshot sets. Quadratic operators are exchanged in the full r x r^2 form;
// the compact storage is an internal convention.

#include "flowrom/model.hpp"

#include "json.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

static_assert(std::endian::native == std::endian::little, "blob I/O assumes a little-endian host");

namespace flowrom {

using Json = nlohmann::ordered_json;

/// File-format and filesystem failures (distinct from numerical failures so
/// the CLI can map them to the config-error exit code).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
namespace fs = std::filesystem;

inline constexpr char kBlobMagic[4] = {'O', 'I', 'F', 'S'};
inline constexpr std::uint16_t kBlobVersion = 1;

inline void write_matrix_blob(const fs::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kBlobMagic, 4);
  const std::uint16_t version = kBlobVersion;
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double)) * m.size());
  if (!out) throw IoError("short write to " + path.string());
}

inline Matrix read_matrix_blob(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  constexpr std::streamsize header_bytes = 14;  // magic(4) + version(2) + rows(4) + cols(4)
  char header[header_bytes];
  in.read(header, header_bytes);
  if (in.gcount() < header_bytes) {
    throw IoError(path.string() + ": truncated header at byte offset " + std::to_string(in.gcount()));
  }
  if (std::memcmp(header, kBlobMagic, 4) != 0) {
    throw IoError(path.string() + ": malformed header (bad magic) at byte offset 0");
  }
  std::uint16_t version = 0;
  std::uint32_t rows = 0, cols = 0;
  std::memcpy(&version, header + 4, sizeof version);
  std::memcpy(&rows, header + 6, sizeof rows);
  std::memcpy(&cols, header + 10, sizeof cols);
  if (version != kBlobVersion) {
    throw IoError(path.string() + ": unsupported blob version " + std::to_string(version) +
                             " at byte offset 4");
  }
  Matrix m(rows, cols);
  const std::streamsize bytes = static_cast<std::streamsize>(sizeof(double)) * m.size();
  if (bytes > 0) {
    in.read(reinterpret_cast<char*>(m.data()), bytes);
    if (in.gcount() < bytes) {
      throw IoError(path.string() + ": truncated payload at byte offset " +
                               std::to_string(header_bytes + in.gcount()) + " (expected " +
                               std::to_string(header_bytes + bytes) + " bytes)");
    }
  }
  return m;
}

inline void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

inline Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path.string() + ": inconsistent column count on line " +
                               std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

/// Reads .bin blobs or .csv matrices by extension.
inline Matrix read_matrix_auto(const fs::path& path) {
  return path.extension() == ".csv" ? read_matrix_csv(path) : read_matrix_blob(path);
}

inline Json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return j;
}

inline void save_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

// ---- full-order model manifest ----

inline void save_model(const fs::path& dir, const QuadDaeModel& model) {
  fs::create_directories(dir);
  Json manifest;
  manifest["format"] = "flowrom-model";
  manifest["version"] = 1;
  manifest["dims"] = {{"n_v", model.n_v()}, {"n_p", model.n_p()}, {"m", model.n_inputs()}};
  Json mats;
  auto emit = [&](const char* name, const Matrix& m) {
    const std::string file = std::string(name) + ".bin";
    write_matrix_blob(dir / file, m);
    mats[name] = file;
  };
  emit("E11", model.E11);
  emit("A11", model.A11);
  emit("A12", model.A12);
  emit("H", expand_quadratic_operator(model.H));  // exchange format uses the full form
  emit("B1", model.B1);
  if (model.has_constraint_forcing()) emit("Bperp", model.Bperp);
  if (model.Cv.size() != 0) emit("Cv", model.Cv);
  if (model.Cp.size() != 0) emit("Cp", model.Cp);
  manifest["matrices"] = mats;
  save_json(dir / "model.json", manifest);
}

inline QuadDaeModel load_model(const fs::path& manifest_path) {
  const fs::path dir = manifest_path.parent_path();
  const Json manifest = load_json(manifest_path);
  if (manifest.value("format", "") != "flowrom-model") {
    throw IoError(manifest_path.string() + ": not a flowrom model manifest");
  }
  const Json& mats = manifest.at("matrices");
  auto read = [&](const char* name) { return read_matrix_auto(dir / mats.at(name).get<std::string>()); };
  QuadDaeModel model;
  model.E11 = read("E11");
  model.A11 = read("A11");
  model.A12 = read("A12");
  model.H = compress_quadratic_operator(read("H"));
  model.B1 = read("B1");
  if (mats.contains("Bperp")) model.Bperp = read("Bperp");
  if (mats.contains("Cv")) model.Cv = read("Cv");
  if (mats.contains("Cp")) model.Cp = read("Cp");
  const Index nv = model.n_v();
  if (model.A11.rows() != nv || model.A11.cols() != nv || model.A12.rows() != nv || model.B1.rows() != nv ||
      model.H.rows() != nv) {
    throw IoError(manifest_path.string() + ": inconsistent matrix dimensions");
  }
  return model;
}

// ---- reduced model manifest ----

inline void save_reduced_model(const fs::path& dir, const ReducedQuadModel& rom) {
  fs::create_directories(dir);
  Json manifest;
  manifest["format"] = "flowrom-reduced";
  manifest["version"] = 1;
  manifest["order"] = rom.order();
  Json mats;
  auto emit = [&](const char* name, const Matrix& m) {
    if (m.size() == 0) return;
    const std::string file = std::string(name) + ".bin";
    write_matrix_blob(dir / file, m);
    mats[name] = file;
  };
  emit("A", rom.A);
  emit("H", rom.H.size() != 0 ? expand_quadratic_operator(rom.H) : Matrix());
  emit("B", rom.B);
  emit("c", rom.c);
  emit("N", rom.N);
  emit("K", rom.K);
  manifest["matrices"] = mats;
  save_json(dir / "reduced_model.json", manifest);
}

inline ReducedQuadModel load_reduced_model(const fs::path& manifest_path) {
  const fs::path dir = manifest_path.parent_path();
  const Json manifest = load_json(manifest_path);
  if (manifest.value("format", "") != "flowrom-reduced") {
    throw IoError(manifest_path.string() + ": not a flowrom reduced-model manifest");
  }
  const Json& mats = manifest.at("matrices");
  auto read = [&](const char* name) {
    return mats.contains(name) ? read_matrix_auto(dir / mats.at(name).get<std::string>()) : Matrix();
  };
  ReducedQuadModel rom;
  rom.A = read("A");
  const Matrix h_full = read("H");
  if (h_full.size() != 0) rom.H = compress_quadratic_operator(h_full);
  rom.B = read("B");
  rom.c = read("c");
  rom.N = read("N");
  rom.K = read("K");
  return rom;
}

// ---- snapshot manifest ----

inline void save_snapshots(const fs::path& dir, const SnapshotSet& snaps) {
  snaps.check();
  fs::create_directories(dir);
  Json manifest;
  manifest["format"] = "flowrom-snapshots";
  manifest["version"] = 1;
  manifest["samples"] = snaps.samples();
  Json blocks;
  auto emit = [&](const char* name, const Matrix& m) {
    if (m.size() == 0) return;
    const std::string file = std::string(name) + ".bin";
    write_matrix_blob(dir / file, m);
    blocks[name] = file;
  };
  emit("times", snaps.times.transpose());
  emit("V", snaps.V);
  emit("P", snaps.P);
  emit("U", snaps.U);
  emit("Uperp", snaps.Uperp);
  manifest["blocks"] = blocks;
  save_json(dir / "snapshots.json", manifest);
}

inline SnapshotSet load_snapshots(const fs::path& manifest_path) {
  const fs::path dir = manifest_path.parent_path();
  const Json manifest = load_json(manifest_path);
  if (manifest.value("format", "") != "flowrom-snapshots") {
    throw IoError(manifest_path.string() + ": not a flowrom snapshot manifest");
  }
  const Json& blocks = manifest.at("blocks");
  auto read = [&](const char* name) {
    return blocks.contains(name) ? read_matrix_auto(dir / blocks.at(name).get<std::string>()) : Matrix();
  };
  SnapshotSet snaps;
  const Matrix times = read("times");
  if (times.rows() != 1) throw IoError(manifest_path.string() + ": times block must be a single row");
  snaps.times = times.row(0).transpose();
  snaps.V = read("V");
  snaps.P = read("P");
  snaps.U = read("U");
  snaps.Uperp = read("Uperp");
  snaps.check();
  return snaps;
}

}  // namespace flowrom
