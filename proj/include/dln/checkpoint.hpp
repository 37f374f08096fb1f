#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dln/errors.hpp"
#include "dln/matrix.hpp"
#include "dln/models.hpp"

namespace dln {

struct CheckpointMeta {
  std::string model;  // "wide" or "compressed"
  std::size_t depth = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;
  double scale = 0.0;
  std::string mode;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string layer_file(std::size_t l) { return "layer_" + std::to_string(l + 1) + ".bin"; }

inline void write_checkpoint(const std::filesystem::path& dir, std::span<const DenseMatrix> layers,
                             const CheckpointMeta& meta) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  for (std::size_t l = 0; l < layers.size(); ++l) save_binary(layers[l], (dir / layer_file(l)).string());
  nlohmann::json j{{"model", meta.model}, {"L", meta.depth},     {"rows", meta.rows}, {"cols", meta.cols},
                   {"rhat", meta.rank},   {"eps", meta.scale},   {"mode", meta.mode}, {"seed", meta.seed}};
  std::ofstream os(dir / "manifest.json");
  if (!os) throw IoError("cannot write " + (dir / "manifest.json").string());
  os << j.dump(2) << '\n';
}

inline std::pair<CheckpointMeta, std::vector<DenseMatrix>> read_checkpoint(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("cannot open " + (dir / "manifest.json").string());
  CheckpointMeta meta;
  try {
    const auto j = nlohmann::json::parse(is);
    meta.model = j.at("model").get<std::string>();
    meta.depth = j.at("L").get<std::size_t>();
    meta.rows = j.at("rows").get<std::size_t>();
    meta.cols = j.at("cols").get<std::size_t>();
    meta.rank = j.at("rhat").get<std::size_t>();
    meta.scale = j.at("eps").get<double>();
    meta.mode = j.at("mode").get<std::string>();
    meta.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what(), 0);
  }
  std::vector<DenseMatrix> layers;
  for (std::size_t l = 0; l < meta.depth; ++l) layers.push_back(load_binary((dir / layer_file(l)).string()));
  return {meta, std::move(layers)};
}

}  // namespace detail

inline void save_checkpoint(const WideDLN& m, const std::filesystem::path& dir, double scale, const std::string& mode,
                            std::uint64_t seed) {
  detail::write_checkpoint(dir, m.layers(), {"wide", m.depth(), m.rows(), m.cols(), m.width(), scale, mode, seed});
}

inline void save_checkpoint(const CompressedDLN& m, const std::filesystem::path& dir, double scale,
                            const std::string& mode, std::uint64_t seed) {
  detail::write_checkpoint(dir, m.layers(),
                           {"compressed", m.depth(), m.rows(), m.cols(), m.rank(), scale, mode, seed});
}

inline WideDLN load_wide_checkpoint(const std::filesystem::path& dir, CheckpointMeta* meta = nullptr) {
  auto [m, layers] = detail::read_checkpoint(dir);
  if (m.model != "wide") throw DataError("checkpoint in " + dir.string() + " holds a " + m.model + " model");
  if (meta) *meta = m;
  return WideDLN(std::move(layers));
}

inline CompressedDLN load_compressed_checkpoint(const std::filesystem::path& dir, CheckpointMeta* meta = nullptr) {
  auto [m, layers] = detail::read_checkpoint(dir);
  if (m.model != "compressed") throw DataError("checkpoint in " + dir.string() + " holds a " + m.model + " model");
  if (meta) *meta = m;
  return CompressedDLN(std::move(layers));
}

}  // namespace dln
