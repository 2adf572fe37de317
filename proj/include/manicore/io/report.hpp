#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "manicore/errors.hpp"
#include "manicore/funcspace/grid_rep.hpp"

namespace manicore::io {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string config_hash(std::string_view text) { return "fnv1a64:" + hex64(fnv1a64(text)); }

// round-trip text for doubles
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// MANICORE_OUT, else `fallback`
inline std::string output_dir(const std::string& fallback = "manicore_out") {
  const char* env = std::getenv("MANICORE_OUT");
  return env && *env ? std::string(env) : fallback;
}

// Collects the files of one run. Every file starts with the same header block, and
// nothing time- or host-dependent is written.
class RunWriter {
 public:
  RunWriter(std::string dir, std::string config_path, std::string config_text, std::string command)
      : dir_(std::move(dir)),
        config_path_(std::move(config_path)),
        hash_(config_hash(config_text)),
        command_(std::move(command)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::ConfigError, "cannot create output directory " + dir_ + ": " + ec.message());
  }

  const std::string& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }
  nlohmann::json& results() { return results_; }

  std::string header() const {
    return "# manicore " + std::string(kVersion) + "\n# config " + hash_ + "\n# command " + command_ + "\n";
  }

  void columns(const std::string& name, const std::vector<std::string>& cols,
               const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    os << header() << "#";
    for (const auto& c : cols) os << ' ' << c;
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? " " : "") << num(r[i]);
      os << '\n';
    }
    put(name, os.str());
  }

  void key_values(const std::string& name, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ostringstream os;
    os << header();
    for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
    put(name, os.str());
  }

  // JSON files carry the header as fields
  void json(const std::string& name, nlohmann::json j) {
    j["manicore_version"] = kVersion;
    j["config_hash"] = hash_;
    j["command"] = command_;
    put(name, j.dump(2) + "\n");
  }

  void grid(const std::string& name, const GridRep& g, const std::string& field) {
    const GridSpec& s = g.spec();
    std::vector<std::string> cols;
    for (int i = 0; i < s.dim; ++i) cols.push_back("x" + std::to_string(i));
    for (int i = 0; i < g.codomain_dim(); ++i) cols.push_back(field + std::to_string(i));
    std::vector<std::vector<double>> rows;
    rows.reserve(s.nodes());
    for (long j = 0; j < s.nodes(); ++j) {
      Eigen::VectorXd x = s.node(j);
      std::vector<double> r(x.data(), x.data() + x.size());
      for (int i = 0; i < g.codomain_dim(); ++i) r.push_back(g.values()(i, j));
      rows.push_back(std::move(r));
    }
    columns(name, cols, rows);
  }

  // manifest_<name>.json: inputs, outputs with content hashes, headline results
  void manifest(const std::string& name) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [file, h] : files_) files.push_back({{"name", file}, {"fnv1a64", h}});
    nlohmann::json j{{"manicore_version", kVersion},
                     {"config", config_path_},
                     {"config_hash", hash_},
                     {"command", command_},
                     {"files", files},
                     {"results", results_}};
    write_file("manifest_" + name + ".json", j.dump(2) + "\n");
  }

 private:
  void put(const std::string& name, const std::string& content) {
    write_file(name, content);
    files_.emplace_back(name, hex64(fnv1a64(content)));
  }
  void write_file(const std::string& name, const std::string& content) const {
    std::ofstream f(std::filesystem::path(dir_) / name, std::ios::binary);
    if (!f) fail(ErrorKind::ConfigError, "cannot write " + (std::filesystem::path(dir_) / name).string());
    f << content;
  }

  std::string dir_, config_path_, hash_, command_;
  std::vector<std::pair<std::string, std::string>> files_;
  nlohmann::json results_ = nlohmann::json::object();
};

}  // namespace manicore::io
