#ifndef EIGENLAB_IO_HPP
#define EIGENLAB_IO_HPP

// CSV/JSON artifact writers and the run manifest (SHA-256 per file).

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "eigenlab/common.hpp"

namespace eigenlab {

using Json = nlohmann::ordered_json;

// Shortest round-trip formatting keeps outputs byte-stable across runs.
inline std::string fmt_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  // Cells are preformatted strings; numbers go through fmt_number.
  CsvTable& row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw ConfigError("csv row width does not match header");
    rows_.push_back(std::move(cells));
    return *this;
  }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::ostringstream os;
    write_line(os, header_);
    for (const auto& r : rows_) write_line(os, r);
    return os.str();
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        os << cells[i];
        continue;
      }
      os << '"';
      for (char c : cells[i]) os << (c == '"' ? "\"\"" : std::string(1, c));
      os << '"';
    }
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string num(double v) { return fmt_number(v); }
inline std::string num(long long v) { return std::to_string(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw ConfigError("sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

// Collects the files of one run and writes them together with manifest.json.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("output: cannot create directory " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

  void write_text(const std::string& name, const std::string& text) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("output: cannot write " + path.string());
    out << text;
    files_.emplace_back(name, sha256_hex(text), text.size());
  }
  void write_csv(const std::string& name, const CsvTable& t) { write_text(name, t.str()); }
  void write_json(const std::string& name, const Json& j) { write_text(name, j.dump(2) + "\n"); }

  // Hashes only, so identical configs give identical manifests.
  Json manifest() const {
    Json m = Json::object();
    m["files"] = Json::array();
    for (const auto& [name, hash, size] : files_) m["files"].push_back({{"name", name}, {"sha256", hash}, {"bytes", size}});
    return m;
  }
  void finish() {
    const std::string text = manifest().dump(2) + "\n";
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << text;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::tuple<std::string, std::string, std::size_t>> files_;
};

}  // namespace eigenlab

#endif  // EIGENLAB_IO_HPP
