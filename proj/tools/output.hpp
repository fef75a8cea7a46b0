#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "ridgeless/experiments.hpp"

namespace ridgeless::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Fixed-precision text for CSV cells; identical values always print identically.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string fmt(Index v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char two[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(two, sizeof two, "%02x", digest[i]);
    hex += two;
  }
  return hex;
}

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string schema;
  std::string panel;
  Index rows = 0;
};

/// Collects the CSV files of one run and writes them plus manifest.jsonl.
class RunWriter {
 public:
  explicit RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const std::vector<OutputFile>& files() const noexcept { return files_; }

  void write_csv(const std::string& name, const std::string& schema, const std::string& panel,
                 const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    write_row(out, header);
    for (const auto& r : rows) write_row(out, r);
    if (!out) throw std::runtime_error("write failed for '" + (dir_ / name).string() + "'");
    files_.push_back({name, schema, panel, static_cast<Index>(rows.size())});
  }

  void write_curve(const std::string& name, const std::string& panel, const RiskCurve& c) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < c.size(); ++i)
      rows.push_back({fmt(c.lambdas[i]), fmt(c.mean_normalized_mse[i]), fmt(c.std_err[i]), fmt(c.n_rep),
                      fmt(c.excluded[i])});
    write_csv(name, "curve", panel, {"lambda", "mean_nmse", "std_err", "n_rep", "excluded"}, rows);
  }

  void write_manifest(const std::string& command, const nlohmann::json& params, std::uint64_t seed,
                      double wall_time) const {
    std::ofstream out(dir_ / "manifest.jsonl", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest in '" + dir_.string() + "'");
    nlohmann::json run = {{"kind", "run"},
                          {"command", command},
                          {"params", params},
                          {"master_seed", seed},
                          {"tool_version", kToolVersion},
                          {"schema_version", kSchemaVersion},
                          {"wall_time_s", wall_time}};
    nlohmann::json names = nlohmann::json::array();
    for (const auto& f : files_) names.push_back(f.name);
    run["outputs"] = names;
    out << run.dump() << '\n';
    for (const auto& f : files_) {
      nlohmann::json line = {{"kind", "file"},     {"path", f.name},  {"schema", f.schema},
                             {"panel", f.panel},   {"rows", f.rows},  {"sha256", sha256_file(dir_ / f.name)}};
      out << line.dump() << '\n';
    }
  }

 private:
  static void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }

  std::filesystem::path dir_;
  std::vector<OutputFile> files_;
};

struct CheckResult {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Verifies that every file listed in dir/manifest.jsonl exists with the
/// recorded SHA-256, and that the manifest was written by `command`.
inline CheckResult check_manifest(const std::filesystem::path& dir, const std::string& command) {
  CheckResult res;
  std::ifstream in(dir / "manifest.jsonl");
  if (!in) return {false, {"no manifest.jsonl in '" + dir.string() + "'"}};
  std::string line;
  bool saw_run = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    if (j.at("kind") == "run") {
      saw_run = true;
      if (j.at("command") != command)
        res.problems.push_back("manifest was written by '" + j.at("command").get<std::string>() + "'");
      continue;
    }
    const auto name = j.at("path").get<std::string>();
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) {
      res.problems.push_back(name + ": missing");
    } else if (sha256_file(path) != j.at("sha256").get<std::string>()) {
      res.problems.push_back(name + ": hash mismatch");
    }
  }
  if (!saw_run) res.problems.push_back("manifest has no run record");
  res.ok = res.problems.empty();
  return res;
}

}  // namespace ridgeless::cli
