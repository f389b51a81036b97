#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "torspec/field.hpp"
#include "torspec/space.hpp"

namespace torspec {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Exact-decimal formatting: 17 significant digits round-trip any double.
std::string fmt17(double v);

struct FieldFile {
  SpectralField field;
  SpaceParams space;
};

/// Columnar text format: a header line carrying dim, freq_dim, cutoffs, rho,
/// r, is_real, then one line per mode `k_1 .. k_n re im`, in flat box order.
void write_field(const std::filesystem::path& path, const SpectralField& u,
                 const SpaceParams& space);
FieldFile read_field(const std::filesystem::path& path);

/// Append-only CSV with a one-time header; optional leading comment lines
/// (written only when the file is created) carry the resolved configuration.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
            const std::vector<std::string>& comments = {});
  void row(const std::vector<std::string>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace torspec
