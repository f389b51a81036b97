#include "torspec/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace torspec {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_field(const std::filesystem::path& path, const SpectralField& u,
                 const SpaceParams& space) {
  std::ofstream out(path);
  if (!out) throw IoError("write_field: cannot open " + path.string());
  out << "torspec-field dim=" << u.space_axes() << " freq_dim=" << u.freq_axes() << " cutoff=";
  for (int a = 0; a < u.axes(); ++a) out << (a ? "," : "") << u.cutoff(a);
  out << " rho=" << fmt17(space.rho) << " r=" << fmt17(space.r)
      << " is_real=" << (u.is_real() ? 1 : 0) << "\n";
  std::array<int, SpectralField::kMaxAxes> k{};
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    for (int a = 0; a < u.axes(); ++a) out << k[static_cast<std::size_t>(a)] << " ";
    out << fmt17(u[i].real()) << " " << fmt17(u[i].imag()) << "\n";
  }
  if (!out) throw IoError("write_field: write failed for " + path.string());
}

FieldFile read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_field: cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header) || header.rfind("torspec-field", 0) != 0)
    throw IoError("read_field: missing field header in " + path.string());

  int dim = 0, freq_dim = 0, is_real = 1;
  SpaceParams space;
  std::vector<int> cutoffs;
  {
    std::istringstream hs(header);
    std::string tok;
    hs >> tok;  // magic
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw IoError("read_field: bad header token " + tok);
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "dim") dim = std::stoi(val);
      else if (key == "freq_dim") freq_dim = std::stoi(val);
      else if (key == "rho") space.rho = std::stod(val);
      else if (key == "r") space.r = std::stod(val);
      else if (key == "is_real") is_real = std::stoi(val);
      else if (key == "cutoff") {
        std::istringstream cs(val);
        std::string piece;
        while (std::getline(cs, piece, ',')) cutoffs.push_back(std::stoi(piece));
      } else {
        throw IoError("read_field: unknown header key " + key);
      }
    }
  }
  if (dim + freq_dim != static_cast<int>(cutoffs.size()))
    throw IoError("read_field: header dimensions do not match the cutoff list");

  FieldFile file{SpectralField(cutoffs, freq_dim, is_real != 0), space};
  std::array<int, SpectralField::kMaxAxes> k{};
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    for (int a = 0; a < file.field.axes(); ++a)
      if (!(ls >> k[static_cast<std::size_t>(a)]))
        throw IoError("read_field: truncated mode line in " + path.string());
    double re = 0.0, im = 0.0;
    if (!(ls >> re >> im)) throw IoError("read_field: truncated coefficient in " + path.string());
    file.field.at(std::span<const int>(k.data(), static_cast<std::size_t>(file.field.axes()))) =
        Complex{re, im};
    ++count;
  }
  if (count != file.field.size())
    throw IoError("read_field: expected " + std::to_string(file.field.size()) + " modes, got " +
                  std::to_string(count));
  return file;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::string>& comments)
    : path_(path), columns_(header.size()) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  if (fresh) {
    std::ofstream out(path);
    if (!out) throw IoError("CsvWriter: cannot open " + path.string());
    for (const auto& c : comments) out << "# " << c << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    if (!out) throw IoError("CsvWriter: write failed for " + path.string());
  }
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw IoError("CsvWriter: row width " + std::to_string(cells.size()) + " != header width " +
                  std::to_string(columns_));
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("CsvWriter: cannot append to " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
  out << "\n";
  if (!out) throw IoError("CsvWriter: write failed for " + path_.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_csv: cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != table.header.size())
        throw IoError("read_csv: ragged row in " + path.string());
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace torspec
