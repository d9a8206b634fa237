#include "stprep/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include "stprep/errors.hpp"
#include "stprep/numfmt.hpp"

namespace stprep {

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestRow>& rows) {
  std::unordered_set<std::string> ids;
  for (const auto& row : rows) {
    if (!(row.end_s > row.start_s)) {
      throw ParameterError("manifest row " + row.utt_id +
                           ": end must be greater than start");
    }
    if (!ids.insert(row.utt_id).second) {
      throw ParameterError("duplicate utterance id " + row.utt_id);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& row : rows) {
    out << row.utt_id << '\t' << row.path << '\t'
        << format_fixed(row.start_s, 3) << '\t' << format_fixed(row.end_s, 3)
        << "\n";
  }
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto fail = [&](std::size_t lineno, const std::string& what) -> FormatError {
    return FormatError(path.string() + ": line " + std::to_string(lineno) +
                       ": " + what);
  };
  std::vector<ManifestRow> rows;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 4) {
      throw fail(lineno, "expected 4 tab-separated columns, got " +
                             std::to_string(cols.size()));
    }
    const auto start_s = parse_double(cols[2]);
    const auto end_s = parse_double(cols[3]);
    if (!start_s || !end_s) throw fail(lineno, "times must be numbers");
    if (!(*end_s > *start_s)) throw fail(lineno, "end must be greater than start");
    if (!ids.insert(cols[0]).second) {
      throw fail(lineno, "duplicate utterance id " + cols[0]);
    }
    rows.push_back({cols[0], cols[1], *start_s, *end_s});
  }
  return rows;
}

}  // namespace stprep
