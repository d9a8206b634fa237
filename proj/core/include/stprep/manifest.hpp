#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stprep {

struct ManifestRow {
  std::string utt_id;
  std::string path;
  double start_s = 0.0;
  double end_s = 0.0;
};

// TSV `utt_id<TAB>path<TAB>start<TAB>end`, seconds with 3 decimals, LF
// line endings. Rows must have end > start and unique ids (ParameterError
// on write, FormatError with line numbers on read).
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

}  // namespace stprep
