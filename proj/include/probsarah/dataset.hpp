#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace probsarah {

// Sparse binary-classification dataset in CSR form.  Feature ids are 1-based
// (the on-disk convention) and strictly increasing within a row; labels are
// +-1; row_norms caches the Euclidean norm of each row.
struct Dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::size_t> offsets;    // n + 1 entries
  std::vector<std::uint32_t> indices;  // 1-based, strictly increasing per row
  std::vector<double> values;
  std::vector<double> labels;          // +1 or -1
  std::vector<double> row_norms;

  struct Row {
    std::span<const std::uint32_t> idx;
    std::span<const double> val;
  };
  Row row(std::size_t i) const {
    return {std::span(indices).subspan(offsets[i], offsets[i + 1] - offsets[i]),
            std::span(values).subspan(offsets[i], offsets[i + 1] - offsets[i])};
  }

  double max_row_norm() const;
};

// Parses `label idx:val idx:val ...` lines.  Rules: labels > 0 map to +1 and
// all others to -1; ids are 1-based and must be strictly increasing; lines
// whose first non-blank character is '#' are comments; blank lines are
// skipped; \r\n is accepted.  The dimension is the largest id seen, or
// min_dim if that is larger.  Errors carry the 1-based line number.
Dataset parse_libsvm(std::string_view text, std::size_t min_dim = 0);

// Reads the whole file then parses; errors name the path.
Dataset load_libsvm_file(const std::string& path, std::size_t min_dim = 0);

// Inverse of parse_libsvm up to label canonicalization.
std::string serialize_libsvm(const Dataset& ds);

// Scales every nonzero row to unit norm and refreshes row_norms.  Zero rows
// are left untouched.  Idempotent up to 1e-12.
void normalize_rows(Dataset& ds);

// Recomputes row_norms from the stored values.
void compute_row_norms(Dataset& ds);

}  // namespace probsarah
