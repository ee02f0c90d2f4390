#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "luders/channels.hpp"
#include "luders/tomography.hpp"

namespace luders {

using Json = nlohmann::json;

/// {"rows": n, "cols": m, "re": [...], "im": [...]}, row-major.
Json matrix_to_json(const ComplexMatrix& m);
/// Throws ParseError on a malformed object.
ComplexMatrix matrix_from_json(const Json& j);

/// {"re": [a0, a1, a2], "im": [b0, b1, b2]}
Json state_to_json(const QutritPureState& psi);
QutritPureState state_from_json(const Json& j);

/// Matrix JSON plus {"basis": "sys⊗aux"} and, when known, {"g0": {"re", "im"}}.
Json choi_to_json(const ProcessChoi& chi, std::optional<Complex> g0 = std::nullopt);
ProcessChoi choi_from_json(const Json& j);

/// Array of the nine preparation unitaries, each a matrix JSON object with
/// "index", "sequence" and "state" annotations.
Json preparation_set_json();

/// Bar-chart CSV `row_label,col_label,abs,phase` with one row per element:
/// labels "00".."22" (sys, aux) for Choi matrices, "0".."2" for qutrit
/// density matrices. Phase in radians.
void write_choi_bars(std::ostream& os, const ProcessChoi& chi);
void write_density_bars(std::ostream& os, const ComplexMatrix& rho);

/// Dataset CSV: header `i,j,n,N`, 81 rows, indices 1-based.
void write_dataset_csv(std::ostream& os, const TomographyDataset& data);
/// Throws ParseError (with the line number) on malformed input and
/// RangeError when a count exceeds N. `source` becomes the provenance path.
TomographyDataset read_dataset_csv(std::istream& is, const std::string& source);
/// read_dataset_csv on a file; IoError if it cannot be opened.
TomographyDataset load_dataset(const std::string& path);

std::string read_text_file(const std::string& path);
/// Creates parent directories as needed. Throws IoError.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace luders
