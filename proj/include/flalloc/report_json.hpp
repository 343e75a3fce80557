#pragma once

#include <ostream>
#include <string>

#include "flalloc/orchestrator.hpp"
#include "json.hpp"

namespace flalloc {

/// SolveReport as a JSON object. Field names and layout are listed in
/// docs/formats.md; infinite values become null.
nlohmann::json report_to_json(const SolveReport& report);

/// Compact single-document dump, two-space indent, trailing newline.
std::string dump_report(const SolveReport& report);

/// One row per device followed by nothing else; see docs/formats.md.
void write_report_csv(std::ostream& out, const SolveReport& report);

}  // namespace flalloc
