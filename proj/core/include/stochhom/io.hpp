#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stochhom/calibrate.hpp"
#include "stochhom/graph.hpp"
#include "stochhom/sample.hpp"
#include "stochhom/solver.hpp"

namespace stochhom {

// Structured-text documents are JSON objects whose first two keys are
// "format" (one of the tags below) and "version". Keys are written in the
// order documented in README.md; doubles are written in shortest round-trip
// form, so every document reloads bit-exactly.
inline constexpr std::string_view kSampleFormat = "stochhom-sample";
inline constexpr std::string_view kGraphFormat = "stochhom-graph";
inline constexpr std::string_view kConstantsFormat = "stochhom-constants";
inline constexpr std::string_view kReferencesFormat = "stochhom-references";
inline constexpr std::string_view kSolutionFormat = "stochhom-solution";
inline constexpr int kDocumentVersion = 1;

[[nodiscard]] std::string sample_to_text(const Sample& sample);
[[nodiscard]] Sample sample_from_text(std::string_view text);

[[nodiscard]] std::string graph_to_text(const CircuitGraph& graph);
[[nodiscard]] CircuitGraph graph_from_text(std::string_view text);

[[nodiscard]] std::string constants_to_text(const CalibrationConstants& cal);
/// Missing keys keep their defaults; unknown keys are rejected.
[[nodiscard]] CalibrationConstants constants_from_text(std::string_view text);

[[nodiscard]] std::string references_to_text(const std::vector<ReferencePoint>& points);
[[nodiscard]] std::vector<ReferencePoint> references_from_text(std::string_view text);

/// Potentials (null for floating vertices), currents and terminal totals.
[[nodiscard]] std::string solution_to_text(const CircuitGraph& graph, const CircuitSolution& solution);

[[nodiscard]] std::string tensor_to_text(const ConductivityTensor& tensor);

/// The "format" tag of a structured-text document, or empty when the text is
/// not one of ours.
[[nodiscard]] std::string detect_format(std::string_view text);

[[nodiscard]] const char* to_string(ContactLaw law);
[[nodiscard]] ContactLaw contact_law_from_string(const std::string& name);
[[nodiscard]] const char* to_string(PlacementMethod method);
[[nodiscard]] PlacementMethod placement_method_from_string(const std::string& name);

/// Whole file as bytes. Throws IoError naming the path.
[[nodiscard]] std::string read_file(const std::filesystem::path& path);
/// Write through a sibling temporary file and rename, so a failed run never
/// leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace stochhom
