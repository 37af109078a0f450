#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fungible/model.hpp"
#include "fungible/simstudy.hpp"

namespace fungible {

/// Model configuration document; see docs/model-format.md.
ModelSpec parse_model_json(std::string_view text);
ModelSpec load_model(const std::filesystem::path& path);
std::string model_to_json(const ModelSpec& model);

/// p x p covariance, one row per line, comma separated, no header. Symmetry is
/// checked to 1e-10 and then enforced exactly.
Matrix parse_covariance_csv(std::string_view text);
Matrix load_covariance(const std::filesystem::path& path);
std::string covariance_to_csv(const Matrix& m);

/// Start vector as a JSON array in parameter order or an object keyed by name.
ParamVector parse_start_json(std::string_view text, const ModelSpec& model);

/// Study configuration mirroring StudyDesign; see docs/study-output.md.
StudyDesign parse_design_json(std::string_view text);
StudyDesign load_design(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace fungible
