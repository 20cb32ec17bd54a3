#pragma once

#include "xact/model.hpp"

#include <filesystem>
#include <iosfwd>

namespace xact {

/// Plain-text checkpoint, format version 1. Layout is described in
/// docs/formats.md; values are written with 17 significant digits so a
/// save/load round trip is exact.
void save_checkpoint(const ToyLm& model, std::ostream& out);
void save_checkpoint(const ToyLm& model, const std::filesystem::path& path);

/// Throws std::runtime_error on a malformed or mismatched file.
ToyLm load_checkpoint(std::istream& in);
ToyLm load_checkpoint(const std::filesystem::path& path);

} // namespace xact
