#pragma once

#include <filesystem>
#include <string>

namespace choicepred {

// Writes content to a temporary sibling and renames it over the target, so
// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace choicepred
